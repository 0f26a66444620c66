import sys

import numpy as np
import pytest

from vfe.config import IMU_CHANNELS
from vfe.session import ChannelSeries, SessionRecording
from vfe.simulator import SimulationSpec, Trajectory, make_corpus, synthesize_session


def make_recording(t_imu, imu_values, t_force, force_values, session_id="fixture", kind="freeform"):
    """SessionRecording from plain arrays; ``imu_values`` is (n, 6) or a dict."""
    if not isinstance(imu_values, dict):
        imu_values = {c: np.asarray(imu_values)[:, i] for i, c in enumerate(IMU_CHANNELS)}
    imu = {c: ChannelSeries(np.asarray(t_imu, float), imu_values[c]) for c in IMU_CHANNELS}
    span = float(t_imu[-1] - t_imu[0])
    return SessionRecording(session_id, "test-device", imu,
                            ChannelSeries(np.asarray(t_force, float), force_values), kind, span)


@pytest.fixture(scope="session")
def short_spec():
    """A 40 s ramp session with per-group clock offsets."""
    return SimulationSpec(
        seed=3,
        trajectory=Trajectory("ramp", {"start_lb": 1.0, "end_lb": 16.0}),
        accel_clock_offset_s=0.05,
        gyro_clock_offset_s=-0.0375,
        force_wander_lb=1.5,
        session_id="short",
    )


@pytest.fixture(scope="session")
def short_session(short_spec):
    return synthesize_session(short_spec)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Default 15-session corpus (seed 7), written once per test run."""
    out = tmp_path_factory.mktemp("corpus")
    make_corpus(out, n_sessions=15, base_seed=7)
    return out


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """Four short sessions for CLI plumbing tests."""
    out = tmp_path_factory.mktemp("small_corpus")
    base = SimulationSpec(duration_s=15.0)
    make_corpus(out, n_sessions=4, base_seed=21, base=base)
    return out


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance criteria lines when that module ran."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
