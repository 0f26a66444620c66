import json
import statistics
from fractions import Fraction

import numpy as np
import pytest

from vfe.config import PipelineConfig
from vfe.errors import InvalidSpec, SessionPipelineError, ZeroVarianceTarget
from vfe.evaluation import (
    CSV_HEADER,
    EvaluationReport,
    FoldResult,
    flag_outliers,
    hold_one_out,
    metric_mae,
    metric_r2,
    metric_rmse,
    write_report,
)
from vfe.features import concat_features
from vfe.session import discover_sessions, load_session


def folds_from(maes):
    return [FoldResult(i, f"s{i}", 0.9, m, m * 1.2, 10) for i, m in enumerate(maes)]


def oracle_flags(maes, k=2):
    """Straightforward rational recomputation of the mean + k*SD rule."""
    fr = [Fraction(m) for m in maes]
    mean = sum(fr) / len(fr)
    var = sum((m - mean) ** 2 for m in fr) / len(fr)
    return [f"s{i}" for i, m in enumerate(fr) if m > mean and (m - mean) ** 2 > k * k * var]


@pytest.fixture(scope="module")
def small_sessions(small_corpus_dir):
    return [load_session(d) for d in discover_sessions(small_corpus_dir)]


@pytest.fixture(scope="module")
def small_report(small_sessions):
    return hold_one_out(small_sessions, "absolute", PipelineConfig())


def test_metric_fixture():
    y, p = [1.0, 3.0], [2.0, 2.0]
    assert metric_r2(y, p) == 0.0
    assert metric_mae(y, p) == 1.0
    assert metric_rmse(y, p) == 1.0
    assert metric_r2(y, y) == 1.0 and metric_mae(y, y) == 0.0 and metric_rmse(y, y) == 0.0


def test_constant_target_r2_fails():
    with pytest.raises(ZeroVarianceTarget):
        metric_r2([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        metric_mae([1.0, 2.0], [1.0])


@pytest.mark.parametrize("seed", range(5))
def test_rmse_never_below_mae(seed):
    rng = np.random.default_rng(seed)
    y, p = rng.normal(size=30), rng.normal(size=30)
    assert metric_rmse(y, p) >= metric_mae(y, p)
    assert metric_r2(y, p) <= 1.0


@pytest.mark.parametrize("maes, expected", [
    ([1, 1, 1, 1, 10], []),
    ([1] * 9 + [20], ["s9"]),
    ([2.0, 2.0, 2.0], []),
    ([1.0, 1.1, 0.9, 1.05, 0.95, 1.0, 1.02, 0.98, 5.0], ["s8"]),
    ([1.0, 2.0], []),
])
def test_outlier_fixtures(maes, expected):
    assert flag_outliers(folds_from(maes)) == expected
    assert oracle_flags(maes) == expected


@pytest.mark.parametrize("seed", range(10))
def test_outliers_match_oracle(seed):
    rng = np.random.default_rng(seed)
    maes = list(rng.gamma(2.0, 1.0, size=rng.integers(3, 16)))
    assert flag_outliers(folds_from(maes)) == oracle_flags(maes)


def test_sample_sd_option_is_stricter():
    maes = [1] * 9 + [20]
    assert flag_outliers(folds_from(maes), ddof=1) == ["s9"]
    with pytest.raises(InvalidSpec):
        flag_outliers(folds_from(maes), sd_multiplier=-1)


def test_report_structure(small_report, small_sessions):
    r = small_report
    assert len(r.folds) == len(small_sessions) == 4
    held = [f.held_out_session for f in r.folds]
    assert sorted(held) == sorted(s.session_id for s in small_sessions)
    assert r.units == "lb"
    assert r.total_samples == sum(f.n_test_samples for f in r.folds)
    for f in r.folds:
        assert f.rmse >= f.mae
        assert f.y_pred.shape == f.y_true.shape == (f.n_test_samples,)
        assert f.mae == pytest.approx(metric_mae(f.y_true, f.y_pred), rel=1e-12)


def test_aggregates_recomputed_from_folds(small_report):
    r = small_report
    for metric in ("mae", "rmse", "r2"):
        vals = [getattr(f, metric) for f in r.folds]
        assert r.mean(metric) == pytest.approx(statistics.fmean(vals), rel=1e-12)
        assert r.sd(metric) == pytest.approx(statistics.pstdev(vals), rel=1e-12)
    assert r.best("r2") == max(f.r2 for f in r.folds)
    assert r.worst("mae") == max(f.mae for f in r.folds)
    assert r.outlier_sessions == tuple(flag_outliers(r.folds))


def test_no_leakage_from_held_out_session(small_report, small_sessions):
    cfg = PipelineConfig()
    from vfe.evaluation import process_corpus

    processed = process_corpus(small_sessions, cfg)
    all_means = concat_features([p.features for p in processed]).rows.mean(axis=0)
    for i, fold in enumerate(small_report.folds):
        train = concat_features([p.features for j, p in enumerate(processed) if j != i])
        np.testing.assert_allclose(fold.train_means, train.rows.mean(axis=0), rtol=1e-12)
        assert not np.allclose(fold.train_means, all_means, rtol=1e-9)


def test_duplicate_session_improves_its_fold(small_sessions):
    # with an exact copy of the held-out session in the training set the fold
    # should fit better than the honest fold, a cheap guard on fold bookkeeping
    import dataclasses

    dup = dataclasses.replace(small_sessions[0], session_id="copy")
    honest = hold_one_out(small_sessions, "absolute", PipelineConfig())
    leaky = hold_one_out(small_sessions + [dup], "absolute", PipelineConfig())
    assert leaky.folds[0].mae < honest.folds[0].mae
    assert leaky.folds[0].mae <= leaky.mean_mae


def test_too_few_sessions(small_sessions):
    with pytest.raises(InvalidSpec):
        hold_one_out(small_sessions[:2], "absolute", PipelineConfig())


def test_failures_name_the_session(small_sessions):
    import dataclasses

    from vfe.session import ChannelSeries

    bad = small_sessions[1]
    flat = ChannelSeries(bad.force.timestamps, np.full(bad.force.values.size, 40.0))
    broken = dataclasses.replace(bad, force=flat, session_id="broken")
    with pytest.raises(SessionPipelineError, match="broken"):
        hold_one_out([small_sessions[0], broken, small_sessions[2]], "absolute", PipelineConfig())


def test_write_report_files(tmp_path, small_report):
    written = write_report(small_report, tmp_path / "rep.json", traces=True)
    names = sorted(p.name for p in written)
    assert "rep.json" in names and "rep.csv" in names
    traces = sorted((tmp_path / "rep_traces").iterdir())
    assert len(traces) == 4
    data = json.loads((tmp_path / "rep.json").read_text())
    assert data["n_folds"] == 4 and data["kind"] == "absolute"
    assert data["mean_mae"] == small_report.mean_mae
    assert data["config_hash"] == PipelineConfig().config_hash
    lines = (tmp_path / "rep.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 5
    first = traces[0].read_text().splitlines()
    assert first[0] == "t,y_true,y_pred"
    assert len(first) == small_report.folds[0].n_test_samples + 1


def test_report_round_trips_through_json(small_report):
    data = json.loads(json.dumps(small_report.to_dict()))
    assert [f["mae"] for f in data["folds"]] == [f.mae for f in small_report.folds]
    assert isinstance(small_report, EvaluationReport)
    assert "worst R²" in small_report.summary_line()
