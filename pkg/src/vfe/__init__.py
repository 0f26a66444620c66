"""Force estimation from vibration damping in phone IMU signals.

The pipeline resamples a session onto a uniform grid, band-passes each IMU
channel around the motor frequency, extracts amplitude envelopes, repairs
dropouts, aligns envelopes to a force sensor and fits a ridge model.
"""

from .config import PipelineConfig, load_config
from .errors import VFEError
from .evaluation import hold_one_out
from .model import ForceModel, load_model, predict, ridge_fit, save_model
from .pipeline import process_directory, process_session
from .session import discover_sessions, load_session, save_session
from .simulator import SimulationSpec, make_corpus, synthesize_session

__version__ = "0.1.0"

__all__ = [
    "ForceModel",
    "PipelineConfig",
    "SimulationSpec",
    "VFEError",
    "discover_sessions",
    "hold_one_out",
    "load_config",
    "load_model",
    "load_session",
    "make_corpus",
    "predict",
    "process_directory",
    "process_session",
    "ridge_fit",
    "save_model",
    "save_session",
    "synthesize_session",
]
