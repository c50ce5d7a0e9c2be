"""filtergym: an online-learning harness that picks de-noise filters.

A stream of procedurally generated images is corrupted by blur, under- or
over-exposure; an agent (disjoint LinUCB or tabular Q-learning) observes
quantized image-quality features, chooses one of six restoration filters,
and learns from a quantized reward derived from a detector's correct-class
probability relative to a precomputed per-image oracle.
"""

from .agents import LinUCBAgent, QTableAgent, make_agent, restore_agent
from .detector import (
    OracleTable,
    ProbVector,
    RemoteDetector,
    SurrogateConfig,
    SurrogateDetector,
    build_oracle_table,
    correct_prob,
)
from .env import (
    IterationRecord,
    RewardConfig,
    StreamConfig,
    quantize_reward,
    run_round,
    sample_noise,
)
from .filters import Action, FilterParams, NoiseKind, apply_action, apply_noise, counter_actions
from .metrics import CIBand, RoundSummary, RunningSeries, ci_across_rounds, running_mean
from .raster import Kernel, Raster, convolve, gamma_map, read_ppm, rmse, write_ppm
from .sensing import AgentState, SenseConfig, feature_vector, laplacian_variance, sense_state
from .texgen import TexSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AgentState",
    "CIBand",
    "FilterParams",
    "IterationRecord",
    "Kernel",
    "LinUCBAgent",
    "NoiseKind",
    "OracleTable",
    "ProbVector",
    "QTableAgent",
    "Raster",
    "RemoteDetector",
    "RewardConfig",
    "RoundSummary",
    "RunningSeries",
    "SenseConfig",
    "StreamConfig",
    "SurrogateConfig",
    "SurrogateDetector",
    "TexSpec",
    "apply_action",
    "apply_noise",
    "build_oracle_table",
    "ci_across_rounds",
    "convolve",
    "correct_prob",
    "counter_actions",
    "feature_vector",
    "gamma_map",
    "generate",
    "laplacian_variance",
    "make_agent",
    "quantize_reward",
    "read_ppm",
    "restore_agent",
    "rmse",
    "run_round",
    "running_mean",
    "sample_noise",
    "sense_state",
    "write_ppm",
]
