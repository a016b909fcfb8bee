"""Prequential evaluation of incremental top-N recommenders on event streams."""

from .algorithms import BPRMF, ISGD, UserKNN
from .core import IdMap, ModelDivergedError, RecommendationList, Recommender, filter_seen
from .engine import EngineConfig, EvaluationRecord, run_prequential, score_event
from .stats import mcnemar_signed, moving_average, overall_summary
from .stream import InteractionEvent, StreamSpec, load_stream

__all__ = [
    "BPRMF", "ISGD", "UserKNN",
    "IdMap", "ModelDivergedError", "RecommendationList", "Recommender", "filter_seen",
    "EngineConfig", "EvaluationRecord", "run_prequential", "score_event",
    "mcnemar_signed", "moving_average", "overall_summary",
    "InteractionEvent", "StreamSpec", "load_stream",
]
__version__ = "0.1.0"
