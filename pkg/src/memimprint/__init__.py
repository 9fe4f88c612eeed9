"""Memory-imprint models of social ties, evaluated against ego-network surveys."""

from .domain import AlterAnswer, Channel, Dataset, Event, Question, RankedList, SurveyResponse
from .evaluation import (
    EvalReport,
    FoldPlan,
    TunerConfig,
    make_cross_subgroups,
    make_fold_plan,
    run_cross_eval,
    run_protocol,
)
from .groundtruth import build_ground_truth, tournament_rank
from .metrics import RboConfig, rbo, weighted_mean_rbo
from .models import HawkesParams, MimParams, ModelSpec, rank_candidates
from .synthdata import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "AlterAnswer", "Channel", "Dataset", "Event", "Question", "RankedList", "SurveyResponse",
    "EvalReport", "FoldPlan", "TunerConfig", "make_cross_subgroups", "make_fold_plan", "run_cross_eval",
    "run_protocol", "build_ground_truth", "tournament_rank", "RboConfig", "rbo", "weighted_mean_rbo",
    "HawkesParams", "MimParams", "ModelSpec", "rank_candidates", "SynthConfig", "generate",
]
