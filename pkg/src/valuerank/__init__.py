"""Value-driven multi-criteria ranking of candidate actions."""

__version__ = "0.1.0"

from .errors import (
    AssessorError,
    ConfigurationError,
    StructuralError,
    UndefinedMetricError,
    ValidationError,
)
from .dataset import CorpusFile, StudyRecord, load_corpus, load_study, write_corpus
from .metrics import RankingPair, ScorePredictionBatch, avg_acc, first_acc, mae, mean_os_sim, os_sim
from .ranking import Backend, FlowSummary, RankingResult, rank
from .values import (
    AnnotatedAction,
    AnnotatedScenario,
    DimensionSet,
    PreferenceProfile,
    ScoreTrace,
    ScoringConfig,
    Variant,
    score_scenario,
)

__all__ = [
    "AnnotatedAction",
    "AnnotatedScenario",
    "AssessorError",
    "Backend",
    "ConfigurationError",
    "CorpusFile",
    "DimensionSet",
    "FlowSummary",
    "PreferenceProfile",
    "RankingPair",
    "RankingResult",
    "ScorePredictionBatch",
    "ScoreTrace",
    "ScoringConfig",
    "StructuralError",
    "StudyRecord",
    "UndefinedMetricError",
    "ValidationError",
    "Variant",
    "avg_acc",
    "first_acc",
    "load_corpus",
    "load_study",
    "mae",
    "mean_os_sim",
    "os_sim",
    "rank",
    "score_scenario",
    "write_corpus",
]
