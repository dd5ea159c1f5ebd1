"""
Data models
"""
from spearmix.models.errors import (
    RankingFormatError,
    AugmentationCapacityError,
    DegenerateComponentError,
    IncompatibleOptionsError,
)
from spearmix.models.ranking import RankingDataset, DataDescription, aggregate
from spearmix.models.params import MMSParams, MixtureParams
from spearmix.models.distribution import SpearmanDistanceDistribution
from spearmix.models.results import (
    FitResult,
    SampleResult,
    CIResult,
    BootstrapResult,
    WeightIntervals,
    StartInfo,
)

__all__ = [
    "RankingFormatError",
    "AugmentationCapacityError",
    "DegenerateComponentError",
    "IncompatibleOptionsError",
    "RankingDataset",
    "DataDescription",
    "aggregate",
    "MMSParams",
    "MixtureParams",
    "SpearmanDistanceDistribution",
    "FitResult",
    "SampleResult",
    "CIResult",
    "BootstrapResult",
    "WeightIntervals",
    "StartInfo",
]
