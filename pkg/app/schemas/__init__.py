"""
Pydantic schemas for the domain types
"""

from .dataset import Dataset, SplitSpec
from .graph import GraphConfig, ConstrainedGraph, StrengthenedTree
from .trw import TrwConfig, TrwModel
from .optimize import SimplexWeights, QpReport
from .classify import ALGORITHMS, AlgorithmParams, MknnModel, TuneGrid, GridScore, TuneResult
from .online import OnlineResult, OnlineStats
from .metrics import ErrorReport
from .run import RunConfig, SYNTHETIC_KINDS

__all__ = [
    "Dataset", "SplitSpec",
    "GraphConfig", "ConstrainedGraph", "StrengthenedTree",
    "TrwConfig", "TrwModel",
    "SimplexWeights", "QpReport",
    "ALGORITHMS", "AlgorithmParams", "MknnModel", "TuneGrid", "GridScore", "TuneResult",
    "OnlineResult", "OnlineStats",
    "ErrorReport",
    "RunConfig", "SYNTHETIC_KINDS"
]
