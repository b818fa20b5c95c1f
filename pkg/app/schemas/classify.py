"""
Classifier schemas
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.schemas.dataset import Dataset
from app.schemas.graph import GraphConfig
from app.schemas.trw import TrwConfig, TrwModel


ALGORITHMS = ("knn", "wknn", "gknn", "mknn")
Algorithm = Literal["knn", "wknn", "gknn", "mknn"]


class AlgorithmParams(BaseModel):
    """Hyperparameters of every classifier; each algorithm reads what it needs"""

    k: int = Field(default=5, ge=1)
    sigma: float = Field(default=0.1, gt=0)
    alpha: float = Field(default=0.5, gt=0, lt=1)
    geo_neighbors: int = Field(default=10, ge=1)
    tree_depth: int = Field(default=2, ge=0)
    theta_fraction: float = Field(default=0.1, gt=0, lt=1)
    tree_branch: Optional[int] = Field(default=None, ge=1)
    route: Literal["direct", "spd-fast"] = "spd-fast"
    self_loops: bool = False

    model_config = {"frozen": True}

    def graph_config(self) -> GraphConfig:
        return GraphConfig(
            sigma=self.sigma,
            tree_depth=self.tree_depth,
            theta_fraction=self.theta_fraction,
            tree_branch=self.tree_branch,
            self_loops=self.self_loops
        )

    def trw_config(self) -> TrwConfig:
        return TrwConfig(alpha=self.alpha, route=self.route)


class MknnModel(BaseModel):
    """A transductively fitted mkNN classifier"""

    trw: TrwModel
    dataset: Dataset
    k: int = Field(ge=1)
    graph_config: GraphConfig

    model_config = {
        "arbitrary_types_allowed": True,
        "frozen": True
    }

    @model_validator(mode="after")
    def _check_k(self):
        if self.k > self.dataset.l:
            raise ValueError(f"k={self.k} exceeds the number of labeled samples l={self.dataset.l}")
        if self.trw.n != self.dataset.n:
            raise ValueError("TRW model and dataset sizes differ")
        return self


class TuneGrid(BaseModel):
    """Grid searched by 2-fold cross validation"""

    sigma_values: List[float] = Field(default=[0.1], min_length=1)
    alpha_values: List[float] = Field(default=[0.5], min_length=1)
    geo_neighbors_values: List[int] = Field(default=[10], min_length=1)
    folds: int = Field(default=2, ge=2)

    model_config = {"frozen": True}


class GridScore(BaseModel):
    """Cross-validation error of one grid point"""

    params: AlgorithmParams
    error: float = Field(ge=0, le=1)


class TuneResult(BaseModel):
    """Outcome of a grid search"""

    algorithm: Algorithm
    best: AlgorithmParams
    best_error: float
    scores: List[GridScore]
