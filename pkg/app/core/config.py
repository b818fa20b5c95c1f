"""
Configuration settings for the manifold kNN toolkit
"""

from typing import List
from pydantic_settings import BaseSettings
from pydantic import Field


class Settings(BaseSettings):
    """Application settings with environment variable support"""

    # Application
    APP_NAME: str = "manifold-knn"
    VERSION: str = "0.1.0"

    # Logging
    LOG_LEVEL: str = Field(default="INFO")
    LOG_FILE: str = Field(default="logs/mknn.log")
    LOG_TO_FILE: bool = Field(default=False)

    # Worker pool for seeds x grid points
    WORKERS: int = Field(default=1, ge=1)

    # Model defaults
    DEFAULT_SIGMA: float = Field(default=0.1, gt=0)
    DEFAULT_ALPHA: float = Field(default=0.5, gt=0, lt=1)
    DEFAULT_TREE_DEPTH: int = Field(default=2, ge=0)
    DEFAULT_THETA_FRACTION: float = Field(default=0.1, gt=0, lt=1)
    DEFAULT_K: int = Field(default=5, ge=1)
    SOLVE_TOLERANCE: float = Field(default=1e-12, gt=0)

    # Dense n x n matrices are refused above this size
    MAX_DENSE_N: int = Field(default=20000, ge=1)

    # Data
    UNLABELED_MARKERS: List[str] = Field(default=["", "?"])

    model_config = {
        "env_file": ".env",
        "env_prefix": "MKNN_",
        "case_sensitive": True,
        "extra": "ignore"
    }


# Global settings instance
settings = Settings()
