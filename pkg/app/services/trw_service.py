"""
TRW Service
Tired random walk matrix P_TRW = (I - alpha P)^-1 through an LU route and a
Cholesky route on the symmetric R-matrix, plus binary model dump/load
"""

import logging
import math
import struct
import warnings
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy import linalg
from scipy.linalg import lapack

from app.core.errors import (
    DataError, FactorizationError, IsolatedVertexError, NumericalError, SingularSystemError, UsageError
)
from app.schemas.graph import ConstrainedGraph
from app.schemas.trw import TrwConfig, TrwModel
from app.services.graph_service import check_dense_size
from app.services.report_service import atomic_write_bytes

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"MKNNTRW\x00"
MODEL_VERSION = 1
ROUTES = {"direct": 0, "spd-fast": 1}


def transition_matrix(graph: Union[ConstrainedGraph, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """P = D^-1 W with D_ii = sum_j W_ij"""
    weights = graph.weights if isinstance(graph, ConstrainedGraph) else np.asarray(graph, dtype=np.float64)
    degrees = weights.sum(axis=1)
    isolated = np.flatnonzero(degrees <= 0)
    if isolated.size:
        raise IsolatedVertexError(int(isolated[0]))
    return weights / degrees[:, None], degrees


def trw_direct(transition: np.ndarray, alpha: float) -> np.ndarray:
    """(I - alpha P)^-1 by LU factorization, solved against the identity"""
    _check_alpha(alpha)
    n = transition.shape[0]
    system = np.eye(n) - alpha * transition
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            lu, piv = linalg.lu_factor(system)
        except (linalg.LinAlgError, linalg.LinAlgWarning, ValueError) as e:
            raise SingularSystemError(f"I - alpha*P could not be factorized: {e}")
    if np.any(np.diag(lu) == 0):
        raise SingularSystemError("I - alpha*P is singular")
    return linalg.lu_solve((lu, piv), np.eye(n))


def r_matrix(weights: np.ndarray, degrees: np.ndarray, alpha: float) -> np.ndarray:
    """R = I - alpha D^-1/2 W D^-1/2, symmetrized after a symmetry check"""
    scale = 1.0 / np.sqrt(degrees)
    r = np.eye(weights.shape[0]) - alpha * (scale[:, None] * weights * scale[None, :])
    asym = np.max(np.abs(r - r.T), initial=0.0)
    if asym > 1e-12 * max(1.0, np.max(np.abs(r))):
        raise UsageError(f"W is not symmetric (max asymmetry {asym:.3e})")
    return (r + r.T) / 2.0


def trw_spd(weights: np.ndarray, degrees: np.ndarray, alpha: float) -> np.ndarray:
    """P_TRW = D^-1/2 R^-1 D^1/2 with R^-1 from its Cholesky factor, since I - alpha P = D^-1/2 R D^1/2"""
    _check_alpha(alpha)
    r = r_matrix(weights, degrees, alpha)
    try:
        factor, lower = linalg.cho_factor(r, lower=False)
    except linalg.LinAlgError as e:
        raise FactorizationError(f"R-matrix is not positive definite: {e}")

    r_inv, info = lapack.dpotri(factor, lower=int(lower))
    if info != 0:
        raise FactorizationError(f"Cholesky-based inverse failed (info={info})")
    # dpotri fills only the upper triangle
    r_inv = np.triu(r_inv) + np.triu(r_inv, 1).T

    root = np.sqrt(degrees)
    return r_inv * root[None, :] / root[:, None]


def symmetric_weights(ptrw: np.ndarray) -> np.ndarray:
    """w_ij = ((P_TRW)_ij + (P_TRW)_ji) / 2"""
    return (ptrw + ptrw.T) / 2.0


def series_trw(transition: np.ndarray, alpha: float, tol: float = 1e-12) -> np.ndarray:
    """Truncated series sum_{t=0}^{T} (alpha P)^t with alpha^T < tol"""
    _check_alpha(alpha)
    steps = max(1, math.ceil(math.log(tol) / math.log(alpha)))
    n = transition.shape[0]
    total = np.eye(n)
    term = np.eye(n)
    for _ in range(steps):
        term = alpha * (term @ transition)
        total += term
    return total


def resolvent_residual(transition: np.ndarray, ptrw: np.ndarray, alpha: float) -> np.ndarray:
    """Per-column max |((I - alpha P) P_TRW - I)_ij|, relative to ||I - alpha P|| ||col||"""
    system = np.eye(transition.shape[0]) - alpha * transition
    residual = np.abs(system @ ptrw - np.eye(transition.shape[0])).max(axis=0)
    scale = np.abs(system).sum(axis=1).max() * np.abs(ptrw).max(axis=0)
    return residual / np.maximum(scale, 1.0)


def fit_trw(graph: ConstrainedGraph, cfg: TrwConfig, verify: bool = True) -> TrwModel:
    """Fit P, D, P_TRW and the symmetric TRW weights over a constrained graph"""
    check_dense_size(graph.n)
    try:
        transition, degrees = transition_matrix(graph)
        if cfg.route == "spd-fast":
            ptrw = trw_spd(graph.weights, degrees, cfg.alpha)
        else:
            ptrw = trw_direct(transition, cfg.alpha)

        if verify:
            worst = float(resolvent_residual(transition, ptrw, cfg.alpha).max(initial=0.0))
            if not math.isfinite(worst) or worst > cfg.solve_tolerance:
                raise NumericalError(
                    f"resolvent residual {worst:.3e} exceeds tolerance {cfg.solve_tolerance:.1e}"
                )

        # P_TRW is entrywise nonnegative; clip roundoff below zero
        sym = np.maximum(symmetric_weights(ptrw), 0.0)

    except (UsageError, NumericalError):
        raise
    except Exception as e:
        logger.error(f"Error fitting TRW model: {e}")
        raise

    logger.debug(f"TRW fit: n={graph.n} alpha={cfg.alpha} route={cfg.route}")
    return TrwModel(transition=transition, degrees=degrees, ptrw=ptrw, sym_weights=sym, config=cfg)


def _check_alpha(alpha: float):
    if not 0 < alpha < 1:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha!r}")


# ---------------------------------------------------------------------------
# Binary dump / load
# ---------------------------------------------------------------------------
# Layout: magic (8 bytes) | version (u8) | route (u8) | n (<q) | alpha (<d)
# | solve_tolerance (<d) | P, D, P_TRW, sym_weights as little-endian float64,
# matrices row-major

_HEADER = struct.Struct("<8sBBqdd")


def dump_model(model: TrwModel) -> bytes:
    n = model.n
    header = _HEADER.pack(
        MODEL_MAGIC, MODEL_VERSION, ROUTES[model.config.route], n,
        model.config.alpha, model.config.solve_tolerance
    )
    parts = [header]
    for arr in (model.transition, model.degrees, model.ptrw, model.sym_weights):
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C"))
    return b"".join(parts)


def load_model_bytes(payload: bytes) -> TrwModel:
    if len(payload) < _HEADER.size:
        raise DataError("model file is truncated")
    magic, version, route_code, n, alpha, tol = _HEADER.unpack_from(payload)
    if magic != MODEL_MAGIC:
        raise DataError("not a TRW model file (bad magic)")
    if version != MODEL_VERSION:
        raise DataError(f"unsupported model version {version}")
    routes = {code: name for name, code in ROUTES.items()}
    if route_code not in routes:
        raise DataError(f"unknown route code {route_code}")

    expected = _HEADER.size + 8 * (3 * n * n + n)
    if len(payload) != expected:
        raise DataError(f"model file has {len(payload)} bytes, expected {expected}")

    offset = _HEADER.size
    arrays = []
    for shape in ((n, n), (n,), (n, n), (n, n)):
        count = int(np.prod(shape))
        arrays.append(np.frombuffer(payload, dtype="<f8", count=count, offset=offset).reshape(shape))
        offset += 8 * count

    cfg = TrwConfig(alpha=alpha, route=routes[route_code], solve_tolerance=tol)
    transition, degrees, ptrw, sym = arrays
    try:
        return TrwModel(transition=transition, degrees=degrees, ptrw=ptrw, sym_weights=sym, config=cfg)
    except ValidationError as e:
        raise DataError(f"model file holds invalid arrays: {e.errors()[0]['msg']}") from e


def save_model(model: TrwModel, path: Union[str, Path]) -> Path:
    path = atomic_write_bytes(path, dump_model(model))
    logger.info(f"Saved TRW model (n={model.n}) to {path}")
    return path


def load_model(path: Union[str, Path]) -> TrwModel:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path} does not exist")
    return load_model_bytes(path.read_bytes())
