"""
Optimize Service
Simplex-constrained least squares for neighborhood reconstruction and the
nonnegative weight reconstruction built on it
"""

import logging
from typing import List, Tuple

import numpy as np

from app.core.errors import DimensionError, NumericalError, UsageError
from app.schemas.optimize import QpReport, SimplexWeights

logger = logging.getLogger(__name__)


def _equality_lsq(target: np.ndarray, basis: np.ndarray, free: List[int]) -> np.ndarray:
    """
    Minimize ||x - B_F z_F|| subject to sum(z_F) = 1.

    The last free coordinate is eliminated, z_a = 1 - sum(others), leaving an
    unconstrained problem in the differences B_j - B_a (minimum-norm solution
    for rank-deficient neighborhoods).
    """
    anchor = free[-1]
    if len(free) == 1:
        return np.array([1.0])
    rest = free[:-1]
    diffs = basis[:, rest] - basis[:, [anchor]]
    coeffs, *_ = np.linalg.lstsq(diffs, target - basis[:, anchor], rcond=None)
    return np.append(coeffs, 1.0 - coeffs.sum())


def _kkt(target: np.ndarray, basis: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Gradient, equality multiplier and KKT residual at z"""
    grad = 2.0 * basis.T @ (basis @ z - target)
    free = z > 0
    mu = float(grad[free].mean()) if free.any() else float(grad.min())
    stationarity = np.abs(grad[free] - mu).max(initial=0.0)
    dual = np.maximum(mu - grad[~free], 0.0).max(initial=0.0)
    primal = max(abs(z.sum() - 1.0), np.maximum(-z, 0.0).max(initial=0.0))
    return grad, mu, float(max(stationarity, dual, primal))


def _toward_vertex(target: np.ndarray, basis: np.ndarray, z: np.ndarray, j: int):
    """Exact line search from z toward the vertex e_j; None when no descent is possible"""
    direction = -z.copy()
    direction[j] += 1.0
    moved = basis @ direction
    curvature = float(moved @ moved)
    slope = float((basis @ z - target) @ moved)
    if slope >= 0:
        return None
    t = 1.0 if curvature == 0 else min(1.0, -slope / curvature)
    if t >= 1.0:
        vertex = np.zeros_like(z)
        vertex[j] = 1.0
        return vertex
    return z + t * direction


def solve_simplex_lsq(target: np.ndarray, basis: np.ndarray, max_iter: int = None) -> Tuple[SimplexWeights, QpReport]:
    """
    Solve min ||x - X_k z||^2 subject to z >= 0, sum(z) = 1

    Primal active-set method in the manner of Lawson-Hanson NNLS: start from
    the best single column, release the fixed coordinate with the most
    negative multiplier, step toward the equality-constrained optimum on the
    free set and fix the first blocking coordinate. Ties go to the lowest
    index.

    Args:
        target: length-d vector x
        basis: d x k matrix X_k, one neighbor per column

    Returns:
        (SimplexWeights, QpReport)
    """
    target = np.asarray(target, dtype=np.float64)
    basis = np.asarray(basis, dtype=np.float64)
    if basis.ndim != 2:
        raise DimensionError(f"basis must be a d x k matrix, got shape {basis.shape}")
    d, k = basis.shape
    if k == 0:
        raise UsageError("basis must contain at least one column")
    if target.shape != (d,):
        raise DimensionError(f"target has shape {target.shape}, expected ({d},)")
    if not (np.all(np.isfinite(target)) and np.all(np.isfinite(basis))):
        raise UsageError("simplex least squares requires finite inputs")

    max_iter = max_iter or 50 * k + 10
    scale = max(1.0, float(np.abs(basis).max()), float(np.abs(target).max()))
    tol = 1e-13 * scale * scale

    start = int(np.argmin(((basis - target[:, None]) ** 2).sum(axis=0)))
    z = np.zeros(k)
    z[start] = 1.0
    free = [start]

    entering = None
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_iter:
            raise NumericalError(f"simplex least squares did not converge in {max_iter} iterations")

        candidate = np.zeros(k)
        candidate[free] = _equality_lsq(target, basis, free)

        if np.all(candidate[free] > 0):
            z = candidate
            grad, mu, _ = _kkt(target, basis, z)
            fixed = [j for j in range(k) if j not in free]
            if not fixed:
                break
            multipliers = grad[fixed] - mu
            worst = int(np.argmin(multipliers))
            if multipliers[worst] >= -tol:
                break
            entering = fixed[worst]
            free = sorted(free + [entering])
            continue

        # step from z toward the candidate until the first coordinate hits zero
        direction = candidate - z
        blocking = [j for j in free if direction[j] < 0]
        ratios = [z[j] / -direction[j] for j in blocking]
        if not blocking:
            # candidate is feasible with exact zeros; drop them
            leaving, step = entering, 0.0
            if entering is None or candidate[entering] > 0:
                z = candidate
                free = [j for j in free if candidate[j] > 0]
                continue
        else:
            step = min(ratios)
            leaving = blocking[int(np.argmin(ratios))]
        if step <= 0 and leaving == entering:
            # min-norm solution is degenerate along the entering column
            moved = _toward_vertex(target, basis, z, entering)
            if moved is None:
                break
            z = moved
            free = [j for j in range(k) if z[j] > 0]
            entering = None
            continue
        entering = None
        z = z + step * direction
        z[leaving] = 0.0
        free = [j for j in free if j != leaving and z[j] > 0]
        z[[j for j in range(k) if j not in free]] = 0.0

    z = np.maximum(z, 0.0)
    z /= z.sum()
    residual = target - basis @ z
    _, _, kkt_residual = _kkt(target, basis, z)
    report = QpReport(
        objective=float(residual @ residual),
        kkt_residual=kkt_residual,
        iterations=iterations,
        active_set=[j for j in range(k) if z[j] == 0]
    )
    return SimplexWeights(z=z), report


def reconstruct_weights(neighbor_weights: np.ndarray, z: SimplexWeights) -> np.ndarray:
    """
    w = max(0, W_k^T z), which equals W_k^T z for nonnegative rows

    Args:
        neighbor_weights: k x m matrix, row i = TRW weights of neighbor i
        z: reconstruction coefficients of the k neighbors
    """
    neighbor_weights = np.asarray(neighbor_weights, dtype=np.float64)
    if neighbor_weights.ndim != 2 or neighbor_weights.shape[0] != z.k:
        raise DimensionError(
            f"neighbor weights have shape {neighbor_weights.shape}, expected ({z.k}, m)"
        )
    return np.maximum(neighbor_weights.T @ z.z, 0.0)
