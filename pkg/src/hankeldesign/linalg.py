"""Dense linear-algebra primitives: Hankel matrices, tolerant rank,
left-kernel bases, image-membership tests and persistency of excitation.

Signals are numpy arrays of shape (T, d): one row per time sample. A 1-D
array of length T is treated as a scalar signal of shape (T, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "Tolerance",
    "hankel",
    "block_hankel",
    "numerical_rank",
    "left_kernel_basis",
    "in_image",
    "is_persistently_exciting",
]


@dataclass(frozen=True)
class Tolerance:
    """Thresholds for rank and residual decisions.

    rel scales with the largest singular value (times the larger matrix
    dimension), abs is an absolute floor. Both must be nonnegative.
    """

    rel: float = 1e-11
    abs: float = 1e-13

    def __post_init__(self) -> None:
        if self.rel < 0 or self.abs < 0:
            raise ValueError("tolerances must be nonnegative")

    def rank_threshold(self, sigma_max: float, shape: tuple[int, int]) -> float:
        return self.rel * sigma_max * max(shape) + self.abs

    def residual_threshold(self, scale: float) -> float:
        return self.abs + self.rel * scale


def _as_signal(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2:
        raise DimensionError(f"signal must be 1-D or 2-D, got ndim={f.ndim}")
    if not np.all(np.isfinite(f)):
        raise ValueError("signal contains non-finite entries")
    return f


def hankel(f: np.ndarray, depth: int) -> np.ndarray:
    """Hankel matrix of depth `depth` built from the signal `f`.

    Block entry at block-row r, column c is sample r+c of f, so the result
    has shape (depth*d, T-depth+1) for a (T, d) signal.
    """
    f = _as_signal(f)
    n_samples = f.shape[0]
    if not 1 <= depth <= n_samples:
        raise DimensionError(
            f"depth {depth} out of range for {n_samples} samples"
        )
    return block_hankel(f, depth)


def block_hankel(f: np.ndarray, depth: int) -> np.ndarray:
    """Like :func:`hankel`, but tolerates the degenerate shapes the online
    design loop starts from: depth 0 gives a (0, T+1) matrix and an empty
    signal gives zero columns.
    """
    f = _as_signal(f)
    n_samples, d = f.shape
    cols = n_samples - depth + 1
    if depth < 0 or cols < 0:
        raise DimensionError(f"depth {depth} invalid for {n_samples} samples")
    if depth == 0 or cols == 0:
        return np.zeros((depth * d, cols))
    return np.vstack([f[r : r + cols].T for r in range(depth)])


def numerical_rank(M: np.ndarray, tol: Tolerance = Tolerance()) -> int:
    """Number of singular values above the tolerance threshold."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol.rank_threshold(s[0], M.shape)))


def left_kernel_basis(M: np.ndarray, tol: Tolerance = Tolerance()) -> np.ndarray:
    """Orthonormal basis (as rows) of the left kernel of M.

    Rows come from the left singular vectors of below-threshold singular
    values, so the result has shape (rows - rank, rows); a full-row-rank
    matrix yields an empty (0, rows) basis and an empty matrix yields the
    identity.
    """
    M = np.asarray(M, dtype=float)
    rows = M.shape[0]
    if M.size == 0:
        return np.eye(rows)
    u, s, _ = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol.rank_threshold(s[0], M.shape)))
    return u[:, rank:].T


def in_image(v: np.ndarray, M: np.ndarray, tol: Tolerance = Tolerance()) -> bool:
    """True iff v lies in the column image of M, adjudicated by the
    least-squares residual against ``tol.abs + tol.rel * ||v||``.
    """
    v = np.asarray(v, dtype=float).ravel()
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != v.shape[0]:
        raise DimensionError(
            f"vector of length {v.shape[0]} vs matrix with {M.shape[0]} rows"
        )
    if M.shape[1] == 0:
        residual = float(np.linalg.norm(v))
    else:
        z, *_ = np.linalg.lstsq(M, v, rcond=None)
        residual = float(np.linalg.norm(M @ z - v))
    return residual <= tol.residual_threshold(float(np.linalg.norm(v)))


def is_persistently_exciting(
    u: np.ndarray, order: int, tol: Tolerance = Tolerance()
) -> bool:
    """True iff the depth-`order` Hankel matrix of u has full row rank."""
    u = _as_signal(u)
    H = hankel(u, order)
    return numerical_rank(H, tol) == u.shape[1] * order
