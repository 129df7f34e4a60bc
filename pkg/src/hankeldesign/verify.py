"""Independent post-hoc verification of designed experiments.

Everything here is deliberately decoupled from the design loops: rank
checks go through plain SVD calls on freshly assembled Hankel matrices, and
:func:`exact_rank_oracle` re-derives ranks in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError, OracleError
from .linalg import Tolerance, hankel, in_image, numerical_rank

__all__ = [
    "RankCheck",
    "check_io_rank",
    "check_is_rank",
    "check_trajectory_parameterized",
    "min_samples",
    "exact_rank_oracle",
    "METHOD_ONLINE_IS",
    "METHOD_ONLINE_IO",
    "METHOD_PE",
]

METHOD_ONLINE_IS = "online-is"
METHOD_ONLINE_IO = "online-io"
METHOD_PE = "pe"


@dataclass(frozen=True)
class RankCheck:
    rank: int
    target: int
    passed: bool

    def to_dict(self) -> dict:
        return {"rank": self.rank, "target": self.target, "pass": self.passed}


def _as_2d(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def check_io_rank(
    u: np.ndarray, y: np.ndarray, L: int, n: int, tol: Tolerance = Tolerance()
) -> RankCheck:
    """Rank of [H_L(y); H_L(u)] against the target n + mL."""
    u, y = _as_2d(u), _as_2d(y)
    if u.shape[0] != y.shape[0]:
        raise DimensionError(
            f"u has {u.shape[0]} samples but y has {y.shape[0]}"
        )
    rank = numerical_rank(np.vstack([hankel(y, L), hankel(u, L)]), tol)
    target = n + u.shape[1] * L
    return RankCheck(rank, target, rank == target)


def check_is_rank(
    u: np.ndarray, x: np.ndarray, n: int, tol: Tolerance = Tolerance()
) -> RankCheck:
    """Rank of the depth-1 stacked state/input matrix against n + m.

    A state sequence carrying the terminal sample (one more row than u) is
    accepted; the extra sample is ignored.
    """
    u, x = _as_2d(u), _as_2d(x)
    T = u.shape[0]
    if x.shape[0] == T + 1:
        x = x[:T]
    if x.shape[0] != T:
        raise DimensionError(f"u has {T} samples but x has {x.shape[0]}")
    rank = numerical_rank(np.vstack([x.T, u.T]), tol)
    target = n + u.shape[1]
    return RankCheck(rank, target, rank == target)


def check_trajectory_parameterized(
    u_window: np.ndarray,
    y_window: np.ndarray,
    bank_u: np.ndarray,
    bank_y: np.ndarray,
    tol: Tolerance = Tolerance(),
) -> bool:
    """True iff the candidate length-L window lies in the column image of the
    bank's stacked [H_L(y); H_L(u)] matrix.
    """
    u_window, y_window = _as_2d(u_window), _as_2d(y_window)
    if u_window.shape[0] != y_window.shape[0]:
        raise DimensionError("candidate u and y windows differ in length")
    L = u_window.shape[0]
    bank = np.vstack([hankel(_as_2d(bank_y), L), hankel(_as_2d(bank_u), L)])
    v = np.concatenate([y_window.ravel(), u_window.ravel()])
    return in_image(v, bank, tol)


def min_samples(method: str, n: int, m: int, L: int) -> int:
    """Minimum experiment length per design method.

    online-is: n+m; online-io: n+(m+1)L-1; pe: (m+1)(n+L)-1. The pe and
    online-io counts differ by exactly m*n for every (n, m, L).
    """
    if min(n, m, L) < 1:
        raise ValueError("n, m, L must all be at least 1")
    if method == METHOD_ONLINE_IS:
        return n + m
    if method == METHOD_ONLINE_IO:
        return n + (m + 1) * L - 1
    if method == METHOD_PE:
        return (m + 1) * (n + L) - 1
    raise ValueError(f"unknown method {method!r}")


_ORACLE_MAX_DIM = 16
_ORACLE_MAX_ENTRY = 10**6


def exact_rank_oracle(M: np.ndarray) -> int:
    """Rank of an integer matrix by fraction-exact Gaussian elimination.

    Restricted to dimensions <= 16 and entries of magnitude <= 1e6; anything
    outside that domain raises OracleError rather than risking a wrong
    answer.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise OracleError("oracle expects a 2-D matrix")
    if max(M.shape, default=0) > _ORACLE_MAX_DIM:
        raise OracleError(f"oracle domain capped at {_ORACLE_MAX_DIM}x{_ORACLE_MAX_DIM}")
    if M.size == 0:
        return 0
    if not np.all(np.equal(np.mod(M, 1), 0)):
        raise OracleError("oracle expects integer entries")
    if np.max(np.abs(M)) > _ORACLE_MAX_ENTRY:
        raise OracleError(f"oracle entries capped at magnitude {_ORACLE_MAX_ENTRY}")

    rows = [[Fraction(int(round(e))) for e in row] for row in M]
    n_rows, n_cols = len(rows), len(rows[0])
    rank = 0
    pivot_row = 0
    for col in range(n_cols):
        pivot = next(
            (r for r in range(pivot_row, n_rows) if rows[r][col] != 0), None
        )
        if pivot is None:
            continue
        rows[pivot_row], rows[pivot] = rows[pivot], rows[pivot_row]
        pv = rows[pivot_row][col]
        for r in range(pivot_row + 1, n_rows):
            if rows[r][col] != 0:
                factor = rows[r][col] / pv
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[pivot_row])]
        pivot_row += 1
        rank += 1
        if pivot_row == n_rows:
            break
    return rank
