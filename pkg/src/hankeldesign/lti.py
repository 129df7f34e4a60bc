"""Discrete-time LTI state-space models: simulation, structural tests,
observability/Toeplitz matrices and random minimal-system generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, GenerationError, StructureError
from .linalg import Tolerance, _as_signal, numerical_rank

__all__ = [
    "LtiSystem",
    "Trajectory",
    "PlantOracle",
    "simulate",
    "observability_matrix",
    "lag",
    "toeplitz_markov",
    "io_lift_matrices",
    "is_controllable",
    "is_observable",
    "random_minimal_system",
]


@dataclass(frozen=True)
class LtiSystem:
    """State-space quadruple x(t+1) = A x(t) + B u(t), y(t) = C x(t) + D u(t)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self) -> None:
        for name in ("A", "B", "C", "D"):
            val = np.asarray(getattr(self, name), dtype=float)
            if name == "B" and val.ndim == 1:
                val = val[:, None]  # 1-D B reads as a single-input column
            object.__setattr__(self, name, np.atleast_2d(val))
        n, m, p = self.A.shape[0], self.B.shape[1], self.C.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.B.shape != (n, m):
            raise DimensionError(f"B must be {n}x{m}, got {self.B.shape}")
        if self.C.shape != (p, n):
            raise DimensionError(f"C must be {p}x{n}, got {self.C.shape}")
        if self.D.shape != (p, m):
            raise DimensionError(f"D must be {p}x{m}, got {self.D.shape}")
        if min(n, m, p) < 1:
            raise DimensionError("system dimensions must all be at least 1")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @classmethod
    def full_state(cls, A: np.ndarray, B: np.ndarray) -> "LtiSystem":
        """System with y(t) = x(t): C = I, D = 0."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        n, m = A.shape[0], B.shape[1]
        return cls(A, B, np.eye(n), np.zeros((n, m)))

    @classmethod
    def from_json(cls, path: str | Path) -> "LtiSystem":
        with open(path) as fh:
            data = json.load(fh)
        try:
            return cls(data["A"], data["B"], data["C"], data["D"])
        except KeyError as exc:
            raise ConfigError(f"system file missing key {exc}") from exc

    def to_json(self, path: str | Path) -> None:
        data = {k: getattr(self, k).tolist() for k in ("A", "B", "C", "D")}
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class Trajectory:
    """Aligned input/state/output sequences, one row per sample.

    When present, x carries one extra (terminal) sample relative to u.
    """

    u: np.ndarray
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    t0: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", _as_signal(self.u))
        for name in ("x", "y"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _as_signal(val))
        T = self.u.shape[0]
        if self.x is not None and self.x.shape[0] != T + 1:
            raise DimensionError("state sequence must have one more sample than u")
        if self.y is not None and self.y.shape[0] != T:
            raise DimensionError("output sequence must match u in length")

    @property
    def length(self) -> int:
        return self.u.shape[0]


def simulate(sys: LtiSystem, x0: np.ndarray, u: np.ndarray) -> Trajectory:
    """Roll the state recursion forward for the whole input sequence."""
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.shape[0] != sys.n:
        raise DimensionError(f"x0 has length {x0.shape[0]}, expected {sys.n}")
    u = _as_signal(u)
    if u.shape[1] != sys.m:
        raise DimensionError(f"input dim {u.shape[1]} != m = {sys.m}")
    T = u.shape[0]
    x = np.zeros((T + 1, sys.n))
    y = np.zeros((T, sys.p))
    x[0] = x0
    for t in range(T):
        y[t] = sys.C @ x[t] + sys.D @ u[t]
        x[t + 1] = sys.A @ x[t] + sys.B @ u[t]
    return Trajectory(u=u, x=x, y=y)


def observability_matrix(sys: LtiSystem, i: int) -> np.ndarray:
    """Stacked (p*i) x n matrix [C; CA; ...; CA^{i-1}]."""
    if i < 1:
        raise DimensionError("block count must be at least 1")
    blocks = []
    Ck = sys.C
    for _ in range(i):
        blocks.append(Ck)
        Ck = Ck @ sys.A
    return np.vstack(blocks)


def lag(sys: LtiSystem, tol: Tolerance = Tolerance()) -> int:
    """Smallest i with rank [C; CA; ...; CA^{i-1}] = n."""
    for i in range(1, sys.n + 1):
        if numerical_rank(observability_matrix(sys, i), tol) == sys.n:
            return i
    raise StructureError("(C, A) is not observable; no block count reaches rank n")


def toeplitz_markov(sys: LtiSystem, i: int) -> np.ndarray:
    """Lower block-triangular (p*i) x (m*i) matrix with D on the diagonal and
    the Markov parameter CA^{k-1}B on subdiagonal k.
    """
    if i < 1:
        raise DimensionError("block count must be at least 1")
    markov = [sys.D]
    Ak = np.eye(sys.n)
    for _ in range(i - 1):
        markov.append(sys.C @ Ak @ sys.B)
        Ak = sys.A @ Ak
    T = np.zeros((sys.p * i, sys.m * i))
    for r in range(i):
        for c in range(r + 1):
            T[r * sys.p : (r + 1) * sys.p, c * sys.m : (c + 1) * sys.m] = markov[r - c]
    return T


def io_lift_matrices(sys: LtiSystem, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Injective maps used to pull input/output conditions back to states.

    N sends (x(t-L+1), u over the last L-1 steps) to the corresponding
    (y window, u window); M = blockdiag(N, I_m). Both have full column rank
    whenever (C, A) is observable and L exceeds the lag.
    """
    if L < 2:
        raise DimensionError("window length must be at least 2")
    O = observability_matrix(sys, L - 1)
    T = toeplitz_markov(sys, L - 1)
    mw = sys.m * (L - 1)
    N = np.block([[O, T], [np.zeros((mw, sys.n)), np.eye(mw)]])
    M = np.block(
        [
            [N, np.zeros((N.shape[0], sys.m))],
            [np.zeros((sys.m, N.shape[1])), np.eye(sys.m)],
        ]
    )
    return N, M


def is_controllable(sys: LtiSystem, tol: Tolerance = Tolerance()) -> bool:
    """Kalman rank test on [B, AB, ..., A^{n-1}B]."""
    blocks = []
    Bk = sys.B
    for _ in range(sys.n):
        blocks.append(Bk)
        Bk = sys.A @ Bk
    return numerical_rank(np.hstack(blocks), tol) == sys.n


def is_observable(sys: LtiSystem, tol: Tolerance = Tolerance()) -> bool:
    return numerical_rank(observability_matrix(sys, sys.n), tol) == sys.n


def random_minimal_system(
    n: int,
    m: int,
    p: int,
    spectral_cap: float = 1.0,
    seed: int | np.random.Generator | None = None,
    max_retries: int = 100,
) -> LtiSystem:
    """Seeded random system with uniform(-1, 1) entries, A rescaled to
    spectral radius <= spectral_cap, rejection-sampled until minimal.
    """
    if min(n, m, p) < 1 or spectral_cap <= 0:
        raise ConfigError("dimensions must be positive and spectral_cap > 0")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(max_retries):
        A = rng.uniform(-1.0, 1.0, (n, n))
        rho = max(abs(np.linalg.eigvals(A)))
        if rho > spectral_cap:
            A *= spectral_cap / rho
        sys = LtiSystem(
            A,
            rng.uniform(-1.0, 1.0, (n, m)),
            rng.uniform(-1.0, 1.0, (p, n)),
            rng.uniform(-1.0, 1.0, (p, m)),
        )
        if is_controllable(sys) and is_observable(sys):
            return sys
    raise GenerationError(f"no minimal system found in {max_retries} draws")


class PlantOracle:
    """Black-box plant enforcing online causality.

    In STATE mode the current state x(t) may be read before committing u(t);
    in OUTPUT mode applying u(t) returns y(t) and nothing else is exposed.
    The true trajectory is recorded internally for post-hoc verification.
    """

    STATE = "state"
    OUTPUT = "output"

    def __init__(
        self,
        system: LtiSystem,
        mode: str = STATE,
        x0: np.ndarray | None = None,
        seed: int | None = None,
    ) -> None:
        if mode not in (self.STATE, self.OUTPUT):
            raise ConfigError(f"unknown oracle mode {mode!r}")
        self._sys = system
        self.mode = mode
        if x0 is None:
            x0 = np.random.default_rng(seed).uniform(-1.0, 1.0, system.n)
        x0 = np.asarray(x0, dtype=float).ravel()
        if x0.shape[0] != system.n:
            raise DimensionError(f"x0 has length {x0.shape[0]}, expected {system.n}")
        self._x = x0
        self._us: list[np.ndarray] = []
        self._xs: list[np.ndarray] = [x0.copy()]
        self._ys: list[np.ndarray] = []

    @property
    def m(self) -> int:
        return self._sys.m

    @property
    def n(self) -> int:
        if self.mode != self.STATE:
            raise ConfigError("state dimension is hidden in OUTPUT mode")
        return self._sys.n

    @property
    def t(self) -> int:
        return len(self._us)

    def read_state(self) -> np.ndarray:
        if self.mode != self.STATE:
            raise ConfigError("state is not observable in OUTPUT mode")
        return self._x.copy()

    def apply(self, u: np.ndarray) -> np.ndarray | None:
        """Commit u(t); returns y(t) in OUTPUT mode, None in STATE mode."""
        u = np.asarray(u, dtype=float).ravel()
        if u.shape[0] != self._sys.m:
            raise DimensionError(f"input has length {u.shape[0]}, expected {self._sys.m}")
        y = self._sys.C @ self._x + self._sys.D @ u
        self._us.append(u.copy())
        self._ys.append(y)
        self._x = self._sys.A @ self._x + self._sys.B @ u
        self._xs.append(self._x.copy())
        return y if self.mode == self.OUTPUT else None

    def truth(self) -> Trajectory:
        """Full hidden trajectory, for tests and verification only."""
        return Trajectory(
            u=np.array(self._us).reshape(len(self._us), self._sys.m),
            x=np.array(self._xs),
            y=np.array(self._ys).reshape(len(self._ys), self._sys.p),
        )
