"""Online input design loops.

Each designer drives a :class:`~hankeldesign.lti.PlantOracle` one step at a
time: when the newest measurement window already lies in the image of the
data collected so far, a left-kernel certificate with a nonzero trailing
input block pins down an input that still increases the Hankel rank;
otherwise any input does. All three loops terminate with the stacked data
Hankel matrix at its target rank after the provably minimal number of
samples. A persistency-of-excitation baseline is included for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    GenerationError,
    InfeasibleError,
    RunawayError,
)
from .linalg import (
    Tolerance,
    block_hankel,
    in_image,
    is_persistently_exciting,
    left_kernel_basis,
    numerical_rank,
)
from .lti import PlantOracle, Trajectory

__all__ = [
    "KernelCertificate",
    "InputPolicy",
    "DesignStep",
    "DesignLog",
    "DesignProblem",
    "find_certificate",
    "choose_input",
    "design_input_state",
    "design_input_state_depth",
    "design_input_output",
    "design_input_output_unknown_n",
    "design_pe_baseline",
]

BRANCH_IMAGE_MISS = "IMAGE_MISS"
BRANCH_CERTIFICATE = "CERTIFICATE"


@dataclass(frozen=True)
class KernelCertificate:
    """Left-kernel vector of a stacked data Hankel matrix, partitioned into a
    leading block `xi` and input blocks `etas` (oldest shift first). The
    trailing block `eta1` is strictly nonzero by construction.
    """

    xi: np.ndarray
    etas: np.ndarray  # shape (L, m), rows ordered eta_L, ..., eta_1
    residual: float

    @property
    def eta1(self) -> np.ndarray:
        return self.etas[-1]

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.xi, self.etas.ravel()])


@dataclass
class InputPolicy:
    """How "arbitrary" inputs are picked and how certificate inputs are scaled.

    Modes: FIRST_BASIS uses delta * e1 whenever any input will do;
    SEEDED_RANDOM draws a random direction of norm delta; NORM_CONSTRAINED
    behaves like FIRST_BASIS but documents that every input has norm exactly
    delta. Certificate steps always return the sign-optimized vector
    s * delta * eta1 / ||eta1||, which keeps the achieved scalar at magnitude
    |known| + delta * ||eta1|| > 0 in all modes.
    """

    FIRST_BASIS = "first-basis"
    SEEDED_RANDOM = "random"
    NORM_CONSTRAINED = "norm"

    mode: str = FIRST_BASIS
    delta: float = 1.0
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.mode not in (self.FIRST_BASIS, self.SEEDED_RANDOM, self.NORM_CONSTRAINED):
            raise ConfigError(f"unknown input policy mode {self.mode!r}")
        if self.delta <= 0:
            raise ConfigError("input magnitude delta must be positive")

    def make_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def arbitrary_input(self, m: int, rng: np.random.Generator) -> np.ndarray:
        if self.mode == self.SEEDED_RANDOM:
            v = rng.uniform(-1.0, 1.0, m)
            while np.linalg.norm(v) < 1e-12:
                v = rng.uniform(-1.0, 1.0, m)
            return self.delta * v / np.linalg.norm(v)
        u = np.zeros(m)
        u[0] = self.delta
        return u


def choose_input(
    cert: KernelCertificate, known_part: float, policy: InputPolicy
) -> np.ndarray:
    """Certificate-branch input: norm-delta multiple of eta1 with the sign
    that maximizes the magnitude of the certificate scalar.
    """
    eta1 = cert.eta1
    norm = float(np.linalg.norm(eta1))
    if norm <= 0:
        raise ValueError("certificate has zero trailing input block")
    sign = 1.0 if known_part >= 0 else -1.0
    return sign * policy.delta * eta1 / norm


def find_certificate(
    stacked: np.ndarray,
    lead_rows: int,
    m: int,
    L: int,
    tol: Tolerance = Tolerance(),
    eta_min: float = 1e-8,
) -> Optional[KernelCertificate]:
    """Search the left kernel of `stacked` for a combination whose trailing
    m-block has maximum norm; None when that norm cannot exceed `eta_min`.

    `stacked` must have lead_rows + m*L rows; the returned certificate is a
    unit vector, so its annihilation residual is directly comparable to the
    matrix scale.
    """
    stacked = np.asarray(stacked, dtype=float)
    if stacked.shape[0] != lead_rows + m * L:
        raise DimensionError(
            f"stacked matrix has {stacked.shape[0]} rows, expected {lead_rows + m * L}"
        )
    K = left_kernel_basis(stacked, tol)
    if K.shape[0] == 0:
        return None
    # Maximizing ||c^T K_eta|| over unit c is the top left singular pair of
    # the trailing block of the orthonormal kernel basis.
    K_eta = K[:, lead_rows + m * (L - 1) :]
    u_svd, s_svd, _ = np.linalg.svd(K_eta)
    if s_svd.size == 0 or s_svd[0] <= eta_min:
        return None
    w = u_svd[:, 0] @ K
    residual = float(np.linalg.norm(w @ stacked)) if stacked.shape[1] else 0.0
    return KernelCertificate(
        xi=w[:lead_rows],
        etas=w[lead_rows:].reshape(L, m),
        residual=residual,
    )


@dataclass
class DesignStep:
    t: int
    branch: str
    u: np.ndarray
    scalar: Optional[float]
    rank_after: int
    certificate: Optional[KernelCertificate] = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "branch": self.branch,
            "u": self.u.tolist(),
            "scalar": self.scalar,
            "rank_after": self.rank_after,
        }


@dataclass
class DesignLog:
    """Per-step record of one online design run."""

    steps: list[DesignStep] = field(default_factory=list)
    initial_rank: int = 0
    T: int = 0
    final_rank: int = 0
    target_rank: int = 0
    n_recovered: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.final_rank == self.target_rank

    def min_scalar_margin(self) -> Optional[float]:
        scalars = [abs(s.scalar) for s in self.steps if s.scalar is not None]
        return min(scalars) if scalars else None

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "final": {
                "T": self.T,
                "rank": self.final_rank,
                "target": self.target_rank,
                "n_recovered": self.n_recovered,
            },
        }


@dataclass
class DesignProblem:
    """One online design task: a plant to excite plus loop parameters.

    `n_known` may be None only for the unknown-order input/output design.
    """

    plant: PlantOracle
    L: int = 1
    n_known: Optional[int] = None
    policy: InputPolicy = field(default_factory=InputPolicy)
    tol: Tolerance = field(default_factory=Tolerance)
    eta_min: float = 1e-8
    runaway_cap: Optional[int] = None


def _stack(*blocks: np.ndarray) -> np.ndarray:
    return np.vstack([b for b in blocks if b.shape[0] > 0]) if any(
        b.shape[0] for b in blocks
    ) else np.zeros((0, blocks[0].shape[1]))


def design_input_state(problem: DesignProblem) -> tuple[Trajectory, DesignLog]:
    """Depth-1 input/state design: exactly n+m samples make the stacked
    state/input matrix square and nonsingular.
    """
    plant = problem.plant
    if plant.mode != PlantOracle.STATE:
        raise ConfigError("input/state design needs a STATE-mode plant")
    n = problem.n_known if problem.n_known is not None else plant.n
    m = plant.m
    T = n + m
    policy = problem.policy
    rng = policy.make_rng()
    log = DesignLog(target_rank=n + m)

    xs: list[np.ndarray] = []
    us: list[np.ndarray] = []
    for t in range(T):
        x_t = plant.read_state()
        X = np.array(xs).reshape(len(xs), n).T  # n x t
        U = np.array(us).reshape(len(us), m).T  # m x t
        cert = None
        scalar = None
        if in_image(x_t, X, problem.tol):
            cert = find_certificate(
                np.vstack([X, U]), n, m, 1, problem.tol, problem.eta_min
            )
            if cert is None:
                raise InfeasibleError(
                    f"no rank-increasing certificate at t={t}; "
                    "plant may be uncontrollable or tolerances too tight"
                )
            known = float(cert.xi @ x_t)
            u_t = choose_input(cert, known, policy)
            scalar = known + float(cert.eta1 @ u_t)
            branch = BRANCH_CERTIFICATE
        else:
            u_t = policy.arbitrary_input(m, rng)
            branch = BRANCH_IMAGE_MISS
        xs.append(x_t)
        us.append(u_t)
        rank_after = numerical_rank(
            np.vstack([np.array(xs).T, np.array(us).T]), problem.tol
        )
        log.steps.append(DesignStep(t, branch, u_t, scalar, rank_after, cert))
        plant.apply(u_t)

    xs.append(plant.read_state())
    traj = Trajectory(u=np.array(us), x=np.array(xs))
    log.T = T
    log.final_rank = log.steps[-1].rank_after
    return traj, log


def design_input_state_depth(problem: DesignProblem) -> tuple[Trajectory, DesignLog]:
    """Depth-L input/state design: n + (m+1)L - 1 samples give the stacked
    [states; depth-L input Hankel] matrix full rank n + mL.

    With L = 1 the loop collapses to :func:`design_input_state` and produces
    the same log for the same seed and policy.
    """
    plant = problem.plant
    if plant.mode != PlantOracle.STATE:
        raise ConfigError("input/state design needs a STATE-mode plant")
    if problem.L < 1:
        raise ConfigError("window length L must be at least 1")
    n = problem.n_known if problem.n_known is not None else plant.n
    m = plant.m
    L = problem.L
    T = n + (m + 1) * L - 1
    policy = problem.policy
    rng = policy.make_rng()
    log = DesignLog(target_rank=n + m * L)

    xs: list[np.ndarray] = []
    us: list[np.ndarray] = []

    if L >= 2:
        # Burn-in window: u(0) nonzero, the rest zero. No columns exist yet;
        # the single column formed at t = L-1 has rank 1 because u(0) != 0.
        for t in range(L):
            xs.append(plant.read_state())
            u_t = policy.arbitrary_input(m, rng) if t == 0 else np.zeros(m)
            us.append(u_t)
            plant.apply(u_t)
        log.initial_rank = 1
        t_start = L
    else:
        t_start = 0

    for t in range(t_start, T):
        x_t = plant.read_state()
        xs.append(x_t)
        X = np.array(xs).reshape(len(xs), n)
        U = np.array(us).reshape(len(us), m)

        # Image test: is the new window already explained by the data so far?
        A = _stack(block_hankel(X[: t - L + 1], 1), block_hankel(U[: max(t - 1, 0)], L - 1))
        v = np.concatenate([X[t - L + 1], U[t - L + 1 : t].ravel()])
        cert = None
        scalar = None
        if in_image(v, A, problem.tol):
            S = _stack(block_hankel(X[: t - L + 1], 1), block_hankel(U[:t], L))
            cert = find_certificate(S, n, m, L, problem.tol, problem.eta_min)
            if cert is None:
                raise InfeasibleError(
                    f"no rank-increasing certificate at t={t}; "
                    "plant may be uncontrollable or tolerances too tight"
                )
            known = float(cert.xi @ X[t - L + 1])
            for j in range(L - 1):
                known += float(cert.etas[j] @ U[t - L + 1 + j])
            u_t = choose_input(cert, known, policy)
            scalar = known + float(cert.eta1 @ u_t)
            branch = BRANCH_CERTIFICATE
        else:
            u_t = policy.arbitrary_input(m, rng)
            branch = BRANCH_IMAGE_MISS
        us.append(u_t)
        U = np.array(us).reshape(len(us), m)
        rank_after = numerical_rank(
            _stack(block_hankel(X[: t - L + 2], 1), block_hankel(U, L)), problem.tol
        )
        log.steps.append(DesignStep(t, branch, u_t, scalar, rank_after, cert))
        plant.apply(u_t)

    xs.append(plant.read_state())
    traj = Trajectory(u=np.array(us), x=np.array(xs))
    log.T = T
    log.final_rank = log.steps[-1].rank_after
    return traj, log


def _io_step(
    t: int,
    L: int,
    m: int,
    p: int,
    Y: np.ndarray,
    U: np.ndarray,
    problem: DesignProblem,
    rng: np.random.Generator,
) -> tuple[np.ndarray, str, Optional[float], Optional[KernelCertificate], bool]:
    """One input/output design decision at time t >= L.

    Returns (u_t, branch, scalar, certificate, stop) where stop is True when
    the window is in the image but no certificate exists, i.e. the rank
    ladder has topped out (the unknown-order stopping condition).
    """
    A = _stack(block_hankel(Y[: t - 1], L - 1), block_hankel(U[: t - 1], L - 1))
    v = np.concatenate([Y[t - L + 1 : t].ravel(), U[t - L + 1 : t].ravel()])
    if in_image(v, A, problem.tol):
        S = _stack(block_hankel(Y[: t - 1], L - 1), block_hankel(U[:t], L))
        cert = find_certificate(S, p * (L - 1), m, L, problem.tol, problem.eta_min)
        if cert is None:
            return np.zeros(m), "", None, None, True
        xis = cert.xi.reshape(L - 1, p)  # rows: xi_{L-1}, ..., xi_1
        known = 0.0
        for j in range(L - 1):
            known += float(xis[j] @ Y[t - L + 1 + j])
            known += float(cert.etas[j] @ U[t - L + 1 + j])
        u_t = choose_input(cert, known, problem.policy)
        scalar = known + float(cert.eta1 @ u_t)
        return u_t, BRANCH_CERTIFICATE, scalar, cert, False
    u_t = problem.policy.arbitrary_input(m, rng)
    return u_t, BRANCH_IMAGE_MISS, None, None, False


def _io_rank_after(
    t: int, L: int, Y: np.ndarray, U: np.ndarray, tol: Tolerance
) -> int:
    return numerical_rank(
        _stack(block_hankel(Y[:t], L - 1), block_hankel(U[: t + 1], L)), tol
    )


def _io_design_loop(
    problem: DesignProblem, T: Optional[int]
) -> tuple[Trajectory, DesignLog]:
    """Shared Theorem-3-style loop; T=None runs until the stopping condition."""
    plant = problem.plant
    if plant.mode != PlantOracle.OUTPUT:
        raise ConfigError("input/output design needs an OUTPUT-mode plant")
    L = problem.L
    if L < 2:
        raise ConfigError("input/output design needs L >= 2 (L must exceed the lag)")
    m = plant.m
    policy = problem.policy
    rng = policy.make_rng()
    log = DesignLog(initial_rank=1)

    us: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    for t in range(L):
        u_t = policy.arbitrary_input(m, rng) if t == 0 else np.zeros(m)
        us.append(u_t)
        ys.append(plant.apply(u_t))
    p = ys[0].shape[0]

    cap = problem.runaway_cap
    if cap is None:
        cap = 10 * (m * L + L + 50)
    t = L
    while True:
        if T is not None and t >= T:
            break
        if T is None and t > cap:
            raise RunawayError(
                f"no stopping condition by t={t}; tolerance breakdown suspected"
            )
        Y = np.array(ys).reshape(len(ys), p)
        U = np.array(us).reshape(len(us), m)
        u_t, branch, scalar, cert, stop = _io_step(t, L, m, p, Y, U, problem, rng)
        if stop:
            if T is not None:
                raise InfeasibleError(
                    f"no rank-increasing certificate at t={t} < T={T}; "
                    "plant may not be minimal or tolerances too tight"
                )
            log.n_recovered = t - (m + 1) * L + 1
            break
        us.append(u_t)
        U = np.array(us).reshape(len(us), m)
        rank_after = _io_rank_after(t, L, Y, U, problem.tol)
        log.steps.append(DesignStep(t, branch, u_t, scalar, rank_after, cert))
        ys.append(plant.apply(u_t))
        t += 1

    traj = Trajectory(u=np.array(us), y=np.array(ys))
    log.T = len(us)
    Y = traj.y
    U = traj.u
    log.final_rank = numerical_rank(
        _stack(block_hankel(Y, L), block_hankel(U, L)), problem.tol
    )
    if T is not None:
        n = problem.n_known
        log.target_rank = n + m * L
    else:
        log.target_rank = (log.n_recovered or 0) + m * L
    return traj, log


def design_input_output(problem: DesignProblem) -> tuple[Trajectory, DesignLog]:
    """Input/output design with known state dimension: n + (m+1)L - 1 samples
    bring the stacked output/input Hankel matrix to rank n + mL. Requires a
    window length strictly above the plant's lag.
    """
    if problem.n_known is None:
        raise ConfigError("known-order design requires n_known")
    T = problem.n_known + (problem.plant.m + 1) * problem.L - 1
    return _io_design_loop(problem, T)


def design_input_output_unknown_n(
    problem: DesignProblem,
) -> tuple[Trajectory, DesignLog]:
    """Input/output design without knowing n: run until the image condition
    holds with no certificate left, then read the state dimension off the
    stopping time, n = t - (m+1)L + 1.
    """
    return _io_design_loop(problem, None)


def design_pe_baseline(
    m: int, order: int, T: int, seed: Optional[int] = None, max_resamples: int = 10
) -> np.ndarray:
    """Seeded i.i.d. uniform(-1, 1) input of shape (T, m), resampled until it
    is persistently exciting of the requested order.
    """
    if T < (m + 1) * order - 1:
        raise ConfigError(
            f"T={T} too short: persistency of excitation of order {order} "
            f"needs at least {(m + 1) * order - 1} samples"
        )
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(max_resamples):
        u = np.random.default_rng(child).uniform(-1.0, 1.0, (T, m))
        if is_persistently_exciting(u, order):
            return u
    raise GenerationError(f"no PE input of order {order} in {max_resamples} draws")
