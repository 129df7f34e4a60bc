"""Experiment harness: single runs, seeded ensemble sweeps and persistence.

All randomness flows from one master seed per run; per-trial and per-method
streams are derived through numpy SeedSequence so results are reproducible
regardless of execution order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .design import (
    DesignLog,
    DesignProblem,
    InputPolicy,
    design_input_output,
    design_input_output_unknown_n,
    design_input_state,
    design_input_state_depth,
    design_pe_baseline,
)
from .errors import ConfigError, HankelDesignError, StructureError
from .linalg import Tolerance
from .lti import (
    LtiSystem,
    PlantOracle,
    Trajectory,
    is_controllable,
    is_observable,
    lag,
    random_minimal_system,
    simulate,
)
from .verify import (
    METHOD_ONLINE_IO,
    METHOD_ONLINE_IS,
    METHOD_PE,
    RankCheck,
    check_io_rank,
    check_is_rank,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "run_sweep",
    "emit_plotdata",
    "save_design_log",
    "load_design_log",
    "save_trajectory_csv",
    "load_trajectory_csv",
]

MODES = ("is", "is-depth", "io", "io-unknown-n", "pe")

_SWEEP_FIELDS = [
    "n", "m", "p", "L", "trial", "method",
    "T_used", "target_rank", "achieved_rank", "pass", "margin_min", "error",
]


@dataclass
class ExperimentConfig:
    mode: str
    system_file: Optional[str] = None
    random_dims: Optional[tuple[int, int, int]] = None  # (n, m, p)
    L: int = 1
    delta: float = 1.0
    policy_mode: str = InputPolicy.FIRST_BASIS
    tol: Tolerance = field(default_factory=Tolerance)
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if (self.system_file is None) == (self.random_dims is None):
            raise ConfigError("provide exactly one of system_file or random_dims")
        if self.L < 1:
            raise ConfigError("L must be at least 1")


@dataclass
class ExperimentResult:
    system: LtiSystem
    trajectory: Trajectory
    log: DesignLog
    check: RankCheck

    @property
    def passed(self) -> bool:
        return self.check.passed


def _derive_seeds(master: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master).spawn(count)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one configured design mode and optionally persist its artifacts."""
    sys_ss, x0_ss, policy_ss, input_ss = _derive_seeds(config.seed, 4)

    if config.system_file is not None:
        system = LtiSystem.from_json(config.system_file)
    else:
        n, m, p = config.random_dims
        system = random_minimal_system(n, m, p, seed=np.random.default_rng(sys_ss))

    if not is_controllable(system, config.tol):
        raise StructureError("(A, B) is not controllable; design cannot proceed")
    if config.mode in ("io", "io-unknown-n", "pe"):
        if not is_observable(system, config.tol):
            raise StructureError("(C, A) is not observable; input/output design needs minimality")
        if config.mode != "pe" and config.L <= lag(system, config.tol):
            raise ConfigError(
                f"L={config.L} must exceed the system lag {lag(system, config.tol)}"
            )

    x0 = np.random.default_rng(x0_ss).uniform(-1.0, 1.0, system.n)
    policy = InputPolicy(
        mode=config.policy_mode,
        delta=config.delta,
        seed=int(policy_ss.generate_state(1)[0]),
    )

    if config.mode == "pe":
        order = system.n + config.L
        T = (system.m + 1) * order - 1
        u = design_pe_baseline(
            system.m, order, T, seed=int(input_ss.generate_state(1)[0])
        )
        traj = simulate(system, x0, u)
        check = check_io_rank(traj.u, traj.y, config.L, system.n, config.tol)
        log = DesignLog(
            T=T, final_rank=check.rank,
            target_rank=system.n + system.m * config.L,
        )
    else:
        mode_state = config.mode in ("is", "is-depth")
        plant = PlantOracle(
            system,
            mode=PlantOracle.STATE if mode_state else PlantOracle.OUTPUT,
            x0=x0,
        )
        problem = DesignProblem(
            plant=plant,
            L=config.L,
            n_known=None if config.mode == "io-unknown-n" else system.n,
            policy=policy,
            tol=config.tol,
        )
        if config.mode == "is":
            if config.L != 1:
                raise ConfigError("mode 'is' is a depth-1 design; use 'is-depth' for L > 1")
            traj, log = design_input_state(problem)
            check = check_is_rank(traj.u, traj.x, system.n, config.tol)
        elif config.mode == "is-depth":
            traj, log = design_input_state_depth(problem)
            check = RankCheck(log.final_rank, log.target_rank, log.passed)
        elif config.mode == "io":
            traj, log = design_input_output(problem)
            check = check_io_rank(traj.u, traj.y, config.L, system.n, config.tol)
        else:
            traj, log = design_input_output_unknown_n(problem)
            check = check_io_rank(
                traj.u, traj.y, config.L, log.n_recovered, config.tol
            )

    if config.out is not None:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        system.to_json(out / "system.json")
        save_design_log(log, out / "design_log.json")
        save_trajectory_csv(traj, out / "trajectory.csv")
    return ExperimentResult(system, traj, log, check)


def save_design_log(log: DesignLog, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(log.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_design_log(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """One row per time step: t, inputs, then outputs and/or states.

    The terminal state sample is not written; the CSV covers t = 0..T-1.
    """
    m = traj.u.shape[1]
    header = ["t"] + [f"u_{i+1}" for i in range(m)]
    cols = [traj.u]
    if traj.y is not None:
        header += [f"y_{i+1}" for i in range(traj.y.shape[1])]
        cols.append(traj.y)
    if traj.x is not None:
        header += [f"x_{i+1}" for i in range(traj.x.shape[1])]
        cols.append(traj.x[: traj.length])
    data = np.hstack(cols)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(traj.length):
            writer.writerow([t] + [repr(float(v)) for v in data[t]])


def load_trajectory_csv(path: str | Path) -> dict[str, np.ndarray | None]:
    """Read back a trajectory CSV into {'u': ..., 'y': ..., 'x': ...} arrays
    (None for absent signals). Exact values round-trip through repr().
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row[1:]] for row in reader]
    data = np.array(rows)
    out: dict[str, np.ndarray | None] = {"u": None, "y": None, "x": None}
    for key in ("u", "y", "x"):
        idx = [i - 1 for i, name in enumerate(header) if name.startswith(f"{key}_")]
        if idx:
            out[key] = data[:, idx]
    return out


def _run_sweep_trial(
    system: LtiSystem,
    method: str,
    L: int,
    delta: float,
    tol: Tolerance,
    seed_ss: np.random.SeedSequence,
) -> dict:
    """One (system, method) run; returns the partial result-row fields."""
    x0_ss, policy_ss, input_ss = seed_ss.spawn(3)
    x0 = np.random.default_rng(x0_ss).uniform(-1.0, 1.0, system.n)
    policy = InputPolicy(delta=delta, seed=int(policy_ss.generate_state(1)[0]))
    n, m = system.n, system.m

    if method == METHOD_ONLINE_IS:
        plant = PlantOracle(system, PlantOracle.STATE, x0=x0)
        problem = DesignProblem(plant, L=L, n_known=n, policy=policy, tol=tol)
        traj, log = design_input_state_depth(problem)
        achieved, target = log.final_rank, log.target_rank
        margin = log.min_scalar_margin()
        T_used = log.T
    elif method == METHOD_ONLINE_IO:
        ell = lag(system, tol)
        if L <= ell:
            raise ConfigError(f"L={L} does not exceed lag {ell}")
        plant = PlantOracle(system, PlantOracle.OUTPUT, x0=x0)
        problem = DesignProblem(plant, L=L, n_known=n, policy=policy, tol=tol)
        traj, log = design_input_output(problem)
        check = check_io_rank(traj.u, traj.y, L, n, tol)
        achieved, target = check.rank, check.target
        margin = log.min_scalar_margin()
        T_used = log.T
    elif method == METHOD_PE:
        order = n + L
        T_used = (m + 1) * order - 1
        u = design_pe_baseline(m, order, T_used, seed=int(input_ss.generate_state(1)[0]))
        traj = simulate(system, x0, u)
        check = check_io_rank(traj.u, traj.y, L, n, tol)
        achieved, target = check.rank, check.target
        margin = None
    else:
        raise ConfigError(f"unknown sweep method {method!r}")

    return {
        "T_used": T_used,
        "target_rank": target,
        "achieved_rank": achieved,
        "pass": achieved == target,
        "margin_min": margin,
        "error": "",
    }


def run_sweep(
    grid: dict[str, list[int]],
    trials: int,
    methods: list[str],
    seed: int = 0,
    delta: float = 1.0,
    tol: Tolerance = Tolerance(),
    out: Optional[str] = None,
) -> list[dict]:
    """Run every requested method on fresh random minimal systems over the
    grid of (n, m, p, L) cells; one result row per (cell, trial, method).
    """
    if not methods:
        raise ConfigError("methods set must not be empty")
    known = (METHOD_ONLINE_IS, METHOD_ONLINE_IO, METHOD_PE)
    for method in methods:
        if method not in known:
            raise ConfigError(f"unknown method {method!r}; expected subset of {known}")
    grid = {
        "n": grid.get("n", [1]),
        "m": grid.get("m", [1]),
        "p": grid.get("p", [1]),
        "L": grid.get("L", [1]),
    }
    rows: list[dict] = []
    for n in grid["n"]:
        for m in grid["m"]:
            for p in grid["p"]:
                for L in grid["L"]:
                    for trial in range(trials):
                        ss = np.random.SeedSequence([seed, n, m, p, L, trial])
                        children = ss.spawn(1 + len(known))
                        system = random_minimal_system(
                            n, m, p, seed=np.random.default_rng(children[0])
                        )
                        for method in methods:
                            base = {
                                "n": n, "m": m, "p": p, "L": L,
                                "trial": trial, "method": method,
                            }
                            try:
                                fields = _run_sweep_trial(
                                    system, method, L, delta, tol,
                                    children[1 + known.index(method)],
                                )
                            except HankelDesignError as exc:
                                fields = {
                                    "T_used": None, "target_rank": None,
                                    "achieved_rank": None, "pass": False,
                                    "margin_min": None,
                                    "error": type(exc).__name__,
                                }
                            rows.append(base | fields)
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(out_dir / "sweep.csv", _SWEEP_FIELDS, rows)
        _write_csv(
            out_dir / "plotdata.csv",
            ["n", "m", "L", "method", "mean_T", "pass_rate"],
            emit_plotdata(rows),
        )
    return rows


def emit_plotdata(rows: list[dict]) -> list[dict]:
    """Tidy long-format summary: mean experiment length and pass rate per
    (n, m, L, method) cell.
    """
    if not rows:
        raise ConfigError("sweep produced no rows")
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["n"], row["m"], row["L"], row["method"]), []).append(row)
    data = []
    for (n, m, L, method), cell in sorted(groups.items()):
        lengths = [r["T_used"] for r in cell if r["T_used"] is not None]
        data.append(
            {
                "n": n, "m": m, "L": L, "method": method,
                "mean_T": sum(lengths) / len(lengths) if lengths else float("nan"),
                "pass_rate": sum(r["pass"] for r in cell) / len(cell),
            }
        )
    return data


def _write_csv(path: Path, fields: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def sweep_summary(rows: list[dict]) -> str:
    """Human-readable pass rate and mean T per method."""
    by_method: dict[str, list[dict]] = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(row)
    lines = []
    for method, cell in sorted(by_method.items()):
        lengths = [r["T_used"] for r in cell if r["T_used"] is not None]
        mean_T = sum(lengths) / len(lengths) if lengths else float("nan")
        rate = sum(r["pass"] for r in cell) / len(cell)
        lines.append(
            f"{method}: {len(cell)} runs, pass rate {rate:.1%}, mean T {mean_T:.2f}"
        )
    return "\n".join(lines)
