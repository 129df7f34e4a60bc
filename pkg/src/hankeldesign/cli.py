"""Command-line interface.

Exit codes: 0 = rank check passed, 1 = rank check failed,
2 = configuration error, 3 = infeasible/structure/generation error,
4 = runaway (tolerance breakdown).
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    ConfigError,
    GenerationError,
    InfeasibleError,
    RunawayError,
    StructureError,
)
from .harness import (
    MODES,
    ExperimentConfig,
    load_trajectory_csv,
    run_experiment,
    run_sweep,
    sweep_summary,
)
from .linalg import Tolerance
from .verify import check_io_rank, check_is_rank


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--random expects 'n,m,p', got {text!r}")
    try:
        n, m, p = (int(v) for v in parts)
    except ValueError as exc:
        raise ConfigError(f"--random expects integers, got {text!r}") from exc
    return n, m, p


def _parse_grid(text: str) -> dict[str, list[int]]:
    grid: dict[str, list[int]] = {}
    for item in text.split(","):
        try:
            name, spec = item.split("=")
        except ValueError as exc:
            raise ConfigError(f"bad grid item {item!r}") from exc
        if name not in ("n", "m", "p", "L"):
            raise ConfigError(f"unknown grid variable {name!r}")
        if ".." in spec:
            lo, hi = spec.split("..")
            grid[name] = list(range(int(lo), int(hi) + 1))
        else:
            grid[name] = [int(spec)]
    if not grid:
        raise ConfigError("empty grid")
    return grid


def _add_tol_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol-rel", type=float, default=Tolerance().rel)
    parser.add_argument("--tol-abs", type=float, default=Tolerance().abs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hankeldesign",
        description="Online input design for minimal-sample Hankel rank conditions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="run one online design experiment")
    p_design.add_argument("--mode", choices=MODES, required=True)
    src = p_design.add_mutually_exclusive_group(required=True)
    src.add_argument("--system", help="path to a system JSON file")
    src.add_argument("--random", help="random minimal system dims as 'n,m,p'")
    p_design.add_argument("--L", type=int, default=1)
    p_design.add_argument("--delta", type=float, default=1.0)
    p_design.add_argument(
        "--policy", choices=("first-basis", "random", "norm"), default="first-basis"
    )
    p_design.add_argument("--seed", type=int, default=0)
    _add_tol_args(p_design)
    p_design.add_argument("--out", required=True, help="output directory")

    p_sweep = sub.add_parser("sweep", help="seeded ensemble sweep over a grid")
    p_sweep.add_argument("--grid", required=True, help="e.g. n=1..8,m=1..3,L=1..4")
    p_sweep.add_argument("--trials", type=int, default=10)
    p_sweep.add_argument(
        "--methods", required=True, help="comma list from online-is,online-io,pe"
    )
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--delta", type=float, default=1.0)
    _add_tol_args(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output directory")

    p_verify = sub.add_parser("verify", help="re-check rank conditions on saved data")
    p_verify.add_argument("--data", required=True, help="directory with trajectory.csv")
    p_verify.add_argument("--L", type=int, required=True)
    p_verify.add_argument("--n", type=int, required=True)
    _add_tol_args(p_verify)

    return parser


def _cmd_design(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        mode=args.mode,
        system_file=args.system,
        random_dims=_parse_dims(args.random) if args.random else None,
        L=args.L,
        delta=args.delta,
        policy_mode=args.policy,
        tol=Tolerance(rel=args.tol_rel, abs=args.tol_abs),
        seed=args.seed,
        out=args.out,
    )
    result = run_experiment(config)
    status = "pass" if result.passed else "FAIL"
    print(
        f"mode={args.mode} T={result.log.T} rank={result.check.rank} "
        f"target={result.check.target} [{status}]"
    )
    if result.log.n_recovered is not None:
        print(f"recovered state dimension: {result.log.n_recovered}")
    return 0 if result.passed else 1


def _cmd_sweep(args: argparse.Namespace) -> int:
    rows = run_sweep(
        grid=_parse_grid(args.grid),
        trials=args.trials,
        methods=[m.strip() for m in args.methods.split(",") if m.strip()],
        seed=args.seed,
        delta=args.delta,
        tol=Tolerance(rel=args.tol_rel, abs=args.tol_abs),
        out=args.out,
    )
    print(sweep_summary(rows))
    return 0 if all(r["pass"] or r["error"] for r in rows) else 1


def _cmd_verify(args: argparse.Namespace) -> int:
    data = load_trajectory_csv(f"{args.data}/trajectory.csv")
    tol = Tolerance(rel=args.tol_rel, abs=args.tol_abs)
    if data["y"] is not None:
        check = check_io_rank(data["u"], data["y"], args.L, args.n, tol)
        kind = "input/output"
    elif data["x"] is not None:
        if args.L != 1:
            raise ConfigError("state-only data supports L=1 verification")
        check = check_is_rank(data["u"], data["x"], args.n, tol)
        kind = "input/state"
    else:
        raise ConfigError("trajectory has neither outputs nor states")
    status = "pass" if check.passed else "FAIL"
    print(f"{kind} rank {check.rank} / target {check.target} [{status}]")
    return 0 if check.passed else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"design": _cmd_design, "sweep": _cmd_sweep, "verify": _cmd_verify}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, StructureError, GenerationError) as exc:
        print(f"design error: {exc}", file=sys.stderr)
        return 3
    except RunawayError as exc:
        print(f"runaway: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
