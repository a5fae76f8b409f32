"""Command-line front end: ``storagegame {check,simulate,analyze,verify}``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml
from pydantic import ValidationError

from . import csvio, feasibility, game, markov, metrics
from .config import ScenarioConfig, load_config
from .dynamics import simulate
from .model import Instance

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
PRINT_MATRIX_MAX_N = 20
EXACT_NASH_MAX_N = 30


class CliError(Exception):
    pass


def _load(path: str) -> ScenarioConfig:
    try:
        return load_config(path)
    except (OSError, yaml.YAMLError) as exc:
        raise CliError(f"cannot read config: {exc}") from exc
    except ValidationError as exc:
        raise CliError(f"invalid config {path}:\n{exc}") from exc


def _instances(cfg: ScenarioConfig) -> list[tuple[float, Instance]]:
    try:
        return cfg.instances()
    except ValueError as exc:
        raise CliError(f"invalid instance: {exc}") from exc


def _fmt_set(units) -> str:
    return "{" + ", ".join(str(u) for u in units) + "}"


# ---------------------------------------------------------------- check

def cmd_check(args) -> int:
    cfg = _load(args.config)
    worst = EXIT_OK
    for k_a, inst in _instances(cfg):
        report = feasibility.check(inst)
        label = f" (k_a={k_a!r})" if len(cfg.game.k_a_values) > 1 else ""
        print(f"scenario: {cfg.name}{label}")
        print(f"units: {inst.n}  edges: {len(inst.edges)}  total demand: {inst.total_alpha}")
        if report.feasible:
            print("feasible: yes")
            print(f"strict: {'yes' if report.strict else 'no'}")
            used = sum(len(r) for r in report.allocation.rows)
            print(f"witness: complete allocation using {used} edges")
            if args.out:
                out = Path(args.out)
                out.mkdir(parents=True, exist_ok=True)
                csvio.write_state(out / "witness_state.csv", report.allocation)
                print(f"witness written to {out / 'witness_state.csv'}")
        else:
            worst = EXIT_INFEASIBLE
            print("feasible: no")
            print(f"witness: D = {_fmt_set(report.violating_set)}")
            print(f"  demand sum(alpha[D]) = {report.demand} > capacity sum(beta[N(D)]) = {report.capacity}")
    return worst


# ---------------------------------------------------------------- simulate

def _run_replica(instance: Instance, params, classes):
    state, log = simulate(instance, params, check_feasible=False)
    summary = metrics.summarize(instance, state, psi_opt=params.psi_opt, seed=params.seed, classes=classes)
    return summary, state.W, log


def _resolve_optimum(cfg: ScenarioConfig, inst: Instance):
    if cfg.run.psi_opt == "none":
        return None, "none"
    if not isinstance(cfg.run.psi_opt, str):
        return float(cfg.run.psi_opt), "given"
    opt = game.optimal_potential(inst, method="auto", bound=10**5)
    return float(opt.psi_star), opt.method


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    if args.horizon_mult is not None:
        cfg.run.horizon_mult = args.horizon_mult
        cfg.run.horizon = None
    replicas = args.replicas or cfg.run.replicas
    seeds = cfg.replica_seeds(replicas, args.seed)
    jobs = args.jobs or os.cpu_count() or 1
    variants = _instances(cfg)
    classes = cfg.class_members()
    root = Path(args.out or cfg.output.dir)
    status = EXIT_OK
    for k_a, inst in variants:
        report = feasibility.feasible_by_flow(inst)
        if not report.feasible and not args.force:
            print(f"instance (k_a={k_a!r}) is infeasible: D = {_fmt_set(report.violating_set)}; "
                  "use --force to run anyway", file=sys.stderr)
            status = EXIT_INFEASIBLE
            continue
        psi_opt, method = _resolve_optimum(cfg, inst) if report.feasible else (None, "none")
        out = root / f"ka_{k_a!r}" if len(variants) > 1 else root
        out.mkdir(parents=True, exist_ok=True)
        params = [cfg.sim_params(seed, psi_opt) for seed in seeds]
        if jobs > 1 and replicas > 1:
            with ProcessPoolExecutor(max_workers=min(jobs, replicas)) as pool:
                results = list(pool.map(_run_replica, [inst] * replicas, params, [classes] * replicas))
        else:
            results = [_run_replica(inst, p, classes) for p in params]
        summaries = []
        for r, (summary, W, log) in enumerate(results):
            if cfg.run.record != "none":
                csvio.write_trajectory(out / f"trajectory_{r:03d}.csv", log)
            csvio.write_state(out / f"state_{r:03d}.csv", W)
            summaries.append(summary)
        agg = metrics.aggregate(summaries)
        csvio.write_summary(out / "summary.csv", agg)
        csvio.write_aggregate(out / "aggregate.csv", agg)
        meta = {"scenario": cfg.name, "k_a": k_a, "psi_opt": psi_opt, "psi_opt_method": method,
                "seeds": seeds, "horizon": params[0].resolve_horizon(inst)}
        with open(out / "run.yaml", "w", encoding="utf-8", newline="\n") as fh:
            yaml.safe_dump(meta, fh, sort_keys=False)
        print(f"{cfg.name} k_a={k_a!r}: {replicas} replicas -> {out}")
        print(f"  psi_opt = {psi_opt!r} ({method})")
        for key in ("psi", "nu_moves", "d_plus", "d_minus_1", "d_minus_2", "lambda_bar", "c_1", "c_2"):
            print(f"  {key:<11} mean {agg.mean[key]:.4f}  std {agg.std[key]:.4f}")
        incomplete = sum(not s.complete for s in summaries)
        if incomplete:
            print(f"  warning: {incomplete} replica(s) ended with an incomplete allocation")
    return status


# ---------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    cfg = _load(args.config)
    variants = _instances(cfg)
    inst = variants[0][1]
    if args.ka is not None:
        match = [i for k, i in variants if k == args.ka]
        if not match:
            raise CliError(f"k_a={args.ka} is not part of the scenario")
        inst = match[0]
    try:
        W = csvio.read_state(args.state)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read state: {exc}") from exc
    if W.n != inst.n:
        raise CliError(f"state is {W.n}x{W.n} but the instance has {inst.n} units")
    try:
        W.check(inst)
    except ValueError as exc:
        raise CliError(f"state violates the instance constraints: {exc}") from exc
    if not W.is_complete(inst):
        missing = inst.total_alpha - W.total
        raise CliError(f"state is incomplete ({missing} atoms unallocated); analysis needs a complete state")
    exact = inst.n <= EXACT_NASH_MAX_N
    if inst.n <= PRINT_MATRIX_MAX_N:
        print("utility matrix f[x][y] on used edges:")
        for x in range(inst.n):
            cells = []
            for y in range(inst.n):
                cells.append(f"{float(game.utility(inst, W, x, y)):8.4f}" if W[x, y] else "       .")
            print("  " + " ".join(cells))
    psi_value = game.potential(inst, W, exact=exact)
    shown = f" (= {psi_value})" if exact and psi_value.denominator < 10**6 else ""
    print(f"Psi: {float(psi_value)!r}{shown}")
    opt = None
    for method in ("closed-form", "enumerate"):
        try:
            opt = game.optimal_potential(inst, method=method, bound=10**5)
            break
        except (game.StateSpaceTooLarge, ValueError):
            continue
    if opt is not None and opt.psi_star:
        print(f"psi: {metrics.psi_ratio(inst, W, opt.psi_star)!r} (optimum by {opt.method})")
    else:
        print("psi: n/a (no exact optimum available)")
    nash = game.is_nash(inst, W, exact=exact)
    print(f"Nash: {'yes' if nash.is_nash else 'no'}")
    for x, y_from, y_to, gain in nash.deviations[:10]:
        print(f"  unit {x} gains {float(gain):.6g} moving an atom {y_from} -> {y_to}")
    if len(nash.deviations) > 10:
        print(f"  ... {len(nash.deviations) - 10} more profitable deviations")
    classes = cfg.class_members()
    deg = metrics.degrees(inst, W, classes)
    cong = metrics.congestion_by_class(inst, W, classes)
    print(f"d_plus: {deg.d_plus!r}")
    print("d_minus (per class): " + ", ".join(f"{v:.4f}" for v in deg.d_minus))
    if deg.literal_applicable:
        print("d_minus literal 2/n: " + ", ".join(f"{v:.4f}" for v in deg.d_minus_literal))
    print(f"lambda_bar: {metrics.satisfaction(inst, W)!r}")
    print("congestion (per class): " + ", ".join(f"{v:.4f}" for v in cong.normalized))
    print("congestion literal 1/(n beta): " + ", ".join(f"{v:.4f}" for v in cong.literal))
    return EXIT_OK


# ---------------------------------------------------------------- verify

def cmd_verify(args) -> int:
    cfg = _load(args.config)
    inst = _instances(cfg)[0][1]
    gamma = cfg.verify.gamma if args.gamma is None else args.gamma
    try:
        gen = markov.build_generator(inst, gamma)
    except ValueError as exc:
        raise CliError(f"{exc}; exact verification is meant for n <= 4") from exc
    print(f"states: {gen.size} ({len(gen.index.states)} complete allocations x {1 << inst.n} on/off vectors)")
    print(f"gamma: {gamma!r}")
    violation = markov.check_detailed_balance(inst, gamma, gen)
    print(f"detailed balance max relative violation: {violation:.3e}")
    closed = markov.stationary_closed_form(inst, gamma, gen.index)
    sol = markov.solve_stationary(gen)
    if sol.unique:
        print(f"TV(closed form, null space): {markov.total_variation(closed, sol.pi):.3e}")
    else:
        worst = 0.0
        for members, pi in zip(sol.classes, sol.per_class):
            part = closed[members]
            if part.sum() > 0:
                worst = max(worst, markov.total_variation(part / part.sum(), pi))
        print(f"chain is reducible: {len(sol.classes)} closed classes; "
              f"max TV per class (closed form restricted): {worst:.3e}")
    connected = markov.check_L_connected(inst)
    print(f"L-connectivity: {'connected' if connected else 'not connected'}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storagegame", description="Distributed storage allocation game")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="feasibility verdict, strictness and witness")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="directory for the witness allocation CSV")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run the annealed dynamics over several replicas")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--replicas", type=int)
    p.add_argument("--horizon-mult", type=float)
    p.add_argument("--out")
    p.add_argument("--force", action="store_true", help="run even if no complete allocation exists")
    p.add_argument("--jobs", type=int, help="worker processes (default: logical cores)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="potential, Nash report and indices of a state CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--ka", type=float, help="pick one value of a k_a sweep")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="exact Markov-chain checks on a tiny instance")
    p.add_argument("--config", required=True)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_ERROR
    for name in ("replicas", "jobs"):
        if getattr(args, name, None) is not None and getattr(args, name) < 1:
            print(f"error: --{name} must be >= 1", file=sys.stderr)
            return EXIT_ERROR
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (feasibility.TooLargeError, game.StateSpaceTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
