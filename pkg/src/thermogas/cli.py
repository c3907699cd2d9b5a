"""Command-line front end.

Subcommands: simulate | fixedpoint | besov | scaling | verify, each taking
--config <path> --out <dir> [--seed <u64>] [--no-plots].  Exit codes:
0 success, 1 invariant breach mid-run, 2 configuration error, 3 verification
failure.  THERMOGAS_THREADS caps internal parallelism (the verify subcommand
runs independent criteria concurrently when it is > 1).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import acceptance, reports
from .config import ConfigError, RunConfig, load_config
from .diagnostics import energy_report, scaling_test
from .fixedpoint import picard_iterate
from .integrators import simulate
from .lp import BesovSpec, block_lp_norms, dyadic_family
from .model import DenominatorError, PositivityError, ConductivityError
from .snapshots import save_snapshot

EXIT_OK = 0
EXIT_BREACH = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="thermogas",
        description="Pseudo-spectral runs and verification for the coupled "
        "density-temperature diffusion system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("simulate", "evolve an initial state and export trajectory/energy reports"),
        ("fixedpoint", "run the Picard contraction solve and export its report"),
        ("besov", "dyadic block analysis of the initial state"),
        ("scaling", "two-run parabolic scaling comparison"),
        ("verify", "run the acceptance criteria"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", help="JSON run configuration",
                       required=(name != "verify"))
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed for random corpora")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
        if name == "verify":
            p.add_argument(
                "--criteria",
                default="all",
                help="comma-separated criterion indices or ranges (default: all)",
            )
    return parser


def _parse_criteria(text: str):
    known = {c[0] for c in acceptance.CRITERIA}
    if text == "all":
        return sorted(known)
    out = []
    try:
        for chunk in text.split(","):
            chunk = chunk.strip()
            if "-" in chunk:
                lo, hi = chunk.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif chunk:
                out.append(int(chunk))
    except ValueError as exc:
        raise ConfigError(f"--criteria: cannot parse {text!r}: {exc}") from exc
    unknown = sorted(set(out) - known)
    if unknown or not out:
        raise ConfigError(
            f"--criteria: unknown criterion indices {unknown or text!r}; "
            f"valid indices are 1-{max(known)}"
        )
    return out


def _load(args, stepping: bool = False) -> RunConfig:
    cfg = load_config(args.config)
    if stepping and cfg.params.equilibrium != (1.0, 1.0):
        raise ConfigError(
            "params.equilibrium must be [1.0, 1.0] for time-stepping subcommands"
        )
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load(args, stepping=True)
    if cfg.time is None:
        raise ConfigError("missing key time (required for simulate)")
    initial = cfg.build_initial_state(args.seed)
    traj = simulate(
        initial,
        cfg.params,
        T=cfg.time["T"],
        dt=cfg.time["dt"],
        scheme=cfg.time["scheme"],
        formulation=cfg.time["formulation"],
        snapshot_stride=cfg.time["snapshot_stride"],
    )
    out = reports.ensure_outdir(args.out)
    reports.write_csv(
        os.path.join(out, "trajectory.csv"),
        reports.trajectory_header(),
        reports.trajectory_rows(traj),
    )
    if len(traj) >= 3 and cfg.params.equilibrium == (1.0, 1.0):
        report = energy_report(traj, cfg.params)
        reports.write_csv(os.path.join(out, "energy.csv"), report.HEADER, report.rows())
        if not args.no_plots:
            reports.energy_figure(report, os.path.join(out, "energy.png"))
    if cfg.time["write_snapshots"]:
        for i, state in enumerate(traj.states):
            t = float(traj.times[i])
            save_snapshot(state.a, t, os.path.join(out, f"a_{i:06d}.snap"))
            save_snapshot(state.theta_tilde, t, os.path.join(out, f"theta_{i:06d}.snap"))
    if not args.no_plots:
        reports.trajectory_figure(traj, os.path.join(out, "trajectory.png"))
    if traj.flagged:
        print(f"invariant breach: {traj.flagged}", file=sys.stderr)
        return EXIT_BREACH
    print(f"simulate: {len(traj)} snapshots to t = {traj.times[-1]:g} -> {out}")
    return EXIT_OK


def _cmd_fixedpoint(args) -> int:
    cfg = _load(args, stepping=True)
    if cfg.time is None:
        raise ConfigError("missing key time (required for fixedpoint)")
    knobs = cfg.fixedpoint or {"tol": 1e-10, "max_iter": 25, "c": 0.05, "M": 1.0}
    initial = cfg.build_initial_state(args.seed)
    limit, report = picard_iterate(
        initial.a,
        initial.theta_tilde,
        cfg.params,
        T=cfg.time["T"],
        dt=cfg.time["dt"],
        tol=knobs["tol"],
        max_iter=int(knobs["max_iter"]),
        c_radius=knobs["c"],
        M_const=knobs["M"],
    )
    out = reports.ensure_outdir(args.out)
    reports.write_csv(
        os.path.join(out, "fixedpoint.csv"),
        ("iteration", "e_norm", "difference", "ratio"),
        report.rows(),
    )
    with open(os.path.join(out, "fixedpoint_summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.summary() + "\n")
    if not args.no_plots:
        reports.fixedpoint_figure(report, os.path.join(out, "fixedpoint.png"))
        reports.trajectory_figure(limit, os.path.join(out, "limit_trajectory.png"))
    print(f"fixedpoint: {report.summary()}")
    if limit.flagged:
        print(f"invariant breach: {limit.flagged}", file=sys.stderr)
        return EXIT_BREACH
    return EXIT_OK


def _cmd_besov(args) -> int:
    cfg = _load(args)
    spec = BesovSpec(
        cfg.besov.get("s", 1.5), cfg.besov.get("p", 2.0), cfg.besov.get("r", 1.0)
    )
    initial = cfg.build_initial_state(args.seed)
    fam = dyadic_family(cfg.grid)
    out = reports.ensure_outdir(args.out)
    weighted_by_component = {}
    for label, fld in (("a", initial.a), ("theta", initial.theta_tilde)):
        norms = block_lp_norms(fld, p=spec.p)
        weighted = 2.0 ** (fam.js * spec.s) * norms
        if np.isinf(spec.r):
            cumulative = np.maximum.accumulate(weighted)
        else:
            cumulative = np.cumsum(weighted ** spec.r) ** (1.0 / spec.r)
        rows = zip(fam.js, weighted, cumulative)
        reports.write_csv(
            os.path.join(out, f"besov_{label}.csv"),
            ("j", "weighted_block_norm", "cumulative_norm"),
            rows,
        )
        weighted_by_component[label] = weighted
    if not args.no_plots:
        reports.besov_figure(fam.js, weighted_by_component, os.path.join(out, "besov.png"))
    print(f"besov: blocks j in [{fam.j_min}, {fam.j_max}] -> {out}")
    return EXIT_OK


def _cmd_scaling(args) -> int:
    cfg = _load(args, stepping=True)
    if cfg.time is None:
        raise ConfigError("missing key time (required for scaling)")
    lam = cfg.scaling.get("lam", 2)
    initial = cfg.build_initial_state(args.seed)
    result = scaling_test(
        initial, cfg.params, lam=lam, T=cfg.time["T"], dt=cfg.time["dt"],
        scheme=cfg.time["scheme"],
    )
    out = reports.ensure_outdir(args.out)
    reports.write_csv(
        os.path.join(out, "scaling.csv"),
        ("lam", "discrepancy", "besov_ratio", "final_time_long", "final_time_short"),
        [(result["lam"], result["discrepancy"], result["besov_ratio"],
          result["final_time_long"], result["final_time_short"])],
    )
    print(
        f"scaling: lam={result['lam']} discrepancy={result['discrepancy']:.3e} "
        f"besov_ratio={result['besov_ratio']:.3f}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    seed = args.seed
    if args.config:
        cfg = _load(args)
        if cfg.seed is not None:
            seed = cfg.seed
    ids = _parse_criteria(args.criteria)
    results = acceptance.run_criteria(ids, seed)
    out = reports.ensure_outdir(args.out)
    reports.write_csv(
        os.path.join(out, "verify.csv"),
        acceptance.VERIFY_HEADER,
        acceptance.verify_rows(results),
    )
    all_pass = True
    for index, name, passed, details in results:
        status = "PASS" if passed else "FAIL"
        all_pass &= passed
        print(f"{status} {index:2d} {name}: {details}")
    print(f"verify: {sum(1 for r in results if r[2])}/{len(results)} criteria passed")
    return EXIT_OK if all_pass else EXIT_VERIFY


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fixedpoint": _cmd_fixedpoint,
    "besov": _cmd_besov,
    "scaling": _cmd_scaling,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PositivityError, DenominatorError, ConductivityError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
