"""Command-line front end.

    nladhesion run --config CFG --out DIR
    nladhesion eps-study --config CFG --eps 1e-1,1e-2,1e-3 --out DIR
    nladhesion check --dir DIR

``run`` writes ``config.resolved``, ``timeseries.csv``, ``snapshots/`` (one
``chi_<step>.txt`` and ``u_<step>.txt`` per time level), ``checkpoint.txt``
(final state) and ``manifest.json``.  ``check`` re-reads a run directory,
recomputes the diagnostics from the snapshots and exits nonzero if any
acceptance bound fails.

Exit codes: 0 success, 1 failed check, 2 bad input (config or files),
3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import emit_config, parse_config, parse_config_text, with_eps
from .coupler import Simulator, Trajectory, _check_eps_list, trajectory_distances
from .diagnostics import (check_confinement, check_energy_dissipation,
                          check_unidirectional, energy)
from .errors import ConfigError, InvalidValue, SolverError
from .io import (ParseError, fmt, read_chi_snapshot, read_timeseries,
                 read_u_snapshot, write_checkpoint, write_manifest,
                 write_snapshots, write_timeseries)

log = logging.getLogger("nladhesion")

STUDY_COLUMNS = ["eps_a", "eps_b", "chi_distance", "u_distance",
                 "fp_iters_max_a", "fp_iters_max_b", "fp_iters_mean_a",
                 "fp_iters_mean_b"]

# acceptance bounds used by ``check``
ENID_TOL = 1e-3
CHI_UPPER_TOL = 1e-8
EPS_FACTOR = 10.0


def _write_run(out_dir: Path, sim: Simulator, traj: Trajectory):
    out_dir.mkdir(parents=True, exist_ok=True)
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    text = emit_config(sim.config)
    (out_dir / "config.resolved").write_text(text)
    write_timeseries(out_dir / "timeseries.csv", traj, sim)
    names = ["snapshots/" + n for n in write_snapshots(snap_dir, traj, sim.mesh)]
    write_checkpoint(out_dir / "checkpoint.txt", traj.final, sim.mesh)
    write_manifest(out_dir, text, ["config.resolved", "timeseries.csv",
                                   "checkpoint.txt"] + names)


def cmd_run(config, out_dir) -> int:
    sim = Simulator(config)
    try:
        traj = sim.run()
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        history = getattr(exc, "history", None)
        if history:
            print("fixed-point residuals: " + " ".join(fmt(r) for r in history),
                  file=sys.stderr)
        return 3
    _write_run(Path(out_dir), sim, traj)
    log.info("wrote %d time levels to %s", len(traj.times), out_dir)
    return 0


def cmd_epsilon_study(config, eps_list, out_dir) -> int:
    try:
        eps_list = _check_eps_list(eps_list)
    except ValueError as exc:
        raise InvalidValue("--eps", str(exc)) from None
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sims, trajs = [], []
    for k, eps in enumerate(eps_list):
        sim = Simulator(with_eps(config, eps))
        try:
            traj = sim.run()
        except SolverError as exc:
            print(f"solver failure at eps={eps!r}: {exc}", file=sys.stderr)
            return 3
        _write_run(out_dir / f"eps_{k}", sim, traj)
        sims.append(sim)
        trajs.append(traj)
    with open(out_dir / "study.csv", "w") as fh:
        fh.write(",".join(STUDY_COLUMNS) + "\n")
        for k in range(len(eps_list) - 1):
            a, b = trajs[k], trajs[k + 1]
            dc, du = trajectory_distances(sims[k], a, b)
            row = [eps_list[k], eps_list[k + 1], dc, du,
                   int(a.fp_iters[1:].max(initial=0)), int(b.fp_iters[1:].max(initial=0)),
                   float(a.fp_iters[1:].mean()) if len(a.fp_iters) > 1 else 0.0,
                   float(b.fp_iters[1:].mean()) if len(b.fp_iters) > 1 else 0.0]
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return 0


def load_run(run_dir) -> tuple[Simulator, Trajectory]:
    """Rebuild the simulator and trajectory of a ``run`` output directory."""
    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.resolved"
    if not cfg_path.exists():
        raise FileNotFoundError(f"{cfg_path} is missing")
    sim = Simulator(parse_config_text(cfg_path.read_text(), base_dir=run_dir))
    series = read_timeseries(run_dir / "timeseries.csv")
    snap = run_dir / "snapshots"
    chi_files = sorted(snap.glob("chi_*.txt"))
    u_files = sorted(snap.glob("u_*.txt"))
    n = len(series["t"])
    if len(chi_files) != n or len(u_files) != n:
        raise FileNotFoundError(
            f"{snap}: expected {n} snapshot pairs, found {len(chi_files)} chi / "
            f"{len(u_files)} u files")
    chi = np.array([read_chi_snapshot(p, sim.mesh) for p in chi_files])
    u = np.array([read_u_snapshot(p, sim.mesh) for p in u_files])
    zeros = np.zeros(n, dtype=int)
    traj = Trajectory(sim.config, series["t"], u, chi, None, None, None,
                      series["fp_iters"].astype(int), zeros, zeros)
    traj.energies = [energy(ui, ci, sim) for ui, ci in zip(u, chi)]
    return sim, traj


def check_run(sim: Simulator, traj: Trajectory, chi_upper_tol=CHI_UPPER_TOL):
    """List of ``(name, value, bound, passed)`` rows."""
    eps = sim.config.eps
    report = check_energy_dissipation(traj, sim, traj.energies)
    lower, upper = check_confinement(traj)
    inc = check_unidirectional(traj)
    rows = [
        ("enid_max_interval_violation", report.max_violation, ENID_TOL),
        ("enid_window_violation", report.window_violation, ENID_TOL),
        ("confinement_upper max(chi-1)", upper, chi_upper_tol),
        ("confinement_lower max(-chi)", lower, EPS_FACTOR * eps),
        ("unidirectional max increment", inc, EPS_FACTOR * eps),
    ]
    return [(name, val, bound, bool(val <= bound)) for name, val, bound in rows]


def cmd_check(trajectory_dir, chi_upper_tol=CHI_UPPER_TOL) -> int:
    sim, traj = load_run(trajectory_dir)
    rows = check_run(sim, traj, chi_upper_tol)
    width = max(len(r[0]) for r in rows)
    for name, val, bound, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {val:.6e} <= {bound:.1e}")
    return 0 if all(r[3] for r in rows) else 1


def _parser():
    p = argparse.ArgumentParser(prog="nladhesion", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="integrate one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    e = sub.add_parser("eps-study", help="epsilon continuation study")
    e.add_argument("--config", required=True)
    e.add_argument("--eps", required=True, help="comma-separated, strictly decreasing")
    e.add_argument("--out", required=True)
    c = sub.add_parser("check", help="re-verify a run directory")
    c.add_argument("--dir", required=True)
    c.add_argument("--chi-upper-tol", type=float, default=CHI_UPPER_TOL,
                   help="bound on max(chi - 1) (default %(default)g)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(parse_config(args.config), args.out)
        if args.command == "eps-study":
            try:
                eps = [float(s) for s in args.eps.split(",") if s.strip()]
            except ValueError as exc:
                raise InvalidValue("--eps", str(exc)) from None
            return cmd_epsilon_study(parse_config(args.config), eps, args.out)
        return cmd_check(args.dir, args.chi_upper_tol)
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
