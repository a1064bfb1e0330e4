"""Plain-text output formats.

``timeseries.csv``
    One row per time level with the columns in :data:`TIMESERIES_COLUMNS`;
    floats use 17 significant digits.
``chi_<step>.txt``
    One contact node per line: ``arclength value``.
``u_<step>.txt``
    One mesh node per line: ``x y ux uy``.
checkpoint
    Header ``# checkpoint step=<n> t=<t> nodes=<N> contact=<M>``, then ``N``
    lines ``x y ux uy`` followed by ``M`` lines ``s chi``.
``manifest.json``
    Tool version, resolved config text and SHA-256 of every output file.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np

from . import __version__
from .coupler import State
from .diagnostics import check_energy_dissipation
from .discretization import Mesh

__all__ = [
    "TIMESERIES_COLUMNS",
    "ParseError",
    "fmt",
    "timeseries_rows",
    "write_timeseries",
    "read_timeseries",
    "write_snapshots",
    "read_u_snapshot",
    "read_chi_snapshot",
    "write_checkpoint",
    "read_checkpoint",
    "write_manifest",
]

TIMESERIES_COLUMNS = [
    "t", "E_total", "E1_elastic", "E1_contact", "E2_local", "E2_nonlocal",
    "E2_gradient", "E2_beta", "E2_gamma", "R_u", "R_chi", "rho_term", "work",
    "enid_residual", "min_chi", "max_chi", "max_increment", "max_penetration",
    "fp_iters", "newton_iters_u", "newton_iters_chi",
]


class ParseError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path, self.lineno = path, lineno


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def timeseries_rows(traj, sim):
    from .diagnostics import _interval_records

    energies = traj.energies
    report = check_energy_dissipation(traj, sim, energies)
    records = [None] + _interval_records(traj, sim)
    rows = []
    for n, t in enumerate(traj.times):
        e, rec = energies[n], records[n]
        inc = 0.0 if n == 0 else max(float(np.max(traj.chi[n] - traj.chi[n - 1])), 0.0)
        rows.append([
            t, e.total, e.E1_elastic, e.E1_contact, e.E2_adhesive_local,
            e.E2_adhesive_nonlocal, e.E2_gradient, e.E2_beta, e.E2_gamma,
            0.0 if rec is None else rec.R_u,
            0.0 if rec is None else rec.R_chi,
            0.0 if rec is None else rec.rho_term,
            0.0 if rec is None else rec.external_work,
            0.0 if n == 0 else report.residuals[n - 1],
            traj.chi[n].min(), traj.chi[n].max(), inc,
            sim.max_penetration(traj.u[n]),
            int(traj.fp_iters[n]), int(traj.newton_iters_u[n]),
            int(traj.newton_iters_chi[n]),
        ])
    return rows


def write_timeseries(path, traj, sim):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
        for row in timeseries_rows(traj, sim):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_timeseries(path):
    """Parse ``timeseries.csv`` into a dict of column arrays."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TIMESERIES_COLUMNS:
            raise ParseError(path, 1, "unexpected header")
        data = []
        for row in reader:
            if len(row) != len(TIMESERIES_COLUMNS):
                raise ParseError(path, reader.line_num,
                                 f"expected {len(TIMESERIES_COLUMNS)} fields, "
                                 f"got {len(row)}")
            try:
                data.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(path, reader.line_num, str(exc)) from None
    arr = np.array(data).reshape(-1, len(TIMESERIES_COLUMNS))
    return {c: arr[:, k] for k, c in enumerate(TIMESERIES_COLUMNS)}


def _write_table(path, columns):
    lines = [" ".join(fmt(v) for v in row) for row in zip(*columns)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshots(out_dir, traj, mesh: Mesh):
    out_dir = Path(out_dir)
    names = []
    width = max(4, len(str(len(traj.times) - 1)))
    for n in range(len(traj.times)):
        cname = out_dir / f"chi_{n:0{width}d}.txt"
        uname = out_dir / f"u_{n:0{width}d}.txt"
        _write_table(cname, [mesh.contact_s, traj.chi[n]])
        u = traj.u[n].reshape(-1, 2)
        _write_table(uname, [mesh.coords[:, 0], mesh.coords[:, 1], u[:, 0], u[:, 1]])
        names += [cname.name, uname.name]
    return names


def _read_table(path, ncols, nrows):
    path = Path(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != ncols:
                raise ParseError(path, lineno, f"expected {ncols} columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
    if len(rows) != nrows:
        raise ParseError(path, len(rows), f"expected {nrows} rows, got {len(rows)}")
    return np.array(rows)


def read_u_snapshot(path, mesh: Mesh) -> np.ndarray:
    return _read_table(path, 4, mesh.n_nodes)[:, 2:].ravel()


def read_chi_snapshot(path, mesh: Mesh) -> np.ndarray:
    return _read_table(path, 2, mesh.n_contact)[:, 1]


def write_checkpoint(fh, state: State, mesh: Mesh):
    """Write ``state`` to an open text stream or a path."""
    if isinstance(fh, (str, Path)):
        with open(fh, "w") as f:
            return write_checkpoint(f, state, mesh)
    fh.write(f"# checkpoint step={state.step} t={fmt(state.t)} "
             f"nodes={mesh.n_nodes} contact={mesh.n_contact}\n")
    u = state.u.reshape(-1, 2)
    for (x, y), (ux, uy) in zip(mesh.coords, u):
        fh.write(f"{fmt(x)} {fmt(y)} {fmt(ux)} {fmt(uy)}\n")
    for s, c in zip(mesh.contact_s, state.chi):
        fh.write(f"{fmt(s)} {fmt(c)}\n")


_HEADER = re.compile(r"# checkpoint step=(\d+) t=(\S+) nodes=(\d+) contact=(\d+)")


def read_checkpoint(fh, mesh: Mesh) -> State:
    if isinstance(fh, (str, Path)):
        with open(fh) as f:
            return read_checkpoint(f, mesh)
    name = getattr(fh, "name", "<checkpoint>")
    lines = fh.read().splitlines()
    m = _HEADER.fullmatch(lines[0].strip()) if lines else None
    if m is None:
        raise ParseError(name, 1, "malformed checkpoint header")
    step, t, nn, nc = int(m[1]), float(m[2]), int(m[3]), int(m[4])
    if (nn, nc) != (mesh.n_nodes, mesh.n_contact):
        raise ParseError(name, 1, f"field sizes ({nn}, {nc}) do not match the mesh "
                         f"({mesh.n_nodes}, {mesh.n_contact})")
    body = lines[1:]
    if len(body) != nn + nc:
        raise ParseError(name, len(lines), f"expected {nn + nc} data lines, got {len(body)}")
    u = np.empty((nn, 2))
    chi = np.empty(nc)
    for k, line in enumerate(body):
        parts = line.split()
        want = 4 if k < nn else 2
        if len(parts) != want:
            raise ParseError(name, k + 2, f"expected {want} columns, got {len(parts)}")
        vals = [float(p) for p in parts]
        if k < nn:
            u[k] = vals[2:]
        else:
            chi[k - nn] = vals[1]
    return State(step, t, u.ravel(), chi)


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config_text: str, files):
    out_dir = Path(out_dir)
    manifest = {
        "tool": "nladhesion",
        "version": __version__,
        "config": config_text,
        "files": {name: sha256(out_dir / name) for name in sorted(files)},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
