"""Nonlocal boundary operator ``K[w](x) = int_{Gamma_C} k(x, y) w(y) dy``.

The contact boundary is a segment parametrized by arclength, so kernels are
functions of two arclength coordinates.  Quadrature is nodal: the operator
matrix is ``K_ij = k(x_i, x_j) * w_j`` with the same lumped weights used for
every other surface integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "KernelSpec",
    "NonlocalOperator",
    "elongation_profile",
    "eval_kernel",
    "assemble",
    "apply",
    "duality_residual",
    "load_table",
]


def elongation_profile(zeta, d):
    """``4 zeta**2 exp(-zeta**2 / d**2)``."""
    zeta = np.asarray(zeta, dtype=float)
    return 4.0 * zeta * zeta * np.exp(-(zeta * zeta) / (d * d))


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Bounded, symmetric, nonnegative kernel on the contact segment.

    Parameters
    ----------
    kind : {"elongation", "constant", "tabulated"}
    d : float
        Decay length of the elongation kernel.
    k0 : float
        Value of the constant kernel.
    table : ndarray, optional
        Square matrix of samples for ``kind="tabulated"``; symmetrized as
        ``(T + T.T) / 2`` on construction.
    points : ndarray, optional
        Arclength sample locations of ``table``; defaults to an equispaced
        grid on ``[0, 1]``.
    """

    kind: str = "elongation"
    d: float = 0.5
    k0: float = 0.0
    table: np.ndarray | None = None
    points: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "elongation":
            if not self.d > 0.0:
                raise ValueError(f"elongation kernel needs d > 0, got {self.d}")
        elif self.kind == "constant":
            if not self.k0 >= 0.0:
                raise ValueError(f"constant kernel needs k0 >= 0, got {self.k0}")
        elif self.kind == "tabulated":
            if self.table is None:
                raise ValueError("tabulated kernel needs a table")
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise ValueError(f"kernel table must be square, got {t.shape}")
            t = 0.5 * (t + t.T)
            if np.any(t < 0.0) or not np.all(np.isfinite(t)):
                raise ValueError("kernel table must be finite and nonnegative")
            pts = (np.linspace(0.0, 1.0, t.shape[0]) if self.points is None
                   else np.asarray(self.points, dtype=float))
            if pts.shape != (t.shape[0],) or np.any(np.diff(pts) <= 0.0):
                raise ValueError("table points must be strictly increasing "
                                 "and match the table size")
            object.__setattr__(self, "table", t)
            object.__setattr__(self, "points", pts)
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    def sup_bound(self) -> float:
        """``sup |k|`` over all pairs (not only those on a given mesh)."""
        if self.kind == "elongation":
            # max of 4 z^2 exp(-z^2/d^2) is attained at z = d
            return 4.0 * self.d * self.d / np.e
        if self.kind == "constant":
            return float(self.k0)
        return float(self.table.max())


def _interp_table(spec, x, y):
    pts, t = spec.points, spec.table
    x = np.clip(x, pts[0], pts[-1])
    y = np.clip(y, pts[0], pts[-1])
    i = np.clip(np.searchsorted(pts, x, side="right") - 1, 0, len(pts) - 2)
    j = np.clip(np.searchsorted(pts, y, side="right") - 1, 0, len(pts) - 2)
    sx = (x - pts[i]) / (pts[i + 1] - pts[i])
    sy = (y - pts[j]) / (pts[j + 1] - pts[j])
    return ((1 - sx) * (1 - sy) * t[i, j] + sx * (1 - sy) * t[i + 1, j]
            + (1 - sx) * sy * t[i, j + 1] + sx * sy * t[i + 1, j + 1])


def eval_kernel(spec: KernelSpec, x, y):
    """Evaluate ``k(x, y)`` for arclength coordinates (broadcasting)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind == "elongation":
        return elongation_profile(x - y, spec.d)
    if spec.kind == "constant":
        return np.full(np.broadcast(x, y).shape, float(spec.k0))
    return _interp_table(spec, x, y)


@dataclass(frozen=True, eq=False)
class NonlocalOperator:
    """Dense quadrature matrix of ``K`` on the contact nodes."""

    nodes: np.ndarray
    weights: np.ndarray
    kernel_matrix: np.ndarray
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "matrix",
                           self.kernel_matrix * self.weights[np.newaxis, :])

    @property
    def size(self) -> int:
        return len(self.nodes)

    def __matmul__(self, w):
        return apply(self, w)


def assemble(spec: KernelSpec, boundary_nodes, quadrature_weights) -> NonlocalOperator:
    nodes = np.asarray(boundary_nodes, dtype=float)
    weights = np.asarray(quadrature_weights, dtype=float)
    if nodes.ndim != 1 or nodes.shape != weights.shape:
        raise ValueError(f"nodes {nodes.shape} and weights {weights.shape} "
                         "must be 1-d arrays of equal length")
    if np.any(np.diff(nodes) < 0.0):
        raise ValueError("boundary nodes must be sorted")
    if np.any(weights <= 0.0):
        raise ValueError("quadrature weights must be positive")
    if (spec.kind == "tabulated" and spec.points.shape == nodes.shape
            and np.allclose(spec.points, nodes, rtol=0.0, atol=1e-12)):
        kmat = spec.table.copy()
    else:
        kmat = eval_kernel(spec, nodes[:, np.newaxis], nodes[np.newaxis, :])
        kmat = 0.5 * (kmat + kmat.T)
    return NonlocalOperator(nodes, weights, kmat)


def apply(op: NonlocalOperator, w):
    w = np.asarray(w, dtype=float)
    if w.shape != (op.size,):
        raise ValueError(f"field of shape {w.shape} does not match operator "
                         f"of size {op.size}")
    return op.matrix @ w


def duality_residual(op: NonlocalOperator, w1, w2, weights=None) -> float:
    """``|int K[w1] w2 - int K[w2] w1|`` with the nodal quadrature."""
    weights = op.weights if weights is None else np.asarray(weights, dtype=float)
    lhs = np.dot(weights, apply(op, w1) * w2)
    rhs = np.dot(weights, apply(op, w2) * w1)
    return float(abs(lhs - rhs))


def load_table(path) -> np.ndarray:
    """Read a whitespace-separated square matrix (``#`` starts a comment)."""
    table = np.loadtxt(Path(path), dtype=float, comments="#", ndmin=2)
    if table.shape[0] != table.shape[1]:
        raise ValueError(f"{path}: kernel table must be square, got {table.shape}")
    return table
