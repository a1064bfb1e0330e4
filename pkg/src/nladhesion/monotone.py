"""Scalar maximal monotone graphs and their Yosida regularizations.

Every graph in the catalogue is the subdifferential of

    phi(x) = coef * x**2 + I_[lower, upper](x)

with ``lower <= 0 <= upper``, so ``phi`` is proper, convex, lsc and
``phi(0) = 0``.  The indicator graphs are the ``coef == 0`` members.  All
functions below are vectorized over ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MonotoneGraph",
    "nonpositive_halfline",
    "unit_interval",
    "nonnegative_halfline",
    "quadratic_on_halfline",
    "primitive",
    "resolvent",
    "yosida_value",
    "yosida_primitive",
    "yosida_slope",
]


@dataclass(frozen=True)
class MonotoneGraph:
    """Subdifferential of ``coef * x**2`` restricted to ``[lower, upper]``."""

    kind: str
    lower: float = -np.inf
    upper: float = np.inf
    coef: float = 0.0

    def __post_init__(self):
        if not (self.lower <= 0.0 <= self.upper):
            raise ValueError(
                f"domain [{self.lower}, {self.upper}] must contain 0")
        if self.coef < 0.0:
            raise ValueError(f"coef must be nonnegative, got {self.coef}")


def nonpositive_halfline() -> MonotoneGraph:
    return MonotoneGraph("indicator-nonpositive-halfline", -np.inf, 0.0)


def unit_interval() -> MonotoneGraph:
    return MonotoneGraph("indicator-unit-interval", 0.0, 1.0)


def nonnegative_halfline() -> MonotoneGraph:
    return MonotoneGraph("indicator-nonnegative-halfline", 0.0, np.inf)


def quadratic_on_halfline(coef: float, side: str = "nonpositive") -> MonotoneGraph:
    """``coef * x**2`` on ``(-inf, 0]`` (``side="nonpositive"``) or ``[0, inf)``."""
    if side == "nonpositive":
        return MonotoneGraph("quadratic-on-domain", -np.inf, 0.0, coef)
    if side == "nonnegative":
        return MonotoneGraph("quadratic-on-domain", 0.0, np.inf, coef)
    raise ValueError(f"unknown side {side!r}")


def _check_eps(eps):
    if not eps > 0.0:
        raise ValueError(f"Yosida parameter must be positive, got {eps}")


def primitive(graph: MonotoneGraph, x):
    """Unregularized primitive; ``+inf`` outside the domain."""
    x = np.asarray(x, dtype=float)
    inside = (x >= graph.lower) & (x <= graph.upper)
    return np.where(inside, graph.coef * x * x, np.inf)


def resolvent(graph: MonotoneGraph, eps: float, y):
    """Minimizer of ``|y - x|**2 / (2 eps) + phi(x)``."""
    _check_eps(eps)
    y = np.asarray(y, dtype=float)
    return np.clip(y / (1.0 + 2.0 * graph.coef * eps), graph.lower, graph.upper)


def yosida_value(graph: MonotoneGraph, eps: float, y):
    """Yosida approximation ``(y - J_eps(y)) / eps``; ``1/eps``-Lipschitz."""
    return (np.asarray(y, dtype=float) - resolvent(graph, eps, y)) / eps


def yosida_primitive(graph: MonotoneGraph, eps: float, y):
    """Moreau envelope of the primitive, zero at ``y = 0``."""
    y = np.asarray(y, dtype=float)
    x = resolvent(graph, eps, y)
    return (y - x) ** 2 / (2.0 * eps) + graph.coef * x * x


def yosida_slope(graph: MonotoneGraph, eps: float, y):
    """Generalized derivative of :func:`yosida_value`.

    At the kinks ``y/(1+2 coef eps) in {lower, upper}`` the active branch
    ``1/eps`` is returned.
    """
    _check_eps(eps)
    y = np.asarray(y, dtype=float)
    scale = 1.0 + 2.0 * graph.coef * eps
    z = y / scale
    inactive = (z > graph.lower) & (z < graph.upper)
    interior = (1.0 - 1.0 / scale) / eps
    return np.where(inactive, interior, 1.0 / eps)
