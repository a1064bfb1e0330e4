"""Semi-implicit step of the regularized damage flow rule on Gamma_C.

With lumped surface mass ``M = diag(w)``, stiffness ``L`` and
``delta = chi - chi_prev`` the step solves

    M delta/dt + M rho_eps(delta/dt) + L chi + M beta_eps(chi)
        + M gamma'(chi_prev) = M rhs,

i.e. it minimizes the convex functional :func:`incremental_energy`.  The
cohesion derivative is explicit and the coupling right-hand side is built
from lagged fields, so the problem stays convex for any ``gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import monotone
from .errors import NonConvergence
from .kernel import NonlocalOperator, apply

__all__ = [
    "CohesionFunction",
    "FlowRuleStepResult",
    "coupling_rhs",
    "step_flow_rule",
    "incremental_energy",
    "flow_rule_residual",
]

DEFAULT_RHO = monotone.nonpositive_halfline()
DEFAULT_BETA = monotone.unit_interval()


@dataclass(frozen=True)
class CohesionFunction:
    """``gamma(chi) = c0 + c1 chi + c2 chi**2``."""

    c0: float = 0.1
    c1: float = -0.1
    c2: float = 0.0

    @classmethod
    def linear(cls, w: float) -> "CohesionFunction":
        """``w (1 - chi)``."""
        if w < 0.0:
            raise ValueError(f"cohesion w must be nonnegative, got {w}")
        return cls(w, -w, 0.0)

    def __call__(self, chi):
        chi = np.asarray(chi, dtype=float)
        return self.c0 + self.c1 * chi + self.c2 * chi * chi

    def derivative(self, chi):
        chi = np.asarray(chi, dtype=float)
        return self.c1 + 2.0 * self.c2 * chi


@dataclass
class FlowRuleStepResult:
    chi_new: np.ndarray
    omega: np.ndarray         # rho_eps(chi_t)
    xi: np.ndarray            # beta_eps(chi_new)
    newton_iters: int
    residual_norm: float


def coupling_rhs(u_trace, chi_lag, K_op: NonlocalOperator) -> np.ndarray:
    """``-|u|^2/2 - |u|^2 K[chi]/2 - K[chi |u|^2]/2`` on the contact nodes."""
    u_trace = np.asarray(u_trace, dtype=float)
    chi_lag = np.asarray(chi_lag, dtype=float)
    if u_trace.shape != (K_op.size, 2) or chi_lag.shape != (K_op.size,):
        raise ValueError(f"trace {u_trace.shape} / damage {chi_lag.shape} do not "
                         f"match {K_op.size} contact nodes")
    u2 = np.sum(u_trace * u_trace, axis=1)
    return -0.5 * u2 - 0.5 * u2 * apply(K_op, chi_lag) - 0.5 * apply(K_op, chi_lag * u2)


def _parts(chi, chi_prev, dt, eps, rho, beta):
    rate = (chi - chi_prev) / dt
    omega = (monotone.yosida_value(rho, eps, rate) if rho is not None
             else np.zeros_like(chi))
    xi = (monotone.yosida_value(beta, eps, chi) if beta is not None
          else np.zeros_like(chi))
    return rate, omega, xi


def flow_rule_residual(chi, chi_prev, rhs, dt, eps, gamma, L, weights,
                       rho=DEFAULT_RHO, beta=DEFAULT_BETA) -> np.ndarray:
    """Mass-weighted residual, i.e. the gradient of :func:`incremental_energy`."""
    rate, omega, xi = _parts(chi, chi_prev, dt, eps, rho, beta)
    return weights * (rate + omega + xi + gamma.derivative(chi_prev) - rhs) + L @ chi


def incremental_energy(chi, chi_prev, rhs, dt, eps, gamma, L, weights,
                       rho=DEFAULT_RHO, beta=DEFAULT_BETA) -> float:
    chi = np.asarray(chi, dtype=float)
    delta = chi - chi_prev
    G = (0.5 / dt * np.sum(weights * delta * delta) + 0.5 * chi @ (L @ chi)
         + np.sum(weights * (gamma.derivative(chi_prev) - rhs) * chi))
    if rho is not None:
        G += dt * np.sum(weights * monotone.yosida_primitive(rho, eps, delta / dt))
    if beta is not None:
        G += np.sum(weights * monotone.yosida_primitive(beta, eps, chi))
    return float(G)


def step_flow_rule(chi_prev, rhs, dt, eps, gamma: CohesionFunction, L, weights,
                   rho=DEFAULT_RHO, beta=DEFAULT_BETA, tol: float = 1e-10,
                   max_iter: int = 100) -> FlowRuleStepResult:
    """Advance the damage field by one step.

    ``rho`` / ``beta`` are :class:`~nladhesion.monotone.MonotoneGraph`
    instances or ``None`` to drop the term.  Convergence is declared when the
    nodal residual (mass-weighted residual divided by the weights) is below
    ``tol`` in max norm, or when the Newton update drops to roundoff level.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    chi_prev = np.asarray(chi_prev, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    L = sp.csr_matrix(L)
    args = (chi_prev, rhs, dt, eps, gamma, L, weights, rho, beta)

    chi = chi_prev.copy()
    G = incremental_energy(chi, *args)
    for it in range(max_iter + 1):
        r = flow_rule_residual(chi, *args)
        res = float(np.max(np.abs(r / weights)))
        if res <= tol:
            break
        if it == max_iter:
            raise NonConvergence(
                f"flow-rule Newton: residual {res:.3e} after {it} iterations")
        diag = weights / dt
        if rho is not None:
            diag = diag + weights / dt * monotone.yosida_slope(
                rho, eps, (chi - chi_prev) / dt)
        if beta is not None:
            diag = diag + weights * monotone.yosida_slope(beta, eps, chi)
        H = (L + sp.diags(diag)).tocsc()
        d = spla.spsolve(H, -r) if H.shape[0] > 1 else -r / H.toarray()[0]
        d = np.atleast_1d(d)
        if np.max(np.abs(d)) <= 4.0 * np.finfo(float).eps * max(1.0, np.max(np.abs(chi))):
            break
        slope = float(r @ d)
        step = 1.0
        while True:
            trial = chi + step * d
            G_trial = incremental_energy(trial, *args)
            slack = 1e-13 * max(1.0, abs(G))
            if G_trial <= G + 1e-4 * step * slope + slack or step < 1e-10:
                break
            step *= 0.5
        chi, G = trial, G_trial
    _, omega, xi = _parts(chi, chi_prev, dt, eps, rho, beta)
    return FlowRuleStepResult(chi, omega, xi, it, res)
