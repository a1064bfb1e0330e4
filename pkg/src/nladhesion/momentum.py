"""Implicit momentum step for a frozen damage field.

One backward-Euler step of the viscoelastic balance with the damage-weighted
adhesive springs, the nonlocal term ``chi u K[chi]`` and the Signorini
constraint relaxed to the penalty ``alpha(s) = max(s, 0) / eps_u`` on
``s = u . n``.  The step is the minimizer of the strictly convex functional

    J(u) = b(u - u_prev, u - u_prev) / (2 dt) + a(u, u) / 2
           + 1/2 int chi |u|^2 (1 + K[chi]) + int alpha_hat(u . n) - <F, u>

found by semismooth Newton with an Armijo safeguard on ``J``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import monotone
from .discretization import Mesh, normal_trace, restrict
from .errors import IndefiniteSystem, NonConvergence
from .kernel import NonlocalOperator, apply

__all__ = ["MomentumStepResult", "MomentumSolver", "contact_residual"]

log = logging.getLogger(__name__)

_CONTACT_GRAPH = monotone.nonpositive_halfline()


@dataclass
class MomentumStepResult:
    u_new: np.ndarray
    zeta: np.ndarray          # nodal normal reactions w_i * alpha(u.n)_i
    newton_iters: int
    residual_norm: float


def contact_residual(mesh: Mesh, u) -> float:
    """Largest nodal penetration ``max(u . n, 0)`` on Gamma_C."""
    return float(np.max(np.maximum(normal_trace(mesh, u), 0.0)))


class MomentumSolver:
    """Momentum sub-solver on a fixed mesh.

    Parameters
    ----------
    mesh : Mesh
    A, B : sparse matrices
        Elastic and viscous stiffness on all displacement dofs.
    K_op : NonlocalOperator
        Kernel operator on the contact nodes.
    eps_u : float
        Contact penalty scale.
    tol : float
        Absolute max-norm tolerance on the free-dof residual.
    """

    def __init__(self, mesh: Mesh, A, B, K_op: NonlocalOperator, eps_u: float,
                 tol: float = 1e-10, max_iter: int = 50, chi_tol: float = 1e-6):
        if not eps_u > 0.0:
            raise ValueError(f"penalty scale eps_u must be positive, got {eps_u}")
        self.mesh = mesh
        self.A = sp.csr_matrix(A)
        self.B = sp.csr_matrix(B)
        self.K_op = K_op
        self.eps_u = float(eps_u)
        self.tol = tol
        self.max_iter = max_iter
        self.chi_tol = chi_tol
        self.free = mesh.free_dofs
        self._base = {}
        self._warned = False

    def _base_matrix(self, dt):
        if dt not in self._base:
            self._base.clear()
            self._base[dt] = restrict(self.B / dt + self.A, self.free).tocsr()
        return self._base[dt]

    def contact_coefficient(self, chi_bar) -> np.ndarray:
        """Lumped weight of the adhesive spring: ``w chi (1 + K[chi])``."""
        chi_bar = np.asarray(chi_bar, dtype=float)
        return self.mesh.contact_weights * chi_bar * (1.0 + apply(self.K_op, chi_bar))

    def incremental_energy(self, u, u_prev, chi_bar, F_t, dt) -> float:
        u = np.asarray(u, dtype=float)
        du = u - u_prev
        uc = u.reshape(-1, 2)[self.mesh.contact_nodes]
        s = normal_trace(self.mesh, u)
        return float(0.5 / dt * du @ (self.B @ du) + 0.5 * u @ (self.A @ u)
                     + 0.5 * np.sum(self.contact_coefficient(chi_bar)
                                    * np.sum(uc * uc, axis=1))
                     + np.sum(self.mesh.contact_weights
                              * monotone.yosida_primitive(_CONTACT_GRAPH, self.eps_u, s))
                     - F_t @ u)

    def gradient(self, u, u_prev, chi_bar, F_t, dt) -> np.ndarray:
        """Full-dof gradient of ``J`` (Dirichlet entries not zeroed)."""
        mesh = self.mesh
        g = self.B @ (u - u_prev) / dt + self.A @ u - F_t
        cx, cy = 2 * mesh.contact_nodes, 2 * mesh.contact_nodes + 1
        c = self.contact_coefficient(chi_bar)
        g[cx] += c * u[cx]
        g[cy] += c * u[cy]
        alpha = monotone.yosida_value(_CONTACT_GRAPH, self.eps_u, -u[cy])
        g[cy] -= mesh.contact_weights * alpha
        return g

    def _hessian(self, u, c, dt):
        mesh = self.mesh
        slope = monotone.yosida_slope(_CONTACT_GRAPH, self.eps_u,
                                      -u[2 * mesh.contact_nodes + 1])
        diag = np.zeros(mesh.n_dofs)
        diag[2 * mesh.contact_nodes] = c
        diag[2 * mesh.contact_nodes + 1] = c + mesh.contact_weights * slope
        return self._base_matrix(dt) + sp.diags(diag[self.free])

    def _check_definite(self, c, dt):
        diag = np.zeros(self.mesh.n_dofs)
        diag[2 * self.mesh.contact_nodes] = c
        diag[2 * self.mesh.contact_nodes + 1] = c
        H = (self._base_matrix(dt) + sp.diags(diag[self.free])).toarray()
        try:
            scipy.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise IndefiniteSystem(
                f"damage-weighted contact term (min coefficient {c.min():.3e}) "
                "makes the momentum step indefinite") from None

    def step(self, u_prev, chi_bar, F_t, dt) -> MomentumStepResult:
        if not dt > 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        u_prev = np.asarray(u_prev, dtype=float)
        chi_bar = np.asarray(chi_bar, dtype=float)
        if chi_bar.min() < -self.chi_tol and not self._warned:
            log.warning("frozen damage field has negative values (min %.3e); "
                        "further occurrences are not reported", chi_bar.min())
            self._warned = True
        c = self.contact_coefficient(chi_bar)
        if c.min() < 0.0:
            self._check_definite(c, dt)

        u = u_prev.copy()
        u[self.mesh.dirichlet_dofs] = 0.0
        J = self.incremental_energy(u, u_prev, chi_bar, F_t, dt)
        for it in range(self.max_iter + 1):
            g = self.gradient(u, u_prev, chi_bar, F_t, dt)[self.free]
            res = float(np.max(np.abs(g))) if len(g) else 0.0
            if res <= self.tol:
                break
            if it == self.max_iter:
                raise NonConvergence(
                    f"momentum Newton: residual {res:.3e} after {it} iterations")
            H = self._hessian(u, c, dt)
            d = spla.spsolve(H.tocsc(), -g)
            if np.max(np.abs(d)) <= 4.0 * np.finfo(float).eps * max(1.0, np.max(np.abs(u))):
                break
            slope = float(g @ d)
            step = 1.0
            while True:
                trial = u.copy()
                trial[self.free] += step * d
                J_trial = self.incremental_energy(trial, u_prev, chi_bar, F_t, dt)
                slack = 1e-13 * max(1.0, abs(J))
                if J_trial <= J + 1e-4 * step * slope + slack or step < 1e-10:
                    break
                step *= 0.5
            u, J = trial, J_trial
        s = normal_trace(self.mesh, u)
        zeta = self.mesh.contact_weights * monotone.yosida_value(
            _CONTACT_GRAPH, self.eps_u, s)
        return MomentumStepResult(u, zeta, it, res)
