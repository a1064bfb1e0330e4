"""Energy/dissipation ledger and constraint monitors.

The ledger evaluates the energy and the dissipation of the system that is
actually integrated: the Yosida primitives for the constraint terms, the
lumped surface quadrature and the same kernel operator as the solvers.
Every function here takes an ``ops`` bundle (a
:class:`~nladhesion.coupler.Simulator`) providing ``mesh, A, B, L, K_op, eps,
eps_u, gamma, rho, beta`` and ``load(t)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import monotone
from .discretization import normal_trace, trace
from .kernel import apply

__all__ = [
    "EnergyBreakdown",
    "DissipationRecord",
    "EnidReport",
    "energy",
    "dissipation",
    "check_energy_dissipation",
    "check_confinement",
    "check_unidirectional",
]

_CONTACT_GRAPH = monotone.nonpositive_halfline()


@dataclass(frozen=True)
class EnergyBreakdown:
    E1_elastic: float
    E1_contact: float
    E2_adhesive_local: float
    E2_adhesive_nonlocal: float
    E2_gradient: float
    E2_beta: float
    E2_gamma: float

    @property
    def total(self) -> float:
        return (self.E1_elastic + self.E1_contact + self.E2_adhesive_local
                + self.E2_adhesive_nonlocal + self.E2_gradient + self.E2_beta
                + self.E2_gamma)

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DissipationRecord:
    """Per-unit-time rates over one step (backward differences)."""

    R_u: float
    R_chi: float
    rho_term: float
    external_work: float


@dataclass
class EnidReport:
    residuals: np.ndarray     # one per grid interval
    window_residual: float    # over [t_0, t_N]

    @property
    def max_violation(self) -> float:
        if len(self.residuals) == 0:
            return 0.0
        return float(max(self.residuals.max(), 0.0))

    @property
    def window_violation(self) -> float:
        return max(self.window_residual, 0.0)

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.residuals).max()) if len(self.residuals) else 0.0


def energy(u, chi, ops) -> EnergyBreakdown:
    mesh = ops.mesh
    u = np.asarray(u, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if u.shape != (mesh.n_dofs,) or chi.shape != (mesh.n_contact,):
        raise ValueError(f"field shapes {u.shape}, {chi.shape} do not match the mesh")
    w = mesh.contact_weights
    uc = trace(mesh, u)
    u2 = np.sum(uc * uc, axis=1)
    return EnergyBreakdown(
        E1_elastic=float(0.5 * u @ (ops.A @ u)),
        E1_contact=float(np.sum(w * monotone.yosida_primitive(
            _CONTACT_GRAPH, ops.eps_u, normal_trace(mesh, u)))),
        E2_adhesive_local=float(0.5 * np.sum(w * chi * u2)),
        E2_adhesive_nonlocal=float(0.5 * np.sum(w * chi * u2 * apply(ops.K_op, chi))),
        E2_gradient=float(0.5 * chi @ (ops.L @ chi)),
        E2_beta=float(np.sum(w * monotone.yosida_primitive(ops.beta, ops.eps, chi))),
        E2_gamma=float(np.sum(w * ops.gamma(chi))),
    )


def dissipation(u_prev, u_new, chi_prev, chi_new, dt, F_t, ops) -> DissipationRecord:
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    w = ops.mesh.contact_weights
    u_t = (np.asarray(u_new) - u_prev) / dt
    chi_t = (np.asarray(chi_new) - chi_prev) / dt
    rec = DissipationRecord(
        R_u=float(0.5 * u_t @ (ops.B @ u_t)),
        R_chi=float(0.5 * np.sum(w * chi_t * chi_t)),
        rho_term=float(np.sum(w * monotone.yosida_primitive(ops.rho, ops.eps, chi_t))),
        external_work=float(np.asarray(F_t) @ u_t),
    )
    assert rec.R_u >= -1e-14 * (1.0 + abs(rec.R_u)), rec
    assert rec.R_chi >= 0.0 and rec.rho_term >= 0.0, rec
    return rec


def _interval_records(trajectory, ops):
    out = []
    t = trajectory.times
    for n in range(1, len(t)):
        dt = t[n] - t[n - 1]
        F_mid = ops.load(0.5 * (t[n - 1] + t[n]))
        out.append(dissipation(trajectory.u[n - 1], trajectory.u[n],
                               trajectory.chi[n - 1], trajectory.chi[n], dt,
                               F_mid, ops))
    return out


def check_energy_dissipation(trajectory, ops, energies=None) -> EnidReport:
    """Residuals of the energy-dissipation inequality on every grid interval.

    ``residual = dt (2 R_u + 2 R_chi + rho_term) + E(t) - E(s) - dt <F, u_t>``;
    positive values violate the inequality.  ``energies`` may pass the
    precomputed ledger to avoid re-evaluation.
    """
    t = trajectory.times
    if energies is None:
        energies = [energy(u, c, ops) for u, c in zip(trajectory.u, trajectory.chi)]
    E = np.array([e.total for e in energies])
    res = np.zeros(len(t) - 1)
    for n, rec in enumerate(_interval_records(trajectory, ops), start=1):
        dt = t[n] - t[n - 1]
        res[n - 1] = (dt * (2.0 * rec.R_u + 2.0 * rec.R_chi + rec.rho_term)
                      + E[n] - E[n - 1] - dt * rec.external_work)
    return EnidReport(res, float(res.sum()))


def check_confinement(trajectory):
    """Worst nodal violations ``(max(-chi), max(chi - 1))``, floored at 0."""
    chi = np.asarray(trajectory.chi)
    return max(float(np.max(-chi)), 0.0), max(float(np.max(chi - 1.0)), 0.0)


def check_unidirectional(trajectory) -> float:
    """Largest positive nodal increment of the damage field over all steps."""
    chi = np.asarray(trajectory.chi)
    if len(chi) < 2:
        return 0.0
    return float(max(np.max(np.diff(chi, axis=0)), 0.0))
