"""Time integration of the coupled system by per-step Picard iteration.

Each step iterates ``chi <- T2(T1(chi))`` where ``T1`` is the momentum step
with frozen damage and ``T2`` the flow-rule step driven by the resulting
trace (nonlocal coupling fields lagged at the current iterate).
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics, monotone
from .adhesion import CohesionFunction, coupling_rhs, step_flow_rule
from .config import SolverConfig, validate
from .discretization import (MaterialTensors, assemble_elastic, assemble_h1_gram,
                             assemble_load, assemble_surface_laplacian,
                             assemble_viscous, build_mesh, trace)
from .errors import FixedPointDivergence, SolverError
from .kernel import KernelSpec, assemble, load_table
from .momentum import MomentumSolver, contact_residual

__all__ = [
    "State",
    "StepInfo",
    "Trajectory",
    "Simulator",
    "run_simulation",
    "epsilon_continuation",
    "restart_equivalence",
]

log = logging.getLogger(__name__)


@dataclass
class State:
    step: int
    t: float
    u: np.ndarray
    chi: np.ndarray


@dataclass
class StepInfo:
    zeta: np.ndarray
    omega: np.ndarray
    xi: np.ndarray
    fp_iters: int
    fp_history: list
    newton_iters_u: int
    newton_iters_chi: int


@dataclass
class Trajectory:
    config: SolverConfig
    times: np.ndarray
    u: np.ndarray
    chi: np.ndarray
    zeta: np.ndarray
    omega: np.ndarray
    xi: np.ndarray
    fp_iters: np.ndarray
    newton_iters_u: np.ndarray
    newton_iters_chi: np.ndarray
    fp_histories: list = field(default_factory=list)
    energies: list = field(default_factory=list)

    def state(self, n: int) -> State:
        step0 = int(round(self.times[0] / self.config.dt))
        return State(step0 + n, float(self.times[n]), self.u[n].copy(),
                     self.chi[n].copy())

    @property
    def final(self) -> State:
        return self.state(len(self.times) - 1)


def _kernel_spec(cfg: SolverConfig) -> KernelSpec:
    if cfg.kernel_kind == "tabulated":
        return KernelSpec("tabulated", table=load_table(cfg.kernel_table))
    return KernelSpec(cfg.kernel_kind, d=cfg.kernel_d, k0=cfg.kernel_k0)


class Simulator:
    """All assembled operators for one configuration."""

    rho = monotone.nonpositive_halfline()
    beta = monotone.unit_interval()

    def __init__(self, config: SolverConfig):
        self.config = cfg = validate(config)
        self.mesh = build_mesh(cfg.nx, cfg.ny)
        self.material = MaterialTensors(cfg.lam, cfg.mu, cfg.lam_v, cfg.mu_v)
        self.A = assemble_elastic(self.mesh, self.material)
        self.B = assemble_viscous(self.mesh, self.material)
        self.L = assemble_surface_laplacian(self.mesh)
        self.kernel = _kernel_spec(cfg)
        self.K_op = assemble(self.kernel, self.mesh.contact_s,
                             self.mesh.contact_weights)
        self.gamma = CohesionFunction(cfg.gamma_c0, cfg.gamma_c1, cfg.gamma_c2)
        self.eps, self.eps_u = cfg.eps, cfg.eps_u
        self._F_unit = assemble_load(self.mesh, cfg.f, cfg.h,
                                     traction_edges=cfg.traction_edges)
        self.momentum = MomentumSolver(self.mesh, self.A, self.B, self.K_op,
                                       cfg.eps_u, tol=cfg.newton_tol_u,
                                       max_iter=cfg.newton_max_u)
        self._h1 = None

    @property
    def h1_gram(self):
        if self._h1 is None:
            self._h1 = assemble_h1_gram(self.mesh)
        return self._h1

    def load(self, t: float) -> np.ndarray:
        return self.config.load_factor(t) * self._F_unit

    def time(self, step: int) -> float:
        return step * self.config.dt

    def initial_state(self) -> State:
        cfg, mesh = self.config, self.mesh
        if cfg.u0 == "zero":
            u = np.zeros(mesh.n_dofs)
        else:
            from .io import read_u_snapshot
            u = read_u_snapshot(cfg.u0, mesh)
        if isinstance(cfg.chi0, float):
            chi = np.full(mesh.n_contact, cfg.chi0)
        else:
            from .io import read_chi_snapshot
            chi = read_chi_snapshot(cfg.chi0, mesh)
            if chi.min() < 0.0 or chi.max() > 1.0:
                raise ValueError(f"{cfg.chi0}: initial damage outside [0, 1]")
        if np.any(u.reshape(-1, 2)[mesh.dirichlet_nodes] != 0.0):
            raise ValueError("initial displacement must vanish on Gamma_D")
        return State(0, 0.0, u, chi)

    def l2_contact(self, v) -> float:
        return float(np.sqrt(np.sum(self.mesh.contact_weights * v * v)))

    def step_coupled(self, state: State):
        """One time step; returns ``(new_state, StepInfo)``."""
        cfg = self.config
        dt = cfg.dt
        step = state.step + 1
        t_new = self.time(step)
        F = self.load(t_new)
        w = self.mesh.contact_weights
        chi_k = state.chi
        history = []
        nu = nchi = 0
        for k in range(1, cfg.max_fp + 1):
            mres = self.momentum.step(state.u, chi_k, F, dt)
            rhs = coupling_rhs(trace(self.mesh, mres.u_new), chi_k, self.K_op)
            fres = step_flow_rule(state.chi, rhs, dt, cfg.eps, self.gamma, self.L, w,
                                  rho=self.rho, beta=self.beta,
                                  tol=cfg.newton_tol_chi, max_iter=cfg.newton_max_chi)
            nu += mres.newton_iters
            nchi += fres.newton_iters
            chi_next = fres.chi_new if cfg.theta == 1.0 else (
                cfg.theta * fres.chi_new + (1.0 - cfg.theta) * chi_k)
            history.append(self.l2_contact(chi_next - chi_k))
            chi_k = chi_next
            if history[-1] <= cfg.tol_fp:
                break
        else:
            if history[-1] > history[0]:
                raise FixedPointDivergence(
                    f"fixed point diverged: residuals {history[0]:.3e} -> "
                    f"{history[-1]:.3e} in {cfg.max_fp} iterations",
                    history, time=t_new)
            log.warning("t=%.6g: fixed point stopped at residual %.3e after %d "
                        "iterations", t_new, history[-1], cfg.max_fp)
        info = StepInfo(mres.zeta, fres.omega, fres.xi, len(history), history, nu, nchi)
        return State(step, t_new, mres.u_new, chi_k), info

    def run(self, initial: State | None = None, n_steps: int | None = None) -> Trajectory:
        cfg = self.config
        state = self.initial_state() if initial is None else initial
        if n_steps is None:
            n_steps = cfg.n_steps - state.step
        states = [state]
        infos = [StepInfo(
            zeta=self.mesh.contact_weights * monotone.yosida_value(
                monotone.nonpositive_halfline(), cfg.eps_u,
                -state.u[2 * self.mesh.contact_nodes + 1]),
            omega=np.zeros(self.mesh.n_contact),
            xi=monotone.yosida_value(self.beta, cfg.eps, state.chi),
            fp_iters=0, fp_history=[], newton_iters_u=0, newton_iters_chi=0)]
        for _ in range(n_steps):
            try:
                state, info = self.step_coupled(state)
            except SolverError as exc:
                if exc.time is None:
                    exc.at_time(self.time(state.step + 1))
                raise
            states.append(state)
            infos.append(info)
        traj = Trajectory(
            config=cfg,
            times=np.array([s.t for s in states]),
            u=np.array([s.u for s in states]),
            chi=np.array([s.chi for s in states]),
            zeta=np.array([i.zeta for i in infos]),
            omega=np.array([i.omega for i in infos]),
            xi=np.array([i.xi for i in infos]),
            fp_iters=np.array([i.fp_iters for i in infos]),
            newton_iters_u=np.array([i.newton_iters_u for i in infos]),
            newton_iters_chi=np.array([i.newton_iters_chi for i in infos]),
            fp_histories=[i.fp_history for i in infos],
        )
        traj.energies = [diagnostics.energy(u, c, self) for u, c in zip(traj.u, traj.chi)]
        return traj

    def max_penetration(self, u) -> float:
        return contact_residual(self.mesh, u)


def run_simulation(config: SolverConfig, initial: State | None = None) -> Trajectory:
    return Simulator(config).run(initial)


def _check_eps_list(eps_list):
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2:
        raise ValueError("epsilon continuation needs at least two values")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError(f"eps list must be strictly decreasing, got {eps_list}")
    if eps_list[-1] <= 0.0:
        raise ValueError("eps values must be positive")
    return eps_list


def trajectory_distances(sim: Simulator, a: Trajectory, b: Trajectory):
    """Discrete ``L2(0,T; L2(Gamma_C))`` distance of ``chi`` and
    ``L2(0,T; H1)`` distance of ``u`` (right-endpoint rule)."""
    dt = np.diff(a.times)
    dchi = a.chi[1:] - b.chi[1:]
    du = a.u[1:] - b.u[1:]
    w = sim.mesh.contact_weights
    chi2 = np.sum(dt * np.sum(w * dchi * dchi, axis=1))
    u2 = np.sum(dt * np.einsum("ni,ni->n", du, (sim.h1_gram @ du.T).T))
    return float(np.sqrt(chi2)), float(np.sqrt(max(u2, 0.0)))


@dataclass
class ContinuationResult:
    eps: list
    trajectories: list
    chi_distances: list
    u_distances: list


def epsilon_continuation(config: SolverConfig, eps_list) -> ContinuationResult:
    eps_list = _check_eps_list(eps_list)
    trajs = []
    sim = None
    for eps in eps_list:
        sim = Simulator(replace(config, eps=eps))
        try:
            trajs.append(sim.run())
        except SolverError as exc:
            raise type(exc)(f"eps={eps!r}: {exc}") from exc
    chi_d, u_d = [], []
    for a, b in zip(trajs, trajs[1:]):
        dc, du = trajectory_distances(sim, a, b)
        chi_d.append(dc)
        u_d.append(du)
    return ContinuationResult(eps_list, trajs, chi_d, u_d)


def restart_equivalence(config: SolverConfig, t_split: float) -> dict:
    """Run ``(0, T)`` in one go and as ``(0, t_split)`` + restart from a
    checkpoint; report the max-norm discrepancy of the final fields."""
    from .io import read_checkpoint, write_checkpoint

    cfg = validate(config)
    n_split = int(round(t_split / cfg.dt))
    if abs(n_split * cfg.dt - t_split) > 1e-9 * cfg.dt:
        raise ValueError(f"t_split={t_split!r} is not on the time grid")
    if not 0 < n_split < cfg.n_steps:
        raise ValueError(f"t_split={t_split!r} must lie strictly inside (0, T)")
    sim = Simulator(cfg)
    whole = sim.run()
    first = sim.run(n_steps=n_split)
    buf = io.StringIO()
    write_checkpoint(buf, first.final, sim.mesh)
    buf.seek(0)
    restarted = Simulator(cfg).run(initial=read_checkpoint(buf, sim.mesh))
    du = float(np.max(np.abs(whole.u[-1] - restarted.u[-1])))
    dchi = float(np.max(np.abs(whole.chi[-1] - restarted.chi[-1])))
    return {"t_split": n_split * cfg.dt, "u_discrepancy": du,
            "chi_discrepancy": dchi, "discrepancy": max(du, dchi)}
