import logging

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from nladhesion.discretization import (MaterialTensors, assemble_elastic, assemble_load,
                                       assemble_viscous, build_mesh, normal_trace, restrict)
from nladhesion.errors import IndefiniteSystem, NonConvergence
from nladhesion.kernel import KernelSpec, assemble
from nladhesion.momentum import MomentumSolver, contact_residual

from oracles import momentum_oracle


def setup(n=2, spec=KernelSpec("elongation", d=0.5), eps_u=1e-4, **kw):
    mesh = build_mesh(n, n)
    mat = MaterialTensors()
    A, B = assemble_elastic(mesh, mat), assemble_viscous(mesh, mat)
    op = assemble(spec, mesh.contact_s, mesh.contact_weights)
    return mesh, A, B, op, MomentumSolver(mesh, A, B, op, eps_u, **kw)


def test_zero_load_gives_zero():
    mesh, *_, solver = setup(3)
    r = solver.step(np.zeros(mesh.n_dofs), np.full(4, 0.7), np.zeros(mesh.n_dofs), 0.1)
    assert np.array_equal(r.u_new, np.zeros(mesh.n_dofs))
    assert np.array_equal(r.zeta, np.zeros(4))


def test_upward_traction_is_unconstrained_linear_solve():
    mesh, A, B, _, solver = setup(4)
    F = assemble_load(mesh, h=(0.0, 1.0), traction_edges=("top",))
    dt = 0.05
    r = solver.step(np.zeros(mesh.n_dofs), np.zeros(5), F, dt)
    free = mesh.free_dofs
    u = np.zeros(mesh.n_dofs)
    u[free] = spla.spsolve(restrict(B / dt + A, free).tocsc(), F[free])
    assert np.max(normal_trace(mesh, u)[1:]) < 0.0       # separation off the clamped corner
    assert np.allclose(r.u_new, u, rtol=0, atol=1e-12)
    assert np.array_equal(r.zeta, np.zeros(5))


def test_2x2_downward_force_matches_dense_minimizer():
    mesh, A, B, op, solver = setup(2)
    F = assemble_load(mesh, f=(0.0, -0.5))
    u_prev = np.zeros(mesh.n_dofs)
    chi = np.ones(3)
    r = solver.step(u_prev, chi, F, 0.01)
    ref = momentum_oracle(mesh, A, B, KernelSpec("elongation", d=0.5), u_prev, chi, F, 0.01, 1e-4)
    assert len(mesh.free_dofs) == 12
    assert np.max(np.abs(r.u_new - ref)) <= 1e-6


def test_random_instances_match_dense_minimizer():
    rng = np.random.default_rng(11)
    for _ in range(20):
        eps_u = 10 ** rng.uniform(-4, -1)
        spec = KernelSpec("elongation", d=rng.uniform(0.2, 1.0))
        mesh, A, B, op, solver = setup(2, spec=spec, eps_u=eps_u)
        F = assemble_load(mesh, f=rng.uniform(-1, 1, 2), h=rng.uniform(-1, 1, 2))
        u_prev = rng.uniform(-0.05, 0.05, mesh.n_dofs)
        u_prev[mesh.dirichlet_dofs] = 0.0
        chi = rng.uniform(0, 1, 3)
        dt = 10 ** rng.uniform(-3, -1)
        r = solver.step(u_prev, chi, F, dt)
        ref = momentum_oracle(mesh, A, B, spec, u_prev, chi, F, dt, eps_u)
        assert np.max(np.abs(r.u_new - ref)) <= 1e-6


def test_complementarity_and_energy_decrease():
    mesh, A, B, op, solver = setup(6, eps_u=1e-3)
    rng = np.random.default_rng(3)
    F = assemble_load(mesh, f=(0.3, -1.0), h=(0.0, 0.4))
    u_prev = np.zeros(mesh.n_dofs)
    for _ in range(5):
        chi = rng.uniform(0, 1, 7)
        r = solver.step(u_prev, chi, F, 0.02)
        s = normal_trace(mesh, r.u_new)
        assert np.all(r.zeta >= 0.0)
        assert np.all(r.zeta[s < 0] == 0.0)
        assert np.allclose(r.zeta, mesh.contact_weights * np.maximum(s, 0) / 1e-3, rtol=1e-14)
        assert (solver.incremental_energy(r.u_new, u_prev, chi, F, 0.02)
                <= solver.incremental_energy(u_prev, u_prev, chi, F, 0.02))
        assert r.residual_norm <= 1e-10
        u_prev = r.u_new


def test_continuous_dependence_on_damage():
    mesh, A, B, op, solver = setup(3, eps_u=1e-3)
    rng = np.random.default_rng(7)
    F = assemble_load(mesh, f=(0.2, -1.0))
    u0 = np.zeros(mesh.n_dofs)
    ratios = []
    for k in range(100):
        c1 = rng.uniform(0, 1, 4)
        c2 = np.clip(c1 + 10.0 ** -(1 + k % 6) * rng.standard_normal(4), 0, 1)
        if np.array_equal(c1, c2):
            continue
        u1 = solver.step(u0, c1, F, 0.05).u_new
        u2 = solver.step(u0, c2, F, 0.05).u_new
        ratios.append(np.linalg.norm(u1 - u2) / np.linalg.norm(c1 - c2))
    ratios = np.array(ratios)
    assert np.all(np.isfinite(ratios))
    assert ratios.max() <= 10 * np.median(ratios) + 1e-12


def test_penetration_monotone_in_penalty(default_run):
    sim, _ = default_run
    mesh = sim.mesh
    F = sim.load(0.01)
    pens = []
    for eps_u in (1e-3, 5e-4, 2.5e-4, 1.25e-4):
        solver = MomentumSolver(mesh, sim.A, sim.B, sim.K_op, eps_u)
        pens.append(contact_residual(mesh, solver.step(np.zeros(mesh.n_dofs),
                                                       np.ones(mesh.n_contact), F, 0.01).u_new))
    assert np.all(np.diff(pens) <= 0.0)


def test_contact_residual_examples():
    mesh = build_mesh(2, 2)
    assert contact_residual(mesh, np.zeros(18)) == 0.0
    assert contact_residual(mesh, np.tile([0.0, 0.1], 9)) == 0.0
    assert contact_residual(mesh, np.tile([0.0, -0.1], 9)) == pytest.approx(0.1)


def test_errors(caplog):
    mesh, A, B, op, solver = setup(2)
    F = assemble_load(mesh, f=(0.0, -1.0))
    flat = setup(2, spec=KernelSpec("constant", k0=0.0))[-1]
    with pytest.raises(IndefiniteSystem):
        flat.step(np.zeros(18), np.full(3, -1e4), F, 0.01)
    with caplog.at_level(logging.WARNING):
        solver.step(np.zeros(18), np.array([-1e-3, 0.0, 0.0]), F, 0.01)
    assert "negative" in caplog.text
    with pytest.raises(NonConvergence):
        setup(2, max_iter=0)[-1].step(np.zeros(18), np.ones(3), F, 0.01)
    with pytest.raises(ValueError):
        solver.step(np.zeros(18), np.ones(3), F, 0.0)
    with pytest.raises(ValueError):
        MomentumSolver(mesh, A, B, op, 0.0)
