import numpy as np
import pytest
import scipy.sparse as sp

from nladhesion import monotone as mg
from nladhesion.adhesion import (CohesionFunction, coupling_rhs, flow_rule_residual,
                                 incremental_energy, step_flow_rule)
from nladhesion.discretization import assemble_surface_laplacian, build_mesh
from nladhesion.errors import NonConvergence
from nladhesion.kernel import KernelSpec, assemble

from oracles import flow_rule_oracle, scalar_bisection

ZERO = CohesionFunction(0.0, 0.0, 0.0)


def contact(n):
    mesh = build_mesh(n - 1, 2)
    return mesh.contact_s, mesh.contact_weights, assemble_surface_laplacian(mesh)


def test_cohesion_function():
    g = CohesionFunction.linear(0.1)
    assert g(1.0) == pytest.approx(0.0, abs=1e-17)
    assert g(0.0) == pytest.approx(0.1)
    assert g.derivative(0.3) == pytest.approx(-0.1)
    assert CohesionFunction(0, 0, 2.0).derivative(0.5) == 2.0
    with pytest.raises(ValueError):
        CohesionFunction.linear(-1.0)


def test_coupling_rhs_examples():
    s, w, _ = contact(9)
    op = assemble(KernelSpec("constant", k0=0.7), s, w)
    assert np.array_equal(coupling_rhs(np.zeros((9, 2)), np.ones(9), op), np.zeros(9))
    u = np.random.default_rng(0).standard_normal((9, 2))
    assert np.allclose(coupling_rhs(u, np.zeros(9), op), -0.5 * np.sum(u * u, axis=1),
                       rtol=0, atol=1e-15)
    v = 0.3
    u = np.tile([0.0, v], (9, 1))
    assert np.allclose(coupling_rhs(u, np.ones(9), op), -0.5 * v * v * (1 + 2 * 0.7), rtol=1e-14)
    with pytest.raises(ValueError):
        coupling_rhs(np.zeros((8, 2)), np.ones(9), op)


def test_coupling_rhs_nonpositive_for_nonnegative_damage():
    rng = np.random.default_rng(1)
    s, w, _ = contact(17)
    op = assemble(KernelSpec("elongation", d=0.4), s, w)
    for _ in range(50):
        r = coupling_rhs(rng.standard_normal((17, 2)), rng.uniform(0, 1, 17), op)
        assert np.all(r <= 0.0)


def test_stationary_point():
    s, w, L = contact(6)
    chi = np.full(6, 0.37)
    res = step_flow_rule(chi, np.zeros(6), 0.1, 1e-3, ZERO, L, w)
    assert np.array_equal(res.chi_new, chi)
    assert res.newton_iters == 0


def test_single_node_bisection_oracle():
    chi_prev, rhs, dt, eps = 0.8, -2.0, 0.1, 1e-3
    res = step_flow_rule(np.array([chi_prev]), np.array([rhs]), dt, eps, ZERO,
                         sp.csr_matrix((1, 1)), np.array([1.0]))

    def optimality(c):
        rate = (c - chi_prev) / dt
        return (rate + max(rate, 0.0) / eps + (c - min(max(c, 0.0), 1.0)) / eps - rhs)

    ref = scalar_bisection(optimality, -1.0, 2.0)
    assert abs(res.chi_new[0] - ref) <= 1e-9
    assert ref == pytest.approx(0.6)         # inactive constraints: chi = chi_prev + dt rhs


def test_random_instances_match_dense_minimizer():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(3, 11))
        s, w, L = contact(n)
        chi_prev = rng.uniform(0, 1, n)
        rhs = rng.uniform(-3, 1, n)
        dt = 10 ** rng.uniform(-2, -0.5)
        eps = 10 ** rng.uniform(-3, -1)
        gamma = CohesionFunction(*rng.uniform(-0.5, 0.5, 3))
        res = step_flow_rule(chi_prev, rhs, dt, eps, gamma, L, w)
        ref = flow_rule_oracle(chi_prev, rhs, dt, eps, gamma.derivative(chi_prev), L, w)
        assert np.max(np.abs(res.chi_new - ref)) <= 1e-6


def test_random_probe_minimality_and_residual():
    rng = np.random.default_rng(8)
    s, w, L = contact(7)
    args = (rng.uniform(0, 1, 7), rng.uniform(-2, 0.5, 7), 0.05, 1e-2,
            CohesionFunction.linear(0.3), L, w)
    res = step_flow_rule(*args)
    G = incremental_energy(res.chi_new, *args)
    assert G <= incremental_energy(args[0], *args)
    for _ in range(1000):
        probe = res.chi_new + 10.0 ** rng.uniform(-6, -1) * rng.standard_normal(7)
        assert G <= incremental_energy(probe, *args) + 1e-13
    r = flow_rule_residual(res.chi_new, *args)
    assert np.max(np.abs(r / w)) <= 1e-9
    assert res.omega == pytest.approx(mg.yosida_value(mg.nonpositive_halfline(), 1e-2,
                                                      (res.chi_new - args[0]) / 0.05))


def test_incremental_energy_examples():
    s, w, L = contact(5)
    z = np.zeros(5)
    assert incremental_energy(z, z, z, 0.1, 1e-3, ZERO, L * 0, w) == 0.0
    chi = np.array([0.2, 0.5, 1.3, 0.9, -0.1])
    rhs = np.linspace(-1, 0, 5)
    g = CohesionFunction.linear(0.2)
    beta = mg.unit_interval()
    expected = (0.5 * chi @ (L @ chi) + np.sum(w * mg.yosida_primitive(beta, 1e-2, chi))
                + np.sum(w * g.derivative(chi) * chi) - np.sum(w * rhs * chi))
    assert incremental_energy(chi, chi, rhs, 0.1, 1e-2, g, L, w) == pytest.approx(expected,
                                                                                 rel=1e-14)


def test_comparison_principle():
    rng = np.random.default_rng(2)
    s, w, L = contact(9)
    for _ in range(20):
        chi_prev = rng.uniform(0, 1, 9)
        rhs = -rng.uniform(0, 2, 9)
        res = step_flow_rule(chi_prev, rhs, 0.05, 1e-3, ZERO, L, w)
        assert res.chi_new.max() <= chi_prev.max() + 1e-12


def test_positive_increment_bounded_by_yosida_slack():
    # a healing drive (gamma' < 0) pushes chi up; rho only holds it to O(eps)
    rng = np.random.default_rng(3)
    s, w, L = contact(9)
    dt = 0.05
    for eps in (1e-2, 1e-3, 1e-4):
        chi_prev = rng.uniform(0.2, 0.8, 9)
        rhs = -rng.uniform(0, 0.1, 9)
        g = CohesionFunction.linear(1.0)
        res = step_flow_rule(chi_prev, rhs, dt, eps, g, L, w)
        delta = res.chi_new - chi_prev
        rate = delta / dt
        others = rate + res.xi + g.derivative(chi_prev) - rhs + (L @ res.chi_new) / w
        C = np.max(np.abs(others))
        assert np.max(np.maximum(delta, 0.0)) <= dt * eps * C * (1 + 1e-8)
        assert np.max(delta) > 0.0


def test_continuous_dependence_on_trace():
    rng = np.random.default_rng(4)
    s, w, L = contact(5)
    op = assemble(KernelSpec("elongation", d=0.5), s, w)
    chi_prev = rng.uniform(0.3, 1, 5)
    ratios = []
    for k in range(100):
        u1 = rng.uniform(-1, 1, (5, 2))
        u2 = u1 + 10.0 ** -(1 + k % 6) * rng.standard_normal((5, 2))
        c1 = step_flow_rule(chi_prev, coupling_rhs(u1, chi_prev, op), 0.05, 1e-3, ZERO, L, w)
        c2 = step_flow_rule(chi_prev, coupling_rhs(u2, chi_prev, op), 0.05, 1e-3, ZERO, L, w)
        ratios.append(np.linalg.norm(c1.chi_new - c2.chi_new) / np.linalg.norm(u1 - u2))
    assert max(ratios) <= 10 * np.median(ratios) + 1e-12


def heat_error(n_nodes, dt, T=0.2):
    """Decoupled surface heat equation chi_t - chi_ss = f with Neumann ends;
    exact solution exp(-t) cos(pi s)."""
    s, w, L = contact(n_nodes)
    exact = lambda t: np.exp(-t) * np.cos(np.pi * s)
    chi = exact(0.0)
    for k in range(1, int(round(T / dt)) + 1):
        t = k * dt
        src = (np.pi ** 2 - 1.0) * exact(t)
        chi = step_flow_rule(chi, src, dt, 1.0, ZERO, L, w, rho=None, beta=None,
                             tol=1e-12).chi_new
    return np.sqrt(np.sum(w * (chi - exact(T)) ** 2))


def test_manufactured_heat_equation_temporal_order():
    errs = [heat_error(513, dt) for dt in (0.02, 0.01, 0.005)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates >= 0.9)


def test_manufactured_heat_equation_spatial_order():
    errs = [heat_error(n + 1, 1.0 / n ** 2, T=0.25) for n in (8, 16, 32)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates >= 1.9)


def test_errors():
    s, w, L = contact(3)
    with pytest.raises(ValueError):
        step_flow_rule(np.ones(3), np.zeros(3), 0.0, 1e-3, ZERO, L, w)
    with pytest.raises(ValueError):
        step_flow_rule(np.ones(3), np.zeros(3), 0.1, 0.0, ZERO, L, w)
    with pytest.raises(NonConvergence):
        step_flow_rule(np.ones(3), -np.ones(3), 0.1, 1e-3, ZERO, L, w, max_iter=0)
