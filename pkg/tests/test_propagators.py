"""Unit tests for the exact and adiabatic propagators."""

import numpy as np
import pytest
import scipy.linalg

import zenojump as zj

from properties import random_hermitian
from test_decomposition import rotation_family


def test_constant_hamiltonian_matches_expm():
    rng = np.random.default_rng(31)
    h = random_hermitian(rng, 4)
    op = zj.TimeDependentOperator.constant(h, (0.0, 2.0))
    res = zj.exact_propagator(op, 2.0, tol=1e-10)
    ref = scipy.linalg.expm(-2j * h)
    assert np.max(np.abs(res.matrix - ref)) < 1e-9
    assert res.est_error < 1e-10
    assert res.steps_used >= 16


def test_piecewise_constant_hamiltonian_is_exact():
    # Midpoint sampling is exact on each constant piece; breakpoints are
    # forced onto step boundaries so the product telescopes exactly.
    rng = np.random.default_rng(32)
    h_a = random_hermitian(rng, 3)
    h_b = random_hermitian(rng, 3)
    op = zj.TimeDependentOperator(
        evaluator=lambda t: h_a if t < 0.4 else h_b,
        horizon=(0.0, 1.0),
        dim=3,
        breakpoints=(0.4,),
    )
    res = zj.exact_propagator(op, 1.0, tol=1e-9)
    ref = scipy.linalg.expm(-1j * h_b * 0.6) @ scipy.linalg.expm(-1j * h_a * 0.4)
    assert np.max(np.abs(res.matrix - ref)) < 1e-9


def test_time_dependent_propagator_against_ode_solver():
    from scipy.integrate import solve_ivp

    rng = np.random.default_rng(33)
    gen = random_hermitian(rng, 3, scale=0.6)
    base = np.diag([-1.0, 0.5, 2.0]).astype(complex)
    op = rotation_family(gen, base)
    res = zj.exact_propagator(op, 1.0, tol=1e-9)

    def rhs(t, y):
        u = y.reshape(3, 3)
        return (-1j * op(t) @ u).ravel()

    sol = solve_ivp(
        rhs, (0.0, 1.0), np.eye(3, dtype=complex).ravel(),
        method="DOP853", rtol=1e-10, atol=1e-12,
    )
    ref = sol.y[:, -1].reshape(3, 3)
    assert np.max(np.abs(res.matrix - ref)) < 1e-7


def test_composition_over_subintervals():
    rng = np.random.default_rng(34)
    gen = random_hermitian(rng, 2, scale=0.5)
    op = rotation_family(gen, zj.SIGMA_Z)
    tol = 1e-9
    u_full = zj.exact_propagator(op, 1.0, tol=tol).matrix
    u_first = zj.exact_propagator(op, 0.5, tol=tol).matrix

    def shifted(t):
        return op(t + 0.5)

    op_second = zj.TimeDependentOperator(evaluator=shifted, horizon=(0.0, 0.5), dim=2)
    u_second = zj.exact_propagator(op_second, 0.5, tol=tol).matrix
    assert np.max(np.abs(u_second @ u_first - u_full)) < 1e-6


def test_propagator_validates_t_final():
    op = zj.TimeDependentOperator.constant(zj.SIGMA_Z, (0.0, 1.0))
    with pytest.raises(zj.ValidationError, match="horizon"):
        zj.exact_propagator(op, 2.0)
    with pytest.raises(zj.ValidationError, match="horizon"):
        zj.exact_propagator(op, 0.0)


def test_propagator_budget_exhaustion_carries_estimate():
    rng = np.random.default_rng(35)
    gen = random_hermitian(rng, 2, scale=2.0)
    op = rotation_family(gen, 5.0 * zj.SIGMA_Z)
    with pytest.raises(zj.NumericalError, match="did not converge") as exc:
        zj.exact_propagator(op, 1.0, tol=1e-16, max_doublings=3)
    carried = exc.value.last_result
    assert isinstance(carried, zj.PropagatorResult)
    assert carried.est_error > 1e-16


def test_pure_measurement_conserves_transported_populations():
    # Under H = K * H_meas(t) alone, the population of the transported level
    # U0 P_n(0) U0^dagger is constant because U0 intertwines the levels.
    rng = np.random.default_rng(36)
    gen = random_hermitian(rng, 3, scale=0.5)
    base = np.diag([-1.0, 0.0, 1.0]).astype(complex)
    coupling = 6.0
    h_meas = rotation_family(gen, base)
    scaled = zj.TimeDependentOperator(
        evaluator=lambda t: coupling * h_meas(t),
        horizon=h_meas.horizon,
        dim=3,
        derivative_evaluator=lambda t: coupling * h_meas.derivative(t, 0.0),
    )
    frame = zj.track_frame(h_meas, coupling, np.linspace(0.0, 1.0, 129))
    p0 = frame.initial_projectors()[1]
    vec = p0 @ rng.normal(size=3)
    vec = vec / np.linalg.norm(vec)
    rho0 = np.outer(vec, vec.conj())
    for t in (0.5, 1.0):
        u0 = zj.exact_propagator(scaled, t, tol=1e-8).matrix
        rho_t = u0 @ rho0 @ u0.conj().T
        p_t = u0 @ p0 @ u0.conj().T
        pop = float(np.trace(rho_t @ p_t).real)
        assert pop == pytest.approx(1.0, abs=1e-6)


def test_adiabatic_propagator_static_frame_is_pure_phase():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    grid = np.linspace(0.0, 1.0, 5)
    frame = zj.AdiabaticFrame.static(grid, [(1.0, p0), (-1.0, p1)], coupling=3.0)
    u = zj.adiabatic_propagator(frame, 0.5)
    expected = np.diag([np.exp(-1.5j), np.exp(1.5j)])
    assert np.max(np.abs(u - expected)) < 1e-12
    with pytest.raises(zj.ValidationError, match="grid node"):
        zj.adiabatic_propagator(frame, 0.3)


def test_adiabatic_propagator_approaches_exact_with_coupling():
    # The measurement-dominated approximation improves as the coupling grows.
    rng = np.random.default_rng(37)
    gen = random_hermitian(rng, 2, scale=0.4)
    h_meas = rotation_family(gen, zj.SIGMA_Z)
    grid = np.linspace(0.0, 1.0, 257)
    gaps = []
    for coupling in (4.0, 8.0, 16.0):
        frame = zj.track_frame(h_meas, coupling, grid)
        approx = zj.adiabatic_propagator(frame, 1.0)
        scaled = zj.TimeDependentOperator(
            evaluator=lambda t, k=coupling: k * h_meas(t),
            horizon=(0.0, 1.0),
            dim=2,
            derivative_evaluator=lambda t, k=coupling: k * h_meas.derivative(t, 0.0),
        )
        exact = zj.exact_propagator(scaled, 1.0, tol=1e-8).matrix
        gaps.append(float(np.max(np.abs(approx - exact))))
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[0] / 2.0
    assert gaps[-1] < 0.2
