import numpy as np
import pytest
import scipy.linalg as sla

from sogpe.a_method import (AStepConfig, StoppingRule, _golden, a_step_damped, a_step_plain,
                            run_a_method)
from sogpe.assembly import discretization
from sogpe.errors import ConfigurationError
from sogpe.state import SpinorField, energy, initial_state, mass, quotient_distance, rotate

from conftest import DECOUPLED, K0_10, MILD, ground_state, random_state, space


def _dense_linear_ground_state(sp):
    d = discretization(sp, DECOUPLED)
    vals, vecs = sla.eigh(d.A_linear.toarray(), d.M_padded.toarray())
    v = vecs[:, 0]
    return SpinorField(sp, v / np.sqrt(v @ (d.M_padded @ v))), vals[0]


def test_plain_step_fixed_point_linear():
    sp = space(4)
    u, _ = _dense_linear_ground_state(sp)
    assert quotient_distance(u, a_step_plain(u, DECOUPLED)) <= 1e-9


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_plain_step_fixed_point_nonlinear(params):
    u = ground_state(4, params).state
    out = a_step_plain(u, params)
    assert quotient_distance(u, out) <= 1e-9
    assert mass(out) == pytest.approx(1.0, abs=1e-12)


def test_plain_step_decreases_energy_from_initial_state():
    sp = space(8)
    u = initial_state(sp)
    assert energy(a_step_plain(u, K0_10), K0_10) < energy(u, K0_10)


def test_damped_step_at_eigenfunction_is_identity():
    u = ground_state(4, K0_10).state
    res = a_step_damped(u, K0_10, AStepConfig(tau_strategy="fixed", tau=0.7))
    assert np.abs(res.state.coeffs - u.coeffs).max() < 1e-9


def test_direction_is_tangent(rng):
    from sogpe.a_method import _direction
    for params in (K0_10, MILD):
        u = random_state(space(4), rng)
        d, direction, gamma = _direction(u, params)
        assert gamma > 0
        assert abs(direction @ (d.M_padded @ u.coeffs)) <= 1e-10


def test_fixed_unit_step_equals_plain_step(rng):
    u = random_state(space(4), rng)
    damped = a_step_damped(u, K0_10, AStepConfig(tau_strategy="fixed", tau=1.0)).state
    plain = a_step_plain(u, K0_10)
    sign = np.sign(damped.coeffs @ plain.coeffs)
    assert np.abs(damped.coeffs - sign * plain.coeffs).max() <= 1e-12


def test_line_search_matches_grid_oracle():
    sp = space(8)
    u = initial_state(sp)
    res = a_step_damped(u, K0_10, AStepConfig())
    from sogpe.a_method import _direction
    d, direction, _ = _direction(u, K0_10)
    taus = np.linspace(0.01, 1.99, 1000)

    def e(t):
        v = u.coeffs + t * direction
        return d.energy(v / np.sqrt(v @ (d.M_padded @ v)))

    grid = np.array([e(t) for t in taus])
    t_best = taus[np.argmin(grid)]
    assert abs(res.tau - t_best) <= 1e-3 + (taus[1] - taus[0])
    assert res.energy == pytest.approx(e(res.tau), rel=1e-14)


def test_golden_section_on_parabola():
    x, fx = _golden(lambda t: (t - 0.37) ** 2, 0.0, 1.0, 40)
    assert x == pytest.approx(0.37, abs=1e-7)
    x, _ = _golden(lambda t: (t - 0.37) ** 2, 0.0, 1.0, 3, warm=0.37)
    assert x == 0.37


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_run_monotone_and_normalized(params):
    sp = space(4)
    states = []
    u, hist, ok = run_a_method(initial_state(sp), params, AStepConfig(),
                               StoppingRule(energy_diff_tol=1e-10, max_iters=400),
                               callback=lambda rec, v: states.append(v))
    assert ok
    e = np.array([r.energy for r in hist])
    assert np.all(np.diff(e) <= 1e-12)
    assert all(abs(mass(v) - 1) <= 1e-12 for v in states)
    assert hist[0].iter == 0 and hist[-1].iter == len(hist) - 1
    assert all(0.01 <= r.tau <= 1.99 for r in hist[1:])


def test_decoupled_converges_to_dense_eigenvalue():
    sp = space(4)
    _, lam = _dense_linear_ground_state(sp)
    u, hist, ok = run_a_method(initial_state(sp), DECOUPLED, AStepConfig(),
                               StoppingRule(energy_diff_tol=1e-14, max_iters=500))
    assert ok
    assert hist[-1].lam == pytest.approx(lam, rel=1e-9)
    # lowest Dirichlet eigenvalue of -Laplace/2 on the square is pi^2/4
    assert lam == pytest.approx(np.pi ** 2 / 4, rel=1e-2)


def test_iteration_cap_returns_unconverged(caplog):
    sp = space(4)
    u, hist, ok = run_a_method(initial_state(sp), K0_10, AStepConfig(),
                               StoppingRule(energy_diff_tol=0.0, max_iters=3))
    assert not ok and len(hist) == 4
    assert "iteration cap" in caplog.text


def test_stopping_rule_reference():
    stop = StoppingRule(energy_diff_tol=0.0, reference_energy=1.0, reference_tol=1e-3)
    assert stop.reached(5.0, 1.0005)
    assert not stop.reached(5.0, 1.01)


def test_phase_equivariance_of_damped_step(rng):
    u = random_state(space(4), rng)
    cfg = AStepConfig(tau_strategy="fixed", tau=0.8)
    a = a_step_damped(u, K0_10, cfg).state
    b = a_step_damped(SpinorField(u.space, rotate(u.coeffs, 0.9)), K0_10, cfg).state
    assert quotient_distance(a, b) <= 1e-10


@pytest.mark.parametrize("kw", [dict(tau_bounds=(0.0, 1.0)), dict(tau_bounds=(0.5, 2.5)),
                                dict(tau_strategy="armijo"), dict(tau_strategy="fixed", tau=2.0),
                                dict(line_search_evals=2)])
def test_invalid_step_config(kw):
    with pytest.raises(ConfigurationError):
        AStepConfig(**kw)
