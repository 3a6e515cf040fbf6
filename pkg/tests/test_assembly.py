import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sogpe.assembly import PhysicsParams, discretization, j_matrix, space_operators
from sogpe.errors import ConfigurationError, SpaceMismatch
from sogpe.state import SpinorField, energy, normalize, rotate, times_i

from conftest import DECOUPLED, K0_10, MILD, random_state, space

ALL_PARAMS = [K0_10, MILD, DECOUPLED, PhysicsParams(k0=3.0, beta11=2.0)]


# -- exact oracle --------------------------------------------------------------

def _sympy_energy(params):
    sym = pytest.importorskip("sympy")
    x, y = sym.symbols("x y", real=True)
    R = sym.Rational

    def integral(e):
        return sym.integrate(sym.integrate(sym.expand(e), (x, -1, 1)), (y, -1, 1))

    b = (x ** 2 - 1) * (y ** 2 - 1)
    f1, f2 = b * (1 + x / 3), b * (1 - y / 2)

    # |grad(f exp(-i r^2/2))|^2 = |grad f|^2 + r^2 f^2
    def grad2(f):
        return sym.diff(f, x) ** 2 + sym.diff(f, y) ** 2 + (x ** 2 + y ** 2) * f ** 2

    m = integral(f1 ** 2 + f2 ** 2)
    kinetic = integral(grad2(f1) + grad2(f2)) / m
    # Im(conj(u) d_x u) = -x f^2 for the chirp phase
    drift = integral(x * (f1 ** 2 - f2 ** 2)) / m
    rabi = integral(f1 * f2) / m
    quartic = (R(params.beta11) / 4 * integral(f1 ** 4) + R(params.beta22) / 4 * integral(f2 ** 4)
               + R(params.beta12) / 2 * integral(f1 ** 2 * f2 ** 2)) / m ** 2
    # the potential enters as 1/2 int V |u|^2
    shift = R(params.potential_shift) / 2
    e = kinetic / 4 + shift + R(params.k0) / 2 * drift + R(params.omega) / 2 * rabi + quartic
    return float(e)


def _discrete_oracle_state(sp):
    def chirp(x, y):
        return np.exp(-0.5j * (x ** 2 + y ** 2))

    p1 = sp.interpolate(lambda x, y: (x ** 2 - 1) * (y ** 2 - 1) * (1 + x / 3) * chirp(x, y))
    p2 = sp.interpolate(lambda x, y: (x ** 2 - 1) * (y ** 2 - 1) * (1 - y / 2) * chirp(x, y))
    return normalize(SpinorField.from_complex(sp, p1, p2))


def test_energy_converges_to_exact_value():
    exact = _sympy_energy(K0_10)
    assert exact == pytest.approx(77.48599556451511, rel=1e-14)
    errs = [abs(energy(_discrete_oracle_state(space(n)), K0_10) - exact) for n in (8, 16, 32)]
    assert errs[-1] < 5e-6 * exact
    # fourth order for P2 energies
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5)


# -- constant operators ----------------------------------------------------------

@pytest.mark.parametrize("order", [1, 2])
def test_mass_and_stiffness_sanity(order):
    sp = space(5, order)
    ops = space_operators(sp)
    one = np.ones(sp.n_nodes)
    assert one @ ops.M_full @ one == pytest.approx(sp.domain.area, rel=1e-14)
    assert np.abs(ops.S_full @ one).max() < 1e-12
    x = sp.nodes[:, 0]
    # int |grad x|^2 = area
    assert x @ ops.S_full @ x == pytest.approx(sp.domain.area, rel=1e-13)


@pytest.mark.parametrize("n_sub", [4, 8])
@pytest.mark.parametrize("order", [1, 2])
def test_derivative_matrix_antisymmetric(n_sub, order):
    L = discretization(space(n_sub, order), K0_10).constants.L
    assert abs(L + L.T).max() <= 1e-14


def test_constant_potential_is_scaled_mass():
    p = PhysicsParams(k0=2.0, omega=1.0)
    d = discretization(space(3), p)
    assert abs(d.constants.P1 - p.potential_shift * d.constants.M).max() < 1e-14


def test_extra_potential_pair():
    p = PhysicsParams(extra_potential=(lambda x, y: x * 0 + 1.0, lambda x, y: x * 0 + 3.0),
                      potential_shift_enabled=False)
    d = discretization(space(3), p)
    M = d.constants.M
    assert abs(d.constants.P1 - M).max() < 1e-14
    assert abs(d.constants.P2 - 3 * M).max() < 1e-14


@pytest.mark.parametrize("kw", [dict(beta11=-1.0), dict(k0=float("nan"))])
def test_invalid_params(kw):
    with pytest.raises(ConfigurationError):
        PhysicsParams(**kw)


# -- A(u) ----------------------------------------------------------------------

@pytest.mark.parametrize("params", ALL_PARAMS)
@pytest.mark.parametrize("n_sub", [4, 8])
def test_A_symmetric(params, n_sub, rng):
    d = discretization(space(n_sub), params)
    A = d.assemble_A(random_state(d.space, rng).coeffs)
    assert abs(A - A.T).max() <= 1e-13 * abs(A).max()


@given(st.floats(0.05, 20.0), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_A_scaling_invariance(alpha, seed):
    rng = np.random.default_rng(seed)
    d = discretization(space(4), K0_10)
    c = rng.standard_normal(4 * d.N)
    A1, A2 = d.assemble_A(c), d.assemble_A(alpha * c)
    assert abs(A1 - A2).max() <= 1e-12 * abs(A1).max()


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_coercivity_dense_oracle(params, rng):
    # smallest generalized eigenvalue of (A(u), H1) over the whole space
    import scipy.linalg as sla
    d = discretization(space(4), params)
    K = d.H1_matrix.toarray()
    for _ in range(5):
        A = d.assemble_A(random_state(d.space, rng).coeffs).toarray()
        assert sla.eigh(A, K, eigvals_only=True)[0] >= 0.25


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_coercivity_random_vectors(params, rng):
    d = discretization(space(8), params)
    K = d.H1_matrix
    for _ in range(200):
        A = d.assemble_A(random_state(d.space, rng).coeffs) if _ % 20 == 0 else A
        v = rng.standard_normal(4 * d.N)
        assert v @ (A @ v) >= 0.25 * (v @ (K @ v))


def test_zero_state_rejected():
    d = discretization(space(3), K0_10)
    with pytest.raises(ValueError):
        d.assemble_A(np.zeros(4 * d.N))


def test_wrong_space_rejected(rng):
    d = discretization(space(3), K0_10)
    u = random_state(space(4), rng)
    with pytest.raises(SpaceMismatch):
        d.assemble_A(u)
    with pytest.raises(SpaceMismatch):
        d.assemble_A(np.ones(7))


# -- energy derivatives ----------------------------------------------------------

@pytest.mark.parametrize("params", [K0_10, MILD])
def test_gradient_finite_differences(params, rng):
    d = discretization(space(4), params)
    u = random_state(d.space, rng).coeffs
    M = d.M_padded
    v = rng.standard_normal(len(u))
    v -= (v @ (M @ u)) * u
    g = v @ (d.assemble_A(u) @ u)
    errs = []
    for t in (1e-2, 1e-3, 1e-4):
        fd = (d.energy(u + t * v) - d.energy(u - t * v)) / (2 * t)
        errs.append(abs(fd - g))
    assert errs[-1] < 1e-7 * max(1.0, abs(g))
    # second order until rounding takes over
    assert errs[0] / errs[1] > 50


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_hessian_finite_differences(params, rng):
    d = discretization(space(4), params)
    u = random_state(d.space, rng).coeffs
    H = d.assemble_hessian(u)
    assert abs(H - H.T).max() <= 1e-13 * abs(H).max()
    for _ in range(3):
        v = rng.standard_normal(len(u))
        t = 1e-3
        fd = (d.energy(u + t * v) + d.energy(u - t * v) - 2 * d.energy(u)) / t ** 2
        assert fd == pytest.approx(v @ (H @ v), rel=1e-5)


@pytest.mark.parametrize("params", ALL_PARAMS)
def test_energy_nonnegative(params, rng):
    sp = space(4)
    for _ in range(100):
        assert energy(random_state(sp, rng), params) >= -1e-10


@given(st.floats(-10.0, 10.0), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_energy_phase_invariance(omega, seed):
    rng = np.random.default_rng(seed)
    sp = space(4)
    u = random_state(sp, rng)
    e = energy(u, K0_10)
    assert abs(energy(rotate(u.coeffs, omega), K0_10, sp) - e) <= 1e-11 * max(1.0, e)


# -- J(u) --------------------------------------------------------------------------

@pytest.fixture(params=[K0_10, MILD], ids=["k0_10", "mild"])
def jsetup(request, rng):
    params = request.param
    d = discretization(space(4), params)
    u = random_state(d.space, rng).coeffs
    return d, params, u, j_matrix(d.space, params, u)


def test_J_reproduces_A_on_u(jsetup):
    d, _, u, J = jsetup
    Au = d.assemble_A(u) @ u
    assert np.abs(J @ u - Au).max() <= 1e-11 * np.abs(Au).max()


def test_J_matches_hessian_on_tangent_space(jsetup, rng):
    d, _, u, J = jsetup
    H = d.assemble_hessian(u).toarray()
    M = d.M_padded
    for _ in range(50):
        v = rng.standard_normal(len(u))
        v -= (v @ (M @ u)) * u
        assert v @ J @ v == pytest.approx(v @ H @ v, rel=1e-10)


def test_gauge_direction_identity(jsetup, rng):
    _, _, u, J = jsetup
    w = rng.standard_normal(len(u))
    lhs = w @ J @ times_i(u)
    rhs = -times_i(w) @ J @ u
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


def test_phase_identity(jsetup, rng):
    d, params, u, J = jsetup
    om = np.pi / 3
    J_rot = j_matrix(d.space, params, rotate(u, om))
    v, w = rng.standard_normal(len(u)), rng.standard_normal(len(u))
    lhs = w @ J_rot @ rotate(v, om)
    rhs = rotate(w, -om) @ J @ v
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


def test_J_parts_shift(jsetup):
    d, params, u, J = jsetup
    C, f = d.assemble_J_parts(u, 3.5)
    dense = C.toarray() + f.U @ f.V
    assert np.allclose(dense, J - 3.5 * d.M_padded.toarray(), atol=1e-12)
    x = np.arange(len(u), dtype=float)
    assert np.allclose(f.apply(x), f.U @ (f.V @ x))


def test_linear_case_has_no_rank_two_part(rng):
    d = discretization(space(4), DECOUPLED)
    u = random_state(d.space, rng).coeffs
    _, f = d.assemble_J_parts(u, 0.0)
    assert not np.any(f.U)
    assert abs(d.assemble_A(u) - d.A_linear).max() == 0
