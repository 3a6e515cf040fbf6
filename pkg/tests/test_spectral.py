import numpy as np
import pytest
import scipy.linalg as sla

from sogpe.assembly import discretization, j_matrix
from sogpe.errors import SogpeError
from sogpe.spectral import j_gap, projected_hessian_eigs, spectral_report
from sogpe.state import initial_state, times_i

from conftest import DECOUPLED, K0_10, MILD, ground_state, space


def _dense_projected_hessian(u, params, k):
    d = discretization(u.space, params)
    H = d.assemble_hessian(u.coeffs).toarray()
    M = d.M_padded.toarray()
    Mu = M @ u.coeffs
    # orthonormal basis of {v : v^T M u = 0}
    Q = sla.null_space(Mu[None, :])
    return sla.eigh(Q.T @ H @ Q, Q.T @ M @ Q, eigvals_only=True)[:k]


def _dense_j_spectrum(u, params):
    d = discretization(u.space, params)
    J = j_matrix(u.space, params, u.coeffs)
    M = d.M_padded.toarray()
    vals, vecs = sla.eig(J, M)
    return vals, vecs, M


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_hessian_eigs_match_dense_oracle(params):
    u = ground_state(4, params).state
    vals = projected_hessian_eigs(u, params, k=3)
    assert np.allclose(vals, _dense_projected_hessian(u, params, 3), rtol=1e-9)


def test_hessian_eigs_decoupled_dense_oracle():
    sp = space(8)
    d = discretization(sp, DECOUPLED)
    lam_all, vecs = sla.eigh(d.A_linear.toarray(), d.M_padded.toarray())
    from sogpe.state import SpinorField
    u = SpinorField(sp, vecs[:, 0] / np.sqrt(vecs[:, 0] @ d.M_padded @ vecs[:, 0]))
    vals = projected_hessian_eigs(u, DECOUPLED, k=3)
    assert np.allclose(vals, _dense_projected_hessian(u, DECOUPLED, 3), rtol=1e-9)


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_smallest_hessian_eigenvalue_is_lambda(params):
    ep = ground_state(4, params)
    vals = projected_hessian_eigs(ep.state, params, k=2)
    assert vals[0] == pytest.approx(ep.eigenvalue, rel=1e-6)
    assert vals[1] > vals[0] * (1 + 1e-8)


def test_unconverged_state_rejected():
    u = initial_state(space(4))
    with pytest.raises(SogpeError):
        projected_hessian_eigs(u, K0_10)
    with pytest.raises(SogpeError):
        j_gap(u, K0_10, 1.0)


@pytest.mark.parametrize("params", [K0_10, MILD])
def test_j_gap_matches_dense_oracle(params):
    ep = ground_state(4, params)
    u, lam = ep.state, ep.eigenvalue
    sigma = lam - 0.2
    mu0, rate, lam_out = j_gap(u, params, sigma)
    vals, vecs, M = _dense_j_spectrum(u, params)
    # drop the two lambda modes (u and iu)
    order = np.argsort(np.abs(vals - lam))
    rest = vals[order[2:]]
    assert np.all(np.abs(vals[order[:2]] - lam) < 1e-8 * lam)
    nearest = rest[np.argmin(np.abs(rest - sigma))]
    assert mu0 == pytest.approx(nearest.real, rel=1e-8)
    assert lam_out == pytest.approx(lam, rel=1e-12)
    assert rate == pytest.approx(abs(lam - sigma) / abs(nearest - sigma), rel=1e-7)


def test_lambda_eigenspace_is_two_dimensional():
    ep = ground_state(4, K0_10)
    u, lam = ep.state.coeffs, ep.eigenvalue
    d = discretization(ep.state.space, K0_10)
    J = j_matrix(ep.state.space, K0_10, u)
    M = d.M_padded
    for v in (u, times_i(u)):
        assert np.linalg.norm(J @ v - lam * (M @ v)) <= 1e-9 * max(1.0, lam)


def test_deflated_eigenvector_orthogonal():
    ep = ground_state(4, K0_10)
    u = ep.state.coeffs
    sigma = ep.eigenvalue - 0.2
    mu0, _, _ = j_gap(ep.state, K0_10, sigma)
    d = discretization(ep.state.space, K0_10)
    M = d.M_padded.toarray()
    J = j_matrix(ep.state.space, K0_10, u)
    R = np.column_stack([u, times_i(u)])
    P = np.eye(len(u)) - R @ np.linalg.solve(R.T @ M @ R, R.T @ M)
    T = P @ np.linalg.solve(J - sigma * M, M @ P)
    theta, W = np.linalg.eig(T)
    w = W[:, np.argmax(np.abs(theta))].real
    w /= np.sqrt(w @ M @ w)
    assert abs(mu0 - ep.eigenvalue) > 1e-6
    assert sigma + 1 / np.max(np.abs(theta)) == pytest.approx(mu0, rel=1e-8)
    assert abs(w @ M @ u) < 1e-8 and abs(w @ M @ times_i(u)) < 1e-8
    # w solves the eigenproblem modulo span{u, iu}
    r = P @ (np.linalg.solve(M, J @ w) - mu0 * w)
    assert np.linalg.norm(r) < 1e-7 * mu0


def test_rate_tends_to_zero_as_shift_approaches_lambda():
    ep = ground_state(4, K0_10)
    rates = [j_gap(ep.state, K0_10, ep.eigenvalue - g)[1] for g in (0.3, 0.1, 0.01)]
    assert rates[0] > rates[1] > rates[2]
    assert rates[2] < 0.05


def test_report():
    ep = ground_state(4, K0_10)
    rep = spectral_report(ep.state, K0_10, sigma=ep.eigenvalue - 0.1)
    assert rep.notes == ()
    d = rep.to_dict()
    assert set(d) == {"lambda", "hessian_smallest", "sigma", "mu0", "predicted_rate", "notes"}
    assert 0 < d["predicted_rate"] < 1
    assert np.isnan(spectral_report(ep.state, K0_10).predicted_rate)
