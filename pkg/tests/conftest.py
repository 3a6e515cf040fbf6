import os

import numpy as np
import pytest

from sogpe.assembly import PhysicsParams
from sogpe.mesh import RectDomain, build_space
from sogpe.state import SpinorField, normalize

K0_10 = PhysicsParams(k0=10.0, omega=50.0, beta11=10.0, beta12=9.0, beta22=9.0)
MILD = PhysicsParams(delta=0.7, omega=3.0, k0=1.5, beta11=10.0, beta12=9.0, beta22=9.0)
DECOUPLED = PhysicsParams(potential_shift_enabled=False)

EXTENDED = os.environ.get("SOGPE_EXTENDED", "") not in ("", "0")


def pytest_collection_modifyitems(config, items):
    if EXTENDED:
        return
    skip = pytest.mark.skip(reason="set SOGPE_EXTENDED=1 to run full-mesh reproductions")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


def space(n_sub, order=2):
    return build_space(RectDomain(n_sub=n_sub), order)


def random_state(sp, rng):
    return normalize(SpinorField(sp, rng.standard_normal(4 * sp.N)))


def random_vector(sp, rng):
    return rng.standard_normal(4 * sp.N)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_GROUND = {}


def ground_state(n_sub, params, order=2):
    """Converged ground state (A-method then adaptive J) cached per session."""
    from sogpe.a_method import AStepConfig, StoppingRule, run_a_method
    from sogpe.j_method import ShiftPolicy, run_j_method
    from sogpe.state import initial_state

    key = (n_sub, order, params)
    if key not in _GROUND:
        sp = space(n_sub, order)
        u, _, _ = run_a_method(initial_state(sp), params, AStepConfig(),
                               StoppingRule(energy_diff_tol=1e-6, max_iters=2000))
        ep, _, _ = run_j_method(u, params, ShiftPolicy.adaptive(None),
                                StoppingRule(energy_diff_tol=0.0, max_iters=30), residual_tol=1e-11)
        _GROUND[key] = ep
    return _GROUND[key]


# acceptance criterion -> (status, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {status} - {detail}")
