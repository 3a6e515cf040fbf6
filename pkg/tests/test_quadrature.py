import math

import numpy as np
import pytest

from sogpe.quadrature import triangle_rule


def exact_monomial(p, q):
    # int over the reference triangle of x^p y^q, normalized by its area 1/2
    return 2.0 * math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6, 7, 8])
def test_rule_integrates_monomials_exactly(degree):
    pts, w = triangle_rule(degree)
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            approx = float(np.sum(w * pts[:, 0] ** p * pts[:, 1] ** q))
            assert approx == pytest.approx(exact_monomial(p, q), abs=1e-14)


@pytest.mark.parametrize("degree", [4, 8])
def test_points_inside_and_weights_positive(degree):
    pts, w = triangle_rule(degree)
    assert np.all(w > 0)
    assert np.all(pts >= 0) and np.all(pts.sum(axis=1) <= 1)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)


def test_unavailable_degree():
    with pytest.raises(ValueError):
        triangle_rule(9)
