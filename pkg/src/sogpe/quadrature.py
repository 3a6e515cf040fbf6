"""Symmetric quadrature rules on the reference triangle (0,0), (1,0), (0,1).

Weights are normalized to sum to one; multiply by the element area.
"""

import numpy as np


def _orbits(centroid=None, three=(), six=()):
    pts, wts = [], []
    if centroid is not None:
        pts.append((1 / 3, 1 / 3, 1 / 3))
        wts.append(centroid)
    for a, w in three:
        b = 1.0 - 2.0 * a
        for p in ((a, a, b), (a, b, a), (b, a, a)):
            pts.append(p)
            wts.append(w)
    for a, b, w in six:
        c = 1.0 - a - b
        for p in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
            pts.append(p)
            wts.append(w)
    bary = np.array(pts)
    return bary[:, 1:].copy(), np.array(wts)


# Dunavant rules; degree 4 polished against the monomial moment equations.
_RULES = {
    4: dict(three=((0.44594849091596483, 0.22338158967801136),
                   (0.09157621350977076, 0.10995174365532195))),
    8: dict(centroid=0.144315607677787,
            three=((0.459292588292723, 0.095091634267285),
                   (0.170569307751760, 0.103217370534718),
                   (0.050547228317031, 0.032458497623198)),
            six=((0.008394777409958, 0.263112829634638, 0.027230314174435),)),
}


def triangle_rule(degree):
    """Return ``(points, weights)`` exact for polynomials up to ``degree``.

    ``points`` has shape ``(nq, 2)`` in reference coordinates, ``weights``
    sums to one.
    """
    for d in sorted(_RULES):
        if d >= degree:
            return _orbits(**_RULES[d])
    raise ValueError(f"no triangle rule of degree {degree} available")
