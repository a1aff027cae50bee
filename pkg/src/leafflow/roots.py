"""Real roots of smooth functions of one variable on an interval.

Uniform-grid sign-change bracketing, bisection and one Newton polish step.
Even-multiplicity roots (no sign change) are caught as critical points of the
function where its value vanishes.
"""

from dataclasses import dataclass

import numpy as np

GRID_POINTS = 10001
BISECT_TOL = 1e-12
MULTIPLE_DERIV_TOL = 1e-8


@dataclass(frozen=True)
class Root:
    z: float
    multiple: bool
    near_boundary: bool = False


def _vectorize(fn, z):
    return np.broadcast_to(np.asarray(fn(z), dtype=float), np.shape(z)).copy()


def _bisect(fn, a, b, fa):
    while b - a > BISECT_TOL:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = float(fn(m))
        if fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _polish(fn, dfn, z, a, b):
    """One Newton step, kept only if it stays inside the bracket and helps."""
    fz = float(fn(z))
    dz = float(dfn(z))
    if dz == 0.0 or fz == 0.0:
        return z
    zn = z - fz / dz
    if a <= zn <= b and abs(float(fn(zn))) <= abs(fz):
        return zn
    return z


def find_roots(fn, dfn, a: float, b: float, n: int = GRID_POINTS, value_tol: float | None = None):
    """All roots of ``fn`` in ``[a, b]`` as a sorted list of :class:`Root`.

    ``fn`` and ``dfn`` must accept both floats and numpy arrays.  A root is
    flagged ``multiple`` when ``|dfn| < 1e-8`` there.  ``value_tol`` decides
    when a critical point of ``fn`` counts as a touching (even) root; the
    default scales with the magnitude of ``fn`` on the grid.
    """
    z = np.linspace(a, b, n)
    h = _vectorize(fn, z)
    dh = _vectorize(dfn, z)
    cell = (b - a) / (n - 1)
    if value_tol is None:
        value_tol = 1e-12 * max(1.0, float(np.max(np.abs(h))))

    found: list[float] = []
    for i in np.flatnonzero(h == 0.0):
        found.append(float(z[i]))
    s = np.sign(h)
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        lo, hi = float(z[i]), float(z[i + 1])
        r = _bisect(fn, lo, hi, float(h[i]))
        found.append(_polish(fn, dfn, r, lo, hi))

    # touching roots: critical points of fn where fn itself vanishes
    sd = np.sign(dh)
    crit = [float(z[i]) for i in np.flatnonzero(dh == 0.0)]
    for i in np.flatnonzero(sd[:-1] * sd[1:] < 0):
        lo, hi = float(z[i]), float(z[i + 1])
        crit.append(_bisect(dfn, lo, hi, float(dh[i])))
    for zc in crit:
        if abs(float(fn(zc))) <= value_tol:
            found.append(zc)

    found.sort()
    merged: list[float] = []
    for r in found:
        if merged and abs(r - merged[-1]) <= 2 * cell:
            # same root seen twice (grid hit, bracket, or critical point)
            if abs(float(fn(r))) < abs(float(fn(merged[-1]))):
                merged[-1] = r
            continue
        merged.append(r)

    return [
        Root(
            z=r,
            multiple=abs(float(dfn(r))) < MULTIPLE_DERIV_TOL,
            near_boundary=(r - a) <= cell or (b - r) <= cell,
        )
        for r in merged
    ]
