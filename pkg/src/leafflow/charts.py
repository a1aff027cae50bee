"""Chart-level structures on a fixed leaf S_c.

Three charts cover every regular point of a leaf: ``XZ`` (valid where x != 0),
``YZ`` (y != 0) and ``XY`` (W != 0).  In the XZ chart the induced metric,
symplectic form, double-bracket metric and restricted field have closed forms
that are implemented directly.  The YZ and XY charts are handled through the
embedding Jacobian, which also serves as an independent route for XZ in tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .expr import Expression
from .family import Family, Signature
from .geometry import DEFAULT, AmbientMetric, double_bracket_field
from .roots import find_roots

CHART_MARGIN = 1e-8
EPS_F = 1e-9
LIFT_TOL = 1e-10


class ChartError(ValueError):
    """Coordinates outside the validity domain of a chart."""


class UnsupportedChart(ChartError):
    pass


class RedZoneError(ArithmeticError):
    """The point lies on a red line, where the double-bracket metric is undefined."""

    def __init__(self, f_value: float, kernel: np.ndarray):
        self.f_value = f_value
        self.kernel = kernel
        super().__init__(f"point in the red zone (f = {f_value:.3e}); kernel direction {kernel.tolist()}")


class Chart(enum.Enum):
    XZ = "XZ"
    YZ = "YZ"
    XY = "XY"

    @property
    def indices(self) -> tuple[int, int]:
        """Ambient indices of the two chart coordinates."""
        return {"XZ": (0, 2), "YZ": (1, 2), "XY": (0, 1)}[self.value]


@dataclass(frozen=True, eq=False)
class LeafPoint:
    family: Family
    c: float
    chart: Chart
    coords: tuple[float, float]
    point: np.ndarray

    @property
    def x(self):
        return float(self.point[0])

    @property
    def y(self):
        return float(self.point[1])

    @property
    def z(self):
        return float(self.point[2])

    @property
    def W(self) -> float:
        return self.family.w_value(self.point)

    @property
    def f(self) -> float:
        """f at the point, which equals F_c(z) on the leaf."""
        return self.family.f_value(self.point)


def lift(family: Family, c: float, chart: Chart, coords, z_guess: float | None = None,
         margin: float = CHART_MARGIN) -> LeafPoint:
    """Reconstruct the ambient point of S_c from chart coordinates."""
    a, b = float(coords[0]), float(coords[1])
    if chart is Chart.XZ or chart is Chart.YZ:
        if abs(a) <= margin:
            name = "x" if chart is Chart.XZ else "y"
            raise ChartError(f"{chart.value} chart needs |{name}| > {margin}, got {a!r}")
        z = b
        other = float(family.xy_on_leaf(c, z)) / a
        p = np.array([a, other, z]) if chart is Chart.XZ else np.array([other, a, z])
    else:
        p = _lift_xy(family, c, a, b, z_guess, margin)
    if not np.all(np.isfinite(p)):
        raise ChartError(f"non-finite lift {p.tolist()}")
    res = abs(family.casimir(p) - c)
    if res > LIFT_TOL * max(1.0, abs(c)):
        raise ChartError(f"lifted point misses the leaf by {res:.3e}")
    return LeafPoint(family, float(c), chart, (a, b), p)


def _lift_xy(family, c, x, y, z_guess, margin):
    C = family.C
    z_lo, z_hi = family.z_interval
    def dCdz(t):
        if isinstance(t, np.ndarray):
            return C.dual(np.full_like(t, x), np.full_like(t, y), t).d[2]
        return C.dual(x, y, t).d[2]

    roots = find_roots(lambda t: C(x, y, t) - c, dCdz, z_lo, z_hi)
    simple = [r.z for r in roots if not r.multiple]
    if not simple:
        raise ChartError(f"no point of the leaf above (x, y) = ({x!r}, {y!r})")
    if len(simple) > 1 and z_guess is None:
        raise UnsupportedChart("XY chart is ambiguous here (several z); pass z_guess")
    z = simple[0] if z_guess is None else min(simple, key=lambda t: abs(t - z_guess))
    p = np.array([x, y, z])
    if abs(family.w_value(p)) <= margin:
        raise ChartError(f"XY chart needs |W| > {margin}")
    return p


# ---------------------------------------------------------------------------
# embedding data shared by all charts


def embedding_jacobian(lp: LeafPoint) -> np.ndarray:
    """3x2 matrix d(x, y, z)/d(chart coordinates), from dC = 0 on the leaf.

    On the leaf ``y dx + x dy + W dz = 0``.
    """
    x, y, _ = lp.point
    W = lp.W
    if lp.chart is Chart.XZ:
        return np.array([[1.0, 0.0], [-y / x, -W / x], [0.0, 1.0]])
    if lp.chart is Chart.YZ:
        return np.array([[-x / y, -W / y], [1.0, 0.0], [0.0, 1.0]])
    return np.array([[1.0, 0.0], [0.0, 1.0], [-y / W, -x / W]])


def _bracket_of_coords(lp: LeafPoint) -> float:
    x, y, _ = lp.point
    return {"XZ": -x, "YZ": y, "XY": lp.W}[lp.chart.value]


def induced_metric(lp: LeafPoint, g: AmbientMetric = DEFAULT) -> np.ndarray:
    if lp.chart is Chart.XZ and g.is_default:
        x, y, _ = lp.point
        W = lp.W
        return np.array([[-2.0 * y / x, -W / x], [-W / x, 1.0]])
    J = embedding_jacobian(lp)
    return J.T @ g.matrix @ J


def symplectic_form(lp: LeafPoint) -> np.ndarray:
    """Leaf symplectic form ``-du ^ dv / {u, v}`` (``dx ^ dz / x`` in XZ)."""
    w = -1.0 / _bracket_of_coords(lp)
    return np.array([[0.0, w], [-w, 0.0]])


def _kernel(lp: LeafPoint) -> np.ndarray:
    """Kernel direction of the induced metric at a red point, in chart components."""
    x, y, _ = lp.point
    W = lp.W
    v = np.array([x, y, W])
    i, j = lp.chart.indices
    return np.array([v[i], v[j]])


def _check_green(lp: LeafPoint, eps_f: float):
    f = lp.f
    if abs(f) <= eps_f:
        raise RedZoneError(f, _kernel(lp))
    return f


def tau_db(lp: LeafPoint, eps_f: float = EPS_F, g: AmbientMetric = DEFAULT) -> np.ndarray:
    """Double-bracket metric on the leaf; undefined on red lines."""
    f = _check_green(lp, eps_f)
    if lp.chart is Chart.XZ and g.is_default:
        x, y, _ = lp.point
        W = lp.W
        return np.array([[2.0 * y, W], [W, -x]]) / (x * f)
    return tau_db_from_definition(lp, g)


def tau_db_from_definition(lp: LeafPoint, g: AmbientMetric = DEFAULT) -> np.ndarray:
    """``tau(X, Y) = g_ind^{-1}(i_X w, i_Y w)`` assembled from its definition."""
    w = symplectic_form(lp)
    ginv = np.linalg.inv(induced_metric(lp, g))
    return w @ ginv @ w.T


def restrict_db_field(G: Expression, lp: LeafPoint, g: AmbientMetric = DEFAULT) -> np.ndarray:
    """Chart components of the double-bracket field of G, tangent to the leaf."""
    if lp.chart is Chart.XZ and g.is_default:
        x, y, _ = lp.point
        W = lp.W
        gx, gy, gz = G.grad(lp.point)
        return np.array(
            [
                -x * x * gx + (x * y + W * W) * gy - x * W * gz,
                -x * W * gx - y * W * gy + 2.0 * x * y * gz,
            ]
        )
    v = double_bracket_field(lp.family.poisson, g, G, lp.point)
    i, j = lp.chart.indices
    return np.array([v[i], v[j]])


def restricted_differential(G: Expression, lp: LeafPoint) -> np.ndarray:
    """Chart components of d(G|_S), by the chain rule through the leaf constraint."""
    return embedding_jacobian(lp).T @ G.grad(lp.point)


def gradient_identity_residual(G: Expression, lp: LeafPoint, eps_f: float = EPS_F,
                               g: AmbientMetric = DEFAULT) -> float:
    """Sup norm of ``tau(dbf|_S, .) + d(G|_S)``; zero when the field is minus the tau-gradient."""
    tau = tau_db(lp, eps_f, g)
    v = restrict_db_field(G, lp, g)
    return float(np.max(np.abs(tau @ v + restricted_differential(G, lp))))


def signature_of(lp: LeafPoint, eps_f: float = EPS_F, g: AmbientMetric = DEFAULT) -> Signature:
    if abs(lp.f) <= eps_f:
        return Signature.DEGENERATE
    ev = np.linalg.eigvalsh(induced_metric(lp, g))
    if ev[0] > 0 and ev[1] > 0:
        return Signature.EUCLIDEAN
    if ev[0] < 0 < ev[1]:
        return Signature.LORENTZIAN
    return Signature.DEGENERATE


def preferred_chart(p) -> Chart:
    """XZ unless |x| < 0.1 |y|, then YZ."""
    return Chart.YZ if abs(p[0]) < 0.1 * abs(p[1]) else Chart.XZ


def leaf_point_at(family: Family, p, chart: Chart | None = None) -> LeafPoint:
    """Chart representation of an ambient point, labelled by its own Casimir value."""
    p = np.asarray(p, dtype=float)
    chart = chart or preferred_chart(p)
    c = family.casimir(p)
    i, j = chart.indices
    z_guess = float(p[2]) if chart is Chart.XY else None
    return lift(family, c, chart, (p[i], p[j]), z_guess=z_guess)


def chart_margin_ok(lp: LeafPoint, margin: float = CHART_MARGIN) -> bool:
    x, y, _ = lp.point
    val = {"XZ": x, "YZ": y, "XY": lp.W}[lp.chart.value]
    return abs(val) > margin and math.isfinite(val)
