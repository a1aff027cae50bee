"""Seeded identity suites over random points of [-3, 3]^3.

Every suite reports its worst residual together with the point that produced
it.  Residuals of ambient tensor identities are divided by ``max(1, |Pi|_F^2)``
because the entries of [M] are quadratic in those of [Pi]; chart identities
are divided by ``max(1, |reference|)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .charts import (
    Chart,
    ChartError,
    induced_metric,
    lift,
    preferred_chart,
    gradient_identity_residual,
    tau_db_from_definition,
)
from .expr import Expression, X, Y, Z, as_expression
from .family import Family
from .geometry import (
    DEFAULT,
    closed_form_residual,
    double_bracket_field,
    poisson_matrix,
    verify_chain_identity,
)
from .sl2 import lie_poisson_bracket, sl2_oracle_compare

BOX = 3.0
THRESHOLDS = {
    "chain_identity": 1e-12,
    "closed_form": 1e-12,
    "casimir": 1e-10,
    "tangency": 1e-10,
    "det_relation": 1e-8,
    "tau_relation": 1e-8,
    "gradient_identity": 1e-8,
    "sl2_identification": 1e-12,
    "sl2_oracle": 1e-10,
}
# points closer than this to f = 0 or to the chart breakdown are not green
GREEN_F = 1e-3
GREEN_CHART = 1e-3
GRADIENT_TEST_FUNCTIONS = ("x", "y", "z", "x + 2*y - z", "x*y")


@dataclass
class SuiteResult:
    name: str
    threshold: float
    n: int = 0
    max_residual: float = 0.0
    worst_point: list[float] | None = None

    @property
    def passed(self) -> bool:
        return bool(self.n > 0 and self.max_residual < self.threshold)

    def add(self, residual: float, p) -> None:
        self.n += 1
        r = residual if math.isfinite(residual) else math.inf
        if self.worst_point is None or r > self.max_residual:
            self.max_residual = r
            self.worst_point = [float(v) for v in p]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "threshold": self.threshold,
            "n": self.n,
            "max_residual": self.max_residual,
            "worst_point": self.worst_point,
            "passed": self.passed,
        }


@dataclass
class FamilyVerification:
    family: str
    suites: list[SuiteResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def suite(self, name: str) -> SuiteResult:
        for s in self.suites:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        # wall time is left out so repeated runs write identical files
        return {"family": self.family, "passed": self.passed, "suites": [s.to_dict() for s in self.suites]}


def sample_points(n: int, seed: int, box: float = BOX) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-box, box, size=(n, 3))


def _tensor_scale(family: Family, p) -> float:
    P = poisson_matrix(family.poisson, p)
    return max(1.0, float(np.sum(P * P)))


def _green_leaf_point(family: Family, p):
    """Chart representation of p in its preferred chart, or None off the green part."""
    if abs(family.f_value(p)) <= GREEN_F:
        return None
    chart = preferred_chart(p)
    i, j = chart.indices
    if abs(p[i]) <= GREEN_CHART:
        return None
    try:
        return lift(family, family.casimir(p), chart, (p[i], p[j]))
    except ChartError:
        return None


def _coordinate_bracket(lp) -> float:
    x, y, _ = lp.point
    return {Chart.XZ: -x, Chart.YZ: y, Chart.XY: lp.W}[lp.chart]


def run_suites(family: Family, n_points: int, seed: int = 0) -> FamilyVerification:
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    t0 = time.perf_counter()
    pts = sample_points(n_points, seed)
    rng = np.random.default_rng(seed + 1)
    S = {name: SuiteResult(name, thr) for name, thr in THRESHOLDS.items()}
    test_G = [as_expression(s) for s in GRADIENT_TEST_FUNCTIONS]
    pi = family.poisson

    for k, p in enumerate(pts):
        S["chain_identity"].add(verify_chain_identity(pi, DEFAULT, p), p)
        S["closed_form"].add(closed_form_residual(pi, p), p)

        scale = _tensor_scale(family, p)
        P = poisson_matrix(pi, p)
        dC = family.C.grad(p)
        S["casimir"].add(float(np.max(np.abs(P.T @ dC))) / (math.sqrt(scale) * max(1.0, np.linalg.norm(dC))), p)

        G = test_G[k % len(test_G)]
        v = double_bracket_field(pi, DEFAULT, G, p)
        norm = max(1.0, float(np.linalg.norm(dC) * np.linalg.norm(G.grad(p))) * scale)
        S["tangency"].add(abs(float(dC @ v)) / norm, p)

        lp = _green_leaf_point(family, p)
        if lp is None:
            continue
        g_ind = induced_metric(lp)
        b = _coordinate_bracket(lp)
        det_ref = -lp.f / (b * b)
        S["det_relation"].add(abs(float(np.linalg.det(g_ind)) - det_ref) / max(1.0, abs(det_ref)), p)

        tau_ref = -g_ind / lp.f
        tau = tau_db_from_definition(lp)
        S["tau_relation"].add(float(np.max(np.abs(tau - tau_ref))) / max(1.0, float(np.max(np.abs(tau_ref)))), p)

        S["gradient_identity"].add(gradient_identity_residual(G, lp), p)

    out = FamilyVerification(family.name)
    out.suites = [S[n] for n in ("chain_identity", "closed_form", "casimir", "tangency",
                                 "det_relation", "tau_relation", "gradient_identity")]
    if family.spec.preset == "linear":
        ident, oracle = S["sl2_identification"], S["sl2_oracle"]
        for p in pts[: max(1, min(100, n_points))]:
            ident.add(sl2_identification_residual(p), p)
            G = random_linear_or_quadratic(rng)
            oracle.add(sl2_oracle_compare(family, G, p), p)
        out.suites += [ident, oracle]
    out.seconds = time.perf_counter() - t0
    return out


def sl2_identification_residual(p) -> float:
    """Gap between the matrix Lie-Poisson bracket and {x,y} = z, {z,x} = x, {z,y} = -y."""
    x, y, z = (float(v) for v in p)
    got = (
        lie_poisson_bracket(X, Y, p),
        lie_poisson_bracket(Z, X, p),
        lie_poisson_bracket(Z, Y, p),
    )
    want = (z, x, -y)
    return float(max(abs(a - b) for a, b in zip(got, want)))


def random_linear_or_quadratic(rng) -> Expression:
    """A random test function: a linear combination of x, y, z plus, half of the time, xy or z^2."""
    a, b, c = rng.uniform(-2.0, 2.0, 3)
    G = float(a) * X + float(b) * Y + float(c) * Z
    if rng.uniform() < 0.5:
        G = G + float(rng.uniform(-1.0, 1.0)) * (X * Y if rng.uniform() < 0.5 else Z ** 2)
    return G


def gradient_sweep(family: Family, n_points: int = 200, seed: int = 0,
                   functions=GRADIENT_TEST_FUNCTIONS) -> dict[str, float]:
    """Worst gradient-identity residual per test function over n green points."""
    Gs = {s: as_expression(s) for s in functions}
    worst = {s: 0.0 for s in functions}
    rng = np.random.default_rng(seed)
    found = 0
    while found < n_points:
        p = rng.uniform(-BOX, BOX, 3)
        lp = _green_leaf_point(family, p)
        if lp is None:
            continue
        found += 1
        for s, G in Gs.items():
            worst[s] = max(worst[s], gradient_identity_residual(G, lp))
    return worst
