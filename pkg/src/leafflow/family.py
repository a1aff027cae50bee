"""The two-function family of Poisson structures on R^3.

Brackets ``{x, y} = U(z) + V(z) xy``, ``{z, x} = x``, ``{z, y} = -y`` with
Casimir ``C = xy exp(P) + Q`` where ``P' = V`` and ``Q' = U exp(P)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .expr import X, Y, Expression, EvaluationError, as_expression, exp
from .geometry import PoissonStructure
from .roots import GRID_POINTS, find_roots

DEFAULT_Z_INTERVAL = (-10.0, 10.0)
CONSISTENCY_TOL = 1e-8
CONSISTENCY_SAMPLES = 200

PRESETS = ("linear", "quadratic", "group")


class FamilyError(ValueError):
    """Inconsistent or malformed family specification."""


@dataclass(frozen=True)
class FamilySpec:
    """Either a preset name (``group`` takes ``eta``) or custom U, V, P, Q sources."""

    preset: str | None = None
    eta: float = 1.0
    U: str | None = None
    V: str | None = None
    P: str | None = None
    Q: str | None = None

    def __post_init__(self):
        custom = [self.U, self.V, self.P, self.Q]
        if self.preset is None:
            if any(s is None for s in custom):
                raise FamilyError("custom family needs all of U, V, P, Q")
        else:
            if self.preset not in PRESETS:
                raise FamilyError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")
            if any(s is not None for s in custom):
                raise FamilyError("a preset family takes no U, V, P, Q")
            if self.preset == "group" and self.eta == 0.0:
                raise FamilyError("group preset needs a nonzero eta")

    @classmethod
    def custom(cls, U, V, P, Q):
        return cls(U=str(U), V=str(V), P=str(P), Q=str(Q))

    def sources(self) -> dict[str, str]:
        """U, V, P, Q as expression strings."""
        if self.preset == "linear":
            return {"U": "z", "V": "0", "P": "0", "Q": "z^2/2"}
        if self.preset == "quadratic":
            return {"U": "3*z^2 - 1", "V": "0", "P": "0", "Q": "z^3 - z"}
        if self.preset == "group":
            e = repr(float(self.eta))
            return {
                "U": f"(1 - exp(-2*{e}*z))/(2*{e})",
                "V": e,
                "P": f"{e}*z",
                "Q": f"(cosh({e}*z) - 1)/{e}^2",
            }
        return {"U": self.U, "V": self.V, "P": self.P, "Q": self.Q}

    def to_dict(self) -> dict:
        if self.preset == "group":
            return {"preset": "group", "eta": self.eta}
        if self.preset is not None:
            return {"preset": self.preset}
        return {"custom": self.sources()}


class Topology(enum.Enum):
    TWO_PLANES = "TwoPlanes"
    SURFACE = "Surface"
    CONTAINS_SINGULAR = "ContainsSingular"


class Signature(enum.Enum):
    LORENTZIAN = "Lorentzian"
    EUCLIDEAN = "Euclidean"
    DEGENERATE = "Degenerate"

    @property
    def code(self) -> int:
        return {"Lorentzian": 1, "Euclidean": -1, "Degenerate": 0}[self.value]


@dataclass
class LeafReport:
    c: float
    roots: list[float]
    multiple: list[bool]
    n_simple: int
    topology: Topology
    genus: int | None
    punctures: int | None
    singular_z: list[float]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "roots": [{"z": z, "multiple": m} for z, m in zip(self.roots, self.multiple)],
            "n_simple": self.n_simple,
            "topology": self.topology.value,
            "genus": self.genus,
            "punctures": self.punctures,
            "singular_z": self.singular_z,
            "warnings": self.warnings,
        }


@dataclass
class Zone:
    z_lo: float
    z_hi: float
    signature: Signature


@dataclass
class ZoneReport:
    c: float
    red_z: list[float]
    red_multiple: list[bool]
    zones: list[Zone]
    warnings: list[str] = field(default_factory=list)
    # F_c vanishes identically: every point of the level set is red
    bad_leaf: bool = False

    @property
    def good_leaf(self) -> bool:
        return not self.red_z and not self.bad_leaf

    def signature_at(self, z: float) -> Signature:
        for zone in self.zones:
            if zone.z_lo <= z <= zone.z_hi:
                return zone.signature
        raise ValueError(f"z={z} outside the analysed interval")

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "red_z": self.red_z,
            "red_multiple": self.red_multiple,
            "good_leaf": self.good_leaf,
            "bad_leaf": self.bad_leaf,
            "zones": [
                {"z_lo": zn.z_lo, "z_hi": zn.z_hi, "signature": zn.signature.value}
                for zn in self.zones
            ],
            "warnings": self.warnings,
        }


@dataclass(frozen=True, eq=False)
class Family:
    """A (U, V) structure with its derived fields.

    ``W = U + xyV`` is the {x, y} bracket coefficient, ``C`` the Casimir and
    ``f = 2xy + W^2`` the function whose zero set is the red zone (plus the
    singular leaves).
    """

    spec: FamilySpec
    U: Expression
    V: Expression
    P: Expression
    Q: Expression
    W: Expression
    C: Expression
    f: Expression
    z_interval: tuple[float, float] = DEFAULT_Z_INTERVAL

    @property
    def poisson(self) -> PoissonStructure:
        return PoissonStructure(self.W)

    @property
    def name(self) -> str:
        return self.spec.preset or "custom"

    def casimir(self, p) -> float:
        return float(self.C.at(p))

    def f_value(self, p) -> float:
        return float(self.f.at(p))

    def w_value(self, p) -> float:
        return float(self.W.at(p))

    def xy_on_leaf(self, c, z):
        """The product xy forced on the level set C = c at height z."""
        return np.exp(-self.P(0.0, 0.0, z)) * (c - self.Q(0.0, 0.0, z))

    def F_expr(self, c: float) -> Expression:
        """F_c as an expression in z: the value of f on the level set C = c."""
        U, V, P, Q = self.U, self.V, self.P, self.Q
        s = as_expression(float(c)) - Q
        return U**2 + 2 * (1 + U * V) * exp(-P) * s + V**2 * exp(-2 * P) * s**2

    def h_expr(self, c: float) -> Expression:
        return self.Q - float(c)


def build_family(spec: FamilySpec, z_interval=DEFAULT_Z_INTERVAL) -> Family:
    """Derive W, C, f from ``spec`` and check ``P' = V`` and ``Q' = U exp(P)``."""
    z_lo, z_hi = float(z_interval[0]), float(z_interval[1])
    if not z_lo < z_hi:
        raise FamilyError(f"empty z interval [{z_lo}, {z_hi}]")
    src = spec.sources()
    parts = {}
    for key in ("U", "V", "P", "Q"):
        e = as_expression(src[key])
        extra = e.variables() - {"z"}
        if extra:
            raise FamilyError(f"{key} must depend on z only, found {sorted(extra)}")
        parts[key] = e
    U, V, P, Q = parts["U"], parts["V"], parts["P"], parts["Q"]

    zs = np.linspace(z_lo, z_hi, CONSISTENCY_SAMPLES)
    for label, lhs, rhs in (
        ("P' = V", lambda t: P.dz(t), lambda t: V(0.0, 0.0, t)),
        ("Q' = U exp(P)", lambda t: Q.dz(t), lambda t: U(0.0, 0.0, t) * np.exp(P(0.0, 0.0, t))),
    ):
        worst, where = 0.0, None
        for t in zs:
            try:
                a, b = float(lhs(float(t))), float(rhs(float(t)))
            except EvaluationError as exc:
                raise FamilyError(f"{label}: evaluation failed at z={t!r}: {exc}") from exc
            res = abs(a - b) / max(1.0, abs(b))
            if not np.isfinite(res):
                raise FamilyError(f"{label}: non-finite value at z={t!r}")
            if res > worst:
                worst, where = res, float(t)
        if worst > CONSISTENCY_TOL:
            raise FamilyError(f"consistency check {label} failed: residual {worst:.3e} at z={where!r}")

    W = U + X * Y * V
    C = X * Y * exp(P) + Q
    f = 2 * X * Y + W**2
    return Family(spec, U, V, P, Q, W, C, f, (z_lo, z_hi))


def preset(name: str, eta: float = 1.0, z_interval=DEFAULT_Z_INTERVAL) -> Family:
    return build_family(FamilySpec(preset=name, eta=eta), z_interval)


def casimir(family: Family, p) -> float:
    return family.casimir(p)


def f_value(family: Family, p) -> float:
    return family.f_value(p)


def w_value(family: Family, p) -> float:
    return family.w_value(p)


def singular_leaves(family: Family) -> list[float]:
    """Heights z of the point-like leaves (0, 0, z), i.e. zeros of U."""
    U = family.U
    roots = find_roots(lambda t: U(0.0, 0.0, t), U.dz, *family.z_interval)
    out = []
    for r in roots:
        z = r.z
        # one more Newton step where it helps reach |U| < 1e-12
        du = float(U.dz(z))
        if du != 0.0:
            zn = z - float(U(0.0, 0.0, z)) / du
            if abs(float(U(0.0, 0.0, zn))) < abs(float(U(0.0, 0.0, z))):
                z = zn
        out.append(z)
    return out


def critical_values(family: Family) -> list[dict]:
    """Casimir values ``Q(z*)`` at the singular heights ``U(z*) = 0``."""
    return [{"z": z, "c": float(family.Q(0.0, 0.0, z))} for z in singular_leaves(family)]


def _genus_rule(n: int) -> tuple[int, int]:
    return (n + 1) // 2 - 1, (1 if n % 2 else 2)


def classify_level_set(family: Family, c: float) -> LeafReport:
    """Topology of the level set C = c from the real zeros of ``h_c = Q - c``."""
    h = family.h_expr(c)
    z_lo, z_hi = family.z_interval
    roots = find_roots(lambda t: h(0.0, 0.0, t), h.dz, z_lo, z_hi, GRID_POINTS)
    warnings = [f"root z={r.z!r} within one grid cell of the interval boundary" for r in roots if r.near_boundary]
    n_simple = sum(1 for r in roots if not r.multiple)
    sing = [z for z in singular_leaves(family) if abs(float(h(0.0, 0.0, z))) <= 1e-9 * max(1.0, abs(c))]
    if any(r.multiple for r in roots):
        topo, genus, punct = Topology.CONTAINS_SINGULAR, None, None
    elif n_simple == 0:
        topo, genus, punct = Topology.TWO_PLANES, None, None
    else:
        topo = Topology.SURFACE
        genus, punct = _genus_rule(n_simple)
    return LeafReport(
        c=float(c),
        roots=[r.z for r in roots],
        multiple=[r.multiple for r in roots],
        n_simple=n_simple,
        topology=topo,
        genus=genus,
        punctures=punct,
        singular_z=sing,
        warnings=warnings,
    )


def F_c(family: Family, c: float, z):
    """f restricted to the level set C = c, as a function of z (arrays allowed)."""
    return family.F_expr(c)(0.0, 0.0, z)


def red_lines(family: Family, c: float) -> ZoneReport:
    """Heights of the red lines on the level set C = c and the zone signatures between them."""
    F = family.F_expr(c)
    z_lo, z_hi = family.z_interval
    grid = np.broadcast_to(np.asarray(F(0.0, 0.0, np.linspace(z_lo, z_hi, GRID_POINTS)), float), (GRID_POINTS,))
    if np.all(np.abs(grid) <= 1e-12 * (1.0 + abs(c))):
        return ZoneReport(float(c), [], [], [Zone(z_lo, z_hi, Signature.DEGENERATE)], bad_leaf=True)
    roots = find_roots(lambda t: F(0.0, 0.0, t), F.dz, z_lo, z_hi, GRID_POINTS)
    warnings = [f"red line z={r.z!r} within one grid cell of the interval boundary" for r in roots if r.near_boundary]
    edges = [z_lo] + [r.z for r in roots] + [z_hi]
    zones = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        mid = float(F(0.0, 0.0, 0.5 * (a + b)))
        if mid > 0:
            sig = Signature.LORENTZIAN
        elif mid < 0:
            sig = Signature.EUCLIDEAN
        else:
            sig = Signature.DEGENERATE
        zones.append(Zone(float(a), float(b), sig))
    return ZoneReport(
        c=float(c),
        red_z=[r.z for r in roots],
        red_multiple=[r.multiple for r in roots],
        zones=zones,
        warnings=warnings,
    )
