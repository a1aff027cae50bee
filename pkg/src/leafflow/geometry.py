"""Ambient tensor algebra on R^3: Poisson bivector, pseudo-metric, metriplectic tensor.

Conventions.  ``[Pi]`` is the antisymmetric matrix with ``[Pi]_12 = W``,
``[Pi]_13 = -x``, ``[Pi]_23 = y``.  The Hamiltonian field is
``X_G = Pi(dG, .)``, i.e. ``[Pi]^T dG``, so ``X_z = x d/dx - y d/dy``.  The
metriplectic matrix is ``[M] = -[Pi][g][Pi]`` and the generalized double
bracket field is ``-[M] dG``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Expression

DEFAULT_METRIC = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
EPS_F = 1e-9
EPS_AXIS = 1e-9
RANK_PIVOT_TOL = 1e-10


class GeometryError(ValueError):
    pass


def as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise GeometryError(f"non-finite point {a.tolist()}")
    return a


def causal_coordinates(p) -> np.ndarray:
    """(X, Y, T) = (z, (x + y)/sqrt 2, (x - y)/sqrt 2); the metric is then -dT^2 + dX^2 + dY^2."""
    x, y, z = p[0], p[1], p[2]
    s = math.sqrt(2.0)
    return np.array([z, (x + y) / s, (x - y) / s])


@dataclass(frozen=True)
class PoissonStructure:
    W: Expression

    def matrix(self, p) -> np.ndarray:
        x, y, _ = p
        w = float(self.W.at(p))
        return np.array([[0.0, w, -x], [-w, 0.0, y], [x, -y, 0.0]])


@dataclass(frozen=True, eq=False)
class AmbientMetric:
    """Constant symmetric metric; the default is ``2 dx dy + dz^2``."""

    matrix: np.ndarray = field(default_factory=lambda: DEFAULT_METRIC.copy())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.array_equal(m, m.T):
            raise GeometryError("ambient metric must be a symmetric 3x3 matrix")
        if abs(np.linalg.det(m)) < 1e-14:
            raise GeometryError("ambient metric is singular")
        object.__setattr__(self, "matrix", m)

    @property
    def is_default(self) -> bool:
        return np.array_equal(self.matrix, DEFAULT_METRIC)

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


DEFAULT = AmbientMetric()


class RegularityClass(enum.Enum):
    M_REGULAR = "MRegular"
    M_SINGULAR = "MSingular"
    SINGULAR_LEAF = "SingularLeaf"


def poisson_matrix(pi: PoissonStructure, p) -> np.ndarray:
    return pi.matrix(as_point(p))


def metriplectic_matrix(pi: PoissonStructure, g: AmbientMetric, p) -> np.ndarray:
    """Symmetric matrix of M(a, b) = g(#a, #b).

    The closed form is used for the default metric; otherwise the product
    ``-[Pi][g][Pi]``.
    """
    p = as_point(p)
    if g.is_default:
        x, y, _ = p
        w = float(pi.W.at(p))
        xy = x * y
        off = -xy - w * w
        return np.array(
            [
                [x * x, off, x * w],
                [off, y * y, y * w],
                [x * w, y * w, -2.0 * xy],
            ]
        )
    P = pi.matrix(p)
    return -P @ g.matrix @ P


def metriplectic_product(pi: PoissonStructure, g: AmbientMetric, p) -> np.ndarray:
    P = poisson_matrix(pi, p)
    return -P @ g.matrix @ P


def sharp_pi(pi: PoissonStructure, p, alpha) -> np.ndarray:
    return poisson_matrix(pi, p).T @ np.asarray(alpha, dtype=float)


def flat_g(g: AmbientMetric, v) -> np.ndarray:
    return g.matrix @ np.asarray(v, dtype=float)


def sharp_g(g: AmbientMetric, alpha) -> np.ndarray:
    return np.linalg.solve(g.matrix, np.asarray(alpha, dtype=float))


def hamiltonian_field(pi: PoissonStructure, G: Expression, p) -> np.ndarray:
    p = as_point(p)
    return sharp_pi(pi, p, G.grad(p))


def double_bracket_field(pi: PoissonStructure, g: AmbientMetric, G: Expression, p) -> np.ndarray:
    p = as_point(p)
    return -metriplectic_matrix(pi, g, p) @ G.grad(p)


def double_bracket_composed(pi: PoissonStructure, g: AmbientMetric, G: Expression, p) -> np.ndarray:
    """The same field built as ``#_Pi(flat_g(X_G))``."""
    p = as_point(p)
    return sharp_pi(pi, p, flat_g(g, hamiltonian_field(pi, G, p)))


def metriplectic_from_definition(pi: PoissonStructure, g: AmbientMetric, p) -> np.ndarray:
    """Entries ``M(e_i, e_j) = g(#e_i, #e_j)`` over the basis covectors."""
    p = as_point(p)
    sharps = [sharp_pi(pi, p, e) for e in np.eye(3)]
    return np.array([[a @ g.matrix @ b for b in sharps] for a in sharps])


def verify_chain_identity(pi: PoissonStructure, g: AmbientMetric, p) -> float:
    """Frobenius norm of ``[M] + [Pi][g][Pi]`` with [M] built from its definition.

    Reported relative to ``max(1, |[Pi]|_F^2)`` so the bound is scale free.
    """
    p = as_point(p)
    P = poisson_matrix(pi, p)
    M = metriplectic_from_definition(pi, g, p)
    scale = max(1.0, float(np.sum(P * P)))
    return float(np.linalg.norm(M + P @ g.matrix @ P)) / scale


def closed_form_residual(pi: PoissonStructure, p) -> float:
    """Gap between the closed-form [M] (default metric) and ``-[Pi][g][Pi]``, relative."""
    p = as_point(p)
    P = poisson_matrix(pi, p)
    scale = max(1.0, float(np.sum(P * P)))
    return float(np.linalg.norm(metriplectic_matrix(pi, DEFAULT, p) - metriplectic_product(pi, DEFAULT, p))) / scale


def matrix_rank(A, rel_tol: float = RANK_PIVOT_TOL) -> int:
    """Rank by Gaussian elimination with full pivoting.

    Pivots at most ``rel_tol * max|A|`` count as zero.
    """
    A = np.array(A, dtype=float)
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    if amax == 0.0:
        return 0
    thresh = rel_tol * amax
    rows, cols = A.shape
    rank = 0
    for k in range(min(rows, cols)):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= thresh:
            break
        i += k
        j += k
        A[[k, i]] = A[[i, k]]
        A[:, [k, j]] = A[:, [j, k]]
        A[k + 1 :] -= np.outer(A[k + 1 :, k] / A[k, k], A[k])
        rank += 1
    return rank


def classify_point(family, p, eps_f: float = EPS_F, eps_axis: float = EPS_AXIS) -> RegularityClass:
    """Regularity of ``p`` for the default metric: band tests on U, f and the axis."""
    if eps_f <= 0 or eps_axis <= 0:
        raise GeometryError("eps_f and eps_axis must be positive")
    p = as_point(p)
    x, y, z = p
    if abs(x) < eps_axis and abs(y) < eps_axis and abs(float(family.U(0.0, 0.0, z))) < eps_f:
        return RegularityClass.SINGULAR_LEAF
    if abs(family.f_value(p)) < eps_f:
        return RegularityClass.M_SINGULAR
    return RegularityClass.M_REGULAR
