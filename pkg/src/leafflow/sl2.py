"""Matrix-level check of the double-bracket field for the linear sl(2, R) brackets.

Points ``(x, y, z)`` are identified with traceless 2x2 matrices
``L = (y/sqrt2) e1 + (x/sqrt2) e2 + (z/2) e3`` via the trace form
``g(A, B) = 2 tr(AB)`` (half the Killing form).  On the matrix side the
double-bracket field of G is ``[L, [L, grad G(L)]]`` with the gradient taken
with respect to that trace form.
"""

from __future__ import annotations

import math

import numpy as np

from .expr import Expression
from .geometry import DEFAULT, double_bracket_field, hamiltonian_field

E1 = np.array([[0.0, 1.0], [0.0, 0.0]])
E2 = np.array([[0.0, 0.0], [1.0, 0.0]])
E3 = np.array([[1.0, 0.0], [0.0, -1.0]])
_S2 = math.sqrt(2.0)

# dL/dx, dL/dy, dL/dz
BASIS = (E2 / _S2, E1 / _S2, E3 / 2.0)


class UnsupportedFamily(ValueError):
    pass


def trace_form(A, B) -> float:
    return 2.0 * float(np.trace(A @ B))


def to_matrix(p) -> np.ndarray:
    x, y, z = (float(v) for v in p)
    return x * BASIS[0] + y * BASIS[1] + z * BASIS[2]


def to_coords(A) -> np.ndarray:
    """Inverse of :func:`to_matrix` on traceless matrices (also maps tangent vectors)."""
    A = np.asarray(A, dtype=float)
    return np.array([_S2 * A[1, 0], _S2 * A[0, 1], A[0, 0] - A[1, 1]])


def gram() -> np.ndarray:
    return np.array([[trace_form(a, b) for b in BASIS] for a in BASIS])


def matrix_gradient(G: Expression, p) -> np.ndarray:
    """Gradient of G at L(p) with respect to the trace form."""
    dG = G.grad(np.asarray(p, dtype=float))
    coeff = np.linalg.solve(gram(), dG)
    return sum(c * b for c, b in zip(coeff, BASIS))


def commutator(A, B):
    return A @ B - B @ A


def lie_poisson_bracket(F: Expression, G: Expression, p) -> float:
    """``{F, G}(L) = g(L, [grad F, grad G])``."""
    L = to_matrix(p)
    return trace_form(L, commutator(matrix_gradient(F, p), matrix_gradient(G, p)))


def matrix_hamiltonian_field(G: Expression, p) -> np.ndarray:
    L = to_matrix(p)
    return to_coords(commutator(L, matrix_gradient(G, p)))


def matrix_double_bracket(G: Expression, p) -> np.ndarray:
    L = to_matrix(p)
    return to_coords(commutator(L, commutator(L, matrix_gradient(G, p))))


def sl2_oracle_compare(family, G: Expression, p) -> float:
    """Sup-norm gap between the coordinate field and ``[L, [L, grad G]]``."""
    if family.spec.preset != "linear":
        raise UnsupportedFamily("the sl(2) comparison needs the linear preset")
    p = np.asarray(p, dtype=float)
    lhs = double_bracket_field(family.poisson, DEFAULT, G, p)
    return float(np.max(np.abs(lhs - matrix_double_bracket(G, p))))


def hamiltonian_compare(family, G: Expression, p) -> float:
    p = np.asarray(p, dtype=float)
    return float(np.max(np.abs(hamiltonian_field(family.poisson, G, p) - matrix_hamiltonian_field(G, p))))
