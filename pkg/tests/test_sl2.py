import numpy as np
import pytest

from leafflow.expr import X, Y, Z, parse_expression
from leafflow.family import preset
from leafflow.sl2 import (
    BASIS,
    UnsupportedFamily,
    gram,
    hamiltonian_compare,
    lie_poisson_bracket,
    matrix_double_bracket,
    sl2_oracle_compare,
    to_coords,
    to_matrix,
)
from leafflow.verify import random_linear_or_quadratic, sl2_identification_residual

LIN = preset("linear")
POINTS = np.random.default_rng(17).uniform(-3, 3, size=(100, 3))


def test_identification_reproduces_coordinate_brackets():
    """The matrix bracket pushed to coordinates gives {x,y}=z, {z,x}=x, {z,y}=-y."""
    for p in POINTS:
        x, y, z = p
        assert lie_poisson_bracket(X, Y, p) == pytest.approx(z, abs=1e-12)
        assert lie_poisson_bracket(Z, X, p) == pytest.approx(x, abs=1e-12)
        assert lie_poisson_bracket(Z, Y, p) == pytest.approx(-y, abs=1e-12)
        assert sl2_identification_residual(p) < 1e-12


def test_identification_is_an_isometry_onto_the_metric():
    # g(A, B) = 2 tr(AB) pulled back to (x, y, z) is 2 dx dy + dz^2
    np.testing.assert_allclose(gram(), [[0, 1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)
    for p in POINTS[:10]:
        np.testing.assert_allclose(to_coords(to_matrix(p)), p, atol=1e-15)
        assert np.trace(to_matrix(p)) == 0.0


def test_matrix_side_examples():
    np.testing.assert_allclose(matrix_double_bracket(Z, (1, 1, 1)), (-1, -1, 2), atol=1e-14)
    for p in POINTS[:20]:
        assert np.max(np.abs(matrix_double_bracket(LIN.C, p))) < 1e-12
        assert sl2_oracle_compare(LIN, LIN.C, p) < 1e-12


def test_oracle_on_random_pairs():
    rng = np.random.default_rng(1)
    worst = 0.0
    for p in POINTS:
        G = random_linear_or_quadratic(rng)
        worst = max(worst, sl2_oracle_compare(LIN, G, p))
        assert hamiltonian_compare(LIN, G, p) < 1e-10
    assert worst < 1e-10


def test_oracle_rejects_other_families():
    with pytest.raises(UnsupportedFamily):
        sl2_oracle_compare(preset("quadratic"), Z, (1, 1, 1))


def test_basis_is_traceless():
    for b in BASIS:
        assert np.trace(b) == 0.0
