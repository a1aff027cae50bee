import numpy as np
import pytest

from leafflow.expr import parse_expression
from leafflow.family import FamilySpec, build_family, preset
from leafflow.geometry import (
    DEFAULT,
    DEFAULT_METRIC,
    AmbientMetric,
    GeometryError,
    RegularityClass,
    causal_coordinates,
    classify_point,
    closed_form_residual,
    double_bracket_composed,
    double_bracket_field,
    flat_g,
    hamiltonian_field,
    matrix_rank,
    metriplectic_matrix,
    poisson_matrix,
    sharp_g,
    sharp_pi,
    verify_chain_identity,
)

PRESETS = {name: preset(name) for name in ("linear", "quadratic", "group")}
RNG_POINTS = np.random.default_rng(11).uniform(-3, 3, size=(200, 3))


def bracket_table(family, p):
    """Independent construction of [Pi] from the coordinate brackets {x,y}=W, {y,z}=y, {z,x}=x."""
    x, y, z = p
    w = float(family.W.at(p))
    B = np.zeros((3, 3))
    B[0, 1], B[1, 2], B[2, 0] = w, y, x
    return B - B.T


def test_poisson_matrix_linear():
    P = poisson_matrix(PRESETS["linear"].poisson, (1, 1, 1))
    np.testing.assert_array_equal(P, [[0, 1, -1], [-1, 0, 1], [1, -1, 0]])


def test_poisson_matrix_quadratic():
    P = poisson_matrix(PRESETS["quadratic"].poisson, (1, 2, 0))
    np.testing.assert_array_equal(P, [[0, -1, -1], [1, 0, 2], [1, -2, 0]])


@pytest.mark.parametrize("name", ["linear", "quadratic", "group"])
def test_poisson_matrix_matches_bracket_table(name):
    fam = PRESETS[name]
    for p in RNG_POINTS[:50]:
        np.testing.assert_allclose(poisson_matrix(fam.poisson, p), bracket_table(fam, p), rtol=0, atol=0)


@pytest.mark.parametrize("name, z0", [("linear", 0.0), ("quadratic", 1 / np.sqrt(3)), ("group", 0.0)])
def test_singular_leaf_point_kills_everything(name, z0):
    fam = PRESETS[name]
    p = (0.0, 0.0, z0)
    assert np.max(np.abs(poisson_matrix(fam.poisson, p))) < 1e-15
    assert np.max(np.abs(metriplectic_matrix(fam.poisson, DEFAULT, p))) < 1e-15
    assert np.max(np.abs(sharp_pi(fam.poisson, p, [1.0, -2.0, 3.0]))) < 1e-15
    assert verify_chain_identity(fam.poisson, DEFAULT, p) == 0.0


def test_metriplectic_linear_example():
    M = metriplectic_matrix(PRESETS["linear"].poisson, DEFAULT, (1, 1, 0))
    np.testing.assert_array_equal(M, [[1, -1, 0], [-1, 1, 0], [0, 0, -2]])


def test_metriplectic_quadratic_example_against_triple_product():
    pi = PRESETS["quadratic"].poisson
    expected = np.array([[1, -3, -1], [-3, 4, -2], [-1, -2, -4]], dtype=float)
    np.testing.assert_array_equal(metriplectic_matrix(pi, DEFAULT, (1, 2, 0)), expected)
    P = bracket_table(PRESETS["quadratic"], (1, 2, 0))
    np.testing.assert_array_equal(-P @ DEFAULT_METRIC @ P, expected)


@pytest.mark.parametrize("name", ["linear", "quadratic", "group"])
def test_chain_identity_and_closed_form(name):
    pi = PRESETS[name].poisson
    for p in RNG_POINTS:
        assert verify_chain_identity(pi, DEFAULT, p) < 1e-12
        assert closed_form_residual(pi, p) < 1e-12


def test_chain_identity_custom_polynomial_family():
    # degree-5 U with V = 0, so P = 0 and Q is an antiderivative of U
    fam = build_family(FamilySpec.custom("z^5 - 2*z", "0", "0", "z^6/6 - z^2"))
    for p in RNG_POINTS:
        assert verify_chain_identity(fam.poisson, DEFAULT, p) < 1e-12
    # nonzero V: P = z^2 and U = 2z exp(-z^2) make Q' = U exp(P) = 2z
    fam = build_family(FamilySpec.custom("2*z*exp(-z^2)", "2*z", "z^2", "z^2"), (-3, 3))
    for p in RNG_POINTS:
        assert verify_chain_identity(fam.poisson, DEFAULT, p) < 1e-12


def test_chain_identity_with_non_default_metric():
    g = AmbientMetric(np.array([[2.0, 0.5, 0.0], [0.5, -1.0, 0.3], [0.0, 0.3, 1.5]]))
    pi = PRESETS["quadratic"].poisson
    for p in RNG_POINTS[:50]:
        assert verify_chain_identity(pi, g, p) < 1e-12


def test_musical_maps():
    np.testing.assert_array_equal(flat_g(DEFAULT, (1.0, 2.0, 3.0)), (2.0, 1.0, 3.0))
    np.testing.assert_array_equal(sharp_g(DEFAULT, (2.0, 1.0, 3.0)), (1.0, 2.0, 3.0))


def test_metric_validation():
    with pytest.raises(GeometryError):
        AmbientMetric(np.zeros((3, 3)))
    with pytest.raises(GeometryError):
        AmbientMetric(np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))


@pytest.mark.parametrize("name", ["linear", "quadratic", "group"])
def test_hamiltonian_fields_of_coordinates(name):
    fam = PRESETS[name]
    for p in RNG_POINTS[:30]:
        x, y, z = p
        w = float(fam.W.at(p))
        np.testing.assert_allclose(hamiltonian_field(fam.poisson, parse_expression("x"), p), (0, w, -x))
        np.testing.assert_allclose(hamiltonian_field(fam.poisson, parse_expression("z"), p), (x, -y, 0))


@pytest.mark.parametrize("name", ["linear", "quadratic", "group"])
def test_casimir_is_annihilated(name):
    fam = PRESETS[name]
    for p in RNG_POINTS[:100]:
        scale = max(1.0, float(np.abs(fam.C.grad(p)).max()) * float(np.abs(poisson_matrix(fam.poisson, p)).max()))
        assert np.max(np.abs(hamiltonian_field(fam.poisson, fam.C, p))) / scale < 1e-12
        assert np.max(np.abs(double_bracket_field(fam.poisson, DEFAULT, fam.C, p))) / scale**2 < 1e-12


def test_double_bracket_linear_example():
    fam = PRESETS["linear"]
    v = double_bracket_field(fam.poisson, DEFAULT, parse_expression("z"), (1, 1, 1))
    np.testing.assert_array_equal(v, (-1, -1, 2))
    assert np.dot(fam.C.grad((1, 1, 1)), v) == 0.0


def test_double_bracket_group_example_two_paths():
    fam = preset("group", 1.0)
    G = parse_expression("x + y")
    p = (1.0, 1.0, 0.0)
    a = double_bracket_field(fam.poisson, DEFAULT, G, p)
    b = double_bracket_composed(fam.poisson, DEFAULT, G, p)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)
    # W(1,1,0) = U(0) + V = 1; closed form of -M dG with dG = (1,1,0)
    np.testing.assert_allclose(a, [-(1 - 2), -(-2 + 1), -(1 + 1)])


@pytest.mark.parametrize("name", ["linear", "quadratic", "group"])
def test_double_bracket_is_tangent(name):
    fam = PRESETS[name]
    G = parse_expression("x + 2*y - z + x*y")
    for p in RNG_POINTS:
        v = double_bracket_field(fam.poisson, DEFAULT, G, p)
        dC = fam.C.grad(p)
        assert abs(dC @ v) <= 1e-12 * max(1.0, np.linalg.norm(dC) * np.linalg.norm(v))


def test_classify_point_examples():
    lin, quad = PRESETS["linear"], PRESETS["quadratic"]
    assert classify_point(lin, (1, -0.5, 1)) is RegularityClass.M_SINGULAR
    assert classify_point(lin, (0, 0, 0)) is RegularityClass.SINGULAR_LEAF
    assert classify_point(quad, (1, 1, 0)) is RegularityClass.M_REGULAR
    assert matrix_rank(metriplectic_matrix(quad.poisson, DEFAULT, (1, 1, 0))) == 2
    with pytest.raises(GeometryError):
        classify_point(lin, (1, 1, 1), eps_f=0.0)


def test_rank_drops_on_red_zone():
    lin = PRESETS["linear"]
    # f = 0 at (1, -1/2, 1): [M] has rank 1 there, 2 off the red zone
    assert matrix_rank(metriplectic_matrix(lin.poisson, DEFAULT, (1, -0.5, 1))) == 1
    assert matrix_rank(poisson_matrix(lin.poisson, (1, -0.5, 1))) == 2


def test_causal_coordinates_diagonalise_metric():
    # -dT^2 + dX^2 + dY^2 evaluated on a displacement equals 2 dx dy + dz^2
    rng = np.random.default_rng(0)
    for v in rng.normal(size=(20, 3)):
        X, Y, T = causal_coordinates(v)
        assert -T * T + X * X + Y * Y == pytest.approx(v @ DEFAULT_METRIC @ v)
