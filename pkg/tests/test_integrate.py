import math
from fractions import Fraction

import numpy as np
import pytest

from leafflow.integrate import RKF_A, RKF_B4, RKF_B5, RKF_C, error_norm, initial_step, next_step, rk4_step, rkf45_step

# exact Fehlberg coefficients, typed in independently of the module
FEHLBERG_A5 = (Fraction(-8, 27), Fraction(2), Fraction(-3544, 2565), Fraction(1859, 4104), Fraction(-11, 40))


def test_tableau_rows_sum_to_nodes():
    for c, row in zip(RKF_C, RKF_A):
        assert sum(row) == pytest.approx(c, abs=1e-15)


def test_last_row_coefficients():
    for got, want in zip(RKF_A[5], FEHLBERG_A5):
        assert got == pytest.approx(float(want), rel=1e-15)


@pytest.mark.parametrize("weights, order", [(RKF_B4, 4), (RKF_B5, 5)])
def test_quadrature_order_conditions(weights, order):
    for q in range(order):
        assert sum(b * c**q for b, c in zip(weights, RKF_C)) == pytest.approx(1 / (q + 1), abs=1e-15)


def test_rkf45_local_error_on_exponential():
    f = lambda t, y: y
    for h in (0.1, 0.05):
        r = rkf45_step(f, 0.0, np.array([1.0]), h)
        assert abs(r.y[0] - math.exp(h)) < 2 * h**5
        # the embedded 5th-order estimate tracks the true 4th-order error
        assert abs(r.err[0] - (math.exp(h) - r.y[0])) < h**6


def test_rk4_global_order_on_exponential():
    f = lambda t, y: -2.0 * y
    errs = []
    for n in (10, 20, 40):
        y = np.array([1.0])
        h = 1.0 / n
        for k in range(n):
            y = rk4_step(f, k * h, y, h).y
        errs.append(abs(y[0] - math.exp(-2.0)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.1)


def test_step_control():
    assert next_step(1.0, 0.0) == 5.0
    assert next_step(1.0, 1e10) == pytest.approx(0.2)
    assert 0.2 < next_step(1.0, 2.0) < 1.0
    assert error_norm(np.array([1e-10]), np.array([1.0]), np.array([1.0]), 1e-10, 0.0) == pytest.approx(1.0)
    h = initial_step(lambda t, y: -y, 0.0, np.array([1.0]), 1e-8, 1e-10)
    assert 0 < h < 1
