"""Explicit Runge-Kutta steppers: classical RK4 and the Fehlberg 4(5) pair."""

import numpy as np

# Fehlberg tableau; the 4th-order solution is propagated
RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
RKF_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)

RK4_C = (0.0, 0.5, 0.5, 1.0)
RK4_B = (1 / 6, 1 / 3, 1 / 3, 1 / 6)


class StepResult:
    """One attempted step: new state, error estimate, stage states and slopes."""

    __slots__ = ("y", "err", "stages", "slopes", "weights")

    def __init__(self, y, err, stages, slopes, weights):
        self.y = y
        self.err = err
        self.stages = stages
        self.slopes = slopes
        self.weights = weights


def rk4_step(f, t, y, h) -> StepResult:
    k1 = f(t, y)
    y2 = y + 0.5 * h * k1
    k2 = f(t + 0.5 * h, y2)
    y3 = y + 0.5 * h * k2
    k3 = f(t + 0.5 * h, y3)
    y4 = y + h * k3
    k4 = f(t + h, y4)
    ynew = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return StepResult(ynew, None, (y, y2, y3, y4), (k1, k2, k3, k4), RK4_B)


def rkf45_step(f, t, y, h) -> StepResult:
    ks = []
    ys = []
    for i in range(6):
        yi = y
        for a, k in zip(RKF_A[i], ks):
            if a:
                yi = yi + h * a * k
        ys.append(yi)
        ks.append(f(t + RKF_C[i] * h, yi))
    y4 = y + h * sum(b * k for b, k in zip(RKF_B4, ks) if b)
    y5 = y + h * sum(b * k for b, k in zip(RKF_B5, ks) if b)
    return StepResult(y4, y5 - y4, tuple(ys), tuple(ks), RKF_B4)


def error_norm(err, y_old, y_new, rtol, atol) -> float:
    """Max-norm of the error scaled by ``atol + rtol * max(|y_old|, |y_new|)``."""
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.max(np.abs(err) / scale))


def next_step(h, err_norm, safety=0.9, grow=5.0, shrink=0.2) -> float:
    if err_norm == 0.0:
        return h * grow
    fac = safety * err_norm ** (-0.2)
    return h * min(grow, max(shrink, fac))


def initial_step(f, t, y, rtol, atol) -> float:
    """Standard starting-step heuristic for a 4th-order method."""
    f0 = f(t, y)
    scale = atol + rtol * np.abs(y)
    d0 = float(np.max(np.abs(y) / scale))
    d1 = float(np.max(np.abs(f0) / scale))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + h0 * f0
    f1 = f(t + h0, y1)
    d2 = float(np.max(np.abs(f1 - f0) / scale)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)
