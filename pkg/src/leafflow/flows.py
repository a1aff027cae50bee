"""Integration of generalized double-bracket flows on R^3.

The flow ``dp/dt = direction * dbf_G(p)`` is tangent to the leaves, so the
Casimir is only monitored, never projected back: a drift beyond
``casimir_tol`` aborts the run.  Approaching a red line (``|f| < eps_red``)
stops the run with an event.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .expr import Expression
from .geometry import DEFAULT, AmbientMetric, as_point, metriplectic_matrix
from .integrate import error_norm, initial_step, next_step, rk4_step, rkf45_step


class FlowStatus(enum.Enum):
    CONVERGED = "Converged"
    RED_ZONE = "RedZoneApproach"
    T_MAX = "TMax"
    CASIMIR_DRIFT = "CasimirDrift"
    STEP_UNDERFLOW = "StepUnderflow"
    MAX_STEPS = "MaxSteps"

    @property
    def aborted(self) -> bool:
        return self in (FlowStatus.CASIMIR_DRIFT, FlowStatus.STEP_UNDERFLOW, FlowStatus.MAX_STEPS)


@dataclass(frozen=True)
class Event:
    kind: str
    t: float
    value: float
    point: tuple[float, float, float]


@dataclass(frozen=True)
class FlowOptions:
    method: str = "rkf45"
    dt: float = 1e-2
    t_max: float = 10.0
    max_steps: int = 200_000
    rtol: float = 1e-10
    atol: float = 1e-12
    eps_red: float = 1e-6
    casimir_tol: float = 1e-8
    converge_tol: float = 1e-10
    direction: int = 1

    def __post_init__(self):
        if self.method not in ("rk4", "rkf45"):
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("dt", "t_max", "rtol", "atol", "eps_red", "casimir_tol", "converge_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 or -1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class Trajectory:
    """Accepted samples of a flow with per-sample diagnostics.

    ``dGdt_measured`` is the difference quotient of G over the step ending at
    each sample; ``dGdt_predicted`` is ``-direction * (dG)^T M (dG)`` averaged
    with the integrator's own quadrature weights over the same step.  For the
    first sample both are pointwise values.
    """

    c: float
    t: list[float] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    C: list[float] = field(default_factory=list)
    G: list[float] = field(default_factory=list)
    f: list[float] = field(default_factory=list)
    dGdt_measured: list[float] = field(default_factory=list)
    dGdt_predicted: list[float] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    status: FlowStatus = FlowStatus.T_MAX

    def __len__(self):
        return len(self.t)

    @property
    def casimir_drift(self) -> float:
        return float(max(abs(v - self.c) for v in self.C)) if self.C else 0.0

    def as_array(self) -> np.ndarray:
        """Rows ``t, x, y, z, C, G, f``."""
        if not self.t:
            return np.zeros((0, 7))
        pts = np.array(self.points)
        return np.column_stack([self.t, pts, self.C, self.G, self.f])


def _dissipation_rate(pi, g, G, p, direction):
    _, dG = G.value_and_grad(p)
    return -direction * float(dG @ metriplectic_matrix(pi, g, p) @ dG)


def integrate_db_flow(family, G: Expression, start, opts: FlowOptions = FlowOptions(),
                      g: AmbientMetric = DEFAULT) -> Trajectory:
    """Integrate ``dp/dt = direction * (-[M] dG)`` from ``start``."""
    pi = family.poisson
    d = opts.direction
    p = as_point(start)

    def rhs(_t, q):
        _, dG = G.value_and_grad(q)
        return -d * (metriplectic_matrix(pi, g, q) @ dG)

    c = family.casimir(p)
    traj = Trajectory(c=c)

    def record(t, q, measured, predicted):
        traj.t.append(float(t))
        traj.points.append(np.array(q, dtype=float))
        traj.C.append(family.casimir(q))
        traj.G.append(float(G.at(q)))
        traj.f.append(family.f_value(q))
        traj.dGdt_measured.append(float(measured))
        traj.dGdt_predicted.append(float(predicted))

    def event(kind, t, value, q):
        traj.events.append(Event(kind, float(t), float(value), tuple(float(v) for v in q)))

    v0 = rhs(0.0, p)
    _, dG0 = G.value_and_grad(p)
    record(0.0, p, dG0 @ v0, _dissipation_rate(pi, g, G, p, d))

    speed = float(np.linalg.norm(v0))
    if speed < opts.converge_tol:
        event("Converged", 0.0, speed, p)
        traj.status = FlowStatus.CONVERGED
        return traj
    f0 = traj.f[0]
    if abs(f0) < opts.eps_red:
        event("RedZoneApproach", 0.0, f0, p)
        traj.status = FlowStatus.RED_ZONE
        return traj

    stepper = rk4_step if opts.method == "rk4" else rkf45_step
    adaptive = opts.method == "rkf45"
    t = 0.0
    h = opts.dt if not adaptive else min(initial_step(rhs, 0.0, p, opts.rtol, opts.atol), opts.t_max)
    steps = 0
    while True:
        if steps >= opts.max_steps:
            event("MaxSteps", t, steps, p)
            traj.status = FlowStatus.MAX_STEPS
            return traj
        remaining = opts.t_max - t
        if remaining <= 1e-12 * max(1.0, opts.t_max):
            # rounding left of the summed step sizes
            traj.status = FlowStatus.T_MAX
            return traj
        h = min(h, remaining)
        if not adaptive and remaining - h < 1e-9 * h:
            h = remaining
        if h <= 1e-14 * max(1.0, abs(t)):
            event("StepUnderflow", t, h, p)
            traj.status = FlowStatus.STEP_UNDERFLOW
            return traj
        res = stepper(rhs, t, p, h)
        steps += 1
        if adaptive:
            en = error_norm(res.err, p, res.y, opts.rtol, opts.atol)
            if not np.isfinite(en) or en > 1.0:
                h = next_step(h, en if np.isfinite(en) else 1e10)
                continue
        else:
            en = None
        q = res.y
        f_new = family.f_value(q)
        f_old = traj.f[-1]
        hit_red = abs(f_new) < opts.eps_red or (f_new > 0) != (f_old > 0)
        if hit_red:
            h, res, q, f_new = _locate_red(family, stepper, rhs, t, p, h, f_old, opts.eps_red)
        predicted = sum(w * _dissipation_rate(pi, g, G, ys, d) for w, ys in zip(res.weights, res.stages) if w)
        measured = (float(G.at(q)) - traj.G[-1]) / h
        t = t + h if t + h < opts.t_max or hit_red else opts.t_max
        p = q
        record(t, p, measured, predicted)

        drift = abs(traj.C[-1] - c)
        if drift > opts.casimir_tol:
            event("CasimirDrift", t, drift, p)
            traj.status = FlowStatus.CASIMIR_DRIFT
            return traj
        if hit_red:
            event("RedZoneApproach", t, f_new, p)
            traj.status = FlowStatus.RED_ZONE
            return traj
        speed = float(np.linalg.norm(rhs(t, p)))
        if speed < opts.converge_tol:
            event("Converged", t, speed, p)
            traj.status = FlowStatus.CONVERGED
            return traj
        if t >= opts.t_max:
            traj.status = FlowStatus.T_MAX
            return traj
        if adaptive:
            h = next_step(h, en)


def _locate_red(family, stepper, rhs, t, p, h, f_old, eps_red, max_iter=200):
    """Shrink the step until it ends inside the band ``|f| < eps_red``.

    Bisection on the step length, keeping the end point on the starting side
    of the red line until it enters the band.
    """
    lo, hi = 0.0, h
    res = stepper(rhs, t, p, h)
    f_new = family.f_value(res.y)
    best = (h, res, res.y, f_new)
    if abs(f_new) < eps_red:
        return best
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = stepper(rhs, t, p, mid)
        fm = family.f_value(r.y)
        if abs(fm) < eps_red:
            return mid, r, r.y, fm
        if (fm > 0) == (f_old > 0):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(t)):
            break
    return mid, r, r.y, fm


def dissipation_check(traj: Trajectory) -> float:
    """Largest gap between measured dG/dt and the predicted ``-(dG)^T M (dG)``."""
    if not traj.t:
        raise ValueError("empty trajectory")
    m = np.asarray(traj.dGdt_measured)
    p = np.asarray(traj.dGdt_predicted)
    return float(np.max(np.abs(m - p)))


def dissipation_scale(traj: Trajectory) -> float:
    return max(1.0, float(np.max(np.abs(traj.dGdt_predicted))))
