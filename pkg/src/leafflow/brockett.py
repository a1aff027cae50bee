"""Brockett's isospectral double-bracket flow ``dL/dt = [L, [L, N]]``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .integrate import error_norm, initial_step, next_step, rkf45_step

SYMMETRY_TOL = 1e-12


class BrockettError(ValueError):
    pass


def commutator(A, B):
    return A @ B - B @ A


def brockett_velocity(L, N):
    return commutator(L, commutator(L, N))


def offdiagonal_norm(L) -> float:
    return float(np.linalg.norm(L - np.diag(np.diag(L))))


@dataclass(frozen=True, eq=False)
class SymMatrixState:
    L: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        N = np.array(self.N, dtype=float)
        if N.ndim == 1:
            N = np.diag(N)
        n = L.shape[0]
        if L.shape != (n, n) or n < 2:
            raise BrockettError(f"L must be square with n >= 2, got shape {L.shape}")
        if N.shape != (n, n):
            raise BrockettError("N must match the size of L")
        asym = float(np.max(np.abs(L - L.T)))
        if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(L)))):
            raise BrockettError(f"L is not symmetric (max |L - L^T| = {asym:.3e})")
        if np.any(N != np.diag(np.diag(N))):
            raise BrockettError("N must be diagonal")
        nd = np.diag(N)
        if len(set(nd.tolist())) != n:
            raise BrockettError("N needs distinct diagonal entries")
        object.__setattr__(self, "L", 0.5 * (L + L.T))
        object.__setattr__(self, "N", N)

    @property
    def n(self) -> int:
        return self.L.shape[0]


@dataclass
class BrockettResult:
    t: list[float] = field(default_factory=list)
    offdiag: list[float] = field(default_factory=list)
    eig_drift: list[float] = field(default_factory=list)
    # tr(LN) is the quantity the flow increases monotonically
    trace_LN: list[float] = field(default_factory=list)
    L: np.ndarray | None = None
    converged: bool = False
    steps: int = 0

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.L).copy()


def random_symmetric(spectrum, seed: int = 0) -> np.ndarray:
    """``Q diag(spectrum) Q^T`` with Q orthogonal from a seeded Gaussian QR."""
    lam = np.asarray(spectrum, dtype=float)
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((lam.size, lam.size)))
    Q = Q * np.sign(np.diag(R))
    L = Q @ np.diag(lam) @ Q.T
    return 0.5 * (L + L.T)


def brockett_flow(state: SymMatrixState, t_max: float = 200.0, rtol: float = 1e-10,
                  atol: float = 1e-12, tol: float = 1e-9, max_steps: int = 100_000) -> BrockettResult:
    """Integrate with RKF45, re-symmetrizing L after each accepted step.

    Stops when the off-diagonal Frobenius norm drops below ``tol`` or at ``t_max``.
    """
    n = state.n
    N = state.N
    L = state.L.copy()
    eig0 = np.linalg.eigvalsh(L)

    def rhs(_t, v):
        M = v.reshape(n, n)
        return brockett_velocity(M, N).ravel()

    out = BrockettResult()

    def record(t, M):
        out.t.append(float(t))
        out.offdiag.append(offdiagonal_norm(M))
        out.eig_drift.append(float(np.max(np.abs(np.linalg.eigvalsh(M) - eig0))))
        out.trace_LN.append(float(np.trace(M @ N)))

    record(0.0, L)
    if out.offdiag[-1] < tol or not np.any(brockett_velocity(L, N)):
        out.L, out.converged = L, True
        return out

    y = L.ravel()
    t = 0.0
    h = min(initial_step(rhs, 0.0, y, rtol, atol), t_max)
    while t < t_max and out.steps < max_steps:
        h = min(h, t_max - t)
        res = rkf45_step(rhs, t, y, h)
        en = error_norm(res.err, y, res.y, rtol, atol)
        if en > 1.0:
            h = next_step(h, en)
            continue
        M = res.y.reshape(n, n)
        M = 0.5 * (M + M.T)
        y = M.ravel()
        t += h
        out.steps += 1
        record(t, M)
        if out.offdiag[-1] < tol:
            out.converged = True
            break
        h = next_step(h, en)
    out.L = y.reshape(n, n).copy()
    return out


def sorted_like(diag, N) -> bool:
    """True when ``diag`` is ordered the same way as the diagonal of N."""
    nd = np.diag(np.asarray(N))
    return bool(np.array_equal(np.argsort(diag), np.argsort(nd)))
