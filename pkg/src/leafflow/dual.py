"""Forward-mode dual numbers carrying a value and its gradient in (x, y, z)."""

import math

import numpy as np


def _is_array(v):
    return isinstance(v, np.ndarray)


def _exp(v):
    return np.exp(v) if _is_array(v) else math.exp(v)


def _cosh(v):
    return np.cosh(v) if _is_array(v) else math.cosh(v)


def _sinh(v):
    return np.sinh(v) if _is_array(v) else math.sinh(v)


class Dual:
    """Value ``val`` with partial derivatives ``d = (d/dx, d/dy, d/dz)``.

    Components may be floats or numpy arrays of a common shape.
    """

    __slots__ = ("val", "d")

    def __init__(self, val, d=(0.0, 0.0, 0.0)):
        self.val = val
        self.d = d

    @classmethod
    def constant(cls, val):
        return cls(val, (0.0, 0.0, 0.0))

    @classmethod
    def variable(cls, val, index):
        d = [0.0, 0.0, 0.0]
        d[index] = 1.0
        return cls(val, tuple(d))

    @property
    def grad(self):
        return np.array(self.d, dtype=float)

    def __add__(self, other):
        a, b = self.d, other.d
        return Dual(self.val + other.val, (a[0] + b[0], a[1] + b[1], a[2] + b[2]))

    def __sub__(self, other):
        a, b = self.d, other.d
        return Dual(self.val - other.val, (a[0] - b[0], a[1] - b[1], a[2] - b[2]))

    def __neg__(self):
        a = self.d
        return Dual(-self.val, (-a[0], -a[1], -a[2]))

    def __mul__(self, other):
        u, v = self.val, other.val
        a, b = self.d, other.d
        return Dual(u * v, (a[0] * v + u * b[0], a[1] * v + u * b[1], a[2] * v + u * b[2]))

    def __truediv__(self, other):
        u, v = self.val, other.val
        a, b = self.d, other.d
        q = u / v
        return Dual(q, ((a[0] - q * b[0]) / v, (a[1] - q * b[1]) / v, (a[2] - q * b[2]) / v))

    def ipow(self, n: int):
        """Integer power; n may be negative."""
        u = self.val
        if n == 0:
            return Dual.constant(u * 0.0 + 1.0)
        val = u**n
        s = n * u ** (n - 1)
        a = self.d
        return Dual(val, (s * a[0], s * a[1], s * a[2]))

    def _chain(self, val, slope):
        a = self.d
        return Dual(val, (slope * a[0], slope * a[1], slope * a[2]))

    def exp(self):
        e = _exp(self.val)
        return self._chain(e, e)

    def cosh(self):
        return self._chain(_cosh(self.val), _sinh(self.val))

    def sinh(self):
        return self._chain(_sinh(self.val), _cosh(self.val))

    def __repr__(self):
        return f"Dual({self.val!r}, {self.d!r})"
