"""Forward-mode dual numbers.

A :class:`Dual` carries a value and one tangent.  Both slots may themselves be
duals, so nesting ``Dual(Dual(x, 1), Dual(1, 0))`` yields second derivatives.
Slots may also be numpy arrays, which lets a whole batch of points share one
pass through the arithmetic.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


class Dual:
    __slots__ = ("val", "eps")

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __repr__(self) -> str:
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        return Dual(self.val + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.eps - other.eps)
        return Dual(self.val - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.eps)

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.val * other.eps + self.eps * other.val)
        return Dual(self.val * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            q = self.val * inv
            return Dual(q, (self.eps - q * other.eps) * inv)
        return Dual(self.val / other, self.eps / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        q = other * inv
        return Dual(q, -q * self.eps * inv)

    def __pow__(self, power):
        if isinstance(power, Dual):
            return exp(power * log(self))
        if isinstance(power, int) and power >= 0:
            if power == 0:
                return Dual(self.val * 0 + 1, self.eps * 0)
            result = self
            for _ in range(power - 1):
                result = result * self
            return result
        p = self.val ** (power - 1)
        return Dual(p * self.val, power * p * self.eps)

    # comparisons act on the primal value only
    def __lt__(self, other):
        return primal(self) < primal(other)

    def __gt__(self, other):
        return primal(self) > primal(other)

    def __le__(self, other):
        return primal(self) <= primal(other)

    def __ge__(self, other):
        return primal(self) >= primal(other)


def primal(x):
    """Innermost value of a (possibly nested) dual."""
    while isinstance(x, Dual):
        x = x.val
    return x


def _lift(fn_float, fn_array, deriv):
    def apply(x):
        if isinstance(x, Dual):
            return Dual(apply(x.val), deriv(x.val) * x.eps)
        if isinstance(x, np.ndarray):
            return fn_array(x)
        return fn_float(x)

    return apply


exp = _lift(math.exp, np.exp, lambda v: exp(v))
log = _lift(math.log, np.log, lambda v: 1.0 / v)
sqrt = _lift(math.sqrt, np.sqrt, lambda v: 0.5 / sqrt(v))
sin = _lift(math.sin, np.sin, lambda v: cos(v))
cos = _lift(math.cos, np.cos, lambda v: -sin(v))


def derivative(f: Callable, x: float) -> tuple[float, float]:
    out = f(Dual(x, 1.0))
    return out.val, out.eps


def gradient(f: Callable, x: Sequence[float]) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x``, one dual pass per coordinate."""
    x = list(x)
    g = np.empty(len(x))
    for i in range(len(x)):
        args = [Dual(v, 1.0 if k == i else 0.0) for k, v in enumerate(x)]
        g[i] = f(*args).eps
    return g


def hessian(f: Callable, x: Sequence[float]) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of ``f`` at ``x`` using nested duals."""
    x = list(x)
    n = len(x)
    g = np.empty(n)
    h = np.empty((n, n))
    value = None
    for i in range(n):
        for j in range(i, n):
            args = [
                Dual(Dual(v, 1.0 if k == i else 0.0), Dual(1.0 if k == j else 0.0, 0.0))
                for k, v in enumerate(x)
            ]
            out = f(*args)
            value = out.val.val
            g[i] = out.val.eps
            g[j] = out.eps.val
            h[i, j] = h[j, i] = out.eps.eps
    return value, g, h
