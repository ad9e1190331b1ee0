"""Truncated bivariate Taylor jets in the real chart coordinates (x, y).

A jet of order ``K`` stores ``T[a, b] = d^a_x d^b_y F / (a! b!)`` for
``a + b <= K`` at a batch of base points.  Arithmetic is generic over an
associative algebra (quaternions, complex numbers, complex matrices,
quaternionic 2x2 matrices), which lets closed-form constructions deliver
derivatives that are exact up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from . import quat as Q


@dataclass(frozen=True)
class Algebra:
    name: str
    elem_ndim: int
    mul: Callable
    inv: Callable


def _cmul(a, b):
    return a * b


QUAT = Algebra("quat", 1, Q.qmul, Q.qinv)
COMPLEX = Algebra("complex", 0, _cmul, lambda a: 1.0 / a)
CMAT = Algebra("cmat", 2, np.matmul, np.linalg.inv)
QMAT = Algebra("qmat", 3, Q.mat_mul, Q.mat_inv)


def _indices(order):
    return [(a, m - a) for m in range(order + 1) for a in range(m, -1, -1)]


class Jet:
    """Taylor jet; ``coef`` maps (a, b) with a + b <= order to arrays."""

    __slots__ = ("coef", "order", "alg")
    __array_ufunc__ = None  # let ndarray @ Jet dispatch to __rmatmul__

    def __init__(self, coef: dict, order: int, alg: Algebra):
        self.coef = coef
        self.order = order
        self.alg = alg

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, order, alg):
        value = np.asarray(value)
        zero = np.zeros_like(value)
        coef = {ab: (value if ab == (0, 0) else zero) for ab in _indices(order)}
        return cls(coef, order, alg)

    @classmethod
    def holomorphic(cls, derivs, order):
        """Complex jet of a holomorphic function from ``[h, h', h'', ...]``."""
        coef = {}
        for a, b in _indices(order):
            coef[a, b] = derivs[a + b] * (1j**b) / (factorial(a) * factorial(b))
        return cls(coef, order, COMPLEX)

    @classmethod
    def coordinate(cls, z, order):
        """The jet of the complex chart coordinate itself."""
        z = np.asarray(z, dtype=complex)
        one = np.ones_like(z)
        derivs = [z, one] + [np.zeros_like(z)] * order
        return cls.holomorphic(derivs, order)

    # -- basic access -----------------------------------------------------
    def __getitem__(self, ab):
        return self.coef[ab]

    @property
    def value(self):
        return self.coef[0, 0]

    def deriv(self, a, b):
        """Partial derivative d^a_x d^b_y at the base point."""
        return self.coef[a, b] * (factorial(a) * factorial(b))

    def truncate(self, order):
        return Jet({ab: self.coef[ab] for ab in _indices(order)}, order, self.alg)

    def map(self, fn, alg=None):
        """Apply a linear map coefficientwise."""
        return Jet({ab: fn(c) for ab, c in self.coef.items()}, self.order, alg or self.alg)

    def dx(self):
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        o = self.order - 1
        return Jet({(a, b): (a + 1) * self.coef[a + 1, b] for a, b in _indices(o)}, o, self.alg)

    def dy(self):
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        o = self.order - 1
        return Jet({(a, b): (b + 1) * self.coef[a, b + 1] for a, b in _indices(o)}, o, self.alg)

    # -- arithmetic -------------------------------------------------------
    def _other(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.alg)

    def __add__(self, other):
        other = self._other(other)
        o = min(self.order, other.order)
        return Jet({ab: self.coef[ab] + other.coef[ab] for ab in _indices(o)}, o, self.alg)

    __radd__ = __add__

    def __neg__(self):
        return self.map(lambda c: -c)

    def __sub__(self, other):
        return self + (-self._other(other))

    def __rsub__(self, other):
        return self._other(other) - self

    def scale(self, s):
        """Multiply by a real (or broadcastable real array) scalar."""
        s = np.asarray(s)
        pad = (slice(None),) * s.ndim + (None,) * self.alg.elem_ndim
        s = s[pad] if s.ndim else s
        return self.map(lambda c: c * s)

    def __matmul__(self, other):
        """Algebra product (non-commutative)."""
        other = self._other(other)
        o = min(self.order, other.order)
        mul = self.alg.mul
        coef = {}
        for a, b in _indices(o):
            acc = None
            for a1 in range(a + 1):
                for b1 in range(b + 1):
                    t = mul(self.coef[a1, b1], other.coef[a - a1, b - b1])
                    acc = t if acc is None else acc + t
            coef[a, b] = acc
        return Jet(coef, o, self.alg)

    def __rmatmul__(self, other):
        return self._other(other) @ self

    def inv(self):
        mul, o = self.alg.mul, self.order
        y0 = self.alg.inv(self.coef[0, 0])
        coef = {(0, 0): y0}
        for a, b in _indices(o)[1:]:
            acc = None
            for a1 in range(a + 1):
                for b1 in range(b + 1):
                    if (a1, b1) == (0, 0):
                        continue
                    t = mul(self.coef[a1, b1], coef[a - a1, b - b1])
                    acc = t if acc is None else acc + t
            coef[a, b] = -mul(y0, acc)
        return Jet(coef, o, self.alg)


# -- complex <-> quaternion bridges ------------------------------------------


def complex_to_quat(j: Jet) -> Jet:
    """Embed a complex jet into R + Ri inside the quaternions."""
    return j.map(Q.qcomplex, QUAT)


def quat_pair(a: Jet, b: Jet) -> Jet:
    """Quaternion jet of a + j b from two complex jets."""
    o = min(a.order, b.order)
    return Jet({ab: Q.from_complex_pair(a.coef[ab], b.coef[ab]) for ab in _indices(o)}, o, QUAT)


def conj(j: Jet) -> Jet:
    if j.alg is QUAT:
        return j.map(Q.qconj)
    if j.alg is COMPLEX:
        return j.map(np.conj)
    raise TypeError(f"conjugation undefined for {j.alg.name}")


def real_part(j: Jet) -> Jet:
    """Real part of a complex jet, kept as a complex jet."""
    return j.map(lambda c: c.real + 0j)


def imag_part(j: Jet) -> Jet:
    return j.map(lambda c: c.imag + 0j)


def polynomial_jet(poly, z, order) -> Jet:
    """Complex jet of a :class:`numpy.polynomial.Polynomial` at z."""
    z = np.asarray(z, dtype=complex)
    derivs = [np.asarray(poly.deriv(m)(z) if m else poly(z), dtype=complex) for m in range(order + 1)]
    return Jet.holomorphic([np.broadcast_to(d, z.shape) for d in derivs], order)


# -- finite-difference fallback ---------------------------------------------


def _fd_partials(fn, z, h, order):
    """Central-difference estimates of all partials up to ``order`` (order <= 3)."""
    z = np.asarray(z, dtype=complex)
    cache = {}

    def val(i, k):
        key = (i, k)
        if key not in cache:
            cache[key] = np.asarray(fn(z + h * (i + 1j * k)))
        return cache[key]

    # 1-D central stencils for derivative orders 0..3 on offsets
    stencils = {
        0: {0: 1.0},
        1: {1: 0.5, -1: -0.5},
        2: {1: 1.0, 0: -2.0, -1: 1.0},
        3: {2: 0.5, 1: -1.0, -1: 1.0, -2: -0.5},
    }
    out = {}
    for a, b in _indices(order):
        acc = 0.0
        for i, wi in stencils[a].items():
            for k, wk in stencils[b].items():
                acc = acc + wi * wk * val(i, k)
        out[a, b] = acc / h ** (a + b)
    return out


def numeric_jet(fn, z, order, h, alg=QUAT) -> Jet:
    """Jet from point values by central differences with one Richardson step."""
    if order > 3:
        raise ValueError("numeric jets are limited to order 3")
    coarse = _fd_partials(fn, z, h, order)
    fine = _fd_partials(fn, z, h / 2, order)
    coef = {}
    for (a, b), c in coarse.items():
        d = (4.0 * fine[a, b] - c) / 3.0 if a + b > 0 else fine[a, b]
        coef[a, b] = d / (factorial(a) * factorial(b))
    return Jet(coef, order, alg)


def jet_from_gradient(fn, dfn, z, order, h, alg=QUAT) -> Jet:
    """Jet from exact values and first partials, higher partials by differences.

    ``dfn(z)`` returns ``(F_x, F_y)``.  Mixed partials are averaged over the two
    differentiation orders.
    """
    z = np.asarray(z, dtype=complex)
    coef = {(0, 0): np.asarray(fn(z))}
    fx, fy = dfn(z)
    if order >= 1:
        coef[1, 0], coef[0, 1] = np.asarray(fx), np.asarray(fy)
    if order >= 2:
        jx = numeric_jet(lambda p: dfn(p)[0], z, order - 1, h, alg)
        jy = numeric_jet(lambda p: dfn(p)[1], z, order - 1, h, alg)
        for a, b in _indices(order):
            if a + b < 2:
                continue
            parts = []
            if a >= 1:
                parts.append(jx.deriv(a - 1, b))
            if b >= 1:
                parts.append(jy.deriv(a, b - 1))
            coef[a, b] = sum(parts) / len(parts) / (factorial(a) * factorial(b))
    return Jet(coef, order, alg)
