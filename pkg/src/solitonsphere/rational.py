"""Rational functions over C as numerator/denominator polynomial pairs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

DEGREE_CAP = 64
ROOT_TOL = 1e-9


def poly(coeffs) -> Polynomial:
    """Polynomial from ascending complex coefficients."""
    return Polynomial(np.asarray(coeffs, dtype=complex))


def monomial(c, k: int) -> Polynomial:
    coef = np.zeros(k + 1, dtype=complex)
    coef[k] = c
    return Polynomial(coef)


def trim(p: Polynomial, tol=0.0) -> Polynomial:
    c = np.asarray(p.coef, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    n = c.size
    while n > 1 and abs(c[n - 1]) <= tol * scale:
        n -= 1
    return Polynomial(c[:n])


def degree(p: Polynomial, tol=1e-14) -> int:
    c = trim(p, tol).coef
    if c.size == 1 and c[0] == 0:
        return -1
    return c.size - 1


def order_at_zero(p: Polynomial, tol=1e-14) -> int:
    """Vanishing order at z = 0 (coefficients below tol·max count as zero)."""
    c = np.asarray(p.coef, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    for k, ck in enumerate(c):
        if abs(ck) > tol * scale:
            return k
    return np.inf


def reversed_poly(p: Polynomial, deg: int) -> Polynomial:
    """w^deg p(1/w)."""
    c = np.zeros(deg + 1, dtype=complex)
    pc = trim(p).coef
    if pc.size > deg + 1:
        raise ValueError("degree exceeds the requested reversal degree")
    c[: pc.size] = pc
    return Polynomial(c[::-1])


@dataclass(frozen=True)
class Rational:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if max(degree(self.num), degree(self.den)) > DEGREE_CAP:
            raise ValueError(f"degree cap {DEGREE_CAP} exceeded")

    @classmethod
    def of(cls, p) -> "Rational":
        if isinstance(p, Rational):
            return p
        if isinstance(p, Polynomial):
            return cls(p, poly([1.0]))
        return cls(poly([p]), poly([1.0]))

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def __add__(self, other):
        o = Rational.of(other)
        return Rational(self.num * o.den + o.num * self.den, self.den * o.den).reduced()

    __radd__ = __add__

    def __neg__(self):
        return Rational(-self.num, self.den)

    def __sub__(self, other):
        return self + (-Rational.of(other))

    def __rsub__(self, other):
        return Rational.of(other) - self

    def __mul__(self, other):
        o = Rational.of(other)
        return Rational(self.num * o.num, self.den * o.den).reduced()

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Rational.of(other)
        return Rational(self.num * o.den, self.den * o.num).reduced()

    def deriv(self) -> "Rational":
        return Rational(self.num.deriv() * self.den - self.num * self.den.deriv(), self.den * self.den).reduced()

    def reduced(self, tol=ROOT_TOL) -> "Rational":
        """Cancel common factors by matching approximate roots."""
        num, den = trim(self.num, 1e-15), trim(self.den, 1e-15)
        if degree(num) <= 0 or degree(den) <= 0:
            return Rational(num, den)
        rn = list(num.roots())
        rd = list(den.roots())
        common = []
        for r in rn:
            scale = max(1.0, abs(r))
            for k, s in enumerate(rd):
                if abs(r - s) < tol * scale * 1e3:
                    common.append(r)
                    rd.pop(k)
                    break
        if not common:
            return Rational(num, den)
        factor = Polynomial.fromroots(common)
        qn, _ = divmod(num, factor)
        qd, _ = divmod(den, factor)
        return Rational(trim(qn, 1e-15), trim(qd, 1e-15))

    def order_at(self, point) -> int:
        """Laurent order at 0 or at infinity (``point == np.inf``); negative means a pole."""
        if point == np.inf:
            return degree(self.den) - degree(self.num)
        if point != 0:
            raise ValueError("only 0 and infinity are supported")
        return order_at_zero(self.num) - order_at_zero(self.den)

    def is_zero(self) -> bool:
        return degree(self.num) < 0
