"""Spin data (potential plus Dirac spinors) and the Weierstrass integration df = (psi, psi).

Spinors are written mu = (mu1, mu2) with psi = phi (mu1 + k mu2).  For rotational
data z = e^{t + i theta} and the reduced spinor m = e^{t/2} mu is bounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import quat as Q
from .surface import SurfaceMap


class Provenance(str, Enum):
    CLOSED_FORM = "closed_form"
    GRID = "grid"


class SpinError(ValueError):
    pass


# ---------------------------------------------------------------------------
# right multiplication of spinors by quaternions


def spin_combine_values(mus, lambdas):
    """sum_j (mu1_j + k mu2_j) lambda_j for lambda_j = alpha_j + j beta_j, as (mu1, mu2)."""
    mu1 = 0j
    mu2 = 0j
    for (m1, m2), lam in zip(mus, lambdas):
        alpha, beta = Q.complex_split(np.asarray(lam, dtype=float))
        mu1 = mu1 + m1 * alpha - 1j * np.conj(m2) * beta
        mu2 = mu2 + m2 * alpha + 1j * np.conj(m1) * beta
    return mu1, mu2


def spinor_to_quat(mu1, mu2):
    """mu1 + k mu2 as a quaternion array."""
    mu1, mu2 = np.broadcast_arrays(np.asarray(mu1, complex), np.asarray(mu2, complex))
    return np.stack([mu1.real, mu1.imag, mu2.imag, mu2.real], -1)


def quat_to_spinor(q):
    q = np.asarray(q, dtype=float)
    return q[..., 0] + 1j * q[..., 1], q[..., 3] + 1j * q[..., 2]


# ---------------------------------------------------------------------------
# Weierstrass one-form


def _j_times(w):
    """j w for complex w, as the (j, k) quaternion components."""
    return w.real, -w.imag


def weierstrass_df(mu1, mu2):
    """(f_x, f_y) of df = -i 2Re(conj(mu2) mu1 dz) + j (mu2^2 dzbar - mu1^2 dz)."""
    a = np.conj(mu2) * mu1
    s, d = mu2 ** 2, mu1 ** 2
    out = []
    for dz in (1.0, 1j):
        w = s * np.conj(dz) - d * dz
        wj, wk = _j_times(w)
        out.append(np.stack([np.zeros_like(wj), -2 * (a * dz).real, wj, wk], -1))
    return tuple(out)


def weierstrass_polar(m1, m2, theta):
    """(f_t, f_theta) for reduced spinors m = e^{t/2} mu at z = e^{t + i theta}."""
    e = np.exp(1j * theta)
    a = np.conj(m2) * m1 * e
    s = m2 ** 2 * np.conj(e)
    d = m1 ** 2 * e
    out = []
    for unit in (1.0, 1j):  # dz = z (dt + i dtheta)
        w = s * np.conj(unit) - d * unit
        wj, wk = _j_times(w)
        out.append(np.stack([np.zeros_like(wj), -2 * (a * unit).real, wj, wk], -1))
    return tuple(out)


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class SpinSection:
    """psi = sum_j psi_j lambda_j over rotational basis sections psi_j.

    ``terms`` holds (bound state, n_j, lambda_j) with the basis spinor
    m = (nu1(t) e^{i n theta}, nu2(t) e^{i (n+1) theta}).
    """

    terms: tuple
    potential: str

    def reduced(self, t, theta):
        t, theta = np.broadcast_arrays(np.asarray(t, float), np.asarray(theta, float))
        mus = []
        for state, n, _ in self.terms:
            nu1, nu2 = state(t)
            mus.append((nu1 * np.exp(1j * n * theta), nu2 * np.exp(1j * (n + 1) * theta)))
        return spin_combine_values(mus, [lam for _, _, lam in self.terms])

    def __call__(self, z):
        """(mu1, mu2) in the z chart."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(z)
            m1, m2 = self.reduced(np.log(r), np.angle(z))
            return m1 / np.sqrt(r), m2 / np.sqrt(r)

    @property
    def ns(self):
        return tuple(n for _, n, _ in self.terms)

    @property
    def max_mode(self) -> int:
        return max(self.ns)

    def axis_order(self) -> int:
        """Vanishing order of psi at z = 0 and z = infinity."""
        return min(n for _, n, lam in self.terms if np.any(np.asarray(lam) != 0))

    def combine(self, lam) -> "SpinSection":
        lam = np.asarray(lam, dtype=float)
        return SpinSection(tuple((s, n, Q.qmul(l, lam)) for s, n, l in self.terms), self.potential)


def spin_combine(sections, lambdas) -> SpinSection:
    """Quaternionic linear combination sum_j psi_j lambda_j (right multiplication)."""
    sections = list(sections)
    if len({s.potential for s in sections}) > 1:
        raise SpinError("sections belong to different potentials")
    if len(lambdas) != len(sections):
        raise SpinError("one quaternion per section")
    terms = []
    for s, lam in zip(sections, lambdas):
        terms.extend(s.combine(Q.as_quat(lam)).terms)
    return SpinSection(tuple(terms), sections[0].potential)


@dataclass(frozen=True)
class SpinData:
    """Rotational potential U(t) = q(e^t) e^t with its rotational basis sections."""

    U: Callable
    sections: tuple
    n: tuple
    provenance: Provenance
    name: str = "spin"
    rotational: bool = True
    q_closed: Callable | None = field(default=None, compare=False)
    meta: dict = field(default_factory=dict, compare=False)

    def q(self, chart, z):
        """Potential in either chart (q(1/w) |w|^{-2} in the w chart)."""
        z = np.asarray(z, dtype=complex)
        if self.q_closed is not None:
            if chart == "z":
                return self.q_closed(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                return self.q_closed(1 / z) / np.abs(z) ** 2
        r = np.abs(z)
        with np.errstate(divide="ignore"):
            t = np.log(r) if chart == "z" else -np.log(r)
        return self.U(t) / r

    def section(self, j: int = 0) -> SpinSection:
        return self.sections[j]

    def combined(self, lambdas) -> SpinSection:
        return spin_combine(self.sections, lambdas)


# ---------------------------------------------------------------------------
# integration


# the axis points z = 0, w = 0 are evaluated as limits from this radius
_AXIS_EPS = 1e-150


def _off_axis(z):
    z = np.asarray(z, dtype=complex)
    return np.where(z == 0, _AXIS_EPS, z)


def _polar(chart, z):
    z = _off_axis(z)
    r = np.abs(z)
    with np.errstate(divide="ignore"):
        t = np.log(r)
    theta = np.angle(z)
    return (t, theta) if chart == "z" else (-t, -theta)


@dataclass(frozen=True)
class RotationalIntegrator:
    """f(t, theta) = F0(t) + (zero-mean angular antiderivative of f_theta).

    F0 is the radial integral of the angular mean of f_t from the axis point z = 0.
    """

    section: SpinSection

    @property
    def n_angles(self) -> int:
        return 8 * (self.section.max_mode + 1)

    def derivatives(self, t, theta):
        m1, m2 = self.section.reduced(t, theta)
        return weierstrass_polar(m1, m2, theta)

    @cached_property
    def _radial(self):
        x = self.section.terms[0][0].x
        M = self.n_angles
        th = 2 * math.pi * np.arange(M) / M
        g = np.zeros((len(x), 4))
        for s in range(0, len(x), 4096):
            ft, _ = self.derivatives(x[s:s + 4096, None], th[None, :])
            g[s:s + 4096] = ft.mean(axis=1)
        h = x[1] - x[0]
        dg = np.gradient(g, h, axis=0, edge_order=2)
        # trapezoid with endpoint correction (fourth order)
        steps = h / 2 * (g[1:] + g[:-1]) + h ** 2 / 12 * (dg[:-1] - dg[1:])
        F0 = np.concatenate([np.zeros((1, 4)), np.cumsum(steps, axis=0)])
        return x, CubicHermiteSpline(x, F0, g)

    def radial(self, t):
        x, spline = self._radial
        return spline(np.clip(t, x[0], x[-1]))

    def angular(self, t, theta):
        M = self.n_angles
        shifts = 2 * math.pi * np.arange(M) / M
        t = np.asarray(t, float)[..., None]
        th = np.asarray(theta, float)[..., None] + shifts
        _, fth = self.derivatives(t, th)
        c = np.fft.fft(fth, axis=-2) / M
        m = np.fft.fftfreq(M, 1.0 / M)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(m == 0, 0.0, 1.0 / (1j * m))
        return (c * w[:, None]).sum(axis=-2).real

    def value(self, t, theta):
        return self.radial(t) + self.angular(t, theta)


def chart_partials(chart, z, f_t, f_th):
    """Cartesian chart partials from (f_t, f_theta) of z = e^{t + i theta}."""
    z = np.asarray(z, dtype=complex)
    if chart == "w":  # w = 1/z reverses both polar coordinates
        f_t, f_th = -f_t, -f_th
    x, y = z.real[..., None], z.imag[..., None]
    r2 = x ** 2 + y ** 2
    return (x * f_t - y * f_th) / r2, (y * f_t + x * f_th) / r2


def spin_surface(sd: SpinData, section: SpinSection, name: str | None = None) -> SurfaceMap:
    """SurfaceMap (GRADIENT provider) of f = int (psi, psi)."""
    integ = RotationalIntegrator(section)

    def fn(chart, z):
        t, th = _polar(chart, z)
        return integ.value(t, th)

    def dfn(chart, z):
        t, th = _polar(chart, z)
        f_t, f_th = integ.derivatives(t, th)
        return chart_partials(chart, _off_axis(z), f_t, f_th)

    order = section.axis_order()
    branch = (("z", 0j), ("w", 0j)) if order > 0 else ()
    return SurfaceMap.from_gradient(
        fn, dfn, h=1e-3, name=name or f"{sd.name}/section", known_branch_points=branch,
        meta={"spin": sd, "section": section, "integrator": integ, "axis_branch_order": 2 * order},
    )
