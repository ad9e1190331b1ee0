"""Explicit sphere families: round sphere, Bryant spheres from null curves,
Willmore spheres from twistor lifts, and spin-data (Taimanov) spheres."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from . import jets as J
from . import quat as Q
from .rational import Rational, degree, poly, reversed_poly
from .spectral import (AknsProblem, SpectralError, akns_bound_states, integrate_weierstrass,
                       reflectionless_potential, validate_reflectionless)
from .spin import Provenance, SpinData, SpinSection, spin_combine
from .surface import DerivativeProvider, SingularPointError, SurfaceMap

# ---------------------------------------------------------------------------
# round sphere


def _quat_from_real_jets(*parts):
    o = min(p.order for p in parts)
    return J.Jet({ab: np.stack([p.coef[ab].real for p in parts], -1) for ab in J._indices(o)}, o, J.QUAT)


def round_sphere(radius: float = 1.0) -> SurfaceMap:
    """Inverse stereographic projection into Im H (unit sphere by default)."""

    def jet_fn(chart, z, order):
        Z = J.Jet.coordinate(z, order)
        X, Y = J.real_part(Z), J.imag_part(Z)
        if chart == "w":
            # z = 1/w flips y and swaps the poles
            Y = -Y
        r2 = X @ X + Y @ Y
        zero = X.scale(0.0)
        height = (r2 - 1) if chart == "z" else (1 - r2)
        num = _quat_from_real_jets(zero, X.scale(2.0), Y.scale(2.0), height)
        den = _quat_from_real_jets(r2 + 1, zero, zero, zero)
        return (num @ den.inv()).scale(radius)

    return SurfaceMap(jet_fn, name="round_sphere", scale=radius)


# ---------------------------------------------------------------------------
# null curves in the 3-quadric and Bryant spheres


@dataclass(frozen=True)
class NullCurveQ3:
    """Polynomial quintuple [a, b, c, d, e] with ad - bc = e^2."""

    a: Polynomial
    b: Polynomial
    c: Polynomial
    d: Polynomial
    e: Polynomial

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d, self.e)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.stack([p(z) for p in self.entries], axis=-1)

    def quadric_residual(self, z):
        a, b, c, d, e = np.moveaxis(self(z), -1, 0)
        scale = np.max(np.abs(self(z)), axis=-1) ** 2
        return np.abs(a * d - b * c - e * e) / scale

    def coefficient_residual(self) -> float:
        """Max coefficient of ad - bc - e^2 relative to the coefficient scale."""
        r = self.a * self.d - self.b * self.c - self.e * self.e
        scale = max(np.max(np.abs(p.coef)) for p in self.entries) ** 2
        return float(np.max(np.abs(r.coef)) / scale)

    @property
    def degree(self) -> int:
        return max(degree(p) for p in self.entries)

    def at_infinity(self) -> "NullCurveQ3":
        """The same projective curve in the chart w = 1/z (multiplied by w^deg)."""
        D = self.degree
        return NullCurveQ3(*(reversed_poly(p, D) for p in self.entries))

    def chart(self, chart: str) -> "NullCurveQ3":
        return self if chart == "z" else self.at_infinity()


def catenoid_quintuple(mu: int) -> NullCurveQ3:
    mu_c = complex(mu)

    def mono(c, k):
        coef = np.zeros(k + 1, dtype=complex)
        coef[k] = c
        return Polynomial(coef)

    return NullCurveQ3(
        mono(-mu_c, 0),
        mono(mu_c + 1, 2 * mu + 1),
        mono(-(mu_c + 1), 1),
        mono(mu_c, 2 * mu + 2),
        mono(np.sqrt(2 * mu + 1), mu + 1),
    )


def deform_ends(nc: NullCurveQ3, s: complex, t: complex) -> NullCurveQ3:
    """Split the ends: (a,b,c,d,e) -> (a,b,c,s^2a+d-2se,-sa+e), then
    (a,b,c,d,e) -> (a+t^2d-2te,b,c,d,-td+e)."""
    a, b, c, d, e = nc.entries
    d, e = s * s * a + d - 2 * s * e, -s * a + e
    a, e = a + t * t * d - 2 * t * e, -t * d + e
    return NullCurveQ3(a, b, c, d, e)


@dataclass(frozen=True)
class SLNullImmersion:
    """F = (1/e) [[a, b], [c, d]] into SL(2, C)."""

    curve: NullCurveQ3

    def F(self, z, chart="z"):
        a, b, c, d, e = np.moveaxis(self.curve.chart(chart)(z), -1, 0)
        m = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)
        return m / e[..., None, None]

    def det(self, z):
        return np.linalg.det(self.F(z))

    def dF(self, z, chart="z"):
        nc = self.curve.chart(chart)
        z = np.asarray(z, dtype=complex)
        vals = nc(z)
        ders = np.stack([p.deriv()(z) for p in nc.entries], axis=-1)
        X = vals[..., :4].reshape(vals.shape[:-1] + (2, 2))
        Xp = ders[..., :4].reshape(ders.shape[:-1] + (2, 2))
        e, ep = vals[..., 4][..., None, None], ders[..., 4][..., None, None]
        return Xp / e - X * ep / e**2

    def log_derivative(self):
        """dF F^{-1} = (X' adj X - e e' I) / e^2 as a 2x2 matrix of rational functions."""
        a, b, c, d, e = self.curve.entries
        ap, bp, cp, dp, ep = (p.deriv() for p in self.curve.entries)
        den = e * e
        m11 = ap * d - bp * c - e * ep
        m12 = -ap * b + bp * a
        m21 = cp * d - dp * c
        m22 = -cp * b + dp * a - e * ep
        return [[Rational(m11, den).reduced(), Rational(m12, den).reduced()],
                [Rational(m21, den).reduced(), Rational(m22, den).reduced()]]

    def log_derivative_at(self, z, chart="z"):
        F = self.F(z, chart)
        return self.dF(z, chart) @ np.linalg.inv(F)

    def pole_orders(self):
        """Maximal pole order of dF F^{-1} at 0 and at infinity (in the local coordinate)."""
        M = self.log_derivative()
        out = {}
        for pt in (0, np.inf):
            orders = [r.order_at(pt) for row in M for r in row if not r.is_zero()]
            if pt == np.inf:
                # dz = -dw / w^2 lowers the order at infinity by two
                orders = [o - 2 for o in orders]
            out["0" if pt == 0 else "inf"] = -min(orders)
        return out


def bryant_psi_jet(curve: NullCurveQ3, chart, z, order):
    """Quaternionic jets of psi = F (k, 1)^T."""
    nc = curve.chart(chart)
    A, B, C, D, E = (J.polynomial_jet(p, z, order) for p in nc.entries)
    Ei = E.inv()
    k = J.Jet.constant(np.broadcast_to(Q.K, np.shape(z) + (4,)), order, J.QUAT)
    F = [J.complex_to_quat(x @ Ei) for x in (A, B, C, D)]
    return F[0] @ k + F[1], F[2] @ k + F[3]


# the Moebius matrix rows (j, i), (k, 1) sending the null 3-sphere to Im H
IMH_MATRIX = Q.qmat(Q.J, Q.I, Q.K, Q.ONE)


def bryant_surface(curve: NullCurveQ3, name="bryant") -> SurfaceMap:
    def jet_fn(chart, z, order):
        p1, p2 = bryant_psi_jet(curve, chart, z, order)
        x1 = Q.J @ p1 + Q.I @ p2
        x2 = Q.K @ p1 + p2
        return x1 @ x2.inv()

    return SurfaceMap(jet_fn, name=name, meta={"curve": curve})


def catenoid_cousin(mu: int):
    if int(mu) != mu or mu < 1:
        raise ValueError("catenoid cousins with smooth ends need an integer mu >= 1")
    nc = catenoid_quintuple(int(mu))
    return nc, SLNullImmersion(nc), bryant_surface(nc, name=f"catenoid_cousin(mu={mu})")


def bryant_deformed(mu: int, s: complex, t: complex):
    """End-split catenoid cousin labelled by its end order ``mu`` (>= 2).

    The underlying catenoid quintuple has parameter ``mu - 1``; W = 8 pi mu.
    """
    if int(mu) != mu or mu < 2:
        raise ValueError("the end order mu must be an integer >= 2")
    nc = deform_ends(catenoid_quintuple(int(mu) - 1), s, t)
    return nc, SLNullImmersion(nc), bryant_surface(nc, name=f"bryant_deformed(mu={mu}, s={s}, t={t})")


def hyperbolic_gauss(F: SLNullImmersion, z, chart="z"):
    """Kernel line of dF F^{-1}: returns (x in C^2 spanning the kernel, residual report).

    The residual report holds |det|, and the projective distance between the
    kernel and the image lines (they coincide for a null immersion).
    """
    M = F.log_derivative_at(z, chart)
    # kernel of the rank-1 matrix [[m11, m12],[m21, m22]]: pick the better row
    r1 = np.stack([M[..., 0, 1], -M[..., 0, 0]], -1)
    r2 = np.stack([M[..., 1, 1], -M[..., 1, 0]], -1)
    use1 = np.linalg.norm(r1, axis=-1) >= np.linalg.norm(r2, axis=-1)
    ker = np.where(use1[..., None], r1, r2)
    c1, c2 = M[..., :, 0], M[..., :, 1]
    img = np.where((np.linalg.norm(c1, axis=-1) >= np.linalg.norm(c2, axis=-1))[..., None], c1, c2)
    scale = np.linalg.norm(M, axis=(-2, -1))
    det = np.abs(np.linalg.det(M)) / scale**2
    kn = ker / np.linalg.norm(ker, axis=-1, keepdims=True)
    im = img / np.linalg.norm(img, axis=-1, keepdims=True)
    dist = np.abs(kn[..., 0] * im[..., 1] - kn[..., 1] * im[..., 0])
    return ker, {"det": det, "ker_im": dist}


def hyperbolic_gauss_rational(F: SLNullImmersion) -> Rational:
    """The hyperbolic Gauss map as a rational function x1/x2 of the kernel line."""
    M = F.log_derivative()
    m11, m12 = M[0]
    if not m12.is_zero():
        # kernel (m12, -m11)
        return (m12 / (-m11)) if not m11.is_zero() else Rational.of(np.inf)
    m21, m22 = M[1]
    return m22 / (-m21)


# ---------------------------------------------------------------------------
# Willmore spheres from twistor lifts


@dataclass(frozen=True)
class TwistorLift:
    """Polynomial curve phi into C^4 = (H^2, i) in the basis {e1, e1 j, e2, e2 j}."""

    phi: tuple  # four Polynomials

    @classmethod
    def from_coefficients(cls, coeffs) -> "TwistorLift":
        return cls(tuple(poly(c) for c in coeffs))

    @property
    def degree(self) -> int:
        return max(degree(p) for p in self.phi)

    def chart(self, chart: str) -> "TwistorLift":
        if chart == "z":
            return self
        D = self.degree
        return TwistorLift(tuple(reversed_poly(p, D) for p in self.phi))

    def value(self, z, chart="z"):
        z = np.asarray(z, dtype=complex)
        return np.stack([p(z) for p in self.chart(chart).phi], -1)

    def derivative(self, z, k=1, chart="z"):
        z = np.asarray(z, dtype=complex)
        return np.stack([p.deriv(k)(z) if degree(p) >= k else 0 * z for p in self.chart(chart).phi], -1)

    def s_hat(self, z, chart="z"):
        return Q.wedge(self.value(z, chart), self.derivative(z, 1, chart))

    def s_hat_derivative(self, z, chart="z"):
        return Q.wedge(self.value(z, chart), self.derivative(z, 2, chart))

    def null_residuals(self, z):
        """|S^S|, |S^S'|, |S'^S'| relative to |S|^2 (and |S'|^2)."""
        s, sp = self.s_hat(z), self.s_hat_derivative(z)
        ns, nsp = np.linalg.norm(s, axis=-1), np.linalg.norm(sp, axis=-1)
        pair = Q.lambda2_pairing
        return {
            "SS": np.abs(pair(s, s)) / ns**2,
            "SS'": np.abs(pair(s, sp)) / (ns * nsp),
            "S'S'": np.abs(pair(sp, sp)) / nsp**2,
        }

    def polarity(self, z, m=1):
        """<S_hat, e_m> relative to |S_hat|."""
        s = self.s_hat(z)
        return np.abs(Q.lambda2_pairing(s, Q.lambda2_basis(m))) / np.linalg.norm(s, axis=-1)

    def plus(self, extra) -> "TwistorLift":
        """Add a polynomial C^4 curve given by coefficient lists."""
        return TwistorLift(tuple(p + poly(c) for p, c in zip(self.phi, extra)))


EXAMPLE_PHI = TwistorLift.from_coefficients([[0, 1], [0, 0, 0, 1 / 6], [-1], [0, 0, 0.5]])

S_COND_LIMIT = 1e8


class DegenerateSpanError(SingularPointError):
    pass


def _c4_jets(lift: TwistorLift, chart, z, order):
    """Complex jets of phi and phi' coordinates (holomorphic)."""
    L = lift.chart(chart)
    phi = [J.polynomial_jet(p, z, order) for p in L.phi]
    dphi = [J.polynomial_jet(p.deriv(), z, order) for p in L.phi]
    return phi, dphi


def _times_j(v):
    # (a1, b1, a2, b2) j = (-conj b1, conj a1, -conj b2, conj a2)
    return [-J.conj(v[1]), J.conj(v[0]), -J.conj(v[3]), J.conj(v[2])]


def _column_matrix(cols, order):
    coef = {}
    for ab in J._indices(order):
        coef[ab] = np.stack([np.stack([col[r].coef[ab] for col in cols], -1) for r in range(4)], -2)
    return J.Jet(coef, order, J.CMAT)


def twistor_sphere_jet(lift: TwistorLift, chart, z, order, check=True) -> J.Jet:
    """Jet of the quaternionic 2x2 matrix S with S phi = phi i, S phi' = phi' i."""
    phi, dphi = _c4_jets(lift, chart, z, order)
    P = _column_matrix([phi, dphi, _times_j(phi), _times_j(dphi)], order)
    if check:
        cond = np.linalg.cond(P.value)
        if np.any(cond > S_COND_LIMIT):
            raise DegenerateSpanError(f"phi, phi' do not span a twistor-regular plane (cond {np.max(cond):.3g})")
    D = np.diag([1j, 1j, -1j, -1j])
    S = P @ J.Jet.constant(np.broadcast_to(D, P.value.shape), order, J.CMAT) @ P.inv()
    return S.map(Q.c4x4_to_qmat, J.QMAT)


def minkowski_norm(a) -> np.ndarray:
    return Q.HermitianForm.MINKOWSKI(a, a)


def willmore_twistor(lift: TwistorLift, recipe: str = "hermitian", a=None, c=None,
                     e1=None, e2_dual=None, allow_nonnull: bool = False) -> SurfaceMap:
    """Willmore sphere from the twistor lift ``lift``.

    recipe ``"hermitian"``: f = <a, S a> + c with the Minkowski form
    (``a`` must be null unless ``allow_nonnull``); recipe ``"dual"``:
    f = e2*(S e1) + c with e2*(e1) = 0.
    """
    c = np.zeros(4) if c is None else np.asarray(c, float)
    if recipe == "hermitian":
        a = np.asarray(a, float)
        if abs(Q.qabs(minkowski_norm(a))) > 1e-12 and not allow_nonnull:
            raise ValueError("the Hermitian recipe needs a null vector a")
        if abs(c[0]) > 0:
            raise ValueError("c must be imaginary in the Hermitian recipe")

        def read(Sjet):
            Sa = [Sjet.map(lambda m: Q.mat_vec(m, a)[..., r, :], J.QUAT) for r in range(2)]
            return Q.qconj(a[1]) @ Sa[0] + Q.qconj(a[0]) @ Sa[1] + c

    elif recipe == "dual":
        e1 = np.asarray(e1 if e1 is not None else [Q.ONE, np.zeros(4)], float)
        e2_dual = np.asarray(e2_dual if e2_dual is not None else [np.zeros(4), Q.ONE], float)
        if Q.qabs(Q.qmul(e2_dual[0], e1[0]) + Q.qmul(e2_dual[1], e1[1])) > 1e-12:
            raise ValueError("e2*(e1) must vanish")

        def read(Sjet):
            v = Sjet.map(lambda m: Q.mat_vec(m, e1), J.QMAT)
            comps = [v.map(lambda x: x[..., r, :], J.QUAT) for r in range(2)]
            return e2_dual[0] @ comps[0] + e2_dual[1] @ comps[1] + c

    else:
        raise ValueError(f"unknown recipe {recipe!r}")

    def jet_fn(chart, z, order):
        return read(twistor_sphere_jet(lift, chart, z, order))

    return SurfaceMap(jet_fn, name=f"willmore_twistor({recipe})", meta={"lift": lift})


def twistor_projection(lift: TwistorLift) -> SurfaceMap:
    """The twistor holomorphic curve L = [phi] in the affine chart: phi_1 phi_2^{-1}."""

    def jet_fn(chart, z, order):
        L = lift.chart(chart)
        a1, b1, a2, b2 = (J.polynomial_jet(p, z, order) for p in L.phi)
        x1 = J.quat_pair(a1, b1)
        x2 = J.quat_pair(a2, b2)
        return x1 @ x2.inv()

    return SurfaceMap(jet_fn, name="twistor_projection")


# ---------------------------------------------------------------------------
# spin-data spheres


def dirac_potential(N):
    def U(t):
        t = np.asarray(t, dtype=float)
        return (N + 1) * np.exp(-np.abs(t)) / (1 + np.exp(-2 * np.abs(t)))

    return U


def _basis_sections(states, ns, tag):
    return tuple(SpinSection(((st, n, Q.ONE.copy()),), tag) for st, n in zip(states, ns))


def dirac_sphere(N: int) -> SpinData:
    """Potential q = (N+1)/(1+|z|^2) with its N+1 rotational sections."""
    if int(N) != N or N < 0:
        raise ValueError("N must be a nonnegative integer")
    N = int(N)
    U = dirac_potential(N)
    states = akns_bound_states(AknsProblem(U), N + 1.0)
    if [s.n for s in states] != list(range(N + 1)):
        raise SpectralError(f"expected kappa = 1/2 .. {N}+1/2, found {[s.kappa for s in states]}")
    tag = f"dirac(N={N})"
    return SpinData(U, _basis_sections(states, range(N + 1), tag), tuple(range(N + 1)), Provenance.GRID,
                    name=tag, q_closed=lambda z: (N + 1) / (1 + np.abs(z) ** 2))


def norming_constants(n, norming):
    """Norming constants c_j = (-1)^j lambda_j of the reflectionless potential.

    Calibrated on the catenoid cousins n = (0, mu), whose Euclidean potential is the
    two-soliton with c = (lambda_0, -lambda_1) for lambda = ((mu+1)/mu, (mu+1)(2mu+1)/mu).
    """
    lam = np.asarray(norming, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda parameters must be positive")
    return lam * (-1.0) ** np.arange(len(lam))


def taimanov_sphere(n, norming, coeffs=None, validate: bool = True):
    """Rotational soliton potential with kappa_j = n_j + 1/2; returns (SpinData, SurfaceMap).

    ``norming`` are the lambda parameters of the rational formulas, mapped to the
    norming constants of the reflectionless potential by :func:`norming_constants`.
    ``coeffs`` select psi = sum_j psi_j coeffs_j (default psi_0).
    """
    n = [int(v) for v in n]
    if n[0] != 0 or any(b <= a for a, b in zip(n, n[1:])):
        raise ValueError("n must be strictly increasing with n_0 = 0")
    if len(norming) != len(n):
        raise ValueError("one norming parameter per eigenvalue")
    kappas = np.array(n) + 0.5
    U = reflectionless_potential(kappas, norming_constants(n, norming))
    if validate:
        check = validate_reflectionless(U, kappas)
        if not check.ok:
            raise SpectralError(f"reflectionless synthesis rejected: {check.to_json()}")
        states = check.states
    else:
        states = akns_bound_states(AknsProblem(U), kappas[-1] + 0.5)
    tag = f"taimanov(n={tuple(n)}, lambda={tuple(float(v) for v in norming)})"
    sd = SpinData(U, _basis_sections(states, n, tag), tuple(n), Provenance.GRID, name=tag)
    if coeffs is None:
        coeffs = [1.0] + [0.0] * (len(n) - 1)
    section = spin_combine(sd.sections, coeffs)
    return sd, integrate_weierstrass(sd, section)
