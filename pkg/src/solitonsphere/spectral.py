"""ZS-AKNS bound states, trace integrals and reflectionless potentials.

The operator is L = [[-d/dx, 2U], [2U, d/dx]] and bound states solve
L nu = -kappa nu, i.e. nu' = A nu with A = [[kappa, 2U], [-2U, -kappa]].
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, CubicSpline

X_DEFAULT = 30.0
H_DEFAULT = 1e-3
KAPPA_STEP = 0.05
KAPPA_TOL = 1e-10
DECAY_TOL = 1e-12
# the kappa scan is shifted off the half-integers, where the Dirac spheres have eigenvalues
_SCAN_OFFSET = 0.2468
_CHUNK = 64


class SpectralError(RuntimeError):
    pass


@dataclass(frozen=True)
class AknsProblem:
    U: Callable
    X: float = X_DEFAULT
    h: float = H_DEFAULT

    @property
    def n_half(self) -> int:
        return int(round(self.X / self.h))

    @cached_property
    def grid(self) -> np.ndarray:
        return np.linspace(-self.X, self.X, 2 * self.n_half + 1)

    @cached_property
    def _U_half(self) -> np.ndarray:
        """U on the half-step grid over [-X, X]."""
        return np.asarray(self.U(np.linspace(-self.X, self.X, 4 * self.n_half + 1)), dtype=float)

    def decay(self) -> float:
        return float(max(abs(self.U(np.array([-self.X])))[0], abs(self.U(np.array([self.X])))[0]))

    def check_decay(self):
        d = self.decay()
        if not d < DECAY_TOL:
            raise SpectralError(f"potential does not decay at +-X: |U| = {d:.3e}")

    def with_step(self, h: float) -> "AknsProblem":
        return AknsProblem(self.U, self.X, h)


# ---------------------------------------------------------------------------
# RK4 propagators


def _mm(X, Y):
    """2x2 matrix product on component tuples (a, b, c, d) = [[a, b], [c, d]]."""
    a, b, c, d = X
    e, f, g, h = Y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _rk4_components(Ua, Um, Ub, kappa, h):
    """Per-step RK4 propagators as component arrays of shape (len(kappa), len(Ua))."""
    k = np.asarray(kappa)[:, None]

    def A(U):
        return (k, 2 * U[None, :], -2 * U[None, :], -k)

    def shifted(s, X):  # I + s X
        return (1 + s * X[0], s * X[1], s * X[2], 1 + s * X[3])

    K1 = A(Ua)
    Am = A(Um)
    K2 = _mm(Am, shifted(h / 2, K1))
    K3 = _mm(Am, shifted(h / 2, K2))
    K4 = _mm(A(Ub), shifted(h, K3))
    out = [h / 6 * (p1 + 2 * p2 + 2 * p3 + p4) for p1, p2, p3, p4 in zip(K1, K2, K3, K4)]
    out[0] = out[0] + 1
    out[3] = out[3] + 1
    return tuple(np.broadcast_to(o, (k.shape[0], len(Ua))) for o in out)


def _rk4_matrices(Ua, Um, Ub, kappa, h):
    """Per-step RK4 propagators, shape (len(kappa), len(Ua), 2, 2)."""
    a, b, c, d = _rk4_components(Ua, Um, Ub, kappa, h)
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def _chain(M):
    """Normalized ordered product M[-1] ... M[0] along axis -3, plus its log scale."""
    if not isinstance(M, tuple):
        M = (M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1])
    log_scale = np.zeros(M[0].shape[:-1])
    while M[0].shape[-1] > 1:
        if M[0].shape[-1] % 2:
            pad = [np.ones(M[0].shape[:-1] + (1,)), np.zeros(M[0].shape[:-1] + (1,))]
            M = tuple(np.concatenate([m, pad[i in (1, 2)]], axis=-1) for i, m in enumerate(M))
        M = _mm(tuple(m[..., 1::2] for m in M), tuple(m[..., 0::2] for m in M))
        s = np.maximum.reduce([np.abs(m) for m in M])
        M = tuple(m / s for m in M)
        log_scale = log_scale + np.log(s).sum(axis=-1)
    P = np.stack([np.stack([M[0][..., 0], M[1][..., 0]], -1), np.stack([M[2][..., 0], M[3][..., 0]], -1)], -2)
    return P, log_scale


def _prefix(M):
    """Inclusive prefix products P[i] = M[i] ... M[0] (Hillis-Steele scan)."""
    P = M.copy()
    shift = 1
    n = P.shape[-3]
    while shift < n:
        P[..., shift:, :, :] = P[..., shift:, :, :] @ P[..., :-shift, :, :]
        shift *= 2
    return P


def _half_steps(p: AknsProblem, side: str):
    """(U at step start, midpoint, end) for the left (-X -> 0) or right (X -> 0) sweep."""
    Uh = p._U_half
    n = p.n_half
    if side == "left":
        idx = np.arange(n) * 2
        return Uh[idx], Uh[idx + 1], Uh[idx + 2], p.h
    idx = 4 * n - np.arange(n) * 2
    return Uh[idx], Uh[idx - 1], Uh[idx - 2], -p.h


def matching_determinant(p: AknsProblem, kappas) -> np.ndarray:
    """det[nu_left(0), nu_right(0)] of the unit-normalized decaying solutions."""
    kappas = np.atleast_1d(np.asarray(kappas, dtype=float))
    out = np.empty(kappas.shape)
    L = _half_steps(p, "left")
    R = _half_steps(p, "right")
    for s in range(0, len(kappas), _CHUNK):
        k = kappas[s:s + _CHUNK]
        PL, _ = _chain(_rk4_components(*L[:3], k, L[3]))
        PR, _ = _chain(_rk4_components(*R[:3], k, R[3]))
        vl = PL[..., :, 0]
        vr = PR[..., :, 1]
        vl = vl / np.linalg.norm(vl, axis=-1, keepdims=True)
        vr = vr / np.linalg.norm(vr, axis=-1, keepdims=True)
        out[s:s + _CHUNK] = vl[:, 0] * vr[:, 1] - vl[:, 1] * vr[:, 0]
    return out


# ---------------------------------------------------------------------------
# bound states


@dataclass(frozen=True)
class BoundState:
    kappa: float
    n: int | None
    x: np.ndarray = field(repr=False)
    nu: np.ndarray = field(repr=False)   # (2, len(x)), unit L^2 norm
    dnu: np.ndarray = field(repr=False)  # exact derivative A nu on the grid
    residual: float = 0.0
    error_estimate: float = 0.0

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.x, self.nu.T, self.dnu.T)

    def __call__(self, t):
        """(nu1, nu2) at arbitrary t, with exponential tails beyond the grid."""
        t = np.asarray(t, dtype=float)
        X0, X1 = self.x[0], self.x[-1]
        inside = np.clip(t, X0, X1)
        v = np.moveaxis(self._spline(inside), -1, 0)
        with np.errstate(under="ignore"):
            left = np.exp(self.kappa * np.minimum(t - X0, 0.0))
            right = np.exp(-self.kappa * np.maximum(t - X1, 0.0))
        return v * (left * right)

    def to_json(self) -> dict:
        return {"kappa": self.kappa, "n": self.n, "residual": self.residual,
                "error_estimate": self.error_estimate}


def _sign_brackets(kgrid, D):
    s = np.sign(D)
    exact = kgrid[s == 0]
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    return [(kgrid[i], kgrid[i + 1]) for i in idx], list(exact)


def _scan(p: AknsProblem, kappa_max: float, step: float):
    kgrid = np.arange(step * _SCAN_OFFSET, kappa_max, step)
    kgrid = np.append(kgrid, kappa_max)
    D = matching_determinant(p, kgrid)
    return _sign_brackets(kgrid, D)


def _bisect(p: AknsProblem, brackets, tol=KAPPA_TOL):
    if not brackets:
        return np.array([])
    lo = np.array([b[0] for b in brackets])
    hi = np.array([b[1] for b in brackets])
    Dlo = matching_determinant(p, lo)
    while np.max(hi - lo) > tol:
        mid = (lo + hi) / 2
        Dm = matching_determinant(p, mid)
        same = np.sign(Dm) == np.sign(Dlo)
        lo = np.where(same, mid, lo)
        Dlo = np.where(same, Dm, Dlo)
        hi = np.where(same, hi, mid)
    return (lo + hi) / 2


def _A_times(U, kappa, nu):
    return np.stack([kappa * nu[0] + 2 * U * nu[1], -2 * U * nu[0] - kappa * nu[1]])


def _eigenfunctions(p: AknsProblem, kappas):
    """Grid eigenfunctions joined at x = 0 and normalized to unit L^2 norm."""
    kappas = np.asarray(kappas, dtype=float)
    if np.any(kappas * p.X > 600):
        raise SpectralError("kappa * X too large for unscaled eigenfunction sweeps")
    x = p.grid
    n = p.n_half
    U = p._U_half[::2]
    out = []
    L = _half_steps(p, "left")
    R = _half_steps(p, "right")
    PL = _prefix(_rk4_matrices(*L[:3], kappas, L[3]))
    PR = _prefix(_rk4_matrices(*R[:3], kappas, R[3]))
    for j, k in enumerate(kappas):
        start = math.exp(-k * p.X)
        left = np.concatenate([[[start, 0.0]], PL[j, :, :, 0] * start])        # x_0 .. x_n
        right = np.concatenate([[[0.0, start]], PR[j, :, :, 1] * start])       # x_2n .. x_n
        v0l, v0r = left[-1], right[-1]
        scale = np.dot(v0r, v0l) / np.dot(v0l, v0l)
        nu = np.concatenate([left[:-1], (right[::-1] / scale)]).T
        norm = math.sqrt(integrate.simpson(nu[0] ** 2 + nu[1] ** 2, x=x))
        nu = nu / norm
        dnu = _A_times(U, k, nu)
        out.append((nu, dnu))
    return x, out


def _eigen_residual(x, U, kappa, nu) -> float:
    h = x[1] - x[0]
    d = (-nu[:, 4:] + 8 * nu[:, 3:-1] - 8 * nu[:, 1:-3] + nu[:, :-4]) / (12 * h)
    r = d - _A_times(U[2:-2], kappa, nu[:, 2:-2])
    return float(math.sqrt(integrate.simpson((r ** 2).sum(0), x=x[2:-2])))


def akns_bound_states(p: AknsProblem, kappa_max: float, step: float = KAPPA_STEP,
                      tol: float = KAPPA_TOL) -> list[BoundState]:
    """All bound states with kappa in (0, kappa_max]."""
    p.check_decay()
    brackets, exact = _scan(p, kappa_max, step)
    fine_brackets, fine_exact = _scan(p, kappa_max, step / 4)
    if len(fine_brackets) + len(fine_exact) != len(brackets) + len(exact):
        warnings.warn(
            f"eigenvalue count mismatch: {len(brackets) + len(exact)} on the step-{step} grid, "
            f"{len(fine_brackets) + len(fine_exact)} on the refined grid; using the refined scan",
            RuntimeWarning,
        )
        brackets, exact = fine_brackets, fine_exact
    kappas = np.sort(np.concatenate([_bisect(p, brackets, tol), np.asarray(exact, float)]))
    if kappas.size == 0:
        return []
    # step-halving error estimate: shift of the root when h -> h/2
    half = p.with_step(p.h / 2)
    dk = 1e-6
    slope = (matching_determinant(p, kappas + dk) - matching_determinant(p, kappas - dk)) / (2 * dk)
    err = np.abs(matching_determinant(half, kappas) / slope)
    x, funcs = _eigenfunctions(p, kappas)
    U = p._U_half[::2]
    states = []
    for k, e, (nu, dnu) in zip(kappas, err, funcs):
        n = int(round(k - 0.5))
        n = n if n >= 0 and abs(k - (n + 0.5)) < 1e-6 else None
        states.append(BoundState(float(k), n, x, nu, dnu, _eigen_residual(x, U, k, nu), float(e)))
    return states


def inner_product(a: BoundState, b: BoundState) -> float:
    return float(integrate.simpson((a.nu * b.nu).sum(0), x=a.x))


def trace_integral(U) -> float:
    """2 int U^2 dx."""
    if isinstance(U, AknsProblem):
        U = U.U

    def f(x):
        return float(np.asarray(U(np.array([x])))[0]) ** 2

    total = 0.0
    for a, b in ((-np.inf, 0.0), (0.0, np.inf)):
        val, _ = integrate.quad(f, a, b, epsabs=1e-11, epsrel=1e-12, limit=400)
        total += val
    return 2 * total


# ---------------------------------------------------------------------------
# reflectionless potentials


def reflectionless_potential(kappas, norming) -> Callable:
    """U(x) = Re[1^T (Lam + i C)^{-1} 1] with Lam = diag(e^{2 kappa x} / c), C = 1/(kappa_j + kappa_l).

    One soliton gives kappa sech(2 kappa (x - x0)) with e^{2 kappa x0} = c / (2 kappa);
    a negative c flips the sign of that soliton.
    """
    k = np.asarray(kappas, dtype=float)
    c = np.asarray(norming, dtype=float)
    if k.ndim != 1 or k.shape != c.shape or np.any(k <= 0) or np.any(c == 0):
        raise ValueError("need positive kappas and nonzero norming constants of matching length")
    if len(set(np.round(k, 12))) != len(k):
        raise ValueError("kappas must be pairwise distinct")
    C = 1.0 / (k[:, None] + k[None, :])
    m = len(k)

    def U(x):
        x = np.asarray(x, dtype=float)
        xs = x.reshape(-1)
        out = np.empty(xs.shape)
        neg = xs <= 0
        if neg.any():
            lam = np.exp(2 * k[None, :] * xs[neg, None]) / c
            M = 1j * np.broadcast_to(C, (lam.shape[0], m, m)).copy()
            M[:, np.arange(m), np.arange(m)] += lam
            out[neg] = np.linalg.solve(M, np.ones((lam.shape[0], m, 1), complex))[..., 0].sum(-1).real
        if (~neg).any():
            # scaled form (I + i Lam^{-1} C) v = Lam^{-1} 1, stable for large x
            linv = c * np.exp(-2 * k[None, :] * xs[~neg, None])
            M = 1j * linv[:, :, None] * C[None]
            M[:, np.arange(m), np.arange(m)] += 1.0
            out[~neg] = np.linalg.solve(M, linv[..., None].astype(complex))[..., 0].sum(-1).real
        return out.reshape(x.shape)

    return U


def transmission(p: AknsProblem, k: float):
    """(|T|, |reflection|) for the real spectral parameter k (kappa = i k)."""
    U = p._U_half
    n2 = 2 * p.n_half
    idx = np.arange(n2) * 2
    M = _rk4_components(U[idx], U[idx + 1], U[idx + 2], np.array([1j * k]), p.h)
    P, log_scale = _chain(M)
    start = np.exp(-1j * k * p.X)
    v = P[0, :, 0] * start * math.exp(log_scale[0])
    a = v[0] * np.exp(-1j * k * p.X)
    b = v[1] * np.exp(1j * k * p.X)
    return float(1 / abs(a)), float(abs(b / a))


@dataclass
class ReflectionlessCheck:
    kappas: list
    found: list
    max_kappa_error: float
    transmission: dict
    trace: float
    ok: bool
    states: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"kappas": self.kappas, "found": self.found, "max_kappa_error": self.max_kappa_error,
                "transmission": {str(k): v for k, v in self.transmission.items()},
                "trace": self.trace, "ok": self.ok}


def validate_reflectionless(U, kappas, probes=(0.5, 1.0, 2.0), kappa_tol=1e-6, t_tol=1e-4,
                            X: float = X_DEFAULT) -> ReflectionlessCheck:
    p = AknsProblem(U, X)
    kappas = sorted(float(k) for k in kappas)
    states = akns_bound_states(p, max(kappas) + 0.5)
    found = [s.kappa for s in states]
    if len(found) == len(kappas):
        kerr = float(np.max(np.abs(np.array(found) - kappas)))
    else:
        kerr = math.inf
    trans = {k: transmission(p, k)[0] for k in probes}
    ok = kerr < kappa_tol and all(abs(t - 1) < t_tol for t in trans.values())
    return ReflectionlessCheck(kappas, found, kerr, trans, trace_integral(U), ok, states)


# ---------------------------------------------------------------------------
# import / export


def potential_to_csv(path, U, X: float = X_DEFAULT, n: int = 6001):
    x = np.linspace(-X, X, n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "U"])
        w.writerows(zip(x.tolist(), np.asarray(U(x)).tolist()))


def potential_from_csv(path) -> Callable:
    """Cubic-spline potential from a two-column (x, U) CSV; zero outside the sampled range."""
    data = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            try:
                data.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header
    x, u = np.array(data).T
    spline = CubicSpline(x, u)

    def U(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= x[0]) & (t <= x[-1]), spline(np.clip(t, x[0], x[-1])), 0.0)

    return U


def bound_states_to_json(states, path=None) -> str:
    text = json.dumps([s.to_json() for s in states], indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Dirac equation and Weierstrass integration


def _d4(fn, z, step):
    """Fourth-order central difference of fn along the complex direction of ``step``."""
    f2p, f1p, f1m, f2m = (fn(z + c * step) for c in (2, 1, -1, -2))
    return [(-a + 8 * b - 8 * c + d) / (12 * abs(step)) for a, b, c, d in zip(f2p, f1p, f1m, f2m)]


def dirac_residual(sd, section=None, n: int = 64, seed: int = 0, radii=(0.2, 5.0)) -> float:
    """max |q mu1 + d mu2| + |-dbar mu1 + q mu2| over random samples, relative to the local size of mu.

    ``section`` may be any callable z -> (mu1, mu2); by default every basis section is checked.
    """
    sections = sd.sections if section is None else [section]
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(np.log(radii[0]), np.log(radii[1]), n))
    z = r * np.exp(1j * rng.uniform(0, 2 * math.pi, n))
    qz = sd.q("z", z)
    worst = 0.0
    for mu in sections:
        h = 1e-3 * np.abs(z)
        m1, m2 = mu(z)
        m1x, m2x = _d4(mu, z, h)
        m1y, m2y = _d4(mu, z, 1j * h)
        d_m2 = 0.5 * (m2x - 1j * m2y)
        db_m1 = 0.5 * (m1x + 1j * m1y)
        res = np.abs(qz * m1 + d_m2) + np.abs(-db_m1 + qz * m2)
        scale = np.abs(m1) + np.abs(m2) + np.abs(d_m2) + np.abs(db_m1)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(scale > 0, res / scale, 0.0)
        worst = max(worst, float(np.max(rel)))
    return worst


def weierstrass_circulation(mu, n_loops: int = 100, seed: int = 0, n_nodes: int = 256) -> float:
    """max over random circles of |closed integral of df| / loop length."""
    from .spin import weierstrass_df

    rng = np.random.default_rng(seed)
    worst = 0.0
    th = 2 * math.pi * np.arange(n_nodes) / n_nodes
    for _ in range(n_loops):
        c = complex(*rng.uniform(-2, 2, 2))
        rad = rng.uniform(0.05, 1.0)
        z = c + rad * np.exp(1j * th)
        dz = 1j * rad * np.exp(1j * th) * (2 * math.pi / n_nodes)
        fx, fy = weierstrass_df(*mu(z))
        circ = (fx * dz.real[:, None] + fy * dz.imag[:, None]).sum(0)
        worst = max(worst, float(np.linalg.norm(circ)) / (2 * math.pi * rad))
    return worst


def integrate_weierstrass(sd, section=None, tol: float = 1e-6):
    """Surface f with df = (psi, psi) for a section of rotational spin data."""
    from .spin import spin_surface

    section = sd.sections[0] if section is None else section
    res = dirac_residual(sd, section)
    if not res < tol:
        raise SpectralError(f"Dirac residual {res:.3e} exceeds {tol:g}: the one-form is not closed")
    return spin_surface(sd, section)
