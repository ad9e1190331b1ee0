"""Darboux and Backlund transforms in affine coordinates.

A Darboux pair is (f, g, h) with df g + dh = 0; the transform is
f# = f + h g^{-1}.  The 1-step forward Backlund transform integrates the
closed form w of a Willmore surface; the 2-step transforms are the kernel
line of A and the image line of Q.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets as J
from . import quat as Q
from .constructions import NullCurveQ3, SLNullImmersion, bryant_psi_jet, hyperbolic_gauss_rational
from .surface import (DerivativeProvider, SurfaceMap, chart_samples, hopf_data, normals, residuals)

CLOSED_TOL = 1e-6
CLASSIFY_TOL = 1e-5
# absolute circulation floor (per unit loop length) below which a form counts as zero
ZERO_FORM_FLOOR = 1e-10
# relative size below which a Hopf field counts as identically zero
ZERO_FIELD_REL = 1e-8

_GRID_SHIFT = 0.31 + 0.17j
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


class TransformError(ValueError):
    """The input does not define the requested transform; ``report`` holds the residuals."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report or {}


# ---------------------------------------------------------------------------
# one-forms: loops and path integrals

Form = Callable  # form(chart, z) -> (omega_x, omega_y), each (..., 4)


def _segment_integral(form, chart, a, b, pieces=4):
    """Composite 8-point Gauss-Legendre integral of a form along straight segments a -> b."""
    a, b = np.broadcast_arrays(np.asarray(a, complex), np.asarray(b, complex))
    d = (b - a) / pieces
    total = np.zeros(a.shape + (4,))
    mass = np.zeros(a.shape)
    for p in range(pieces):
        start = a + p * d
        pts = start[..., None] + d[..., None] * (_GL_X + 1) / 2
        wx, wy = form(chart, pts)
        v = wx * d.real[..., None, None] + wy * d.imag[..., None, None]
        total += np.einsum("...nc,n->...c", v, _GL_W) / 2
        mass += np.einsum("...n,n->...", Q.qabs(v), _GL_W) / 2
    return total, mass


def loop_cells(n_loops=100, cell=0.1, radius=0.9, seed=0):
    """Square grid-cell loops (chart, lower-left corner, side) spread over both charts."""
    rng = np.random.default_rng(seed)
    out = []
    for chart in ("z", "w"):
        m = n_loops // 2
        r = radius * np.sqrt(rng.uniform(0.0, 1.0, m))
        t = rng.uniform(0, 2 * np.pi, m)
        c = r * np.exp(1j * t)
        # generic grid offset keeps loop edges off the chart origin and the real axis
        out.append((chart, (np.round(c / cell) + _GRID_SHIFT) * cell, cell))
    return out


def circulation(form, chart, corners, side):
    """|loop integral| over the boundary of the square cells and the integral of |form|."""
    corners = np.asarray(corners, complex)
    vs = [corners, corners + side, corners + side * (1 + 1j), corners + 1j * side, corners]
    tot = np.zeros(corners.shape + (4,))
    mass = np.zeros(corners.shape)
    for a, b in zip(vs[:-1], vs[1:]):
        t, m = _segment_integral(form, chart, a, b, pieces=4)
        tot += t
        mass += m
    return Q.qabs(tot), mass


def closedness_residual(form, n_loops=100, seed=0, floor=ZERO_FORM_FLOOR) -> dict:
    """Relative circulations on grid-cell loops.  Non-finite loops (singular cells) are skipped."""
    rel, skipped = [], 0
    for chart, corners, side in loop_cells(n_loops, seed=seed):
        with np.errstate(all="ignore"):
            c, m = circulation(form, chart, corners, side)
        ok = np.isfinite(c) & np.isfinite(m)
        skipped += int(np.sum(~ok))
        rel.append(c[ok] / np.maximum(m[ok], floor * 4 * side))
    rel = np.concatenate(rel)
    return {"max": float(rel.max()) if rel.size else np.nan, "mean": float(rel.mean()) if rel.size else np.nan,
            "loops": int(rel.size), "skipped": skipped}


def _path_integral(form, chart, base, z):
    """Integral from ``base`` to z; a straight path, else a detour through a rotated midpoint."""
    z = np.asarray(z, complex)
    with np.errstate(all="ignore"):
        val, _ = _segment_integral(form, chart, base, z)
        bad = ~np.all(np.isfinite(val), axis=-1)
        if np.any(bad):
            zb = z[bad]
            mid = (base + zb) / 2 + 0.5j * (zb - base)
            v1, _ = _segment_integral(form, chart, base, mid)
            v2, _ = _segment_integral(form, chart, mid, zb)
            val[bad] = v1 + v2
    return val


def integrate_form(form, base=0j, base_value=None, name="integral", meta=None) -> SurfaceMap:
    """GRADIENT SurfaceMap G with dG = form and G(base) = base_value (z chart).

    The w chart is anchored at w = 1 (the point z = 1) so both charts describe one map.
    """
    base_value = np.zeros(4) if base_value is None else np.asarray(base_value, float)
    anchor = base_value + _path_integral(form, "z", base, np.array(1.0 + 0j))

    def fn(chart, z):
        z = np.asarray(z, complex)
        if chart == "z":
            return base_value + _path_integral(form, "z", base, z)
        return anchor + _path_integral(form, "w", 1.0 + 0j, z)

    def dfn(chart, z):
        return form(chart, z)

    return SurfaceMap.from_gradient(fn, dfn, h=1e-3, name=name, meta=meta or {})


# ---------------------------------------------------------------------------
# Darboux pairs


def _combine_provider(*maps) -> DerivativeProvider:
    provs = {m.provider for m in maps}
    for p in (DerivativeProvider.NUMERIC, DerivativeProvider.GRADIENT):
        if p in provs:
            return p
    return DerivativeProvider.EXACT


def inverse_map(s: SurfaceMap, name=None) -> SurfaceMap:
    return SurfaceMap(lambda chart, z, order: s.jet_fn(chart, z, order).inv(), provider=s.provider,
                      name=name or f"{s.name}^-1", scale=s.scale)


@dataclass(frozen=True)
class DarbouxPair:
    f: SurfaceMap
    g: SurfaceMap
    h: SurfaceMap
    meta: dict = field(default_factory=dict, compare=False)

    def sharp(self) -> SurfaceMap:
        """f# = f + h g^{-1}."""
        f, g, h = self.f, self.g, self.h

        def jet_fn(chart, z, order):
            return f.jet_fn(chart, z, order) + h.jet_fn(chart, z, order) @ g.jet_fn(chart, z, order).inv()

        return SurfaceMap(jet_fn, provider=_combine_provider(f, g, h), name=f"darboux({f.name})")

    def g_inv(self) -> SurfaceMap:
        return inverse_map(self.g)

    def h_inv(self) -> SurfaceMap:
        return inverse_map(self.h)

    def regular(self, chart, z, rel=1e-3):
        """Drop sample points inside the excluded disks around zeros of g and h."""
        z = np.asarray(z, complex)
        ng, nh = Q.qabs(self.g(z, chart)), Q.qabs(self.h(z, chart))
        ok = (ng > rel * np.median(ng)) & (nh > rel * np.median(nh))
        ok &= np.isfinite(ng) & np.isfinite(nh)
        return z[ok]

    def _samples(self, samples):
        if samples is None:
            samples = chart_samples(50, 0)
        return [(c, self.regular(c, p)) for c, p in samples]

    def compatibility_residual(self, samples=None) -> float:
        """max (|f_x g + h_x| + |f_y g + h_y|) / (|df| |g|)."""
        worst = 0.0
        for chart, z in self._samples(samples):
            fx, fy = self.f.partials(z, chart)
            hx, hy = self.h.partials(z, chart)
            g = self.g(z, chart)
            r = Q.qabs(Q.qmul(fx, g) + hx) + Q.qabs(Q.qmul(fy, g) + hy)
            worst = max(worst, float(np.max(r / (Q.qabs(fx) * Q.qabs(g)))))
        return worst

    def identity_residuals(self, samples=None) -> dict:
        """df# = h d(g^{-1}), R_{f#} = R_{g^{-1}} and N_{f#} = -R_{h^{-1}}."""
        fs, gi, hi = self.sharp(), self.g_inv(), self.h_inv()
        out = {"dsharp": 0.0, "R_sharp": 0.0, "N_sharp": 0.0}
        for chart, z in self._samples(samples):
            sx, sy = fs.partials(z, chart)
            gx, gy = gi.partials(z, chart)
            h = self.h(z, chart)
            d = Q.qabs(sx - Q.qmul(h, gx)) + Q.qabs(sy - Q.qmul(h, gy))
            out["dsharp"] = max(out["dsharp"], float(np.max(d / (Q.qabs(sx) + Q.qabs(sy)))))
            Ns, Rs = normals(fs, z, chart)
            _, Rg = normals(gi, z, chart)
            _, Rh = normals(hi, z, chart)
            out["R_sharp"] = max(out["R_sharp"], float(np.max(Q.qabs(Rs - Rg))))
            out["N_sharp"] = max(out["N_sharp"], float(np.max(Q.qabs(Ns + Rh))))
        return out


def darboux(f: SurfaceMap, g: SurfaceMap, base=0j, tol: float = CLOSED_TOL, n_loops: int = 100) -> DarbouxPair:
    """Darboux pair of f defined by g: h solves dh = -df g (which must be closed)."""

    def form(chart, z):
        fx, fy = f.partials(z, chart)
        gv = g(z, chart)
        return -Q.qmul(fx, gv), -Q.qmul(fy, gv)

    report = closedness_residual(form, n_loops)
    if not report["max"] < tol:
        raise TransformError(f"-df g is not closed (relative circulation {report['max']:.3g})", report)
    h = integrate_form(form, base, name=f"darboux_h({f.name})")
    return DarbouxPair(f, g, h, meta={"closedness": report})


def bryant_darboux_pair(curve: NullCurveQ3) -> DarbouxPair:
    """The hyperbolic Gauss map of a Bryant sphere as a Darboux transform, with exact jets.

    With psi = F (k, 1)^T and x spanning ker(dF F^{-1}), psi# = x <psi, x>^{-1} for
    <x, y> = conj(x2) j y1 - conj(x1) j y2; (g, h) are read off in the Im H chart.
    """
    gauss = {c: hyperbolic_gauss_rational(SLNullImmersion(curve.chart(c))) for c in ("z", "w")}

    def jets(chart, z, order):
        p1, p2 = bryant_psi_jet(curve, chart, z, order)
        x1 = J.complex_to_quat(J.polynomial_jet(gauss[chart].num, z, order))
        x2 = J.complex_to_quat(J.polynomial_jet(gauss[chart].den, z, order))
        ipi = (J.conj(p2) @ Q.J @ x1 - J.conj(p1) @ Q.J @ x2).inv()
        s1, s2 = x1 @ ipi, x2 @ ipi
        y1, y2 = Q.J @ s1 + Q.I @ s2, Q.K @ s1 + s2
        f = (Q.J @ p1 + Q.I @ p2) @ (Q.K @ p1 + p2).inv()
        return f, y2, y1 - f @ y2

    maps = [SurfaceMap(lambda chart, z, order, k=k: jets(chart, z, order)[k], name=nm)
            for k, nm in enumerate(("bryant", "bryant_g", "bryant_h"))]
    return DarbouxPair(*maps, meta={"curve": curve})


def classify_darboux(p: DarbouxPair, samples=None, threshold: float = CLASSIFY_TOL) -> dict:
    """TWISTOR (g twistor holomorphic), UMBILIC (also h^{-1} Euclidean minimal),
    PLANAR (g^{-1} and h^{-1} both twistor holomorphic and Euclidean minimal)."""
    samples = p._samples(samples)
    rg = residuals(p.g, samples, threshold)
    rgi = residuals(p.g_inv(), samples, threshold)
    rhi = residuals(p.h_inv(), samples, threshold)
    tw = rg.twistor[0] < threshold
    flags = {
        "TWISTOR": bool(tw),
        "UMBILIC": bool(tw and rhi.minimality[0] < threshold),
        "PLANAR": bool(max(rgi.twistor[0], rgi.minimality[0], rhi.twistor[0], rhi.minimality[0]) < threshold),
    }
    return {
        "flags": flags,
        "residuals": {
            "g_twistor": rg.twistor[0],
            "g_inv_twistor": rgi.twistor[0],
            "g_inv_minimal": rgi.minimality[0],
            "h_inv_twistor": rhi.twistor[0],
            "h_inv_minimal": rhi.minimality[0],
        },
    }


# ---------------------------------------------------------------------------
# Backlund transforms


def _w_form(f: SurfaceMap):
    def form(chart, z):
        d = hopf_data(f, z, chart)
        return d.w_x, d.w_y

    return form


def constant_map(value, name="constant") -> SurfaceMap:
    value = np.asarray(value, float)

    def jet_fn(chart, z, order):
        z = np.asarray(z, complex)
        return J.Jet.constant(np.broadcast_to(value, z.shape + (4,)).copy(), order, J.QUAT)

    return SurfaceMap(jet_fn, name=name, meta={"constant": True})


def _qmat_size(m):
    return np.linalg.norm(Q.qmat_to_c4x4(m), axis=(-2, -1))


def hopf_field_vanishes(f: SurfaceMap, which: str = "A", samples=None, rel: float = ZERO_FIELD_REL) -> bool:
    """A (or Q) vanishes identically: |A_x| <= rel max(1, |dS|) at all sample points."""
    samples = samples if samples is not None else chart_samples(32, 1)
    for chart, z in samples:
        d = hopf_data(f, z, chart)
        m = d.A_x if which == "A" else d.Q_x
        if np.any(_qmat_size(m) > rel * np.maximum(1.0, _qmat_size(d.S_x))):
            return False
    return True


def backlund1_forward(f: SurfaceMap, base=0j, tol: float = CLOSED_TOL, n_loops: int = 100) -> SurfaceMap:
    """1-step forward transform: g with dg = w, up to an additive constant.

    Twistor holomorphic input (A = 0, hence w = 0) gives a constant g.
    """
    if hopf_field_vanishes(f, "A"):
        return constant_map(np.zeros(4), name=f"backlund1({f.name})")
    form = _w_form(f)
    report = closedness_residual(form, n_loops)
    if not report["max"] < tol:
        raise TransformError(f"w is not closed, f is not Willmore (relative circulation {report['max']:.3g})",
                             report)
    return integrate_form(form, base, name=f"backlund1({f.name})", meta={"closedness": report})


@dataclass
class Backlund2Result:
    """Pointwise lines of a 2-step transform at the sample points."""

    direction: str
    samples: list  # (chart, z)
    lines: list  # (..., 2, 4) normalized, NaN where the field vanishes
    defined: bool
    spread: float  # max projective distance between defined sample lines

    def is_constant(self, tol: float = CLASSIFY_TOL) -> bool:
        return self.defined and self.spread < tol

    def point(self):
        """The constant line, as an affine point or ``np.inf``."""
        v = next(l[np.all(np.isfinite(l), axis=(-2, -1))][0] for l in self.lines if np.isfinite(l).any())
        if Q.qabs(v[1]) < 1e-12:
            return np.inf
        return Q.qmul(v[0], Q.qinv(v[1]))


def _line(m, direction):
    """Kernel (forward) or image (backward) line of a quaternionic rank-1 2x2 matrix."""
    c = Q.qmat_to_c4x4(m)
    u, s, vh = np.linalg.svd(c)
    if direction == "forward":
        vec = np.conj(vh[..., -1, :])
    else:
        vec = u[..., :, 0]
    return Q.normalize_projective(Q.c4_to_qvec(vec)), s


def backlund2(f: SurfaceMap, direction: str = "forward", samples=None,
              zero_tol: float = ZERO_FIELD_REL) -> Backlund2Result:
    """2-step transform: ker A (``"forward"``) or im Q (``"backward"``)."""
    if direction not in ("forward", "backward"):
        raise ValueError("direction is 'forward' or 'backward'")
    samples = samples if samples is not None else chart_samples(50, 0)
    lines, flat = [], []
    for chart, z in samples:
        d = hopf_data(f, z, chart)
        m = d.A_x if direction == "forward" else d.Q_x
        line, s = _line(m, direction)
        dead = s[..., 0] < zero_tol * np.maximum(1.0, _qmat_size(d.S_x))
        line = np.where(dead[..., None, None], np.nan, line)
        lines.append(line)
        flat.append(line[~dead])
    flat = np.concatenate(flat) if flat else np.zeros((0, 2, 4))
    if len(flat) == 0:
        return Backlund2Result(direction, samples, lines, False, np.nan)
    spread = float(np.max(Q.projective_distance(flat[:, None], flat[None, :])))
    return Backlund2Result(direction, samples, lines, True, spread)
