"""Conformal maps into H in affine charts and their first-order invariants.

Charts: ``"z"`` is the standard coordinate on CP^1 minus infinity, ``"w"`` the
coordinate w = 1/z.  A :class:`SurfaceMap` supplies Taylor jets of f in either
chart; all differential quantities are derived from those jets.

Conventions: ``*w(dx) = w(dy)``, so ``*df = N df = -df R`` reads
``f_y = N f_x = -f_x R``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import jets as J
from . import quat as Q

BRANCH_THRESHOLD = 1e-9


class DerivativeProvider(Enum):
    EXACT = "exact"  # closed-form jets
    NUMERIC = "numeric"  # central differences of point values, Richardson-combined
    GRADIENT = "gradient"  # exact first partials, higher ones by differences


class SingularPointError(ValueError):
    """The construction is undefined at a sample point (e.g. a pole of f)."""


class BranchPointError(ValueError):
    def __init__(self, chart, points):
        self.chart = chart
        self.points = np.atleast_1d(points)
        super().__init__(f"branch point(s) in chart {chart}: {self.points[:4]}")


@dataclass(frozen=True)
class SurfaceMap:
    """Chart-aware evaluator of a (branched) conformal immersion CP^1 -> H.

    ``jet_fn(chart, z, order)`` returns a quaternionic :class:`~solitonsphere.jets.Jet`.
    """

    jet_fn: Callable
    provider: DerivativeProvider = DerivativeProvider.EXACT
    name: str = "surface"
    scale: float = 1.0
    known_branch_points: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_values(cls, fn: Callable, h: float = 1e-4, **kw) -> "SurfaceMap":
        """NUMERIC provider from ``fn(chart, z) -> f`` (shape (..., 4))."""

        def jet_fn(chart, z, order):
            return J.numeric_jet(lambda p: fn(chart, p), z, order, h)

        kw.setdefault("provider", DerivativeProvider.NUMERIC)
        return cls(jet_fn, **kw)

    @classmethod
    def from_gradient(cls, fn: Callable, dfn: Callable, h: float = 1e-3, **kw) -> "SurfaceMap":
        """GRADIENT provider from ``fn(chart, z)`` and ``dfn(chart, z) -> (f_x, f_y)``."""

        def jet_fn(chart, z, order):
            return J.jet_from_gradient(lambda p: fn(chart, p), lambda p: dfn(chart, p), z, order, h)

        kw.setdefault("provider", DerivativeProvider.GRADIENT)
        return cls(jet_fn, **kw)

    def jet(self, z, order=2, chart="z") -> J.Jet:
        if chart not in ("z", "w"):
            raise ValueError(f"unknown chart {chart!r}")
        return self.jet_fn(chart, np.asarray(z, dtype=complex), order)

    def __call__(self, z, chart="z"):
        return self.jet(z, 0, chart).value

    def partials(self, z, chart="z"):
        j = self.jet(z, 1, chart)
        return j[1, 0], j[0, 1]

    def numeric(self, h: float = 1e-4) -> "SurfaceMap":
        """The same surface re-wrapped with finite-difference derivatives."""
        return SurfaceMap.from_values(
            lambda chart, z: self(z, chart), h=h * self.scale, name=self.name + "/numeric", scale=self.scale
        )

    def transformed(self, fn: Callable, name: str | None = None) -> "SurfaceMap":
        """Post-compose with a jet-level map (e.g. a similarity)."""
        return SurfaceMap(
            lambda chart, z, order: fn(self.jet_fn(chart, z, order)),
            provider=self.provider,
            name=name or self.name,
            scale=self.scale,
            known_branch_points=self.known_branch_points,
        )


def other_chart(chart: str) -> str:
    return "w" if chart == "z" else "z"


# ---------------------------------------------------------------------------
# kernel: jets of N, R, H


@dataclass
class Frame:
    f: J.Jet
    fx: J.Jet
    fy: J.Jet
    N: J.Jet
    R: J.Jet


def _frame(fj: J.Jet, chart, z, allow_branch=False, scale=1.0) -> Frame:
    fx, fy = fj.dx(), fj.dy()
    size = Q.qabs(fx.value)
    bad = size < BRANCH_THRESHOLD * scale
    if np.any(bad) and not allow_branch:
        raise BranchPointError(chart, np.asarray(z)[bad] if np.ndim(z) else z)
    fxi = fx.inv()
    N = fy @ fxi
    R = -(fxi @ fy)
    return Frame(fj, fx, fy, N, R)


def _frame_at(s: SurfaceMap, z, chart, order, allow_branch=False) -> Frame:
    return _frame(s.jet(z, order, chart), chart, z, allow_branch, s.scale)


def _limit_from_ring(fn, z, radius=1e-3):
    """Average of fn over four points around z (normals extend continuously)."""
    z = np.asarray(z, dtype=complex)
    vals = [fn(z + radius * u) for u in (1, 1j, -1, -1j)]
    return sum(vals) / 4.0


def normals(s: SurfaceMap, z, chart="z", allow_branch=False):
    """Left and right normals ``N = f_y f_x^{-1}``, ``R = -f_x^{-1} f_y``."""
    try:
        fr = _frame_at(s, z, chart, 1)
        return fr.N.value, fr.R.value
    except BranchPointError:
        if not allow_branch:
            raise
        n = _limit_from_ring(lambda p: normals(s, p, chart)[0], z)
        r = _limit_from_ring(lambda p: normals(s, p, chart)[1], z)
        n = n / Q.qabs(n)[..., None]
        r = r / Q.qabs(r)[..., None]
        return n, r


def _H_jet(fr: Frame) -> J.Jet:
    Nx, Ny = fr.N.dx(), fr.N.dy()
    o = Nx.order
    return fr.fx.inv().truncate(o) @ (Nx - fr.N.truncate(o) @ Ny).scale(0.5)


def mean_curvature(s: SurfaceMap, z, chart="z"):
    """Mean curvature half-density H with ``dN' = df H``; |H| is the mean curvature."""
    return _H_jet(_frame_at(s, z, chart, 2)).value


def _ad_T(f, m11, m12, m21, m22):
    """[[1,f],[0,1]] M [[1,-f],[0,1]] for quaternion-valued entries."""
    a11 = m11 + Q.qmul(f, m21)
    a12 = m12 + Q.qmul(f, m22)
    return Q.qmat(a11, a12 - Q.qmul(a11, f), m21, m22 - Q.qmul(m21, f))


def sphere_from_frame(f, N, R, H):
    zero = np.zeros_like(f)
    return _ad_T(f, N, zero, -H, -R)


def mean_curvature_sphere(s: SurfaceMap, z, chart="z"):
    """Mean curvature sphere S(z) as a quaternionic 2x2 matrix."""
    fr = _frame_at(s, z, chart, 2)
    H = _H_jet(fr).value
    return sphere_from_frame(fr.f.value, fr.N.value, fr.R.value, H)


def sphere_jet(s: SurfaceMap, z, chart="z", order=1) -> J.Jet:
    """Jet of S (order ``order``), needs an f-jet of order ``order + 2``."""
    fr = _frame_at(s, z, chart, order + 2)
    H = _H_jet(fr)
    # S is polynomial in f, N, R, H: build it with jet arithmetic on entries
    f, N, R = fr.f.truncate(order), fr.N.truncate(order), fr.R.truncate(order)
    a11 = N - f @ H
    a12 = f @ H @ f - N @ f - f @ R
    a21 = -H
    a22 = H @ f - R
    entries = [a11, a12, a21, a22]
    coef = {}
    for ab in H.coef:
        coef[ab] = Q.qmat(*(e.coef[ab] for e in entries))
    return J.Jet(coef, order, J.QMAT)


@dataclass
class HopfData:
    A_x: np.ndarray
    Q_x: np.ndarray
    A_y: np.ndarray
    Q_y: np.ndarray
    w_x: np.ndarray
    w_y: np.ndarray
    S: np.ndarray
    S_x: np.ndarray
    S_y: np.ndarray
    dRpp: tuple
    dNpp: tuple
    dNp: tuple


def hopf_data(s: SurfaceMap, z, chart="z") -> HopfData:
    fr = _frame_at(s, z, chart, 3)
    N, R = fr.N, fr.R
    Nx, Ny, Rx, Ry = N.dx(), N.dy(), R.dx(), R.dy()
    H = _H_jet(fr)  # order 1
    Hx, Hy = H.dx().value, H.dy().value
    n, r, h, f = N.value, R.value, H.value, fr.f.value
    nx, ny, rx, ry = Nx.value, Ny.value, Rx.value, Ry.value
    dRpp = (0.5 * (rx + Q.qmul(r, ry)), 0.5 * (ry - Q.qmul(r, rx)))
    dNpp = (0.5 * (nx + Q.qmul(n, ny)), 0.5 * (ny - Q.qmul(n, nx)))
    dNp = (0.5 * (nx - Q.qmul(n, ny)), 0.5 * (ny + Q.qmul(n, nx)))
    w_x = 0.5 * (Hx + Q.qmul(r, Hy) - Q.qmul(h, dNpp[1]))
    w_y = 0.5 * (Hy - Q.qmul(r, Hx) + Q.qmul(h, dNpp[0]))
    zero = np.zeros_like(f)
    # 2*A(v) = Ad T [[0,0],[w(v), dR''(v)]];  A(dx) = -*A(dy), A(dy) = *A(dx)
    starA_x = 0.5 * _ad_T(f, zero, zero, w_x, dRpp[0])
    starA_y = 0.5 * _ad_T(f, zero, zero, w_y, dRpp[1])
    starQ_x = 0.5 * _ad_T(f, dNpp[0], zero, w_x - Hx, zero)
    starQ_y = 0.5 * _ad_T(f, dNpp[1], zero, w_y - Hy, zero)
    Sj = sphere_jet(s, z, chart, 1)
    return HopfData(
        A_x=-starA_y,
        Q_x=-starQ_y,
        A_y=starA_x,
        Q_y=starQ_x,
        w_x=w_x,
        w_y=w_y,
        S=Sj.value,
        S_x=Sj[1, 0],
        S_y=Sj[0, 1],
        dRpp=dRpp,
        dNpp=dNpp,
        dNp=dNp,
    )


def hopf_fields(s: SurfaceMap, z, chart="z"):
    """``(A_x, Q_x, w_x)``: dx-components of the Hopf fields and of w."""
    d = hopf_data(s, z, chart)
    return d.A_x, d.Q_x, d.w_x


def _qmat_norm(m):
    return np.sqrt(np.sum(np.asarray(m) ** 2, axis=(-3, -2, -1)))


def hopf_type_residuals(d: HopfData) -> dict:
    """Type identities *A = SA = -AS, *Q = -SQ = QS and dS = 2(*Q - *A)."""
    mm = Q.mat_mul
    starA_x, starQ_x = d.A_y, d.Q_y
    return {
        "starA_SA": _qmat_norm(starA_x - mm(d.S, d.A_x)),
        "starA_AS": _qmat_norm(starA_x + mm(d.A_x, d.S)),
        "starQ_SQ": _qmat_norm(starQ_x + mm(d.S, d.Q_x)),
        "starQ_QS": _qmat_norm(starQ_x - mm(d.Q_x, d.S)),
        "dS": _qmat_norm(d.S_x - 2 * (starQ_x - starA_x)),
    }


def sphere_residuals(s: SurfaceMap, z, chart="z") -> dict:
    fr = _frame_at(s, z, chart, 2)
    H = _H_jet(fr).value
    f = fr.f.value
    S = sphere_from_frame(f, fr.N.value, fr.R.value, H)
    S2 = Q.mat_mul(S, S) + Q.qmat_identity(np.shape(f)[:-1])
    v = Q.mat_vec(S, Q.qvec(f, np.broadcast_to(Q.ONE, f.shape)))
    lam = v[..., 1, :]
    fix = Q.qabs(v[..., 0, :] - Q.qmul(f, lam))
    return {"S2": _qmat_norm(S2), "fixes_point": fix, "lambda_sq": Q.qabs(Q.qmul(lam, lam) + Q.ONE)}


def conformality_residual(s: SurfaceMap, z, chart="z"):
    N, R = normals(s, z, chart)
    return np.maximum(Q.qabs(Q.qmul(N, N) + Q.ONE), Q.qabs(Q.qmul(R, R) + Q.ONE))


@dataclass
class ResidualReport:
    conformality: tuple
    twistor: tuple  # |dR''|
    minimality: tuple  # |dN'|
    dual_twistor: tuple  # |dN''|
    flags: dict

    def as_dict(self):
        return {
            "conformality": {"max": self.conformality[0], "mean": self.conformality[1]},
            "twistor_dR''": {"max": self.twistor[0], "mean": self.twistor[1]},
            "minimality_dN'": {"max": self.minimality[0], "mean": self.minimality[1]},
            "umbilicity_dN''": {"max": self.dual_twistor[0], "mean": self.dual_twistor[1]},
            "flags": self.flags,
        }


def _stats(x):
    x = np.asarray(x, dtype=float)
    return float(np.max(x)), float(np.mean(x))


def form_norm(pair):
    """Pointwise size of a quaternion-valued 1-form given by its (dx, dy) components."""
    return np.sqrt(Q.qnorm2(pair[0]) + Q.qnorm2(pair[1]))


def residuals(s: SurfaceMap, samples, threshold=1e-5) -> ResidualReport:
    """Aggregate conformality, twistor, minimality and umbilicity residuals.

    ``samples`` is an iterable of ``(chart, points)``.
    """
    conf, tw, mn, dtw = [], [], [], []
    for chart, pts in samples:
        pts = np.asarray(pts, dtype=complex)
        conf.append(conformality_residual(s, pts, chart))
        fr = _frame_at(s, pts, chart, 2)
        N, R = fr.N, fr.R
        n, r = N.value, R.value
        nx, ny, rx, ry = N.dx().value, N.dy().value, R.dx().value, R.dy().value
        tw.append(form_norm((0.5 * (rx + Q.qmul(r, ry)), 0.5 * (ry - Q.qmul(r, rx)))))
        mn.append(form_norm((0.5 * (nx - Q.qmul(n, ny)), 0.5 * (ny + Q.qmul(n, nx)))))
        dtw.append(form_norm((0.5 * (nx + Q.qmul(n, ny)), 0.5 * (ny - Q.qmul(n, nx)))))
    conf, tw, mn, dtw = (np.concatenate(x) for x in (conf, tw, mn, dtw))
    flags = {
        "twistor_holomorphic": bool(tw.max() < threshold),
        "dual_twistor_holomorphic": bool(dtw.max() < threshold),
        "totally_umbilic": bool(max(tw.max(), dtw.max()) < threshold),
        "euclidean_minimal": bool(mn.max() < threshold),
    }
    return ResidualReport(_stats(conf), _stats(tw), _stats(mn), _stats(dtw), flags)


def chart_samples(n, rng=None, radius=1.0):
    """Random points in the disk |z| <= radius for both charts."""
    rng = np.random.default_rng(rng)
    out = []
    for chart in ("z", "w"):
        r = radius * np.sqrt(rng.uniform(0.01, 1.0, n))
        t = rng.uniform(0, 2 * np.pi, n)
        out.append((chart, r * np.exp(1j * t)))
    return out
