"""Quaternion, quaternionic 2-vector/2x2-matrix and Lambda^2(H^2, i) algebra.

Quaternions are stored as real arrays whose last axis holds the components
``(re, i, j, k)``.  Vectors of H^2 carry an extra axis of length 2 before the
component axis, 2x2 quaternionic matrices two extra axes.  Every function
broadcasts over leading axes.

H^2 is a complex vector space through right multiplication by ``i``.  We use
the ordered complex basis ``{e1, e1 j, e2, e2 j}``; a quaternion
``q = a + j b`` (``a, b`` in C = R + Ri) therefore has complex coordinates
``(a, b)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import numpy as np

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])


class SingularMatrixError(ValueError):
    pass


class PoleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scalar quaternions


def qmul(a, b):
    """Hamilton product of quaternion arrays (broadcasting)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm2(q):
    q = np.asarray(q, dtype=float)
    return np.sum(q * q, axis=-1)


def qabs(q):
    return np.sqrt(qnorm2(q))


def qinv(q):
    q = np.asarray(q, dtype=float)
    return qconj(q) / qnorm2(q)[..., None]


def qreal(x):
    """Embed a real array as quaternions."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (4,))
    out[..., 0] = x
    return out


def qcomplex(z):
    """Embed a complex array into the subfield R + Ri."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (4,))
    out[..., 0] = z.real
    out[..., 1] = z.imag
    return out


def complex_split(q):
    """Return ``(a, b)`` with ``q = a + j b`` and ``a, b`` complex."""
    q = np.asarray(q, dtype=float)
    a = q[..., 0] + 1j * q[..., 1]
    b = q[..., 2] - 1j * q[..., 3]
    return a, b


def from_complex_pair(a, b):
    """Inverse of :func:`complex_split`."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a, b = np.broadcast_arrays(a, b)
    return np.stack([a.real, a.imag, b.real, -b.imag], axis=-1)


@dataclass(frozen=True)
class Quaternion:
    """Convenience scalar quaternion; the array functions above do the work."""

    re: float = 0.0
    im_i: float = 0.0
    im_j: float = 0.0
    im_k: float = 0.0

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        a = np.asarray(a, dtype=float)
        return cls(*(float(x) for x in a))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.re, self.im_i, self.im_j, self.im_k])

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.array, other.array))
        return Quaternion.from_array(self.array * float(other))

    def __rmul__(self, other):
        return Quaternion.from_array(self.array * float(other))

    def __add__(self, other):
        return Quaternion.from_array(self.array + other.array)

    def __sub__(self, other):
        return Quaternion.from_array(self.array - other.array)

    def __neg__(self):
        return Quaternion.from_array(-self.array)

    def conj(self) -> "Quaternion":
        return Quaternion.from_array(qconj(self.array))

    def inv(self) -> "Quaternion":
        return Quaternion.from_array(qinv(self.array))

    def __abs__(self) -> float:
        return float(qabs(self.array))

    def split(self) -> tuple[complex, complex]:
        a, b = complex_split(self.array)
        return complex(a), complex(b)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return a * b


# ---------------------------------------------------------------------------
# complex 2x2 / 4x4 representations


def as_quat(x) -> np.ndarray:
    """Coerce a real/complex scalar, a Quaternion or a length-4 sequence to a (4,) array."""
    if isinstance(x, Quaternion):
        return x.array
    if np.isscalar(x) or np.ndim(x) == 0:
        return qcomplex(complex(x))
    a = np.asarray(x, dtype=float)
    if a.shape != (4,):
        raise ValueError(f"cannot read {x!r} as a quaternion")
    return a


def left_matrix(q):
    """Complex 2x2 matrix of left multiplication by ``q`` on coordinates (a, b)."""
    c, d = complex_split(q)
    m = np.empty(np.shape(c) + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 0, 1] = -np.conj(d)
    m[..., 1, 0] = d
    m[..., 1, 1] = np.conj(c)
    return m


def qvec_to_c4(v):
    """H^2 vector (..., 2, 4) -> complex coordinates (..., 4) in {e1, e1j, e2, e2j}."""
    v = np.asarray(v, dtype=float)
    a1, b1 = complex_split(v[..., 0, :])
    a2, b2 = complex_split(v[..., 1, :])
    return np.stack([a1, b1, a2, b2], axis=-1)


def c4_to_qvec(c):
    c = np.asarray(c, dtype=complex)
    return np.stack(
        [from_complex_pair(c[..., 0], c[..., 1]), from_complex_pair(c[..., 2], c[..., 3])],
        axis=-2,
    )


def c4_times_j(c):
    """Right multiplication by the quaternion j in complex coordinates."""
    c = np.asarray(c, dtype=complex)
    out = np.empty_like(c)
    out[..., 0] = -np.conj(c[..., 1])
    out[..., 1] = np.conj(c[..., 0])
    out[..., 2] = -np.conj(c[..., 3])
    out[..., 3] = np.conj(c[..., 2])
    return out


def qmat_to_c4x4(m):
    m = np.asarray(m, dtype=float)
    out = np.empty(m.shape[:-3] + (4, 4), dtype=complex)
    for r in range(2):
        for s in range(2):
            out[..., 2 * r : 2 * r + 2, 2 * s : 2 * s + 2] = left_matrix(m[..., r, s, :])
    return out


def c4x4_to_qmat(c):
    """Read a quaternionic-linear complex 4x4 matrix back as a 2x2 quaternionic one."""
    c = np.asarray(c, dtype=complex)
    out = np.empty(c.shape[:-2] + (2, 2, 4))
    for r in range(2):
        for s in range(2):
            out[..., r, s, :] = from_complex_pair(c[..., 2 * r, 2 * s], c[..., 2 * r + 1, 2 * s])
    return out


# ---------------------------------------------------------------------------
# H^2 vectors and 2x2 quaternionic matrices


def qvec(x1, x2):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    return np.stack([x1, x2], axis=-2)


def qmat(m11, m12, m21, m22):
    arrs = np.broadcast_arrays(*(np.asarray(m, float) for m in (m11, m12, m21, m22)))
    return np.stack([np.stack(arrs[:2], axis=-2), np.stack(arrs[2:], axis=-2)], axis=-3)


def qmat_identity(shape=()):
    out = np.zeros(tuple(shape) + (2, 2, 4))
    out[..., 0, 0, 0] = 1.0
    out[..., 1, 1, 0] = 1.0
    return out


def mat_vec(m, v):
    m = np.asarray(m, float)
    v = np.asarray(v, float)
    r0 = qmul(m[..., 0, 0, :], v[..., 0, :]) + qmul(m[..., 0, 1, :], v[..., 1, :])
    r1 = qmul(m[..., 1, 0, :], v[..., 0, :]) + qmul(m[..., 1, 1, :], v[..., 1, :])
    return np.stack([r0, r1], axis=-2)


def mat_mul(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    rows = []
    for r in range(2):
        row = []
        for s in range(2):
            row.append(qmul(a[..., r, 0, :], b[..., 0, s, :]) + qmul(a[..., r, 1, :], b[..., 1, s, :]))
        rows.append(np.stack(row, axis=-2))
    return np.stack(rows, axis=-3)


def vec_rmul(v, lam):
    """Right scalar multiplication ``v lam``."""
    lam = np.asarray(lam, float)
    return qmul(np.asarray(v, float), lam[..., None, :])


def mat_inv(m):
    c = qmat_to_c4x4(m)
    return c4x4_to_qmat(np.linalg.inv(c))


def is_invertible(m, rcond=1e-12) -> np.ndarray:
    """Invertibility through the real 8x8 (here: complex 4x4) representation."""
    s = np.linalg.svd(qmat_to_c4x4(m), compute_uv=False)
    return s[..., -1] > rcond * s[..., 0]


def affine_point(v):
    """Affine chart [x1 : x2] -> x1 x2^{-1}; raises PoleError at the point at infinity."""
    v = np.asarray(v, float)
    n2 = qnorm2(v[..., 1, :])
    scale = qnorm2(v[..., 0, :]) + n2
    if np.any(n2 <= 1e-24 * scale):
        raise PoleError("point at infinity has no affine representative")
    return qmul(v[..., 0, :], qinv(v[..., 1, :]))


def normalize_projective(v):
    v = np.asarray(v, float)
    n = np.sqrt(qnorm2(v[..., 0, :]) + qnorm2(v[..., 1, :]))
    return v / n[..., None, None]


def projective_distance(v, w):
    """Sine of the angle between the quaternionic lines [v] and [w]."""
    v = normalize_projective(v)
    w = normalize_projective(w)
    ip = qmul(qconj(v[..., 0, :]), w[..., 0, :]) + qmul(qconj(v[..., 1, :]), w[..., 1, :])
    # norm of the component of w orthogonal to [v] (accurate near zero, unlike sqrt(1 - |ip|^2))
    perp = w - vec_rmul(v, ip)
    return np.sqrt(qnorm2(perp[..., 0, :]) + qnorm2(perp[..., 1, :]))


def projectively_equal(v, w, tol=1e-10):
    return projective_distance(v, w) < tol


def mobius_apply(m, v):
    """Image line [M v] of the projective point [v]; singular M is rejected."""
    if not np.all(is_invertible(m)):
        raise SingularMatrixError("Moebius matrix is singular")
    return mat_vec(m, v)


def mobius_affine(m, f):
    """Affine reading f -> (m11 f + m12)(m21 f + m22)^{-1}."""
    f = np.asarray(f, float)
    one = np.broadcast_to(ONE, f.shape)
    return affine_point(mobius_apply(m, qvec(f, one)))


# ---------------------------------------------------------------------------
# Hermitian forms on H^2


class HermitianForm(Enum):
    BRYANT = "bryant"
    MINKOWSKI = "minkowski"

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        x1c, x2c = qconj(x[..., 0, :]), qconj(x[..., 1, :])
        if self is HermitianForm.BRYANT:
            return qmul(qmul(x2c, J), y[..., 0, :]) - qmul(qmul(x1c, J), y[..., 1, :])
        return qmul(x2c, y[..., 0, :]) + qmul(x1c, y[..., 1, :])


# ---------------------------------------------------------------------------
# Lambda^2(H^2, i)

# complex basis index: 0 = e1, 1 = e1 j, 2 = e2, 3 = e2 j
_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _plucker(v, w):
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return {(a, b): v[..., a] * w[..., b] - v[..., b] * w[..., a] for a, b in _PAIRS}


def plucker_to_hat(p):
    """Bivector coordinates p_ab (a < b) -> coordinates in the basis e^_1..e^_6."""
    x1 = (p[0, 3] - p[1, 2]) / 2
    x2 = (p[0, 3] + p[1, 2]) / 2j
    x3 = (p[0, 2] + p[1, 3]) / 2
    x4 = (p[0, 2] - p[1, 3]) / 2j
    return np.stack(np.broadcast_arrays(x1, x2, x3, x4, p[0, 1], p[2, 3]), axis=-1)


def hat_to_plucker(x):
    x = np.asarray(x, dtype=complex)
    return {
        (0, 3): x[..., 0] + 1j * x[..., 1],
        (1, 2): -x[..., 0] + 1j * x[..., 1],
        (0, 2): x[..., 2] + 1j * x[..., 3],
        (1, 3): x[..., 2] - 1j * x[..., 3],
        (0, 1): x[..., 4],
        (2, 3): x[..., 5],
    }


def wedge(v, w):
    """v ^ w for complex 4-vectors, in the basis e^_1..e^_6 (shape (..., 6))."""
    return plucker_to_hat(_plucker(v, w))


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def wedge4(x, y):
    """Coefficient of (x ^ y) on e1 ^ e1j ^ e2 ^ e2j for bivectors given in hat coordinates."""
    px, py = hat_to_plucker(x), hat_to_plucker(y)
    total = 0
    for ab in _PAIRS:
        for cd in _PAIRS:
            idx = ab + cd
            if len(set(idx)) == 4:
                total = total + _perm_sign(idx) * px[ab] * py[cd]
    return total


def _gram() -> np.ndarray:
    basis = np.eye(6, dtype=complex)
    vol = wedge4(basis[4], basis[5])  # e^_5 ^ e^_6 normalises Lambda^4
    return np.array([[wedge4(basis[a], basis[b]) / vol for b in range(6)] for a in range(6)])


LAMBDA2_GRAM = _gram()


def lambda2_pairing(x, y):
    """Complex bilinear form with <x, y> e^_5 ^ e^_6 = x ^ y."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return np.einsum("...a,ab,...b->...", x, LAMBDA2_GRAM, y)


def lambda2_basis(m: int) -> np.ndarray:
    """The basis element e^_m, m = 1..6."""
    out = np.zeros(6, dtype=complex)
    out[m - 1] = 1.0
    return out


def quadric_stereographic(s_hat, tol=1e-14):
    """Stereographic projection of the quadric with pole [e^_5].

    Returns ``(sigma, im_quat)``: the affine point sigma in span{e^_1..e^_4}
    (shape (..., 6)) and its imaginary part read as a quaternion through
    e^_1 i -> 1, e^_2 i -> i, e^_3 i -> j, e^_4 i -> k.
    """
    s_hat = np.asarray(s_hat, dtype=complex)
    e5, e6 = lambda2_basis(5), lambda2_basis(6)
    p5 = lambda2_pairing(s_hat, e5)
    p6 = lambda2_pairing(s_hat, e6)
    scale = np.max(np.abs(s_hat), axis=-1)
    if np.any(np.abs(p5) <= tol * scale):
        raise PoleError("<S, e5> = 0: point is the pole of the projection")
    sigma = (s_hat - p6[..., None] * e5) / p5[..., None] - e6
    return sigma, sigma[..., :4].imag.copy()


__all__ = [
    "Quaternion", "quat_mul", "qmul", "qconj", "qinv", "qabs", "qnorm2", "qreal", "qcomplex", "as_quat",
    "complex_split", "from_complex_pair", "left_matrix", "qvec_to_c4", "c4_to_qvec", "c4_times_j",
    "qmat_to_c4x4", "c4x4_to_qmat", "qvec", "qmat", "qmat_identity", "mat_vec", "mat_mul",
    "vec_rmul", "mat_inv", "is_invertible", "affine_point", "normalize_projective",
    "projective_distance", "projectively_equal", "mobius_apply", "mobius_affine",
    "HermitianForm", "wedge", "wedge4", "lambda2_pairing", "lambda2_basis", "LAMBDA2_GRAM",
    "quadric_stereographic", "SingularMatrixError", "PoleError", "ONE", "I", "J", "K",
]
