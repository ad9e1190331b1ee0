import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solitonsphere import quat as Q

finite = st.floats(-10, 10, allow_nan=False)
quats = arrays(float, 4, elements=finite)
nonzero_quats = quats.filter(lambda q: Q.qabs(q) > 1e-2)


def test_unit_table():
    # i^2 = j^2 = k^2 = ijk = -1
    for u in (Q.I, Q.J, Q.K):
        assert np.array_equal(Q.qmul(u, u), -Q.ONE)
    assert np.array_equal(Q.qmul(Q.qmul(Q.I, Q.J), Q.K), -Q.ONE)
    assert np.array_equal(Q.qmul(Q.I, Q.J), Q.K)
    assert np.array_equal(Q.qmul(Q.J, Q.I), -Q.K)


@given(quats, quats, quats)
def test_associative(a, b, c):
    lhs = Q.qmul(Q.qmul(a, b), c)
    rhs = Q.qmul(a, Q.qmul(b, c))
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + Q.qabs(a) * Q.qabs(b) * Q.qabs(c)))


@given(quats, quats)
def test_norm_multiplicative_and_conjugation(a, b):
    assert np.isclose(Q.qabs(Q.qmul(a, b)), Q.qabs(a) * Q.qabs(b), rtol=1e-12, atol=1e-12)
    assert np.allclose(Q.qconj(Q.qmul(a, b)), Q.qmul(Q.qconj(b), Q.qconj(a)), atol=1e-10)


@given(nonzero_quats)
def test_inverse(a):
    assert np.allclose(Q.qmul(a, Q.qinv(a)), Q.ONE, atol=1e-12)


def test_quaternion_dataclass_matches_arrays():
    a, b = Q.Quaternion(1, 2, 3, 4), Q.Quaternion(-2, 0.5, 1, 3)
    assert np.allclose(Q.quat_mul(a, b).array, Q.qmul(a.array, b.array))
    assert abs(a) == pytest.approx(np.sqrt(30))
    assert np.allclose((a * a.inv()).array, Q.ONE)


def test_complex_coordinates():
    q = np.array([2.0, 3.0, 4.0, 5.0])
    a, b = Q.complex_split(q)
    assert (a, b) == (2 + 3j, 4 - 5j)
    assert np.array_equal(Q.from_complex_pair(a, b), q)


@given(quats, quats)
def test_left_matrix_represents_product(a, b):
    lm = Q.left_matrix(a)
    ab = np.array(Q.complex_split(b))
    assert np.allclose(lm @ ab, np.array(Q.complex_split(Q.qmul(a, b))), atol=1e-9)


def test_c4_round_trip_and_right_j(rng):
    v = rng.normal(size=(5, 2, 4))
    c = Q.qvec_to_c4(v)
    assert np.allclose(Q.c4_to_qvec(c), v)
    assert np.allclose(Q.c4_to_qvec(Q.c4_times_j(c)), Q.vec_rmul(v, Q.J))
    m = rng.normal(size=(5, 2, 2, 4))
    assert np.allclose(Q.c4x4_to_qmat(Q.qmat_to_c4x4(m)), m)
    assert np.allclose(Q.qmat_to_c4x4(m) @ c[..., None], Q.qvec_to_c4(Q.mat_vec(m, v))[..., None])


def test_matrix_inverse(rng):
    m = rng.normal(size=(10, 2, 2, 4))
    assert np.allclose(Q.mat_mul(m, Q.mat_inv(m)), Q.qmat_identity((10,)), atol=1e-10)


def test_projective_points(rng):
    v = rng.normal(size=(2, 4))
    lam = rng.normal(size=4)
    assert Q.projectively_equal(v, Q.vec_rmul(v, lam))
    assert np.allclose(Q.affine_point(v), Q.affine_point(Q.vec_rmul(v, lam)))
    with pytest.raises(Q.PoleError):
        Q.affine_point(Q.qvec(Q.ONE, np.zeros(4)))


def test_mobius_real_scalar_trivial_and_quaternionic_conjugates(rng):
    f = rng.normal(size=(4, 4))
    assert np.allclose(Q.mobius_affine(Q.qmat(2 * Q.ONE, 0 * Q.ONE, 0 * Q.ONE, 2 * Q.ONE), f), f)
    lam = rng.normal(size=4)
    m = Q.qmat(lam, 0 * lam, 0 * lam, lam)
    expect = Q.qmul(Q.qmul(lam, f), Q.qinv(lam))
    assert np.allclose(Q.mobius_affine(m, f), expect)
    with pytest.raises(Q.SingularMatrixError):
        Q.mobius_apply(Q.qmat(Q.ONE, Q.ONE, Q.ONE, Q.ONE), Q.qvec(Q.ONE, Q.I))


def test_mobius_composition(rng):
    a, b = rng.normal(size=(2, 2, 2, 4))
    f = rng.normal(size=4)
    assert np.allclose(Q.mobius_affine(Q.mat_mul(a, b), f), Q.mobius_affine(a, Q.mobius_affine(b, f)))


def test_lambda2_gram():
    g = Q.LAMBDA2_GRAM
    assert np.allclose(np.diag(g)[:4], -2)
    assert g[4, 5] == pytest.approx(1) and g[4, 4] == 0 and g[5, 5] == 0
    assert np.allclose(g, g.T)


@settings(max_examples=50)
@given(arrays(float, 8, elements=finite))
def test_decomposable_bivectors_are_null(x):
    v, w = x[:4] + 0j, x[4:] * 1j
    s = Q.wedge(v, w)
    assert abs(Q.lambda2_pairing(s, s)) <= 1e-9 * (1 + np.linalg.norm(s) ** 2)


def test_hermitian_forms():
    v = Q.qvec(Q.ONE, Q.J)
    assert np.allclose(Q.HermitianForm.MINKOWSKI(v, v), Q.qmul(Q.qconj(Q.J), Q.ONE) + Q.qmul(Q.ONE, Q.J))
    x, y = np.random.default_rng(3).normal(size=(2, 2, 4))
    form = Q.HermitianForm.BRYANT
    # quaternionic sesquilinearity: <x a, y b> = conj(a) <x, y> b
    a, b = np.random.default_rng(4).normal(size=(2, 4))
    lhs = form(Q.vec_rmul(x, a), Q.vec_rmul(y, b))
    rhs = Q.qmul(Q.qmul(Q.qconj(a), form(x, y)), b)
    assert np.allclose(lhs, rhs)


def test_as_quat():
    assert np.array_equal(Q.as_quat(2), [2, 0, 0, 0])
    assert np.array_equal(Q.as_quat(1j), [0, 1, 0, 0])
    assert np.array_equal(Q.as_quat([1, 2, 3, 4]), [1, 2, 3, 4])
    with pytest.raises(ValueError):
        Q.as_quat([1, 2])
