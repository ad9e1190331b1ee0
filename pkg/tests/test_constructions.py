import numpy as np
import pytest
from conftest import A_NONNULL, A_NULL, catenoid

from solitonsphere import constructions as C
from solitonsphere import quat as Q
from solitonsphere import surface as S


@pytest.mark.parametrize("mu", [1, 2, 3, 5])
def test_catenoid_quintuple_is_null(mu):
    nc = C.catenoid_quintuple(mu)
    assert nc.coefficient_residual() < 1e-14
    assert nc.at_infinity().coefficient_residual() < 1e-14


@pytest.mark.parametrize("s,t", [(0.22, 0), (2.3j, -0.33j), (0.72j, -0.54j)])
def test_deformed_quintuple_stays_on_quadric(s, t):
    nc = C.deform_ends(C.catenoid_quintuple(2), s, t)
    z = np.linspace(-1, 1, 7) + 0.3j
    assert np.max(nc.quadric_residual(z)) < 1e-12


def test_sl2_immersion_and_null_derivative(rng):
    nc, F, _ = catenoid(2)
    z = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(F.det(z), 1)
    M = F.log_derivative_at(z)
    assert np.allclose(np.linalg.det(M) / np.linalg.norm(M, axis=(-2, -1)) ** 2, 0, atol=1e-12)
    _, rep = C.hyperbolic_gauss(F, z)
    assert rep["ker_im"].max() < 1e-10


def test_catenoid_pole_orders():
    _, F, _ = catenoid(2)
    orders = F.pole_orders()
    assert orders["0"] >= 1 and orders["inf"] >= 1


def test_bryant_surface_is_imaginary_and_conformal(rng):
    _, _, s = catenoid(3)
    z = rng.normal(size=30) + 1j * rng.normal(size=30)
    f = s(z)
    assert np.abs(f[:, 0]).max() < 1e-12
    assert S.conformality_residual(s, z).max() < 1e-12


def test_hyperbolic_gauss_rational_matches_pointwise(rng):
    _, F, _ = catenoid(2)
    G = C.hyperbolic_gauss_rational(F)
    z = rng.normal(size=5) + 1j * rng.normal(size=5)
    ker, _ = C.hyperbolic_gauss(F, z)
    assert np.allclose(G(z), ker[:, 0] / ker[:, 1])


def test_bryant_deformed_requires_end_order_two():
    with pytest.raises(ValueError):
        C.bryant_deformed(1, 0.1, 0)
    with pytest.raises(ValueError):
        C.catenoid_cousin(0)


def test_example_lift_null_residuals(rng):
    lift = C.EXAMPLE_PHI
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    r = lift.null_residuals(z)
    assert max(v.max() for v in r.values()) < 1e-12
    assert lift.polarity(z, 1).max() < 1e-12


def test_twistor_sphere_fixes_lift(rng):
    lift = C.EXAMPLE_PHI
    z = rng.normal(size=6) + 1j * rng.normal(size=6)
    Sj = C.twistor_sphere_jet(lift, "z", z, 0)
    phi = Q.c4_to_qvec(lift.value(z))
    assert np.allclose(Q.mat_vec(Sj.value, phi), Q.vec_rmul(phi, Q.I))
    S2 = Q.mat_mul(Sj.value, Sj.value)
    assert np.allclose(S2, -Q.qmat_identity((6,)))


def test_willmore_recipes():
    f = C.willmore_twistor(C.EXAMPLE_PHI, a=A_NULL)
    z = np.array([0.3 + 0.2j, -0.5j])
    assert np.abs(f(z)[:, 0]).max() < 1e-12
    with pytest.raises(ValueError):
        C.willmore_twistor(C.EXAMPLE_PHI, a=A_NONNULL)
    g = C.willmore_twistor(C.EXAMPLE_PHI, a=A_NONNULL, allow_nonnull=True)
    assert np.abs(g(z)[:, 0]).max() < 1e-12
    d = C.willmore_twistor(C.EXAMPLE_PHI, recipe="dual")
    assert np.all(np.isfinite(d(z)))
    with pytest.raises(ValueError):
        C.willmore_twistor(C.EXAMPLE_PHI, recipe="nope")


def test_twistor_projection_is_twistor_holomorphic():
    L = C.twistor_projection(C.EXAMPLE_PHI)
    rep = S.residuals(L, S.chart_samples(40, 2, radius=0.8))
    assert rep.twistor[0] < 1e-8


def test_mean_curvature_sphere_of_projection_matches_lift(rng):
    L = C.twistor_projection(C.EXAMPLE_PHI)
    z = 0.5 * (rng.normal(size=5) + 1j * rng.normal(size=5))
    S_L = S.mean_curvature_sphere(L, z)
    S_lift = C.twistor_sphere_jet(C.EXAMPLE_PHI, "z", z, 0).value
    assert np.allclose(S_L, S_lift, atol=1e-10)


def test_dirac_potential_is_overflow_safe():
    U = C.dirac_potential(2)
    assert np.allclose(U(np.array([0.0, 800.0, -800.0])), [1.5, 0, 0])
    assert np.allclose(U(np.array([0.7])), 3 / (2 * np.cosh(0.7)))


def test_norming_constants():
    assert np.allclose(C.norming_constants([0, 1, 2], [2, 6, 3]), [2, -6, 3])
    with pytest.raises(ValueError):
        C.norming_constants([0, 1], [1, -1])


def test_taimanov_rejects_bad_input():
    with pytest.raises(ValueError):
        C.taimanov_sphere([1, 2], [1, 1])
    with pytest.raises(ValueError):
        C.taimanov_sphere([0, 2], [1])
