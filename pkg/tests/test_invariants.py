import math

import numpy as np
import pytest
from conftest import A_NULL, catenoid
from hypothesis import given
from hypothesis import strategies as st

from solitonsphere import invariants as I
from solitonsphere import jets as J
from solitonsphere import quat as Q
from solitonsphere import surface as S
from solitonsphere.constructions import EXAMPLE_PHI, round_sphere, willmore_twistor
from solitonsphere.spectral import reflectionless_potential

FOUR_PI = 4 * math.pi


@given(st.integers(1, 60), st.floats(-0.019, 0.019))
def test_quantization_accepts_near_integers_outside_gap(d, eps):
    verdict, got = I.quantization_check(FOUR_PI * (d + eps))
    if d in (2, 3, 5, 7):
        assert verdict is I.Verdict.FAIL_GAP and got == d
    else:
        assert verdict is I.Verdict.PASS and got == d


@given(st.integers(1, 60), st.floats(0.03, 0.97))
def test_quantization_rejects_non_integers(d, frac):
    verdict, got = I.quantization_check(FOUR_PI * (d + frac))
    assert verdict is I.Verdict.FAIL_NONINTEGER and got is None


def test_quantization_gap_values():
    assert I.quantization_check(12 * math.pi)[0] is I.Verdict.FAIL_GAP
    assert I.quantization_check(28 * math.pi)[0] is I.Verdict.FAIL_GAP
    assert I.quantization_check(16 * math.pi) == (I.Verdict.PASS, 4)
    with pytest.raises(ValueError):
        I.quantization_check(0.0)


def test_round_sphere_energy_and_density():
    s = round_sphere(2.0)
    z = np.array([0.2, 0.5j])
    # |H|^2 |f_x|^2 = (1/4) * (2 * 2 / (1 + |z|^2))^2 for radius 2
    expect = 0.25 * (4 / (1 + np.abs(z) ** 2)) ** 2
    assert np.allclose(I.energy_density(s, z), expect)
    r = I.willmore_energy_extrinsic(s)
    assert r.W == pytest.approx(FOUR_PI, rel=1e-3)
    assert r.admissible and r.d == 1 and r.route is I.Route.EXTRINSIC
    assert r.to_json()["route"] == I.Route.EXTRINSIC.value


def test_branch_order_of_power_map():
    def jet_fn(chart, z, order):
        Z = J.complex_to_quat(J.Jet.coordinate(z, order))
        return Z @ Z @ Z

    s = S.SurfaceMap(jet_fn, name="z^3")
    order, fit = I.branch_order(s, "z", 0j)
    assert order == 2 and fit < 1e-6


def test_branch_scan_of_catenoid_is_empty():
    _, _, s = catenoid(1)
    assert I.branch_scan(s).points == []


def test_willmore_example_passes_through_infinity_and_inversion():
    s = willmore_twistor(EXAMPLE_PHI, a=A_NULL)
    assert I.passes_through_infinity(s)
    assert not I.passes_through_infinity(catenoid(1)[2])
    assert not I.passes_through_infinity(round_sphere())
    c = I.inversion_center(s)
    assert c[0] == 0
    inv = I.inverted(s, c)
    vals = I.sample_values(inv)
    assert np.all(np.isfinite(vals))


def test_euclidean_potential_of_round_sphere():
    # unit sphere: q = 1/(1+|z|^2) up to the sign fixed by the normal
    s = round_sphere()
    z = np.array([0.1, 0.4 + 0.3j, -0.7j])
    q = I.euclidean_potential(s, z)
    assert np.allclose(np.abs(q), 1 / (1 + np.abs(z) ** 2))


def test_euclidean_potential_of_catenoid_is_two_soliton():
    mu = 2
    _, _, s = catenoid(mu)
    t = np.linspace(-3, 3, 7)
    U = I.euclidean_potential(s, np.exp(t + 0.3j)) * np.exp(t)
    lam = np.array([(mu + 1) / mu, (mu + 1) * (2 * mu + 1) / mu])
    ref = reflectionless_potential([0.5, mu + 0.5], lam * [1, -1])(t)
    assert np.allclose(U, ref, atol=1e-10)


def test_plucker_spin_check():
    r = I.plucker_spin_check(FOUR_PI * 9, 2, 0)
    assert r["holds"] and r["inferred_ord_h"] == pytest.approx(0)
    assert not I.plucker_spin_check(FOUR_PI * 10, 2, 0)["holds"]


def test_willmore_energy_is_moebius_invariant_for_sphere():
    s = round_sphere()
    inv = I.inverted(s, np.array([0, 0.3, 0.1, 2.0]))
    assert I.willmore_energy(inv).W == pytest.approx(FOUR_PI, rel=1e-3)
    assert Q.qabs(inv(np.array([0.2j]))).item() > 0
