import numpy as np
import pytest
from conftest import dirac
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solitonsphere import quat as Q
from solitonsphere import spectral as SP
from solitonsphere import spin as SN
from solitonsphere.constructions import dirac_potential

finite = st.floats(-5, 5, allow_nan=False)


def test_zero_potential_has_no_bound_states():
    assert SP.akns_bound_states(SP.AknsProblem(lambda x: 0 * x), 3.0) == []


def test_sech_bound_states_are_orthonormal():
    states = SP.akns_bound_states(SP.AknsProblem(dirac_potential(1)), 2.0)
    assert [s.n for s in states] == [0, 1]
    assert np.allclose([s.kappa for s in states], [0.5, 1.5], atol=1e-8)
    assert abs(SP.inner_product(states[0], states[1])) < 1e-6
    for s in states:
        assert SP.inner_product(s, s) == pytest.approx(1, abs=1e-6)
        assert s.residual < 1e-6


def test_bound_state_tails_decay():
    s = SP.akns_bound_states(SP.AknsProblem(dirac_potential(0)), 1.0)[0]
    far = np.abs(s(np.array([-60.0, 60.0]))).max()
    assert far < 1e-12


def test_non_decaying_potential_rejected():
    with pytest.raises(SP.SpectralError):
        SP.akns_bound_states(SP.AknsProblem(lambda x: 0 * x + 0.1), 1.0)


def test_trace_integral_of_sech():
    assert SP.trace_integral(dirac_potential(2)) == pytest.approx(9, abs=1e-9)


def test_one_soliton_is_sech():
    U = SP.reflectionless_potential([0.5], [1.0])
    x = np.linspace(-5, 5, 11)
    assert np.allclose(U(x), 0.5 / np.cosh(x))
    assert np.allclose(SP.reflectionless_potential([0.5], [-1.0])(x), -0.5 / np.cosh(x))


def test_reflectionless_validation():
    U = SP.reflectionless_potential([0.5, 1.5], [2.0, -6.0])
    check = SP.validate_reflectionless(U, [0.5, 1.5])
    assert check.ok
    assert check.max_kappa_error < 1e-6
    assert check.trace == pytest.approx(4, abs=1e-8)  # sum of 2 kappa_j
    t, r = SP.transmission(SP.AknsProblem(U), 1.0)
    assert t == pytest.approx(1, abs=1e-4) and r < 1e-4


def test_reflectionless_rejects_bad_parameters():
    with pytest.raises(ValueError):
        SP.reflectionless_potential([0.5, 0.5], [1, 1])
    with pytest.raises(ValueError):
        SP.reflectionless_potential([-0.5], [1])


def test_csv_round_trip(tmp_path):
    path = tmp_path / "u.csv"
    U = dirac_potential(1)
    SP.potential_to_csv(path, U)
    V = SP.potential_from_csv(path)
    x = np.linspace(-10, 10, 37)
    assert np.allclose(V(x), U(x), atol=1e-8)
    assert V(np.array([100.0]))[0] == 0
    states = SP.akns_bound_states(SP.AknsProblem(V), 2.0)
    assert np.allclose([s.kappa for s in states], [0.5, 1.5], atol=1e-6)
    assert '"kappa"' in SP.bound_states_to_json(states)


def test_dirac_sections_solve_the_dirac_equation():
    sd = dirac(1)
    assert SP.dirac_residual(sd) < 1e-5
    assert SN.Provenance(sd.provenance) is SN.Provenance.GRID


def test_weierstrass_form_of_a_section_is_closed():
    sd = dirac(1)
    assert SP.weierstrass_circulation(sd.sections[0], n_loops=20) < 1e-6


def test_weierstrass_of_random_spinor_is_not_closed():
    def mu(z):
        return np.conj(z) ** 2 + 1, z + 0.5j
    assert SP.weierstrass_circulation(mu, n_loops=10) > 1e-3


@settings(max_examples=50)
@given(arrays(float, (2, 4), elements=finite), arrays(float, (2, 2), elements=finite),
       arrays(float, (2, 2), elements=finite))
def test_spin_combine_is_right_multiplication(lams, re, im):
    mus = [(complex(re[j, 0], im[j, 0]), complex(re[j, 1], im[j, 1])) for j in range(2)]
    got = SN.spinor_to_quat(*SN.spin_combine_values(mus, list(lams)))
    expect = sum(Q.qmul(SN.spinor_to_quat(*m), l) for m, l in zip(mus, lams))
    assert np.allclose(got, expect, atol=1e-12 * (1 + np.abs(expect).max()))


@given(arrays(float, 4, elements=finite))
def test_spinor_quat_round_trip(q):
    assert np.allclose(SN.spinor_to_quat(*SN.quat_to_spinor(q)), q)


def test_spin_combine_checks_arguments():
    sd = dirac(1)
    with pytest.raises(SN.SpinError):
        SN.spin_combine(sd.sections, [Q.ONE])
    other = dirac(0)
    with pytest.raises(SN.SpinError):
        SN.spin_combine([sd.sections[0], other.sections[0]], [Q.ONE, Q.ONE])


def test_combined_section_axis_order():
    sd = dirac(1)
    s = sd.combined([0 * Q.ONE, Q.J])
    assert s.axis_order() == 1
    assert sd.combined([Q.ONE, Q.J]).axis_order() == 0


def test_integrate_weierstrass_rejects_non_solution():
    sd = dirac(0)

    def bad(z):
        return z + 1, 0 * z + 1
    with pytest.raises(SP.SpectralError):
        SP.integrate_weierstrass(sd, bad)
