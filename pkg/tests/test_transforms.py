import numpy as np
import pytest
from conftest import A_NONNULL, A_NULL, catenoid

from solitonsphere import jets as J
from solitonsphere import quat as Q
from solitonsphere import surface as S
from solitonsphere import transforms as T
from solitonsphere.constructions import EXAMPLE_PHI, round_sphere, twistor_projection, willmore_twistor


@pytest.fixture(scope="module")
def bryant_pair():
    nc, _, _ = catenoid(2)
    return T.bryant_darboux_pair(nc)


@pytest.fixture(scope="module")
def willmore():
    return willmore_twistor(EXAMPLE_PHI, a=A_NULL)


def _complex_map(fn, name):
    """Quaternionic map from a complex rational function given per chart as jet -> jet."""
    def jet_fn(chart, z, order):
        return J.complex_to_quat(fn[chart](J.Jet.coordinate(np.asarray(z, complex), order)))
    return S.SurfaceMap(jet_fn, name=name)


def test_bryant_pair_identities(bryant_pair):
    assert bryant_pair.compatibility_residual() < 1e-10
    r = bryant_pair.identity_residuals()
    assert max(r.values()) < 1e-8


def test_bryant_pair_is_umbilic(bryant_pair):
    c = T.classify_darboux(bryant_pair)
    assert c["flags"]["TWISTOR"] and c["flags"]["UMBILIC"]
    assert not c["flags"]["PLANAR"]
    rep = S.residuals(bryant_pair.sharp(), S.chart_samples(30, 0))
    assert rep.flags["totally_umbilic"]


def test_generic_h_is_twistor_only(bryant_pair):
    _, _, f = catenoid(2)
    p = T.darboux(f, bryant_pair.g, base=0.3 + 0.2j, n_loops=30)
    assert p.compatibility_residual(S.chart_samples(10, 1)) < 1e-6
    flags = T.classify_darboux(p, S.chart_samples(10, 1))["flags"]
    assert flags["TWISTOR"] and not flags["UMBILIC"]


def test_darboux_path_independence(bryant_pair):
    _, _, f = catenoid(2)
    p1 = T.darboux(f, bryant_pair.g, n_loops=20)
    p2 = T.darboux(f, bryant_pair.g, base=0.3 + 0.2j, n_loops=20)
    z = S.chart_samples(10, 2)[0][1]
    d = p1.h(z) - p2.h(z)
    assert np.ptp(d, axis=0).max() < 1e-8 * Q.qabs(p1.h(z)).max()


def test_darboux_rejects_non_closed_form():
    _, _, f = catenoid(1)
    g = _complex_map({"z": lambda Z: Z + 0.5, "w": lambda W: W.inv() + 0.5}, "z+1/2")
    with pytest.raises(T.TransformError) as e:
        T.darboux(f, g, n_loops=20)
    assert e.value.report["max"] > 1e-3


def test_constant_g_is_always_closed():
    _, _, f = catenoid(1)
    g = T.constant_map(np.array([0.3, 1, 0.2, -0.5]))
    p = T.darboux(f, g, n_loops=20)
    assert p.compatibility_residual(S.chart_samples(10, 1)) < 1e-6


def test_planar_pair():
    # f = -2/z, g = 1/z, h = 1/z^2 satisfy dh = -df g, with g^-1 and h^-1 complex holomorphic
    f = _complex_map({"z": lambda Z: Z.inv().scale(-2.0), "w": lambda W: W.scale(-2.0)}, "f")
    g = _complex_map({"z": lambda Z: Z.inv(), "w": lambda W: W}, "g")
    h = _complex_map({"z": lambda Z: (Z @ Z).inv(), "w": lambda W: W @ W}, "h")
    p = T.DarbouxPair(f, g, h)
    assert p.compatibility_residual() < 1e-12
    c = T.classify_darboux(p)
    assert c["flags"]["PLANAR"]


def test_backlund1_of_willmore_is_twistor_holomorphic(willmore):
    g = T.backlund1_forward(willmore)
    assert g.meta["closedness"]["max"] < 1e-6
    rep = S.residuals(g, S.chart_samples(20, 3, radius=0.9))
    assert rep.twistor[0] < 1e-5


def test_backlund1_constants():
    assert T.backlund1_forward(round_sphere()).meta.get("constant")
    assert T.backlund1_forward(twistor_projection(EXAMPLE_PHI)).meta.get("constant")


def test_backlund1_rejects_non_willmore():
    _, _, f = catenoid(1)
    with pytest.raises(T.TransformError):
        T.backlund1_forward(f, n_loops=30)
    # a non-null a gives an Im H-valued sphere that is not Willmore
    g = willmore_twistor(EXAMPLE_PHI, a=A_NONNULL, allow_nonnull=True)
    with pytest.raises(T.TransformError):
        T.backlund1_forward(g, n_loops=30)


def test_backlund2_of_willmore_is_constant(willmore):
    for d in ("forward", "backward"):
        r = T.backlund2(willmore, d)
        assert r.defined and r.is_constant()
        assert Q.qabs(r.point()) < 1e-6


def test_backlund2_of_minimal_map_is_infinity(bryant_pair):
    r = T.backlund2(bryant_pair.h_inv(), "backward")
    assert r.is_constant() and r.point() is np.inf


def test_backlund2_undefined_for_round_sphere():
    assert not T.backlund2(round_sphere(), "forward").defined
    with pytest.raises(ValueError):
        T.backlund2(round_sphere(), "sideways")


def test_integrate_form_recovers_exact_map():
    f = round_sphere()

    def form(chart, z):
        return f.partials(z, chart)

    g = T.integrate_form(form, base=0j, base_value=f(np.array([0j]))[0])
    z = np.array([0.3 + 0.4j, -0.6j])
    assert np.allclose(g(z), f(z), atol=1e-8)
    assert np.allclose(g(1 / z, "w"), f(z), atol=1e-8)
