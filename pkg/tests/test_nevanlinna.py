import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from singweyl import models, nevanlinna as nv, spectral
from singweyl.errors import ConfigError, PreconditionError

W = np.linspace(0.0, 100.0, 4001)[1:]
GRID = W ** 2


def bessel(l):
    return lambda z: models.bessel_M(l, z)


@pytest.fixture(scope="module")
def rho():
    return {l: spectral.stieltjes_invert(bessel(l), grid=GRID, atoms=False) for l in range(5)}


@pytest.mark.parametrize("l,kappa", [(0, 0), (1, 1), (2, 1), (3, 2), (4, 2)])
def test_kernel_negative_squares_bessel(l, kappa):
    assert nv.kernel_negative_squares(bessel(l), nv.default_points(), 20) == kappa
    assert kappa == math.floor(l / 2 + 3 / 4)


def test_kernel_preconditions():
    with pytest.raises(PreconditionError):
        nv.kernel_negative_squares(bessel(0), [1j, 1j, 2j])
    with pytest.raises(PreconditionError):
        nv.kernel_negative_squares(bessel(0), [1j, 2.0])
    with pytest.raises(PreconditionError):
        nv.kernel_negative_squares(bessel(0), [1 + 1j, 1 - 1j])


def test_kernel_is_hermitian():
    z = nv.default_points(12)
    N = nv.kernel_matrix(bessel(1), z)
    np.testing.assert_allclose(N, N.conj().T, atol=0)


def test_minimal_k(rho):
    assert nv.minimal_k(rho[0]).k == 0
    r1 = nv.minimal_k(rho[1])
    assert r1.k == 1 and r1.exponent == pytest.approx(1.5, abs=1e-6)
    finite = spectral.SpectralMeasure(np.linspace(0, 10, 101), np.r_[np.ones(50), np.zeros(51)])
    assert nv.minimal_k(finite).k == 0


def test_minimal_k_indeterminate_near_boundary():
    lam = np.linspace(1.0, 1e4, 2000)
    m = spectral.SpectralMeasure(lam, lam ** 1.02)  # p = 1.02 sits at the k = 0 boundary
    r = nv.minimal_k(m)
    assert r.k is None and not r.determinate


def test_bessel_k_bound(rho):
    assert [nv.bessel_k_bound(l) for l in (0, 1, 2)] == [1, 1, 2]
    for l in range(4):
        assert nv.minimal_k(rho[l]).k <= nv.bessel_k_bound(l)
    assert nv.minimal_k(rho[0]).k < nv.bessel_k_bound(0)
    with pytest.raises(PreconditionError):
        nv.bessel_k_bound(-0.6)


def test_integral_representation_rho1(rho):
    # M_1 minus the representation is a real polynomial: fit it away from the
    # test points, then predict there
    fit_pts = np.concatenate([2.0 * np.exp(1j * np.linspace(0.2, 2.9, 20)),
                              3.0 * np.exp(1j * np.linspace(0.2, 2.9, 20))])
    a = nv.fit_polynomial(bessel(1), rho[1], 1, points=fit_pts)
    for z in (2j, 0.5 + 4j, -1.5 + 0j):
        resid = bessel(1)(z) - nv.integral_representation(rho[1], "poly", z, k=1)
        assert resid == pytest.approx(np.polyval(a[::-1], z), abs=1e-4)


def test_integral_representation_rho0(rho):
    # k = 0: M_0 minus the representation is constant and real
    for z in (-1.5, -0.3 + 0.4j, 2 + 3j):
        d = bessel(0)(z) - nv.integral_representation(rho[0], "poly", z, k=0)
        assert d == pytest.approx(-1 / math.sqrt(2), abs=1e-6)


@pytest.mark.parametrize("ghat", ["poly", "exp_z", "exp_z2"])
def test_representation_residual_entire(rho, ghat):
    rep = nv.representation_check(rho[0], ghat, bessel(0), -1.0, 0.8)
    assert rep["cr_residual"] <= 1e-4
    assert rep["real_defect"] <= 1e-6
    assert rep["cauchy_defect"] <= 1e-6


def test_integral_representation_errors(rho):
    with pytest.raises(PreconditionError, match=r"\(1\+z\^2\)\^0"):
        nv.integral_representation(rho[1], "poly", 1j, k=0)
    with pytest.raises(ConfigError):
        nv.integral_representation(rho[0], "gauss", 1j)
    lam = np.linspace(-50.0, 10.0, 601)
    wide = spectral.SpectralMeasure(lam, np.ones_like(lam))
    with pytest.raises(PreconditionError, match="exp"):
        nv.integral_representation(wide, "exp_z", 1j)


def test_herglotzify_bessel0(rho):
    h = nv.herglotzify(rho[0], bessel(0))
    oracle = quad(lambda t: math.sqrt(t) * math.exp(-t) / (t + 1), 0, math.inf, epsabs=1e-13)[0] / math.pi
    assert h["Mtilde"](-1.0).real == pytest.approx(oracle, abs=1e-6)
    assert oracle == pytest.approx(0.1366060074, abs=1e-10)
    # the grid starts at 6e-4; the mass below it is about 1e-6 relative
    assert h["mass"] == pytest.approx(math.gamma(1.5) / math.pi, rel=1e-5)
    assert h["im_positive"]
    assert h["Mtilde"](1j).imag > 0
    z = np.array([-2.0, 0.5 + 1j, 3j])
    np.testing.assert_allclose(h["Mtilde"](z), models.bessel_herglotz_M(0, z), atol=1e-5)


def test_herglotzify_gauge_identity(rho):
    h = nv.herglotzify(rho[0], bessel(0))
    g, f = h["gauge"]
    z = np.array([1 + 1j, -3 + 0.5j])
    np.testing.assert_allclose(np.exp(-2 * g(z)) * bessel(0)(z) + np.exp(-g(z)) * f(z), h["Mtilde"](z),
                               rtol=1e-12)
    # f is real on the real axis: f(conj z) = conj f(z)
    w = np.array([4.0 + 0.7j, -1.0 + 2j])
    np.testing.assert_allclose(f(np.conj(w)), np.conj(f(w)), rtol=1e-12)


def test_herglotzify_rejects_unbounded_left():
    lam = np.linspace(-400.0, 10.0, 2000)
    m = spectral.SpectralMeasure(lam, np.ones_like(lam))
    with pytest.raises(PreconditionError, match="lam\\^2"):
        nv.herglotzify(m, lambda z: 0 * z)


def test_kappa_from_growth():
    assert nv.kappa_from_growth(lambda z: (-z) ** 1.5)["kappa"] == 1
    assert nv.kappa_from_growth(bessel(1))["growth_exponent"] == pytest.approx(1.5, abs=1e-3)
    assert nv.kappa_from_growth(bessel(0))["kappa"] == 0
    sol = models.SolitonModel(1.0, 0.0)
    r = nv.kappa_from_growth(lambda z: models.soliton_M(sol, z))
    assert r["kappa"] == 1 and r["growth_exponent"] == pytest.approx(1.5, abs=1e-3)
    # a real linear term: -M/(iy)^(2 kappa - 1) has a finite positive limit
    lin = nv.kappa_from_growth(lambda z: -3.0 * z)
    assert lin["kappa"] == 1 and lin["limits"]["lower"] == pytest.approx(3.0)
    assert nv.kappa_from_growth(lambda z: z ** 21, kappa_max=3)["kappa"] is None


def test_moment_growth_examples(rho):
    a = nv.moment_growth_check(rho[0], bessel(0), 0, 1.0)
    assert not a["measure_finite"] and not a["growth_finite"] and a["equivalent"]
    b = nv.moment_growth_check(rho[0], bessel(0), 0, 0.0)
    assert not b["measure_finite"] and not b["growth_finite"] and b["equivalent"]
    c = nv.moment_growth_check(rho[1], bessel(1), 1, 1.4)
    assert c["measure_finite"] and c["growth_finite"] and c["equivalent"]
    edge = nv.moment_growth_check(rho[1], bessel(1), 1, 0.5)
    assert not edge["determinate"] and edge["equivalent"] is None


def test_moment_growth_gamma_zero_values():
    # density 6 lam (1 - lam) on [0, 1]: at k = 0 both sides equal the mass 1
    lam = np.linspace(0.0, 30.0, 3001)
    d = np.clip(6 * lam * (1 - lam), 0, None)
    m = spectral.SpectralMeasure(lam, d)
    # int_0^1 6 lam (1 - lam)/(lam - z) dlam by polynomial division
    M = lambda z: 3 - 6 * z + 6 * z * (1 - z) * np.log((1 - z) / (-z))
    out = nv.moment_growth_check(m, M, 0, 0.0, y_range=(10.0, 1e3))
    assert out["measure_finite"] and out["growth_finite"]
    assert out["measure_value"] == pytest.approx(1.0, abs=2e-3)
    assert out["growth_value"] == pytest.approx(1.0, abs=1e-3)


def test_kappa_from_representation_rule():
    assert nv.kappa_from_representation(1, [1, 2, 3]) == 1
    assert nv.kappa_from_representation(0, [0, 1]) == 0
    assert nv.kappa_from_representation(0, [0, -1]) == 1
    assert nv.kappa_from_representation(1, [0, 0, 0, 0, 2]) == 2
    assert nv.kappa_from_representation(1, [0, 0, 0, -1]) == 2


def test_report_consistency_and_json(rho, tmp_path):
    for l in range(5):
        rep = nv.nevanlinna_report(bessel(l), rho[l])
        assert rep.kappa == math.floor(l / 2 + 3 / 4)
        assert rep.flags["consistent"] and rep.flags["kappa_growth"] == rep.kappa
        assert len(rep.poly_coeffs) == 2 * rep.k + 2
        for g, v in rep.moments_ok.items():
            # density exponent l + 1/2: the moment is log-divergent when l + 1/2 - 2k - gamma = -1
            on_boundary = abs(l + 0.5 - 2 * rep.k - float(g) + 1) < nv.MARGIN
            assert v is None if on_boundary else v
    rep.to_json(str(tmp_path / "nev.json"))
    data = json.loads((tmp_path / "nev.json").read_text())
    assert data["kappa"] == 2 and data["k"] == 2 and data["flags"]["poly_is_fit"]


@settings(max_examples=15)
@given(l=st.integers(0, 4), seed=st.integers(0, 10 ** 6), n=st.integers(4, 20))
def test_kernel_count_monotone(l, seed, n):
    z = nv.default_points(n + 5, seed)
    full = nv._negative_count(nv.kernel_matrix(bessel(l), z))
    sub = nv._negative_count(nv.kernel_matrix(bessel(l), z[:n]))
    assert sub <= full <= math.floor(l / 2 + 3 / 4)
