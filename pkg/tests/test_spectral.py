import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from singweyl import models, spectral
from singweyl.errors import PreconditionError
from singweyl.schrodinger import Potential

FREE = Potential(l=0.0)
SYS0 = models.bessel_system(0.0)
SOLITON = models.SolitonModel(1.0, 1.0)
M0 = lambda z: models.bessel_M(0.0, z)
MS = lambda z: models.soliton_M(SOLITON, z)
ONE = lambda x: np.ones_like(x)


def test_density_bessel_examples():
    m = spectral.stieltjes_invert(M0, grid=[1.0, 4.0, 9.0])
    assert m.density[1] == pytest.approx(2 / math.pi, rel=1e-8)
    assert m.atoms == ()
    m1 = spectral.stieltjes_invert(lambda z: (-z) ** 1.5, grid=[0.5, 1.0, 2.0])
    assert m1.density[1] == pytest.approx(1 / math.pi, rel=1e-8)


def test_soliton_atom():
    m = spectral.stieltjes_invert(MS, (-3.0, 5.0), 161)
    assert len(m.atoms) == 1
    lam0, mass = m.atoms[0]
    assert lam0 == pytest.approx(-1.0, abs=1e-9)
    assert mass == pytest.approx(8.0, rel=1e-8)
    assert np.all(np.abs(m.grid - lam0) > 1e-9)
    # below the continuous spectrum the density vanishes once the atom is removed
    assert np.max(m.density[m.grid < -0.3]) < 1e-8


def test_schedule_preconditions():
    with pytest.raises(PreconditionError):
        spectral.stieltjes_invert(M0, (1, 2), 5, eps_schedule=(1e-3, 1e-2, 1e-1))
    with pytest.raises(PreconditionError):
        spectral.stieltjes_invert(M0, (1, 2), 5, eps_schedule=(1e-4, 1e-5, 1e-7))


def test_norming_constant_soliton_and_residue_fit():
    nc = spectral.norming_constant(MS, -1.0)
    assert nc == pytest.approx(8.0, rel=1e-8)
    assert spectral.residue_fit(MS, -1.0) == pytest.approx(nc, rel=1e-4)
    # phi(-1, x) decays like e^-x, so [0, 18] carries all but 1e-15 of the mass
    phi2 = quad(lambda x: float(np.real(models.soliton_solutions(SOLITON, -1.0, x)["phi"].u)) ** 2,
                0.0, 18.0, limit=200, epsabs=1e-14)[0]
    assert phi2 == pytest.approx(1 / nc, abs=1e-6)


def test_norming_constant_rejects_continuous_point():
    with pytest.raises(spectral.NotEigenvalueError):
        spectral.norming_constant(M0, 2.0)


def test_gauge_scales_atom_mass():
    g = lambda z: 0.3 * z + 0.1
    Mg = lambda z: np.exp(-2 * g(z)) * MS(z)
    assert spectral.norming_constant(Mg, -1.0) == pytest.approx(8.0 * math.exp(-2 * g(-1.0)), rel=1e-8)


def test_gauge_covariance_density():
    sys1 = models.bessel_system(1.0).with_gauge(lambda z: 0.2 * z, lambda z: 1.0 + z ** 2)
    Mg = lambda z: sys1.apply_gauge(z, models.bessel_M(1.0, z))
    grid = np.linspace(0.5, 10, 20)
    m = spectral.stieltjes_invert(lambda z: models.bessel_M(1.0, z), grid=grid)
    mg = spectral.stieltjes_invert(Mg, grid=grid)
    np.testing.assert_allclose(mg.density, np.exp(-0.4 * grid) * m.density, rtol=1e-6)


def test_classify_supports():
    c = spectral.classify_supports(MS, (-3.0, 5.0), 81)
    np.testing.assert_allclose(c["p"], [-1.0], atol=1e-9)
    # lambda = 0 is the edge of the continuous spectrum; lambda = A = 1 is a zero of M
    assert np.all(c["ac"] >= 0) and np.all(np.isin(c["grid"][c["grid"] > 1.05], c["ac"]))
    assert c["status"] == "numerical evidence"
    b = spectral.classify_supports(M0, (-3.0, 5.0), 17)
    lab = dict(zip(b["grid"], b["labels"]))
    assert all(lab[l] == "none" for l in b["grid"] if l < 0)
    assert all(lab[l] == "ac" for l in b["grid"] if l > 0)
    assert b["p"].size == 0


def test_classify_singular_growth_proxy():
    # Im M(2 + i eps) ~ -log(eps)/eps: no finite limit and eps Im M unbounded
    M = lambda z: -np.log(2.0 - z) / (2.0 - z)
    c = spectral.classify_supports(M, grid=[2.0])
    assert c["labels"][0] == "s"


def test_measure_files_round_trip(tmp_path):
    m = spectral.stieltjes_invert(MS, (-3.0, 5.0), 41)
    m.to_files(str(tmp_path / "rho.csv"), str(tmp_path / "atoms.json"))
    back = spectral.SpectralMeasure.from_files(str(tmp_path / "rho.csv"), str(tmp_path / "atoms.json"))
    np.testing.assert_array_equal(back.grid, m.grid)
    np.testing.assert_array_equal(back.density, m.density)
    assert back.atoms == m.atoms
    assert (tmp_path / "rho.csv").read_text().startswith("lambda,density\n")


def test_measure_invariants():
    with pytest.raises(PreconditionError):
        spectral.SpectralMeasure(np.array([0.0, 1.0]), np.array([1.0, -1.0]))
    with pytest.raises(PreconditionError):
        spectral.SpectralMeasure(np.array([0.0, 1.0]), np.array([1.0, 1.0]), ((0.5, 0.0),))


def test_transform_forward_examples():
    m = spectral.stieltjes_invert(M0, grid=np.array([1.0, math.pi ** 2, 50.0, 400.0]))
    fh = spectral.transform_forward(SYS0, FREE, ONE, m, support=(0.0, 1.0))
    ex = (1 - np.cos(np.sqrt(m.grid))) / m.grid
    np.testing.assert_allclose(fh.values, ex, rtol=1e-8, atol=1e-10)
    assert fh.values[1] == pytest.approx(2 / math.pi ** 2, rel=1e-9)
    zero = spectral.transform_forward(SYS0, FREE, lambda x: 0 * x, m, support=(0.0, 1.0))
    assert np.all(zero.values == 0)
    assert np.all(spectral.transform_inverse(SYS0, m, zero, np.array([0.2, 0.5])) == 0)


def test_transform_sampled_input():
    xs = np.linspace(0.0, 1.0, 41)
    m = spectral.stieltjes_invert(M0, grid=np.array([2.0, 30.0]))
    fh = spectral.transform_forward(SYS0, FREE, (xs, np.ones_like(xs)), m)
    np.testing.assert_allclose(fh.values, (1 - np.cos(np.sqrt(m.grid))) / m.grid, rtol=1e-9)
    with pytest.raises(PreconditionError):
        spectral.transform_forward(SYS0, FREE, ONE, m)


def test_transform_positive_for_eigenfunction_window():
    lam0, c, d = 7.0, 0.3, 0.9
    f = lambda x: np.real(np.asarray(models.bessel_phi(1.0, lam0, x).u))
    sys1 = models.bessel_system(1.0)
    m = spectral.SpectralMeasure(np.array([lam0]), np.array([1.0]))
    fh = spectral.transform_forward(sys1, Potential(l=1.0), f, m, support=(c, d))
    assert fh.values[0] > 0


def test_unitarity_family():
    w = np.linspace(0.01, 60.0, 3000)
    m = spectral.stieltjes_invert(M0, grid=w ** 2, eps_schedule=(1e-4, 3e-5, 1e-5, 3e-6, 1e-6))
    family = [
        (lambda x: np.sin(np.pi * x) ** 2, (0.0, 1.0), 3 / 8),
        (lambda x: 1 - np.abs(2 * x - 1), (0.0, 1.0), 1 / 3),
        (lambda x: x * (2 - x), (0.0, 2.0), 16 / 15),
    ]
    for f, sup, norm in family:
        fh = spectral.transform_forward(SYS0, FREE, f, m, support=sup, breakpoints=(0.5,))
        got = spectral.parseval_norm(fh, m, tail_power=1.5)["norm_sq"]
        assert abs(got - norm) <= 1e-3 * norm


def test_mu_f_density_matches():
    grid = np.linspace(1.0, 20.0, 8)
    mf = lambda z: spectral.resolvent_form(SYS0, FREE, ONE, (0.0, 1.0), z, c=1.0, n=2001)
    mu = spectral.stieltjes_invert(mf, grid=grid, atoms=False)
    fh = (1 - np.cos(np.sqrt(grid))) / grid
    np.testing.assert_allclose(mu.density, fh ** 2 * np.sqrt(grid) / math.pi, rtol=1e-3)


def test_resolvent_image_derivative_variants():
    m = spectral.stieltjes_invert(M0, (0.0, 200.0), 81)
    r = spectral.resolvent_image_check(SYS0, FREE, m, -2.5, 0.7)
    assert r["max_deviation"] <= 1e-3 and r["derivative_deviation"] <= 1e-3
    r1 = spectral.resolvent_image_check(SYS0, FREE, m, -1.0, 1.0, k=1)
    assert r1["max_deviation"] <= 1e-3 and r1["derivative_deviation"] <= 1e-3


def test_resolvent_image_needs_off_spectrum():
    m = spectral.stieltjes_invert(M0, (0.0, 10.0), 5)
    with pytest.raises(PreconditionError):
        spectral.resolvent_image_check(SYS0, FREE, m, 4.0, 1.0)


def test_ef_entire():
    rep = spectral.ef_entire_check(SYS0, FREE, ONE, (2.0, 6.0), (0.0, 1.0))
    assert rep["cr_residual"] <= 1e-4
    assert rep["conjugation_defect"] <= 1e-8
    assert rep["cauchy_defect"] <= 1e-6
    assert rep["im_decreasing"] and rep["im_limit"][-1] < 1e-3


def test_ef_rejects_vanishing_fhat():
    with pytest.raises(PreconditionError):
        spectral.ef_entire_check(SYS0, FREE, ONE, (38.0, 41.0), (0.0, 1.0))


@settings(max_examples=15)
@given(l=st.sampled_from([-0.25, 0.0, 0.5, 1.0, 1.5, 2.0]), lo=st.floats(-5, 5),
       width=st.floats(0.5, 20))
def test_density_nonnegative_and_matches(l, lo, width):
    grid = np.linspace(lo, lo + width, 23)
    m = spectral.stieltjes_invert(lambda z: models.bessel_M(l, z), grid=grid)
    assert np.all(m.density >= 0)
    ok = (m.grid > 0.2) & ~m.flags
    ref = m.grid[ok] ** (l + 0.5) / math.pi
    np.testing.assert_allclose(m.density[ok], ref, rtol=1e-3)
