import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as quad

from singweyl.errors import ConfigError, NearPoleError, PreconditionError
from singweyl.schrodinger import (Potential, SolutionSample, check_kneser, integrate,
                                  lagrange_bracket, potential_from_csv,
                                  potential_from_expression, pruefer_count,
                                  regular_solution_phi, second_solution_theta_numeric)

FREE_REGULAR = Potential(l=None)
# (sin 2 / 2 - cos 2) / 4, evaluated in 30-digit arithmetic
PHI_L1_AT_4_1 = 0.21769888748721433


def phi_l1_closed(z, x):
    t = z * x * x
    if abs(t) < 1e-2:
        # ascending series avoids the cancellation in the trigonometric form
        return x ** 2 / 3 * (1 - t / 10 + t * t / 280 - t ** 3 / 15120)
    k = np.sqrt(complex(z))
    w = k * x
    return (np.sin(w) / w - np.cos(w)) / z


def test_integrate_free_sine():
    s = integrate(FREE_REGULAR, 1.0, 0.0, SolutionSample(1.0, 0.0, 0.0, 1.0), math.pi / 2)
    assert abs(s.u - 1) < 1e-8 and abs(s.du) < 1e-8


def test_integrate_free_sinh():
    s = integrate(FREE_REGULAR, -1.0, 0.0, SolutionSample(-1.0, 0.0, 0.0, 1.0), 1.0)
    assert s.u == pytest.approx(math.sinh(1), abs=1e-9)
    assert s.du == pytest.approx(math.cosh(1), abs=1e-9)


def test_integrate_inverse_square_power_solution():
    pot = Potential(l=1.0)
    s = integrate(pot, 0.0, 0.1, SolutionSample(0.0, 0.1, 0.01, 0.2), 1.0)
    assert abs(s.u - 1) < 1e-6 and abs(s.du - 2) < 1e-6


def test_integrate_rejects_bad_arguments():
    with pytest.raises(PreconditionError):
        integrate(FREE_REGULAR, 1.0, 0.0, SolutionSample(1.0, 0.5, 0.0, 1.0), 1.0)
    with pytest.raises(PreconditionError):
        integrate(FREE_REGULAR, 1.0, 0.0, SolutionSample(1.0, 0.0, 0.0, 1.0), 1.0, tol=0)


def test_phi_examples():
    assert regular_solution_phi(Potential(l=0.0), -1.0, 1.0).u == pytest.approx(math.sinh(1), rel=1e-9)
    assert regular_solution_phi(Potential(l=1.0), 0.0, 0.5).u == pytest.approx(0.5 ** 2 / 3, rel=1e-9)
    assert regular_solution_phi(Potential(l=1.0), 4.0, 1.0).u == pytest.approx(PHI_L1_AT_4_1, rel=1e-8)


def test_phi_matches_closed_form_on_grid():
    z = np.linspace(-10, 10, 9) + 0j
    z[4] = 1e-3
    x = np.linspace(0.1, 2, 6)
    s = regular_solution_phi(Potential(l=1.0), z, x)
    ref = np.array([[phi_l1_closed(zz, xx) for xx in x] for zz in z])
    assert np.max(np.abs(s.u - ref) / np.abs(ref)) < 1e-6


def test_phi_rejects_points_outside():
    with pytest.raises(PreconditionError):
        regular_solution_phi(Potential(l=0.0), 1.0, 0.0)
    with pytest.raises(PreconditionError):
        Potential(l=-0.75)


def test_theta_numeric_examples():
    pot = Potential(l=0.0)
    t = second_solution_theta_numeric(pot, 1.0, 1.0, 1.0)
    assert t.u == pytest.approx(math.cos(1), abs=1e-9)
    assert t.du == pytest.approx(-math.sin(1), abs=1e-9)
    for z in [0.5, 3.0, 20.0]:
        p = regular_solution_phi(pot, z, 1.0)
        t = second_solution_theta_numeric(pot, z, 1.0, 1.0)
        assert abs(lagrange_bracket(t, p) - 1) < 1e-9


def test_theta_numeric_differs_from_closed_form_by_real_multiple_of_phi():
    pot = Potential(l=0.0)
    x = np.array([0.3, 0.8, 1.7])
    for z in [0.7, 4.0, -2.0]:
        t = second_solution_theta_numeric(pot, z, 1.0, x)
        p = regular_solution_phi(pot, z, x)
        k = np.sqrt(complex(z))
        diff = np.asarray(t.u) - np.cos(k * x)
        f = diff / np.asarray(p.u)
        assert np.ptp(f.real) < 1e-8 and np.max(np.abs(f.imag)) < 1e-10


def test_theta_numeric_near_pole_error():
    # alpha^2 + beta^2 = 0 happens where tan(sqrt(z)) = +-i, far from the axis
    pot = Potential(l=0.0)
    with pytest.raises(NearPoleError):
        second_solution_theta_numeric(pot, _tan_root_pole(), 1.0, 1.0)


def _tan_root_pole():
    # sin^2 k / k^2 + cos^2 k = 0 solved by Newton near a large imaginary k
    from scipy.optimize import newton
    f = lambda k: np.sin(k) ** 2 / k ** 2 + np.cos(k) ** 2
    k = newton(f, 1.2 + 1.2j, tol=1e-15, maxiter=200)
    return complex(k * k)


def test_pruefer_counts():
    assert pruefer_count(Potential(l=0.0), 50.0, 1.0) == 2
    assert pruefer_count(Potential(l=0.0), 1000.0, 1.0) == 10
    assert pruefer_count(Potential(l=1.0), 10.0, 1.0) == 0
    assert pruefer_count(Potential(l=1.0), 20.0, 1.0) == 0
    assert pruefer_count(Potential(l=1.0), 20.4, 1.0) == 1


def test_lagrange_bracket_examples():
    u = SolutionSample(0, 0.3, np.sin(0.3), np.cos(0.3))
    v = SolutionSample(0, 0.3, np.cos(0.3), -np.sin(0.3))
    assert lagrange_bracket(u, u) == 0
    assert lagrange_bracket(u, v) == pytest.approx(-1, abs=1e-15)
    with pytest.raises(PreconditionError):
        lagrange_bracket(u, SolutionSample(0, 0.4, 1, 1))


def test_kneser_examples():
    r = check_kneser(Potential(l=2.0), 1.0)
    assert r["satisfied"] and r["C"] == 0
    r = check_kneser(Potential(lambda x: -1 / (8 * x * x), l=None), 1.0)
    assert r["satisfied"] and r["C"] == pytest.approx(1 / 8, rel=1e-9)
    r = check_kneser(Potential(lambda x: -1 / (x * x), l=None), 1.0)
    assert not r["satisfied"] and r["C"] == pytest.approx(1.0, rel=1e-9)


def test_expression_and_csv_potentials(tmp_path):
    pot = potential_from_expression("2*x^2 - exp(-x) + ln(1+x)/pi", l=None)
    x = np.array([0.5, 2.0])
    assert np.allclose(pot.q(x), 2 * x ** 2 - np.exp(-x) + np.log(1 + x) / np.pi)
    with pytest.raises(ConfigError):
        potential_from_expression("__import__('os')")
    path = tmp_path / "q.csv"
    xs = np.linspace(0.0, 3.0, 61)
    path.write_text("x,q\n" + "\n".join(f"{a},{np.cos(a)}" for a in xs))
    p2 = potential_from_csv(str(path), l=None)
    assert p2.b == 3.0 and p2.tail == "regular"
    assert abs(p2.q(1.234) - np.cos(1.234)) < 1e-5


# --- properties -----------------------------------------------------------

zs = st.complex_numbers(min_magnitude=0.0, max_magnitude=30.0, allow_nan=False, allow_infinity=False)


@given(z=zs, l=st.sampled_from([0.0, 0.5, 1.0, 2.3]))
def test_wronskian_constant_in_x(z, l):
    pot = Potential(lambda x: 1.0 / x, l=l)
    x = np.array([0.4, 1.0, 1.9])
    p = regular_solution_phi(pot, z, x)
    other = integrate(pot, z, 1.0, SolutionSample(z, 1.0, 0.3, -1.1), 1.9)
    w1 = lagrange_bracket(SolutionSample(z, 1.0, p.u[1], p.du[1]), SolutionSample(z, 1.0, 0.3, -1.1))
    w2 = lagrange_bracket(SolutionSample(z, 1.9, p.u[2], p.du[2]), other)
    scale = abs(p.u[2] * other.du) + abs(p.du[2] * other.u) + 1
    assert abs(w2 - w1) < 1e-8 * scale


@given(z=zs)
def test_conjugate_symmetry(z):
    pot = Potential(lambda x: np.exp(-x), l=0.5)
    x = np.array([0.2, 1.3])
    a = regular_solution_phi(pot, z, x)
    b = regular_solution_phi(pot, np.conj(z), x)
    assert np.allclose(np.conj(a.u), b.u, rtol=1e-9, atol=1e-12)
    assert np.allclose(np.conj(a.du), b.du, rtol=1e-9, atol=1e-12)


@given(z=zs, zh=zs)
def test_lagrange_identity(z, zh):
    pot = Potential(lambda x: 0.5 * np.sin(x), l=None)
    c, x = 0.3, 1.1
    u = lambda zz: integrate(pot, zz, 0.0, SolutionSample(zz, 0.0, 1.0, 0.2), [c, x])
    uu, vv = u(z), u(zh)
    ys = np.linspace(c, x, 401)
    iu = integrate(pot, z, 0.0, SolutionSample(z, 0.0, 1.0, 0.2), ys).u
    iv = integrate(pot, zh, 0.0, SolutionSample(zh, 0.0, 1.0, 0.2), ys).u
    integral = quad.simpson(iu * iv, x=ys)
    lhs = (z - zh) * integral
    wx = uu.u[1] * vv.du[1] - uu.du[1] * vv.u[1]
    wc = uu.u[0] * vv.du[0] - uu.du[0] * vv.u[0]
    assert abs(lhs - (wx - wc)) < 1e-6 * (1 + abs(z - zh) * np.max(np.abs(iu * iv)))


@given(z=st.floats(-10, 10), x=st.floats(0.1, 2.0))
def test_phi_closed_form_property(z, x):
    s = regular_solution_phi(Potential(l=1.0), z, x)
    ref = phi_l1_closed(z, x)
    assert abs(s.u - ref) <= 1e-6 * abs(ref)
    assert abs(np.imag(s.u)) == 0
