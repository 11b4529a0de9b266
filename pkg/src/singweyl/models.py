"""Closed-form model families used as oracles.

* Bessel: -u'' + l(l+1)/x^2 u on (0, inf), with phi, theta, M and the
  spectral density in closed form, plus the Herglotz rescaling of M.
* Perturbed Bessel: l(l+1)/x^2 + qtilde with the weighted integrability
  test near 0 (Coulomb preset qtilde = q1/x).
* Soliton: a one-parameter family of explicitly solvable singular
  potentials with q ~ 2/x^2 at 0.
* Limit circle: entire (phi, theta) built from boundary Wronskians at a
  limit-circle endpoint.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import weyl
from .errors import ConfigError, NumericalError, PreconditionError
from .schrodinger import (Potential, SolutionSample, integrate, regular_solution_phi,
                          second_solution_theta_numeric, _decade_integrals)
from .specfun import bessel_j, bessel_y, incomplete_gamma_upper

SERIES_RADIUS = 20.0
_EULER = 0.57721566490153286061


def _grid(z, x):
    z = np.asarray(z, dtype=complex)
    x = np.asarray(x, dtype=float)
    Z = z.reshape(z.shape + (1,) * x.ndim)
    Z, X = np.broadcast_arrays(Z, x)
    return z, x, Z, X


def _is_integer(v: float) -> bool:
    return abs(v - round(v)) < 1e-12


# ---------------------------------------------------------------------------
# Bessel: entire power series in z (used for |sqrt(z) x| <= 20)
# ---------------------------------------------------------------------------

def _power_sums(a0, ratio, t, p, x, nterms=None):
    """Sum_k b_k x^(p+2k) and its x-derivative, where b_0 = a0 and
    b_k = b_{k-1} * t * ratio(k); t already carries the z dependence
    (t = -z/4 or z/4).  Returns (value, derivative) in complex128."""
    t = np.asarray(t, dtype=np.clongdouble)
    x = np.asarray(x, dtype=np.longdouble)
    x2 = x * x
    term = np.full(np.broadcast(t, x).shape, a0, dtype=np.clongdouble)
    s0 = term.copy()
    s1 = term * p
    k = 0
    limit = nterms if nterms is not None else 400
    while k < limit:
        k += 1
        term = term * t * x2 * ratio(k)
        s0 += term
        s1 += term * (p + 2 * k)
        if nterms is None and k > 4 and np.all(np.abs(term) * (p + 2 * k + 1)
                                                <= 1e-19 * np.maximum(np.abs(s0), 1e-300)):
            break
        if nterms is None and np.all(term == 0):
            break
    xp = x ** p
    return (s0 * xp).astype(complex), (s1 * xp / x).astype(complex)


def _series_phi(l, Z, X):
    nu = l + 0.5
    pref = math.sqrt(math.pi / 2) * 2.0 ** (-nu)
    u, du = _power_sums(special.rgamma(nu + 1), lambda k: 1.0 / (k * (nu + k)),
                        -Z / 4, l + 1.0, X)
    return pref * u, pref * du


def _series_theta(l, Z, X):
    nu = l + 0.5
    if not _is_integer(nu):
        pref = math.sqrt(math.pi / 2) * 2.0 ** nu / math.sin(nu * math.pi)
        u, du = _power_sums(special.rgamma(1 - nu), lambda k: 1.0 / (k * (k - nu)),
                            -Z / 4, -l, X)
        return pref * u, pref * du
    n = int(round(nu))
    r2 = math.sqrt(math.pi / 2)
    u = np.zeros(Z.shape, complex)
    du = np.zeros(Z.shape, complex)
    # finite sum: powers x^(1/2 - n + 2k), k < n
    if n > 0:
        pa, dpa = _power_sums(r2 / math.pi * 2.0 ** n * math.factorial(n - 1),
                              lambda k: 1.0 / (k * (n - k)), Z / 4, 0.5 - n, X, nterms=n - 1)
        u += pa
        du += dpa
    zn = Z.astype(complex) ** n
    # log part and digamma part share x^(1/2 + n + 2k)
    base = -r2 * (2 / math.pi) * 2.0 ** (-n) / math.factorial(n)
    pb, dpb = _power_sums(base, lambda k: 1.0 / (k * (n + k)), -Z / 4, 0.5 + n, X)
    logx = np.log(X / 2)
    u += zn * pb * logx
    du += zn * (dpb * logx + pb / X)
    # digamma-weighted series: accumulate explicitly
    t = (-Z / 4).astype(np.clongdouble)
    Xl = X.astype(np.longdouble)
    x2 = Xl * Xl
    coef = r2 / math.pi * 2.0 ** (-n) / math.factorial(n)
    term = np.full(Z.shape, coef, dtype=np.clongdouble)
    psi = np.longdouble(-2 * _EULER + sum(1.0 / j for j in range(1, n + 1)))
    s0 = term * psi
    s1 = s0 * (0.5 + n)
    k = 0
    while k < 400:
        k += 1
        term = term * t * x2 / (k * (n + k))
        psi += np.longdouble(1.0) / k + np.longdouble(1.0) / (n + k)
        s0 += term * psi
        s1 += term * psi * (0.5 + n + 2 * k)
        if k > 4 and np.all(np.abs(term * psi) <= 1e-19 * np.maximum(np.abs(s0), 1e-300)):
            break
    xp = Xl ** (0.5 + n)
    u += zn * (s0 * xp).astype(complex)
    du += zn * (s1 * xp / Xl).astype(complex)
    return u, du


# ---------------------------------------------------------------------------
# Bessel: Bessel-function route (|sqrt(z) x| > 20)
# ---------------------------------------------------------------------------

def _bessel_far_phi(l, Z, X):
    nu = l + 0.5
    k = np.sqrt(Z)
    w = k * X
    C = k ** (-nu) * math.sqrt(math.pi / 2) * np.sqrt(X)
    J = bessel_j(nu, w)
    Jm = bessel_j(nu - 1, w)
    return C * J, C * (k * Jm - (l / X) * J)


def _bessel_far_theta(l, Z, X):
    nu = l + 0.5
    k = np.sqrt(Z)
    w = k * X
    sx = np.sqrt(X)
    if not _is_integer(nu):
        D = k ** nu * math.sqrt(math.pi / 2) / math.sin(nu * math.pi) * sx
        Jn = bessel_j(-nu, w)
        J1 = bessel_j(1 - nu, w)
        return D * Jn, D * (-(l / X) * Jn - k * J1)
    n = int(round(nu))
    logz = np.log(Z)

    def F(order):
        if order < 0:
            return (-1) ** order * F(-order)
        return bessel_y(order, w) - logz / math.pi * bessel_j(order, w)

    D = -(k ** n) * math.sqrt(math.pi / 2) * sx
    Fn, Fm = F(n), F(n - 1)
    return D * Fn, D * (k * Fm - (l / X) * Fn)


def _bessel_eval(l, z, x, which):
    if l < -0.5:
        raise PreconditionError("Bessel model needs l >= -1/2")
    z, x, Z, X = _grid(z, x)
    if np.any(X <= 0):
        raise PreconditionError("x must be positive")
    u = np.empty(Z.shape, complex)
    du = np.empty(Z.shape, complex)
    near = np.abs(np.sqrt(Z) * X) <= SERIES_RADIUS
    series, far = (_series_phi, _bessel_far_phi) if which == "phi" else (_series_theta, _bessel_far_theta)
    if near.any():
        u[near], du[near] = series(l, Z[near], X[near])
    if (~near).any():
        u[~near], du[~near] = far(l, Z[~near], X[~near])
    return SolutionSample(z, x, u, du)


def bessel_phi(l: float, z, x) -> SolutionSample:
    """phi_l(z,x) = z^(-(2l+1)/4) sqrt(pi x/2) J_{l+1/2}(sqrt(z) x), entire in z."""
    return _bessel_eval(l, z, x, "phi")


def bessel_theta(l: float, z, x) -> SolutionSample:
    """Entire second solution with W(theta_l, phi_l) = 1; carries the
    -log(z) J / pi correction when l + 1/2 is a nonnegative integer."""
    return _bessel_eval(l, z, x, "theta")


def bessel_M(l: float, z):
    """Singular Weyl function of the Bessel system (principal branches)."""
    z = np.asarray(z, dtype=complex)
    nu = l + 0.5
    if _is_integer(nu):
        n = int(round(nu))
        out = -(z ** n) * np.log(-z) / math.pi
    else:
        out = -((-z) ** nu) / math.sin(nu * math.pi)
    return out if out.ndim else complex(out)


def bessel_rho_density(l: float, lam):
    lam = np.asarray(lam, dtype=float)
    out = np.where(lam >= 0, np.abs(lam) ** (l + 0.5) / math.pi, 0.0)
    return out if out.ndim else float(out)


def bessel_herglotz_M(l: float, z):
    """Gamma(l+3/2)/pi (-z)^(l+1/2) e^(-z) Gamma(-l-1/2, -z): the Stieltjes
    transform of the density weighted by e^(-lambda)."""
    z = np.asarray(z, dtype=complex)
    nu = l + 0.5
    G = incomplete_gamma_upper(-nu, -z)
    out = special.gamma(nu + 1) / math.pi * (-z) ** nu * np.exp(-z) * G
    return out if np.ndim(out) else complex(out)


def bessel_potential(l: float) -> Potential:
    return Potential(l=l, name=f"bessel:l={l:g}")


def bessel_system(l: float) -> weyl.SolutionSystem:
    return weyl.SolutionSystem(lambda z, x: bessel_phi(l, z, x),
                               lambda z, x: bessel_theta(l, z, x),
                               entire_theta=True, name=f"bessel:l={l:g}")


# ---------------------------------------------------------------------------
# perturbed Bessel
# ---------------------------------------------------------------------------

def perturbed_bessel(l: float, qtilde: Callable, validate: bool = True, decades: int = 10,
                     name: str = "perturbed bessel") -> Potential:
    """l(l+1)/x^2 + qtilde on (0, inf).  With ``validate`` the weighted
    integrability x * w(x) |qtilde(x)| in L^1(0,1) is tested on decades,
    w = 1 for l > -1/2 and w = 1 - log x for l = -1/2."""
    if l < -0.5:
        raise PreconditionError("perturbed Bessel needs l >= -1/2")
    if validate:
        log_case = abs(l + 0.5) < 1e-12

        def weighted(s):
            w = (1 - np.log(s)) if log_case else 1.0
            return s * w * np.abs(qtilde(s))

        ints = _decade_integrals(weighted, 0.0, 1.0, decades)
        ok = bool(np.all(np.isfinite(ints)) and
                  (ints[-1] <= 1e-12 * max(ints.sum(), 1e-300) or ints[-1] <= 0.5 * ints[-2]))
        if not ok:
            raise ConfigError(
                f"x*qtilde not integrable near 0: decade integrals of the weighted "
                f"perturbation stay at {ints[-1]:.3g} (first decade {ints[0]:.3g})")
    return Potential(qtilde, l=l, name=name)


def coulomb(l: float, q1: float = 1.0) -> Potential:
    return perturbed_bessel(l, lambda x: q1 / np.asarray(x, dtype=float), validate=True,
                            name=f"bessel+coulomb:l={l:g},q1={q1:g}")


def perturbed_system(pot: Potential, x_ref: float = 1e-3, tol: float = 1e-10) -> weyl.SolutionSystem:
    """phi from the Frobenius start; theta carries the Bessel theta data from
    a small reference point, divided by the resulting Wronskian so that
    W(theta, phi) = 1.  theta is entire wherever that Wronskian is
    nonzero; ``entire_theta`` stays False."""
    l = pot.strength

    def phi(z, x):
        return regular_solution_phi(pot, z, x, tol)

    def theta(z, x):
        z = np.asarray(z, dtype=complex)
        xa = np.asarray(x, dtype=float)
        base = bessel_theta(l, z, x_ref)
        ph = regular_solution_phi(pot, z, x_ref, tol)
        W = np.asarray(base.u) * np.asarray(ph.du) - np.asarray(base.du) * np.asarray(ph.u)
        t0, dt0 = np.asarray(base.u) / W, np.asarray(base.du) / W
        xv = np.atleast_1d(xa).ravel()
        zv = z.ravel()
        u = np.empty((zv.size, xv.size), complex)
        du = np.empty_like(u)
        for side in (xv < x_ref, xv >= x_ref):
            if side.any():
                s = integrate(pot, zv, x_ref, SolutionSample(zv, x_ref, t0.ravel(), dt0.ravel()),
                              xv[side], tol)
                u[:, side] = np.asarray(s.u).reshape(zv.size, -1)
                du[:, side] = np.asarray(s.du).reshape(zv.size, -1)
        shape = z.shape + xa.shape
        return SolutionSample(z, xa, u.reshape(shape), du.reshape(shape))

    return weyl.SolutionSystem(phi, theta, entire_theta=False, name=f"perturbed[{pot.name}]")


# ---------------------------------------------------------------------------
# soliton family
# ---------------------------------------------------------------------------

def _cos_sinc(z, x):
    """(cos(sqrt(z) x), sin(sqrt(z) x)/sqrt(z)), entire in z."""
    z = np.asarray(z, dtype=complex)
    x = np.asarray(x, dtype=float)
    t = z * x * x
    small = np.abs(t) < 1e-2
    k = np.sqrt(np.where(small, 1.0, z))
    c = np.where(small, 0, np.cos(k * x))
    e = np.where(small, 0, np.sin(k * x) / k)
    if np.any(small):
        cs = np.zeros(np.shape(t), complex)
        es = np.zeros(np.shape(t), complex)
        term_c = np.ones(np.shape(t), complex)
        term_e = np.ones(np.shape(t), complex)
        for j in range(9):
            cs = cs + term_c
            es = es + term_e
            term_c = term_c * (-t) / ((2 * j + 1) * (2 * j + 2))
            term_e = term_e * (-t) / ((2 * j + 2) * (2 * j + 3))
        c = np.where(small, cs, c)
        e = np.where(small, es * x, e)
    return c, e


@dataclass(frozen=True)
class SolitonModel:
    """Parameters A (nonzero) and v1 (real); the second component of the
    initial vector is fixed to 1."""

    A: complex = 1.0
    v1: float = 0.0

    def __post_init__(self):
        if self.A == 0:
            raise PreconditionError("A must be nonzero")
        if np.iscomplexobj(self.v1) and np.imag(self.v1) != 0:
            raise PreconditionError("v1 must be real")

    @property
    def is_real(self) -> bool:
        return complex(self.A).imag == 0


def _lambda(m: SolitonModel, x):
    A = complex(m.A)
    c, e = _cos_sinc(A, x)
    lam1 = m.v1 * c + A * e
    lam2 = c - m.v1 * e
    return lam1, lam2


def _soliton_S(m: SolitonModel, x, lam1, lam2):
    A = complex(m.A)
    x = np.asarray(x, dtype=float)
    if abs(A.imag) >= 1e-3 * abs(A):
        return ((lam1 * np.conj(lam2) - lam2 * np.conj(lam1)) / (A - np.conj(A))).real
    if m.is_real:
        _, e1 = _cos_sinc(A, x)
        _, e2 = _cos_sinc(A, 2 * x)
        t = A * x * x
        small = np.abs(t) < 1.0
        G = np.where(small, 0, (x / 2 - e2 / 4) / np.where(small, 1.0, A))
        if np.any(small):
            gs = np.zeros(np.shape(x), complex)
            for j in range(1, 30):
                gs = gs + (-0.25) * (-1) ** j * (2 * x) ** (2 * j + 1) * A ** (j - 1) / math.factorial(2 * j + 1)
            G = np.where(small, gs, G)
        S = x / 2 + e2 / 4 - m.v1 * e1 * e1 + m.v1 ** 2 * G
        return np.real(S)
    # nearly real but complex A: Gauss-Legendre on panels
    nodes, weights = np.polynomial.legendre.leggauss(40)
    xs = np.atleast_1d(x).ravel()
    out = np.empty(xs.shape)
    panel = 1.0 / max(1.0, math.sqrt(abs(A)))
    for i, xe in enumerate(xs):
        npan = max(1, int(math.ceil(xe / panel)))
        edges = np.linspace(0, xe, npan + 1)
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            s = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
            _, l2 = _lambda(m, s)
            tot += 0.5 * (hi - lo) * np.sum(weights * np.abs(l2) ** 2)
        out[i] = tot
    return out.reshape(np.shape(x))


def soliton_fields(m: SolitonModel, x) -> dict:
    """Lambda1, Lambda2, S = int_0^x |Lambda2|^2 and the potential q."""
    x = np.asarray(x, dtype=float)
    lam1, lam2 = _lambda(m, x)
    S = _soliton_S(m, x, lam1, lam2)
    N = np.abs(lam2) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 2 * ((N / S) ** 2 + 2 * np.real(np.conj(lam1) * lam2) / S)
    return {"Lambda1": lam1, "Lambda2": lam2, "S": S, "q": q}


def _soliton_q_scalar(m: SolitonModel, x: float) -> float:
    """Scalar fast path of the soliton q (called once per integrator step)."""
    A = complex(m.A)
    real_A = m.is_real
    if abs(A) * x * x < 1e-2 or not (real_A or abs(A.imag) >= 1e-3 * abs(A)):
        f = soliton_fields(m, np.array([x]))
        return float(f["q"][0])
    k = cmath.sqrt(A)
    c, e = cmath.cos(k * x), cmath.sin(k * x) / k
    lam1 = m.v1 * c + A * e
    lam2 = c - m.v1 * e
    if real_A:
        e2 = cmath.sin(2 * k * x) / k
        S = (x / 2 + e2 / 4 - m.v1 * e * e + m.v1 ** 2 * (x / 2 - e2 / 4) / A).real
    else:
        S = ((lam1 * lam2.conjugate() - lam2 * lam1.conjugate()) / (A - A.conjugate())).real
    N = abs(lam2) ** 2
    return 2 * ((N / S) ** 2 + 2 * (lam1.conjugate() * lam2).real / S)


def soliton_potential(m: SolitonModel) -> Potential:
    """The soliton q written as 2/x^2 + qtilde (strength l = 1)."""

    def qt(x):
        if np.ndim(x) == 0:
            xf = float(x)
            return _soliton_q_scalar(m, xf) - 2.0 / (xf * xf)
        x = np.asarray(x, dtype=float)
        return soliton_fields(m, x)["q"] - 2.0 / (x * x)

    return Potential(qt, l=1.0, name=f"soliton:A={m.A},v1={m.v1}")


def soliton_M(m: SolitonModel, z):
    """-(z-A)(z-A*)/(i k + v1) with k the root of z in the upper half
    plane, i k = -sqrt(-z), so that e^(i k x) decays on both half planes."""
    z = np.asarray(z, dtype=complex)
    A = complex(m.A)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(z - A) * (z - np.conj(A)) / (m.v1 - np.sqrt(-z))
    return out if out.ndim else complex(out)


def _soliton_raw(m: SolitonModel, Z, X):
    """phi, phi', theta, theta' at broadcast (Z, X) away from z = A, A*."""
    A = complex(m.A)
    Ac = np.conj(A)
    lam1, lam2 = _lambda(m, X)
    S = _soliton_S(m, X, lam1, lam2)
    N = np.abs(lam2) ** 2
    dN = -(lam1 * np.conj(lam2) + lam2 * np.conj(lam1))
    cz, ez = _cos_sinc(Z, X)
    C = cz - m.v1 * ez
    D = m.v1 * cz + Z * ez
    P = S * (Z - A) + np.conj(lam2) * lam1
    dP = Z * N - np.abs(lam1) ** 2
    num = P * C - N * D
    den = S * (Z - A)
    tphi = num / den
    dnum = dP * C - P * D - dN * D - N * Z * C
    dtphi = (dnum * S - num * N) / (S * S * (Z - A))
    phi = tphi / (Z - Ac)
    dphi = dtphi / (Z - Ac)
    tnum = ez * P + cz * N
    theta = -tnum / S
    dtnum = cz * P + ez * dP - Z * ez * N + cz * dN
    dtheta = -(dtnum * S - tnum * N) / (S * S)
    return phi, dphi, theta, dtheta


def soliton_solutions(m: SolitonModel, z, x, radius: float = 0.25, points: int = 32) -> dict:
    """Closed-form phi, theta (values and x-derivatives) and M.  The
    removable points z = A, A* are handled by averaging over a small
    circle (mean value property of the entire functions)."""
    z, x, Z, X = _grid(z, x)
    if np.any(X <= 0):
        raise PreconditionError("x must be positive")
    A = complex(m.A)
    near = (np.abs(Z - A) < radius / 2) | (np.abs(Z - np.conj(A)) < radius / 2)
    out = [np.empty(Z.shape, complex) for _ in range(4)]
    if (~near).any():
        vals = _soliton_raw(m, Z[~near], X[~near])
        for o, v in zip(out, vals):
            o[~near] = v
    if near.any():
        ang = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
        Zc = Z[near][:, None] + radius * ang[None, :]
        Xc = np.broadcast_to(X[near][:, None], Zc.shape)
        vals = _soliton_raw(m, Zc, Xc)
        for o, v in zip(out, vals):
            o[near] = v.mean(axis=1)
    return {"phi": SolutionSample(z, x, out[0], out[1]),
            "theta": SolutionSample(z, x, out[2], out[3]),
            "M": soliton_M(m, z)}


def soliton_system(m: SolitonModel) -> weyl.SolutionSystem:
    return weyl.SolutionSystem(lambda z, x: soliton_solutions(m, z, x)["phi"],
                               lambda z, x: soliton_solutions(m, z, x)["theta"],
                               entire_theta=True, name=f"soliton:A={m.A},v1={m.v1}")


# ---------------------------------------------------------------------------
# limit circle
# ---------------------------------------------------------------------------

def _aitken(w1, w2, w3):
    """Extrapolate W(x_k) for geometrically shrinking x_k; raise if the
    differences do not contract."""
    d1 = w2 - w1
    d2 = w3 - w2
    scale = np.maximum(np.abs(w3), 1.0)
    settled = np.abs(d2) <= 1e-13 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(settled, 0, d2 / np.where(d1 == 0, 1, d1))
    if np.any((np.abs(r) >= 0.9) & ~settled):
        raise NumericalError("boundary Wronskian does not converge as x -> a: "
                             "the endpoint does not look limit circle")
    return w3 + np.where(settled, 0, d2 * r / (1 - r))


@dataclass
class LimitCircleSystem:
    """Entire (phi, theta) at a limit-circle endpoint a, built from the
    boundary Wronskians of the canonical solutions c(z,.), s(z,.) at the
    anchor with the reference pair (phi0, theta0) at energy lambda0."""

    pot: Potential
    lambda0: float
    c: float
    phi0: Callable          # x -> (u, du), real, at lambda0
    theta0: Callable
    tol: float = 1e-13
    offsets: tuple = (1e-3, 1e-4, 1e-5)

    def _canonical(self, zv, xs):
        """c(z,x), s(z,x) and derivatives at the points xs (one side of c)."""
        cs = integrate(self.pot, zv, self.c, SolutionSample(zv, self.c, 1.0, 0.0), xs, self.tol)
        ss = integrate(self.pot, zv, self.c, SolutionSample(zv, self.c, 0.0, 1.0), xs, self.tol)
        r = lambda a: np.asarray(a).reshape(zv.size, -1)
        return r(cs.u), r(cs.du), r(ss.u), r(ss.du)

    def boundary_wronskians(self, z):
        """W_a(c,phi0), W_a(s,phi0), W_a(c,theta0), W_a(s,theta0)."""
        zv = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        scale = min(1.0, self.c - self.pot.a)
        xs = self.pot.a + scale * np.asarray(self.offsets)
        cu, cd, su, sd = self._canonical(zv, xs)
        p0, dp0 = (np.asarray(v, float) for v in self.phi0(xs))
        t0, dt0 = (np.asarray(v, float) for v in self.theta0(xs))
        out = []
        for ref, dref in ((p0, dp0), (t0, dt0)):
            for u, du in ((cu, cd), (su, sd)):
                w = u * dref - du * ref
                out.append(_aitken(w[:, 0], w[:, 1], w[:, 2]))
        wc_p, ws_p, wc_t, ws_t = out
        return wc_p, ws_p, wc_t, ws_t

    def _eval(self, z, x, which):
        z = np.asarray(z, dtype=complex)
        xa = np.asarray(x, dtype=float)
        zv = np.atleast_1d(z).ravel()
        wc_p, ws_p, wc_t, ws_t = self.boundary_wronskians(zv)
        a1, a2 = (wc_p, ws_p) if which == "phi" else (wc_t, ws_t)
        xv = np.atleast_1d(xa).ravel()
        u = np.empty((zv.size, xv.size), complex)
        du = np.empty_like(u)
        for side in (xv < self.c, xv >= self.c):
            if side.any():
                cu, cd, su, sd = self._canonical(zv, xv[side])
                u[:, side] = a1[:, None] * su - a2[:, None] * cu
                du[:, side] = a1[:, None] * sd - a2[:, None] * cd
        shape = z.shape + xa.shape
        return SolutionSample(z, xa, u.reshape(shape), du.reshape(shape))

    def phi(self, z, x) -> SolutionSample:
        return self._eval(z, x, "phi")

    def theta(self, z, x) -> SolutionSample:
        return self._eval(z, x, "theta")

    def system(self) -> weyl.SolutionSystem:
        return weyl.SolutionSystem(self.phi, self.theta, entire_theta=False,
                                   name=f"limitcircle[{self.pot.name}]")


def limit_circle_system(pot: Potential, lambda0: float = 0.0, c: float = 1.0,
                        phi0: Callable | None = None, theta0: Callable | None = None,
                        tol: float = 1e-13) -> LimitCircleSystem:
    """Default reference pair: the regular solution at lambda0 and the
    numeric second solution from the anchor ansatz (both real)."""
    if pot.l is not None and not (-0.5 <= pot.l < 0.5):
        raise PreconditionError("limit-circle construction needs l in [-1/2, 1/2)")
    if phi0 is None:
        def phi0(xs):
            s = regular_solution_phi(pot, float(lambda0), xs, tol)
            return np.real(s.u), np.real(s.du)
    if theta0 is None:
        def theta0(xs):
            s = second_solution_theta_numeric(pot, float(lambda0), c, xs, tol)
            return np.real(s.u), np.real(s.du)
    return LimitCircleSystem(pot, float(lambda0), float(c), phi0, theta0, tol)


def lc_singular_M(lc: LimitCircleSystem, z, tol: float = 1e-9):
    return weyl.singular_M(lc.system(), lc.pot, lc.c, z, tol)


def bessel_limit_circle(l: float, lambda0: float = 0.0, c: float = 1.0) -> LimitCircleSystem:
    """Limit-circle construction for the Bessel operator with the closed-form
    pair at lambda0 as reference."""

    def phi0(xs):
        s = bessel_phi(l, lambda0, xs)
        return np.real(s.u), np.real(s.du)

    def theta0(xs):
        s = bessel_theta(l, lambda0, xs)
        return np.real(s.u), np.real(s.du)

    return limit_circle_system(bessel_potential(l), lambda0, c, phi0, theta0)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

@dataclass
class Model:
    """A named model: potential, solution system and any closed forms."""

    name: str
    potential: Potential
    system: weyl.SolutionSystem
    M: Callable | None = None
    density: Callable | None = None
    extra: dict = field(default_factory=dict)


_PRESET = re.compile(r"^\s*([a-z+]+)\s*(?::\s*(.*))?$")


def _params(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise ConfigError(f"malformed model parameter {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _num(params, key, default=None, complex_ok=False):
    if key not in params:
        if default is None:
            raise ConfigError(f"model parameter {key!r} missing")
        return default
    try:
        v = complex(params[key].replace("i", "j")) if complex_ok else float(params[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {params[key]!r}") from exc
    if complex_ok and v.imag == 0:
        return v.real
    return v


def load_model(spec: str, c: float = 1.0) -> Model:
    """Parse ``bessel:l=..``, ``bessel+coulomb:l=..,q1=..``,
    ``soliton:A=..,v1=..`` or ``limitcircle:l=..``."""
    mt = _PRESET.match(spec)
    if not mt:
        raise ConfigError(f"unknown model {spec!r}")
    kind, params = mt.group(1), _params(mt.group(2))
    if kind == "bessel":
        l = _num(params, "l", 0.0)
        return Model(spec, bessel_potential(l), bessel_system(l),
                     M=lambda z: bessel_M(l, z), density=lambda lam: bessel_rho_density(l, lam),
                     extra={"l": l})
    if kind == "bessel+coulomb":
        l = _num(params, "l", 0.0)
        q1 = _num(params, "q1", 1.0)
        pot = coulomb(l, q1)
        return Model(spec, pot, perturbed_system(pot), extra={"l": l, "q1": q1})
    if kind == "soliton":
        m = SolitonModel(_num(params, "A", 1.0, complex_ok=True), _num(params, "v1", 0.0))
        return Model(spec, soliton_potential(m), soliton_system(m), M=lambda z: soliton_M(m, z),
                     extra={"model": m})
    if kind == "limitcircle":
        l = _num(params, "l", 0.25)
        lc = bessel_limit_circle(l, 0.0, c)
        return Model(spec, lc.pot, lc.system(), M=lambda z: bessel_M(l, z),
                     density=lambda lam: bessel_rho_density(l, lam), extra={"l": l, "lc": lc})
    raise ConfigError(f"unknown model family {kind!r}")
