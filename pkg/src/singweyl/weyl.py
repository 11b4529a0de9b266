"""Weyl functions: m_+ at an interior anchor, the singular M(z), the Weyl
solution psi, the Green function and large-|z| asymptotic diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp, trapezoid

from . import io
from .errors import NumericalError, PoleError, PreconditionError, StepUnderflowError
from .schrodinger import (Potential, SolutionSample, integrate, regular_solution_phi,
                          second_solution_theta_numeric)

POLE_THRESHOLD = 1e-12
MAX_DOUBLINGS = 12


# ---------------------------------------------------------------------------
# solution systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolutionSystem:
    """A fundamental system (phi, theta) with W(theta, phi) = 1.

    ``phi`` and ``theta`` map (z, x) to a SolutionSample whose arrays have
    shape z.shape + x.shape.  ``gauge`` is an optional pair (g, f) of real
    entire functions of z; the gauged system is phi~ = e^g phi,
    theta~ = e^-g theta - f phi, so that M~ = e^-2g M + e^-g f.
    """

    phi: Callable
    theta: Callable
    entire_theta: bool = False
    gauge: tuple | None = None
    name: str = "system"

    def with_gauge(self, g: Callable, f: Callable) -> "SolutionSystem":
        return SolutionSystem(self.phi, self.theta, self.entire_theta, (g, f), self.name)

    def gauge_values(self, z):
        z = np.asarray(z, dtype=complex)
        if self.gauge is None:
            return np.zeros_like(z), np.zeros_like(z)
        g, f = self.gauge
        return np.asarray(g(z), dtype=complex), np.asarray(f(z), dtype=complex)

    def apply_gauge(self, z, M):
        g, f = self.gauge_values(z)
        return np.exp(-2 * g) * M + np.exp(-g) * f


def numeric_system(pot: Potential, c: float, tol: float = 1e-10) -> SolutionSystem:
    """phi from the Frobenius start, theta from the ansatz at c.  The numeric
    theta is only reliable in a strip around the real axis."""
    return SolutionSystem(
        phi=lambda z, x: regular_solution_phi(pot, z, x, tol),
        theta=lambda z, x: second_solution_theta_numeric(pot, z, c, x, tol),
        entire_theta=False, name=f"numeric[{pot.name}]")


def _expand(z, x, arr):
    z = np.asarray(z)
    x = np.asarray(x)
    return np.broadcast_to(arr, z.shape + x.shape)


# ---------------------------------------------------------------------------
# m_+
# ---------------------------------------------------------------------------

def _derivs(q, x, h):
    q0 = complex(np.asarray(q(np.array([x]))).ravel()[0])
    qp, qm = (complex(np.asarray(q(np.array([x + s]))).ravel()[0]) for s in (h, -h))
    return q0, (qp - qm) / (2 * h), (qp - 2 * q0 + qm) / (h * h)


def _wkb_seed(pot: Potential, X: float, zvec: np.ndarray) -> np.ndarray:
    """Third-order WKB value of u'/u for the decaying solution at X."""
    q0, q1, q2 = _derivs(pot.q, X, 1e-3 * max(1.0, X))
    Q = q0 - zvec
    k = np.sqrt(Q)
    k = np.where(k.real < 0, -k, k)
    m2 = (-q2 / (4 * Q) + 5 * q1 * q1 / (16 * Q * Q)) / (2 * k)
    return -k - q1 / (4 * Q) + m2


def _riccati(pot: Potential, zvec, X, c, m0, tol, x_eval=None):
    """Integrate m' = q - z - m^2 (and L' = m) from X down to c."""
    n = zvec.size

    def rhs(x, y):
        m = y[:n]
        qx = pot.q(x)
        return np.concatenate([qx - zvec - m * m, m])

    t_eval = None
    if x_eval is not None:
        t_eval = np.unique(np.concatenate([np.asarray(x_eval, float), [c]]))[::-1]
    y0 = np.concatenate([m0, np.zeros(n, complex)])
    # the global error of DOP853 exceeds rtol, so integrate well below the
    # tolerance that the far-point settling test uses
    rtol = max(tol * 1e-2, 3e-14)
    sol = solve_ivp(rhs, (X, c), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-3,
                    t_eval=t_eval)
    if sol.status != 0:
        raise StepUnderflowError(f"Riccati integration failed: {sol.message}",
                                 float(sol.t[-1]) if sol.t.size else X)
    return sol


def _m_plus_far(pot, zvec, c, tol):
    width = max(c - pot.a, 10.0)
    prev = None
    for _ in range(MAX_DOUBLINGS):
        X = c + width
        sol = _riccati(pot, zvec, X, c, _wkb_seed(pot, X, zvec), tol)
        m = sol.y[: zvec.size, -1]
        if not np.all(np.isfinite(m)):
            raise NumericalError("m_+ blew up: z is probably on or above the spectrum")
        if prev is not None and np.all(np.abs(m - prev) <= tol * np.maximum(np.abs(m), 1.0)):
            return m, X
        prev = m
        width *= 2
    raise NumericalError("m_+ did not settle while pushing the matching point outward; "
                         "the tail is probably not decaying")


def m_plus(pot: Potential, c: float, z, tol: float = 1e-9):
    """u_+'(z,c)/u_+(z,c) for the solution square integrable near b.

    Infinite b: backward Riccati integration from a far point seeded with
    the decaying WKB branch, pushing the far point out until the value at c
    settles.  Finite regular b: the Dirichlet solution at b integrated back.
    """
    zarr = np.asarray(z, dtype=complex)
    if not (pot.a < c < pot.b):
        raise PreconditionError("anchor c must lie inside (a, b)")
    zvec = zarr.ravel()
    if pot.tail == "regular":
        s = integrate(pot, zvec, pot.b, SolutionSample(zvec, pot.b, 0.0, 1.0), c, tol)
        u, du = np.asarray(s.u), np.asarray(s.du)
        if np.any(np.abs(u) < 10 * tol * np.abs(du)):
            raise PoleError("u_+(z, c) vanishes: z is a Dirichlet eigenvalue of (c, b)")
        m = du / u
    else:
        if np.any((zvec.imag == 0) & (zvec.real >= 0)):
            raise PreconditionError("real z >= 0 lies on the continuous spectrum; use z + i eps")
        m, _ = _m_plus_far(pot, zvec, c, tol)
    m = m.reshape(zarr.shape)
    return m if zarr.ndim else complex(m)


# ---------------------------------------------------------------------------
# M, psi, Green function
# ---------------------------------------------------------------------------

def _anchor_data(sys, c, zarr):
    ph = sys.phi(zarr, c)
    th = sys.theta(zarr, c)
    return (np.asarray(ph.u), np.asarray(ph.du), np.asarray(th.u), np.asarray(th.du))


def _denominator(alpha, beta, m, tol):
    den = alpha * m - beta
    # m_+ carries a relative error near tol, so smaller denominators are noise
    thr = max(POLE_THRESHOLD, 10 * tol)
    small = np.abs(den) < thr * (np.abs(alpha) * np.abs(m) + np.abs(beta))
    if np.any(small):
        raise PoleError("denominator alpha*m_+ - beta nearly vanishes; z sits on a real "
                        "eigenvalue (no poles exist off the real axis)")
    return den


def singular_M(sys: SolutionSystem, pot: Potential, c: float, z, tol: float = 1e-9):
    """M(z) = -(gamma m_+ - delta)/(alpha m_+ - beta), then the gauge."""
    zarr = np.asarray(z, dtype=complex)
    alpha, beta, gamma, delta = _anchor_data(sys, c, zarr)
    m = np.asarray(m_plus(pot, c, zarr, tol))
    M = -(gamma * m - delta) / _denominator(alpha, beta, m, tol)
    M = sys.apply_gauge(zarr, M)
    return M if zarr.ndim else complex(M)


def weyl_solution_psi(sys: SolutionSystem, pot: Potential, c: float, z, x,
                      tol: float = 1e-9) -> SolutionSample:
    """psi = theta + M phi (gauged consistently, psi~ = e^-g psi).

    Evaluated without cancellation: W(theta, phi) = 1 gives
    psi(c) = 1/(beta - alpha m_+) exactly, and psi is then carried to the
    left by the ODE and to the right along u_+.
    """
    zarr = np.asarray(z, dtype=complex)
    zvec = zarr.ravel()
    xarr = np.asarray(x, dtype=float)
    xv = np.atleast_1d(xarr).ravel()
    alpha, beta, _, _ = (np.ravel(v) for v in _anchor_data(sys, c, zvec))
    m = np.ravel(m_plus(pot, c, zvec, tol))
    p0 = -1.0 / _denominator(alpha, beta, m, tol)
    u = np.empty((zvec.size, xv.size), complex)
    du = np.empty_like(u)
    left = xv < c
    if left.any():
        s = integrate(pot, zvec, c, SolutionSample(zvec, c, p0, m * p0), xv[left], tol)
        u[:, left], du[:, left] = np.asarray(s.u).reshape(zvec.size, -1), \
            np.asarray(s.du).reshape(zvec.size, -1)
    right = ~left
    if right.any():
        xr = xv[right]
        if pot.tail == "regular":
            s = integrate(pot, zvec, pot.b, SolutionSample(zvec, pot.b, 0.0, 1.0),
                          np.concatenate([[c], xr]), tol)
            ub, dub = np.asarray(s.u).reshape(zvec.size, -1), np.asarray(s.du).reshape(zvec.size, -1)
            scale = (p0 / ub[:, 0])[:, None]
            u[:, right], du[:, right] = scale * ub[:, 1:], scale * dub[:, 1:]
        else:
            _, X = _m_plus_far(pot, zvec, c, tol)
            X = max(X, c + 2 * (float(xr.max()) - c))
            sol = _riccati(pot, zvec, X, c, _wkb_seed(pot, X, zvec), tol, x_eval=xr)
            n = zvec.size
            ts = sol.t
            L = sol.y[n:]
            mm = sol.y[:n]
            Lc = L[:, np.flatnonzero(ts == c)[0]]
            for j, xx in zip(np.flatnonzero(right), xr):
                i = np.flatnonzero(ts == xx)[0]
                val = p0 * np.exp(L[:, i] - Lc)
                u[:, j], du[:, j] = val, mm[:, i] * val
    g, _ = sys.gauge_values(zvec)
    w = np.exp(-g)[:, None]
    shape = zarr.shape + xarr.shape
    return SolutionSample(zarr, xarr, (w * u).reshape(shape), (w * du).reshape(shape))


def green_function(sys: SolutionSystem, pot: Potential, c: float, z, x: float, y: float,
                   tol: float = 1e-9):
    """G(z,x,y) = phi(z, min(x,y)) psi(z, max(x,y)) (gauge invariant)."""
    lo, hi = min(x, y), max(x, y)
    zarr = np.asarray(z, dtype=complex)
    ph = sys.phi(zarr, lo)
    g, _ = sys.gauge_values(zarr)
    phi_lo = np.exp(g) * np.asarray(ph.u)
    psi_hi = np.asarray(weyl_solution_psi(sys, pot, c, zarr, hi, tol).u)
    G = phi_lo * psi_hi
    return G if zarr.ndim else complex(G)


def psi_tail_fraction(sys: SolutionSystem, pot: Potential, c: float, z=-1.0,
                      x_end: float | None = None, tol: float = 1e-9) -> float:
    """Share of the integral of |psi|^2 over [c, x_end] coming from the last
    decade [x_end/10, x_end]; a proxy for square integrability near b."""
    if x_end is None:
        x_end = pot.b if math.isfinite(pot.b) else max(100.0, 100.0 * c)
    xs = np.geomspace(max(c, 1e-12), x_end, 801)
    xs[0] = c
    vals = np.abs(np.asarray(weyl_solution_psi(sys, pot, c, complex(z), xs, tol).u)) ** 2
    tot = trapezoid(vals, xs)
    tail_mask = xs >= x_end / 10
    tail = trapezoid(vals[tail_mask], xs[tail_mask])
    return float(tail / tot)


# ---------------------------------------------------------------------------
# traces and asymptotics
# ---------------------------------------------------------------------------

@dataclass
class MTrace:
    """Samples of M on a set of spectral points."""

    z: np.ndarray
    M: np.ndarray
    convention: str = "principal branch of sqrt and log, cut along the negative real axis"

    def conjugation_defect(self) -> float:
        """max |M(z*) - M(z)*| over pairs sampled on both sides."""
        z = np.asarray(self.z)
        M = np.asarray(self.M)
        worst = 0.0
        for i, zi in enumerate(z):
            j = np.flatnonzero(np.abs(z - np.conj(zi)) <= 1e-14 * max(1.0, abs(zi)))
            for jj in j:
                worst = max(worst, abs(M[jj] - np.conj(M[i])))
        return worst

    def to_csv(self, path: str) -> None:
        rows = [(zz.real, zz.imag, mm.real, mm.imag)
                for zz, mm in zip(np.asarray(self.z, complex), np.asarray(self.M, complex))]
        io.write_csv(path, ["re_z", "im_z", "re_M", "im_M"], rows)


def m_trace(sys: SolutionSystem, pot: Potential, c: float, zs, tol: float = 1e-9) -> MTrace:
    zs = np.asarray(zs, dtype=complex)
    return MTrace(zs, np.asarray(singular_M(sys, pot, c, zs, tol)))


def asymptotic_check(sys: SolutionSystem, pot: Potential, c: float, rays,
                     x: float | None = None, x0: float | None = None,
                     radii=None, tol: float = 1e-9) -> dict:
    """Large-|z| diagnostics along nonreal rays (angles in radians).

    For each ray and radius r reports
      bounded   : |(M + theta/phi) sqrt(-z) phi^2| at x,
      product   : |2 sqrt(-z) phi psi - 1| at x,
      growth    : |phi(x)/phi(x0) exp(-(x-x0) sqrt(-z)) - 1|.
    The first uses M + theta/phi = psi/phi, which holds exactly, to avoid
    cancelling two exponentially large terms.  The ungauged system is used.
    """
    rays = list(rays)
    if not rays or not any(abs(math.sin(t)) > 1e-12 for t in rays):
        raise PreconditionError("need at least one nonreal ray")
    if x is None:
        x = c
    if x0 is None:
        x0 = pot.a + 0.5 * (x - pot.a)
    if radii is None:
        radii = np.logspace(2, 4, 9)
    radii = np.asarray(radii, dtype=float)
    base = SolutionSystem(sys.phi, sys.theta, sys.entire_theta, None, sys.name)
    out = {"x": x, "x0": x0, "radii": radii.tolist(), "rays": []}
    for t in rays:
        if abs(math.sin(t)) <= 1e-12:
            continue
        z = radii * np.exp(1j * t)
        sq = np.sqrt(-z)
        ph = sys.phi(z, np.array([x0, x]))
        p0, p1 = np.asarray(ph.u)[:, 0], np.asarray(ph.u)[:, 1]
        psi = np.asarray(weyl_solution_psi(base, pot, c, z, x, tol).u)
        prod = sq * p1 * psi
        growth = p1 / p0 * np.exp(-(x - x0) * sq)
        out["rays"].append({
            "angle": t,
            "bounded": np.abs(prod).tolist(),
            "product": np.abs(2 * prod - 1).tolist(),
            "growth": np.abs(growth - 1).tolist(),
        })
    return out
