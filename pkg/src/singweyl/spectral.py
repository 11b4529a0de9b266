"""Spectral measure by Stieltjes inversion, the transform U and its
inverse, norming constants, support classification, the resolvent images
and the entire function E_f."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.optimize import minimize_scalar

from .errors import NumericalError, PreconditionError
from .io import read_csv, write_csv, write_json
from .schrodinger import Potential
from .weyl import SolutionSystem, singular_M, weyl_solution_psi

DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class NotEigenvalueError(PreconditionError):
    """The point carries no mass of the spectral measure."""


@dataclass(frozen=True)
class SpectralMeasure:
    """Absolutely continuous density sampled on ``grid`` plus point masses.

    ``flags`` marks grid points where the epsilon extrapolation diverged.
    """

    grid: np.ndarray
    density: np.ndarray
    atoms: tuple = ()
    flags: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if g.shape != d.shape or g.ndim != 1:
            raise PreconditionError("grid and density must be 1-d arrays of equal length")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise PreconditionError("grid must be strictly increasing")
        if np.any(d < 0):
            raise PreconditionError("density must be nonnegative")
        atoms = tuple((float(l0), float(m)) for l0, m in self.atoms)
        if any(m <= 0 for _, m in atoms):
            raise PreconditionError("atom masses must be positive")
        flags = np.zeros(g.size, bool) if self.flags is None else np.asarray(self.flags, bool)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "flags", flags)

    def to_files(self, csv_path: str, json_path: str) -> None:
        write_csv(csv_path, ["lambda", "density"], zip(self.grid, self.density))
        write_json(json_path, [{"lambda": l0, "mass": m} for l0, m in self.atoms])

    @classmethod
    def from_files(cls, csv_path: str, json_path: str) -> "SpectralMeasure":
        rows = read_csv(csv_path)
        with open(json_path) as fh:
            atoms = [(a["lambda"], a["mass"]) for a in json.load(fh)]
        return cls(np.array([float(r["lambda"]) for r in rows]),
                   np.array([float(r["density"]) for r in rows]), tuple(atoms))


@dataclass(frozen=True)
class TransformedFunction:
    """Samples of f^ on a measure grid and at the measure's atoms."""

    grid: np.ndarray
    values: np.ndarray
    atom_values: tuple = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# Stieltjes inversion
# ---------------------------------------------------------------------------

def _check_schedule(eps_schedule):
    eps = np.asarray(eps_schedule, dtype=float)
    if eps.size < 3 or np.any(np.diff(eps) >= 0) or eps[-1] < 1e-6:
        raise PreconditionError("eps schedule must be decreasing, have 3+ entries and stay >= 1e-6")
    return eps


def _extrapolate(eps, vals):
    """Quadratic-in-eps extrapolation to 0 from the last three levels, and
    the same from the preceding three as a divergence check."""
    def at_zero(e, v):
        # Lagrange interpolation evaluated at 0
        e0, e1, e2 = e
        return (v[0] * e1 * e2 / ((e0 - e1) * (e0 - e2))
                + v[1] * e0 * e2 / ((e1 - e0) * (e1 - e2))
                + v[2] * e0 * e1 / ((e2 - e0) * (e2 - e1)))
    best = at_zero(eps[-3:], vals[-3:])
    prev = at_zero(eps[-4:-1], vals[-4:-1]) if eps.size >= 4 else best
    return best, prev


def _grid(window, npoints, grid):
    if grid is not None:
        return np.asarray(grid, dtype=float)
    if window is None or npoints is None or npoints < 2:
        raise PreconditionError("give a window and npoints >= 2, or an explicit grid")
    return np.linspace(float(window[0]), float(window[1]), int(npoints))


def _refine_pole(M, lam, lo, hi, scale):
    """Locate a real pole of M near lam by the linearization of 1/M."""
    for _ in range(40):
        e = 1e-7 * scale
        w = 1.0 / M(np.array([lam + 1j * e]))[0]
        if w.imag == 0:
            return None
        step = -e * w.real / w.imag
        lam += step
        if not lo <= lam <= hi:
            return None
        if abs(step) <= 1e-13 * scale:
            return lam
    return None


def _mass_limit(M, lam0, eps):
    vals = np.real(-1j * eps * M(lam0 + 1j * eps))
    return _extrapolate(eps, vals)[0], vals


def find_atoms(M: Callable, grid: np.ndarray, eps_schedule=DEFAULT_EPS) -> list:
    """Point masses of the measure of M inside the grid range.

    Candidates are local maxima of Im M(lam + i h), h the grid spacing; each
    is refined to a pole of M and kept if eps Im M has a positive limit.
    """
    eps = _check_schedule(eps_schedule)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3:
        return []
    h = float(np.max(np.diff(grid)))
    y = np.imag(M(grid + 1j * h))
    cand = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    scale = max(1.0, float(np.max(np.abs(grid))))
    atoms = []
    for i in cand:
        lam = _refine_pole(M, float(grid[i]), float(grid[i - 1]), float(grid[i + 1]), scale)
        if lam is None:
            continue
        mass, vals = _mass_limit(M, lam, eps)
        if mass > 1e-10 * scale and abs(vals[-1] / mass - 1) < 1e-2:
            if not any(abs(lam - a) <= 1e-9 * scale for a, _ in atoms):
                atoms.append((lam, float(mass)))
    return sorted(atoms)


def stieltjes_invert(M: Callable, window=None, npoints: int | None = None,
                     eps_schedule=DEFAULT_EPS, grid=None, atoms: bool = True) -> SpectralMeasure:
    """Density pi^-1 Im M(lam + i0) by extrapolation in eps, and atoms.

    Detected atoms are subtracted from M before the density is formed;
    grid points where the two extrapolations disagree are flagged and carry
    the smallest-eps value instead.
    """
    eps = _check_schedule(eps_schedule)
    lam = _grid(window, npoints, grid)
    found = find_atoms(M, lam, eps) if atoms else []
    scale = max(1.0, float(np.max(np.abs(lam))))
    keep = np.ones(lam.size, bool)
    for l0, _ in found:
        keep &= np.abs(lam - l0) > 1e-9 * scale
    lam = lam[keep]
    vals = np.empty((eps.size, lam.size))
    for k, e in enumerate(eps):
        z = lam + 1j * e
        Mz = np.asarray(M(z), dtype=complex)
        for l0, m in found:
            Mz = Mz - m / (l0 - z)
        vals[k] = Mz.imag / math.pi
    best, prev = _extrapolate(eps, vals)
    finite = np.isfinite(best)
    tol = 1e-3 * np.abs(best) + 1e-6 * (np.max(np.abs(best[finite]), initial=0.0) + 1e-6)
    flags = ~np.isfinite(best) | (np.abs(best - prev) > tol)
    density = np.where(flags, vals[-1], best)
    return SpectralMeasure(lam, np.maximum(density, 0.0), tuple(found), flags)


def norming_constant(M: Callable, lambda0: float, eps_schedule=DEFAULT_EPS) -> float:
    """lim (lambda0 - z) M(z) along z = lambda0 + i eps."""
    eps = _check_schedule(eps_schedule)
    mass, vals = _mass_limit(M, float(lambda0), eps)
    if not mass > 1e-8 * max(1.0, float(np.max(np.abs(vals)))):
        raise NotEigenvalueError(f"lambda0 = {lambda0} carries no mass (limit {mass:.3g})")
    return float(mass)


def residue_fit(M: Callable, lambda0: float, h: float = 1e-2, n: int = 8) -> float:
    """Mass at lambda0 from a polynomial fit of (lambda0 - t) M(t) on real t
    near lambda0 (no contour and no eps limit)."""
    t = lambda0 + h * np.concatenate([-np.arange(n, 0, -1), np.arange(1, n + 1)]) / n
    y = np.real((lambda0 - t) * np.asarray(M(t.astype(complex))))
    coef = np.polynomial.polynomial.polyfit(t - lambda0, y, 5)
    return float(coef[0])


def classify_supports(M: Callable, window=None, npoints: int | None = None,
                      eps_schedule=DEFAULT_EPS, grid=None) -> dict:
    """Per grid point: 'ac' if Im M has a finite positive limit, 's' if it
    grows by a factor >= 3 at every schedule step, 'p' if eps Im M tends to a
    positive value, else 'none'.  Numerical evidence only."""
    eps = _check_schedule(eps_schedule)
    lam = _grid(window, npoints, grid)
    v = np.array([np.imag(M(lam + 1j * e)) for e in eps])
    ev = eps[:, None] * v
    top = 1.0 + float(np.max(np.abs(v[0])))
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = v[1:] / v[:-1]
    # a point mass makes eps Im M = mass + O(eps): both extrapolations agree
    mass, mass_prev = _extrapolate(eps, ev)
    is_p = (mass > 1e-8 * top) & (np.abs(mass - mass_prev) <= 1e-3 * np.abs(mass))
    is_s = ~is_p & np.all(growth >= 3.0, axis=0) & (v[-1] > 0)
    best, _ = _extrapolate(eps, v / math.pi)
    is_ac = ~is_p & ~is_s & (best > 1e-8 * top)
    labels = np.where(is_p, "p", np.where(is_s, "s", np.where(is_ac, "ac", "none")))
    scale = max(1.0, float(np.max(np.abs(lam))))
    points = [a for a, _ in find_atoms(M, lam, eps)]
    for l0 in lam[is_p]:
        if not any(abs(l0 - a) <= 1e-6 * scale for a in points):
            points.append(float(l0))
    return {"grid": lam, "labels": labels, "ac": lam[is_ac], "s": lam[is_s],
            "p": np.array(sorted(points)), "sigma": lam[is_ac | is_s],
            "status": "numerical evidence"}


# ---------------------------------------------------------------------------
# Transform and inverse
# ---------------------------------------------------------------------------

def _gauged_phi(sys: SolutionSystem, z, x):
    s = sys.phi(z, x)
    g, _ = sys.gauge_values(z)
    w = np.exp(g).reshape(np.shape(g) + (1,) * np.ndim(x))
    return w * np.asarray(s.u), w * np.asarray(s.du)


def _panel_nodes(breaks, panels):
    """Composite Gauss-Legendre nodes with about ``panels`` panels spread
    over the intervals between breakpoints."""
    breaks = np.asarray(breaks, dtype=float)
    total = breaks[-1] - breaks[0]
    xs, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil(panels * (hi - lo) / total)))
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        xs.append((mid[:, None] + half[:, None] * _GL_X).ravel())
        ws.append((half[:, None] * _GL_W).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _prepare_f(pot: Potential, f, support, breakpoints):
    if isinstance(f, tuple):
        xs, fs = (np.asarray(v) for v in f)
        support = (float(xs[0]), float(xs[-1]))
        pts = xs if xs.size <= 64 else xs[[0, -1]]
        fun = lambda x: np.interp(x, xs, fs.real) + 1j * np.interp(x, xs, fs.imag) \
            if np.iscomplexobj(fs) else np.interp(x, xs, fs)
        breakpoints = tuple(breakpoints) + tuple(pts)
    else:
        if support is None:
            raise PreconditionError("a callable f needs its support interval")
        fun = f
    lo, hi = float(support[0]), float(support[1])
    if not (pot.a <= lo < hi <= pot.b):
        raise PreconditionError("f must be supported inside the computed x-range")
    br = sorted({lo, hi, *[float(b) for b in breakpoints if lo < b < hi]})
    return fun, br


def transform_values(sys: SolutionSystem, pot: Potential, f, lams, support=None,
                     breakpoints=(), tol: float = 1e-9) -> np.ndarray:
    """f^(lam) = integral of phi(lam, x) f(x) for real or complex lam.

    Composite 16-point Gauss-Legendre panels sized to the oscillation of
    phi; each band of lam is checked against a doubled panel count.
    """
    fun, br = _prepare_f(pot, f, support, breakpoints)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    L = br[-1] - br[0]
    k = np.abs(np.sqrt(lams))
    need = np.ceil(k * L / 2.0) + 2
    band = 2 ** np.ceil(np.log2(need)).astype(int)
    out = np.empty(lams.size, complex)
    cache = {}

    def nodes(P):
        if P not in cache:
            x, w = _panel_nodes(br, P)
            # Bessel-type phi is undefined at the endpoint itself
            x = np.where(x <= pot.a, pot.a + 1e-14 * L, x)
            cache[P] = (x, w, np.asarray(fun(x), dtype=complex) * w)
        return cache[P]

    def apply(zs, P):
        x, w, fw = nodes(P)
        res = np.empty(zs.size, complex)
        size = np.empty(zs.size)
        step = max(1, 4_000_000 // x.size)
        for i in range(0, zs.size, step):
            ph, _ = _gauged_phi(sys, zs[i:i + step], x)
            res[i:i + step] = ph @ fw
            size[i:i + step] = np.abs(ph) @ np.abs(fw)
        return res, size

    for P in np.unique(band):
        idx = np.flatnonzero(band == P)
        probe = idx[np.unique(np.linspace(0, idx.size - 1, min(idx.size, 5)).astype(int))]
        for _ in range(8):
            coarse, size = apply(lams[probe], int(P))
            fine, _ = apply(lams[probe], int(2 * P))
            bad = np.abs(coarse - fine) > tol * np.maximum(size, 1e-300)
            if not bad.any():
                break
            P *= 2
        else:
            raise NumericalError(f"transform quadrature failed at lambda = {lams[probe][bad][0]}")
        out[idx], _ = apply(lams[idx], int(P))
    return out


def transform_forward(sys: SolutionSystem, pot: Potential, f, measure: SpectralMeasure,
                      support=None, breakpoints=(), tol: float = 1e-9) -> TransformedFunction:
    """f^ on the measure grid and at its atoms.  ``f`` is a callable with
    ``support`` given, or a pair (x samples, f samples) interpolated linearly."""
    vals = transform_values(sys, pot, f, measure.grid, support, breakpoints, tol)
    atoms = np.array([a for a, _ in measure.atoms])
    avals = transform_values(sys, pot, f, atoms, support, breakpoints, tol) if atoms.size else []
    if np.all(np.isreal(vals)) and np.all(np.isreal(avals)):
        vals, avals = vals.real, np.real(avals)
    return TransformedFunction(measure.grid, vals, tuple(avals))


def transform_inverse(sys: SolutionSystem, measure: SpectralMeasure,
                      fhat: TransformedFunction, x):
    """(U^-1 f^)(x): Simpson's rule over the density grid plus the atoms."""
    if fhat.grid.shape != measure.grid.shape or not np.allclose(fhat.grid, measure.grid):
        raise PreconditionError("fhat must be sampled on the measure grid")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ph, _ = _gauged_phi(sys, measure.grid.astype(complex), xa)
    integrand = ph * (np.asarray(fhat.values) * measure.density)[:, None]
    out = simpson(integrand, x=measure.grid, axis=0)
    for (l0, m), fv in zip(measure.atoms, fhat.atom_values):
        pa, _ = _gauged_phi(sys, np.array([l0], complex), xa)
        out = out + m * fv * pa[0]
    if np.all(np.abs(out.imag) <= 1e-12 * np.maximum(np.abs(out.real), 1e-300)):
        out = out.real
    return out if np.ndim(x) else out[0]


def parseval_norm(fhat: TransformedFunction, measure: SpectralMeasure,
                  tail_power: float = 0.5) -> dict:
    """||f^||^2 in L^2(d rho), with the tail beyond the grid estimated.

    The running integral I(L) over [grid0, L] is fitted to I_inf - C L^-p
    on the upper half of the grid (in sqrt(lam)); p = 1/2 is the decay for
    f with jump discontinuities, where |f^|^2 rho' ~ lam^-3/2.
    """
    lam = measure.grid
    g = np.abs(np.asarray(fhat.values)) ** 2 * measure.density
    running = cumulative_simpson(g, x=lam, initial=0.0)
    atoms = sum(m * abs(v) ** 2 for (_, m), v in zip(measure.atoms, fhat.atom_values))
    raw = float(running[-1]) + atoms
    out = {"raw": raw, "cutoff": float(lam[-1]), "tail": 0.0, "norm_sq": raw}
    top = lam[-1]
    sel = (lam >= top / 4) & (lam > 0)
    if tail_power > 0 and sel.sum() >= 8:
        A = np.column_stack([np.ones(sel.sum()), -lam[sel] ** (-tail_power)])
        inf, C = np.linalg.lstsq(A, running[sel], rcond=None)[0]
        out["tail"] = float(inf - running[-1])
        out["norm_sq"] = float(inf) + atoms
    return out


# ---------------------------------------------------------------------------
# Resolvent images and E_f
# ---------------------------------------------------------------------------

def _green_row(sys, pot, c, zs, x, ys, tol):
    """G(z, x, y) and d/dx G(z, x, y) for an array of z and y."""
    zs = np.atleast_1d(np.asarray(zs, complex))
    ys = np.asarray(ys, float)
    ph_y, _ = _gauged_phi(sys, zs, ys)
    ps_y = np.asarray(weyl_solution_psi(sys, pot, c, zs, ys, tol).u)
    ph_x, dph_x = _gauged_phi(sys, zs, np.array([x]))
    ps = weyl_solution_psi(sys, pot, c, zs, np.array([x]), tol)
    ps_x, dps_x = np.asarray(ps.u), np.asarray(ps.du)
    left = ys < x
    G = np.where(left, ph_y * ps_x, ph_x * ps_y)
    dG = np.where(left, ph_y * dps_x, dph_x * ps_y)
    return G, dG


def resolvent_image_check(sys: SolutionSystem, pot: Potential, measure: SpectralMeasure,
                          z, x: float, c: float | None = None, k: int = 0,
                          y_max: float | None = None, radius: float = 0.1,
                          tol: float = 1e-9) -> dict:
    """Compare U applied to y -> d^k/dz^k G(z,x,y) with k! phi(lam,x)/(lam-z)^(k+1),
    and the x-derivative variant with phi'(lam,x).

    Deviations are max |lhs - rhs| over the grid relative to max |rhs|.
    z-derivatives use a 16-point Cauchy circle of the given radius.
    """
    z = complex(z)
    c = x if c is None else c
    if y_max is None:
        decay = np.real(np.sqrt(-z + 0j))
        if decay <= 0:
            raise PreconditionError("z must lie off the spectrum (Re sqrt(-z) > 0)")
        y_max = x + 40.0 / decay
    if math.isfinite(pot.b):
        y_max = min(y_max, pot.b)
    if k:
        t = 2 * math.pi * (np.arange(16) + 0.5) / 16
        zs = z + radius * np.exp(1j * t)
        weights = math.factorial(k) * np.exp(-1j * k * t) / (16 * radius ** k)
    else:
        zs, weights = np.array([z]), np.array([1.0])

    def g_of(which):
        def f(ys):
            G, dG = _green_row(sys, pot, c, zs, x, ys, tol)
            return weights @ (G if which == 0 else dG)
        return f

    lam = measure.grid.astype(complex)
    ph, dph = _gauged_phi(sys, lam, np.array([x]))
    factor = math.factorial(k) / (lam - z) ** (k + 1)
    out = {"z": z, "x": x, "k": k, "y_max": y_max}
    for name, which, ref in (("max_deviation", 0, ph[:, 0]), ("derivative_deviation", 1, dph[:, 0])):
        lhs = transform_values(sys, pot, g_of(which), lam, (pot.a, y_max), (x,), tol)
        rhs = ref * factor
        out[name] = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    return out


def resolvent_form(sys: SolutionSystem, pot: Potential, f: Callable, support, z,
                   c: float | None = None, n: int = 4001, tol: float = 1e-10) -> np.ndarray:
    """m_f(z) = <(H - z)^-1 f, f> for real f supported in ``support``.

    Uses the symmetry of G: m_f = 2 int f psi F with F(x) = int_s^x phi f.
    """
    s, d = float(support[0]), float(support[1])
    c = d if c is None else c
    x = np.linspace(s, d, n)
    if x[0] <= pot.a:
        x[0] = pot.a + 1e-8 * (d - s)
    zs = np.atleast_1d(np.asarray(z, complex))
    fx = np.asarray(f(x), dtype=float)
    ph, _ = _gauged_phi(sys, zs, x)
    ps = np.asarray(weyl_solution_psi(sys, pot, c, zs, x, tol).u)
    g = ph * fx
    # cumulative_simpson is real-only
    F = (cumulative_simpson(g.real, x=x, axis=-1, initial=0.0)
         + 1j * cumulative_simpson(g.imag, x=x, axis=-1, initial=0.0))
    out = 2 * simpson(fx * ps * F, x=x, axis=-1)
    return out if np.ndim(z) else out[0]


def ef_values(sys, pot, f, support, z, c=None, n: int = 4001):
    """E_f(z) = m_f(z) - f^(z) f^(z*)* M(z) for real f."""
    zs = np.atleast_1d(np.asarray(z, complex))
    c = float(support[1]) if c is None else c
    mf = resolvent_form(sys, pot, f, support, zs, c, n)
    fh = transform_values(sys, pot, f, zs, support)
    fh_c = transform_values(sys, pot, f, np.conj(zs), support)
    Mz = singular_M(sys, pot, c, zs)
    return mf - fh * np.conj(fh_c) * Mz


def _check_nonvanishing(sys, pot, f, support, lo, hi):
    """Reject windows where |f^| has a zero: local minima of |f^| on a probe
    grid are polished with a bounded scalar minimizer."""
    absf = lambda t: float(np.abs(transform_values(sys, pot, f, np.array([t]), support)[0]))
    probe = np.linspace(lo, hi, 81)
    vals = np.abs(transform_values(sys, pot, f, probe, support))
    top = float(np.max(vals))
    idx = [0, probe.size - 1] + list(np.flatnonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])) + 1)
    for i in idx:
        a, b = probe[max(i - 1, 0)], probe[min(i + 1, probe.size - 1)]
        res = minimize_scalar(absf, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
        if min(res.fun, vals[i]) <= 1e-8 * top:
            raise PreconditionError(f"f^ vanishes in the window near lambda = {res.x:.6g}")


def ef_entire_check(sys: SolutionSystem, pot: Potential, f: Callable, window, support,
                    c: float | None = None, h: float = 1e-3) -> dict:
    """Evidence that E_f is entire across the real window.

    Reports the finite-difference Cauchy-Riemann residual at off-axis points,
    the conjugation defect, how well the Cauchy integral over a circle
    crossing the axis reproduces interior values, and Im E_f(lam + i eps)
    for shrinking eps.
    """
    lo, hi = float(window[0]), float(window[1])
    probe = np.linspace(lo, hi, 21)
    _check_nonvanishing(sys, pot, f, support, lo, hi)
    center, r = 0.5 * (lo + hi), 0.5 * (hi - lo)
    E = lambda zz: ef_values(sys, pot, f, support, zz, c)
    alpha = math.pi / 8 + np.arange(8) * math.pi / 4
    pts = center + 0.5 * r * np.exp(1j * alpha)
    stencil = np.concatenate([pts + h, pts - h, pts + 1j * h, pts - 1j * h])
    v = E(stencil).reshape(4, -1)
    dx = (v[0] - v[1]) / (2 * h)
    dy = (v[2] - v[3]) / (2 * h)
    cr = float(np.max(np.abs(dx + 1j * dy) / np.abs(dx)))
    e_pts = E(pts)
    conj = float(np.max(np.abs(E(np.conj(pts)) - np.conj(e_pts)) / np.abs(e_pts)))
    t = 2 * math.pi * (np.arange(64) + 0.5) / 64
    circle = center + r * np.exp(1j * t)
    ec = E(circle)
    inner = center + 0.4 * r * np.exp(1j * (alpha + 0.1))
    predicted = np.array([np.mean(ec * (circle - center) / (circle - w)) for w in inner])
    direct = E(inner)
    cauchy = float(np.max(np.abs(predicted - direct)) / np.max(np.abs(direct)))
    im_lim = []
    for e in (1e-2, 1e-3, 1e-4):
        ev = E(probe[::5] + 1j * e)
        im_lim.append(float(np.max(np.abs(ev.imag) / np.abs(ev))))
    return {"cr_residual": cr, "conjugation_defect": conj, "cauchy_defect": cauchy,
            "im_limit": im_lim, "im_decreasing": bool(im_lim[2] < im_lim[1] < im_lim[0])}
