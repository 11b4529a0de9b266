"""Generalized Nevanlinna analytics: negative squares of the Nevanlinna
kernel, minimal representation power, the integral representation, the
Herglotz rescaling, kappa from growth along iy, and moment tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, simpson

from .errors import ConfigError, PreconditionError
from .io import write_json
from .spectral import SpectralMeasure

ZERO_REL = 1e-10
MARGIN = 0.1


@dataclass
class NevanlinnaReport:
    kappa: int | None
    k: int | None
    poly_coeffs: list = field(default_factory=list)
    moments_ok: dict = field(default_factory=dict)
    growth_exponents: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def to_json(self, path: str) -> None:
        write_json(path, {"kappa": self.kappa, "k": self.k, "poly_coeffs": list(self.poly_coeffs),
                          "moments_ok": self.moments_ok, "growth_exponents": self.growth_exponents,
                          "limits": self.limits, "flags": self.flags})


@dataclass(frozen=True)
class KResult:
    """Outcome of a tail-exponent decision; ``k`` is None when indeterminate."""

    k: int | None
    exponent: float
    determinate: bool


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------

def kernel_matrix(M: Callable, z: np.ndarray) -> np.ndarray:
    Mz = np.asarray(M(z), dtype=complex)
    N = (Mz[:, None] - np.conj(Mz)[None, :]) / (z[:, None] - np.conj(z)[None, :])
    return 0.5 * (N + N.conj().T)


def _negative_count(N: np.ndarray) -> int:
    e = np.linalg.eigvalsh(N)
    return int(np.sum(e < -ZERO_REL * np.max(np.abs(e))))


def _valid_points(z: np.ndarray) -> bool:
    if np.any(z.imag == 0):
        return False
    d = np.abs(z[:, None] - np.conj(z)[None, :])
    return bool(np.all(d > 1e-12 * (1 + np.abs(z[:, None]))))


def kernel_negative_squares(M: Callable, points, trials: int = 20, seed: int = 0) -> int:
    """Maximum number of negative eigenvalues of the Nevanlinna kernel over
    ``trials`` point sets: the given one and resamples from the annular
    sector spanned by it.  Eigenvalues within 1e-10 of zero, relative to the
    spectral radius, count as zero.  An estimate: the definition ranges over
    all finite samples."""
    z0 = np.asarray(points, dtype=complex).ravel()
    if z0.size < 2 or np.unique(z0).size != z0.size:
        raise PreconditionError("points must be pairwise distinct")
    if np.any(z0.imag == 0):
        raise PreconditionError("points must lie off the real axis")
    rng = np.random.default_rng(seed)
    r = np.abs(z0)
    arg = np.abs(np.angle(z0))
    lo_r, hi_r = math.log(r.min()), math.log(r.max())
    lo_a, hi_a = arg.min(), arg.max()
    best = 0
    z = z0
    for t in range(max(1, trials)):
        if t:
            while True:
                # resample on a conjugate-pair collision
                z = np.exp(rng.uniform(lo_r, hi_r, z0.size)) * np.exp(1j * rng.uniform(lo_a, hi_a, z0.size))
                if _valid_points(z):
                    break
        elif not _valid_points(z):
            raise PreconditionError("points contain a conjugate pair")
        best = max(best, _negative_count(kernel_matrix(M, z)))
    return best


def default_points(n: int = 30, seed: int = 1) -> np.ndarray:
    """n points in the upper half plane, |z| log-uniform on [0.1, 50]."""
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(math.log(0.1), math.log(50.0), n)) * \
        np.exp(1j * math.pi * rng.uniform(0.05, 0.95, n))


# ---------------------------------------------------------------------------
# tails and minimal k
# ---------------------------------------------------------------------------

def tail_fit(measure: SpectralMeasure):
    """Power law density ~ C lam^p fitted on the last decade of the grid by
    least squares weighted with the log-spacing.  Returns (p, C); p = -inf
    when the density vanishes there."""
    lam, d = measure.grid, measure.density
    top = lam[-1]
    if top <= 0:
        return -math.inf, 0.0
    sel = (lam >= top / 10) & (lam > 0)
    if sel.sum() < 4:
        raise PreconditionError("grid too short to fit a tail")
    if np.all(d[sel] <= 1e-300):
        return -math.inf, 0.0
    sel &= d > 0
    x, y = np.log(lam[sel]), np.log(d[sel])
    w = np.gradient(x) if x.size > 1 else np.ones(1)
    p, logc = np.polyfit(x, y, 1, w=np.sqrt(w))
    return float(p), float(math.exp(logc))


def minimal_k(measure: SpectralMeasure, kmax: int = 10) -> KResult:
    """Smallest k with int (1+lam^2)^(-k-1) d rho finite, from the tail
    exponent p: finite iff p - 2k - 2 < -1.  Indeterminate when p is within
    0.1 of the boundary for the selected k or for k - 1."""
    p, _ = tail_fit(measure)
    if p == -math.inf:
        return KResult(0, p, True)
    for k in range(kmax + 1):
        if p - 2 * k - 2 < -1:
            close = abs(p - 2 * k - 1) < MARGIN or (k > 0 and abs(p - 2 * k + 1) < MARGIN)
            return KResult(None if close else k, p, not close)
    return KResult(None, p, False)


def bessel_k_bound(l: float) -> int:
    """k = ceil((l + 1)/2), the upper bound for perturbed Bessel operators."""
    if l < -0.5:
        raise PreconditionError("l must be at least -1/2")
    return int(math.ceil((l + 1) / 2 - 1e-12))


def kappa_from_representation(k: int, coeffs, rel: float = 1e-6) -> int:
    """kappa from (k, degree, leading coefficient) of a minimal representation.
    Coefficients below rel times the largest count as zero."""
    a = np.asarray(coeffs, dtype=float)
    big = np.flatnonzero(np.abs(a) > rel * max(1.0, float(np.max(np.abs(a), initial=0.0))))
    deg = int(big[-1]) if big.size else 0
    if deg <= 2 * k:
        return k
    if deg % 2 == 0 or a[deg] > 0:
        return deg // 2
    return deg // 2 + 1


# ---------------------------------------------------------------------------
# integral representation
# ---------------------------------------------------------------------------

def _ghat(name: str, k: int):
    """(ghat, 1/ghat); the reciprocal is formed directly to avoid overflow."""
    if name == "poly":
        return (lambda z: (1 + np.asarray(z) ** 2) ** k,
                lambda z: (1 + np.asarray(z) ** 2) ** -k)
    if name == "exp_z":
        return lambda z: np.exp(np.asarray(z)), lambda z: np.exp(-np.asarray(z))
    if name == "exp_z2":
        return lambda z: np.exp(np.asarray(z) ** 2), lambda z: np.exp(-np.asarray(z) ** 2)
    raise ConfigError(f"unknown ghat {name!r}; use poly, exp_z or exp_z2")


def _check_integrable(measure: SpectralMeasure, name: str, k: int):
    p, C = tail_fit(measure)
    if name == "poly" and p != -math.inf and p - 2 * k - 2 >= -1:
        raise PreconditionError(f"int (1+lam^2)^-1 d rho / ghat diverges for ghat = (1+z^2)^{k}")
    if name in ("exp_z",) and measure.grid[0] < 0:
        w = measure.density * np.exp(-measure.grid)
        if w[0] > 1e-8 * max(float(np.max(w)), 1e-300):
            raise PreconditionError("int d rho / ghat not finite for ghat = exp(z): measure reaches far left")
    return p, C


def integral_representation(measure: SpectralMeasure, ghat: str, z, k: int = 0,
                            tail: bool = True):
    """ghat(z) int (1/(lam - z) - lam/(1+lam^2)) d rho(lam)/ghat(lam).

    The density part uses Simpson's rule over the grid; for ghat = (1+z^2)^k
    the part beyond the grid uses the fitted power-law tail.
    """
    g, ginv = _ghat(ghat, k)
    p, C = _check_integrable(measure, ghat, k)
    lam = measure.grid
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    kern = (1 + lam[None, :] * zz[:, None]) / ((lam[None, :] - zz[:, None]) * (1 + lam ** 2)[None, :])
    vals = simpson(kern * (measure.density * ginv(lam))[None, :], x=lam, axis=1)
    for l0, m in measure.atoms:
        vals = vals + m * (1 + l0 * zz) / ((l0 - zz) * (1 + l0 ** 2)) * ginv(l0)
    if tail and ghat == "poly" and p != -math.inf and C > 0:
        top = float(lam[-1])
        # t = top e^u; the integrand decays like e^((p - 2k - 1) u)
        umax = 40.0 / (2 * k + 1 - p)
        for i, zi in enumerate(zz):
            def f(u, part, zi=zi):
                t = top * math.exp(u)
                v = (1 + t * zi) / ((t - zi) * (1 + t * t)) * C * t ** (p + 1) / (1 + t * t) ** k
                return v.real if part else v.imag
            vals[i] += quad(f, 0.0, umax, args=(True,), limit=400)[0] \
                + 1j * quad(f, 0.0, umax, args=(False,), limit=400)[0]
    out = g(zz) * vals
    return out if np.ndim(z) else out[0]


def fit_polynomial(M: Callable, measure: SpectralMeasure, k: int, degree: int | None = None,
                   points=None) -> np.ndarray:
    """Real coefficients a_0..a_degree of M(z) - integral_representation(z)
    by least squares at off-axis points (degree defaults to 2k + 1).
    A fit: the degree bound is not certified by finite data."""
    degree = 2 * k + 1 if degree is None else degree
    if points is None:
        t = np.linspace(0.15, 0.85, 24) * math.pi
        points = np.concatenate([2.0 * np.exp(1j * t), 3.0 * np.exp(1j * t)])
    z = np.asarray(points, dtype=complex)
    D = np.asarray(M(z)) - integral_representation(measure, "poly", z, k)
    V = z[:, None] ** np.arange(degree + 1)[None, :]
    A = np.vstack([V.real, V.imag])
    b = np.concatenate([D.real, D.imag])
    return np.linalg.lstsq(A, b, rcond=None)[0]


def representation_check(measure: SpectralMeasure, ghat: str, M: Callable, center: float,
                         radius: float, k: int = 0, h: float = 1e-3) -> dict:
    """Evidence that D = M - integral_representation is entire near
    ``center``: CR residual at off-axis points, the imaginary part of D on
    real points of the disc outside the grid support, and Cauchy-integral
    reproduction of interior values from a circle crossing the axis."""
    D = lambda zz: np.asarray(M(zz)) - integral_representation(measure, ghat, zz, k)
    alpha = math.pi / 8 + np.arange(8) * math.pi / 4
    pts = center + 0.5 * radius * np.exp(1j * alpha)
    v = D(np.concatenate([pts + h, pts - h, pts + 1j * h, pts - 1j * h])).reshape(4, -1)
    dx, dy = (v[0] - v[1]) / (2 * h), (v[2] - v[3]) / (2 * h)
    scale = np.abs(dx) + np.abs(D(pts)) / radius
    cr = float(np.max(np.abs(dx + 1j * dy) / scale))
    real_pts = np.linspace(center - radius, center + radius, 9)
    outside = (real_pts < measure.grid[0]) | (real_pts > measure.grid[-1])
    if outside.any():
        dr = D(real_pts[outside].astype(complex))
        real_defect = float(np.max(np.abs(dr.imag) / np.maximum(np.abs(dr), 1.0)))
    else:
        real_defect = None
    t = 2 * math.pi * (np.arange(64) + 0.5) / 64
    circle = center + radius * np.exp(1j * t)
    dc = D(circle)
    inner = center + 0.4 * radius * np.exp(1j * (alpha + 0.1))
    pred = np.array([np.mean(dc * (circle - center) / (circle - w)) for w in inner])
    direct = D(inner)
    cauchy = float(np.max(np.abs(pred - direct)) / max(float(np.max(np.abs(direct))), 1.0))
    return {"cr_residual": cr, "real_defect": real_defect, "cauchy_defect": cauchy}


# ---------------------------------------------------------------------------
# Herglotz rescaling
# ---------------------------------------------------------------------------

def herglotzify(measure: SpectralMeasure, M: Callable, rate: float = 1.0,
                check_points: int = 100) -> dict:
    """Rescale d rho by e^(-rate lam), i.e. gauge g(z) = rate z / 2, so the
    new measure is finite and M~(z) = int d rho~/(lam - z) is Herglotz.

    Returns the gauge (g, f) with M~ = e^-2g M + e^-g f, the evaluator M~,
    the total mass and the sign check of Im M~ on an upper half plane grid.
    """
    lam = measure.grid
    w = measure.density * np.exp(-rate * lam)
    if lam[0] < 0 and w[0] > 1e-8 * max(float(np.max(w)), 1e-300):
        raise PreconditionError("e^-2g d rho is not finite for g(lam) = rate lam / 2; "
                                "try g(lam) = lam^2")
    atoms = [(l0, m * math.exp(-rate * l0)) for l0, m in measure.atoms]
    mass = float(simpson(w, x=lam)) + sum(m for _, m in atoms)

    def Mt(z):
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        out = simpson(w[None, :] / (lam[None, :] - zz[:, None]), x=lam, axis=1)
        for l0, m in atoms:
            out = out + m / (l0 - zz)
        return out if np.ndim(z) else out[0]

    g = lambda z: rate * np.asarray(z) / 2
    f = lambda z: np.exp(g(z)) * (Mt(z) - np.exp(-2 * g(z)) * np.asarray(M(z)))
    rng = np.random.default_rng(7)
    zs = np.exp(rng.uniform(math.log(0.05), math.log(50), check_points)) * \
        np.exp(1j * math.pi * rng.uniform(0.02, 0.98, check_points))
    im = np.imag(Mt(zs))
    return {"gauge": (g, f), "Mtilde": Mt, "mass": mass, "rate": rate,
            "im_positive": bool(np.all(im > 0)), "min_im": float(np.min(im))}


# ---------------------------------------------------------------------------
# growth along iy
# ---------------------------------------------------------------------------

def _power_fit(y, v):
    a = np.abs(v)
    if np.all(a == 0):
        return -math.inf
    keep = a > 0
    return float(np.polyfit(np.log(y[keep]), np.log(a[keep]), 1)[0])


def kappa_from_growth(M: Callable, y_range=(1e2, 1e6), n: int = 40, kappa_max: int = 10) -> dict:
    """kappa such that -M(iy)/(iy)^(2 kappa - 1) tends to a limit in (0, inf]
    and M(iy)/(iy)^(2 kappa + 1) to a limit in [0, inf).

    Each ratio's power-law exponent e is fitted over y_range: e > 0.1 means
    the limit is infinite, e < -0.1 that it is 0, otherwise the limit is the
    value at the largest y and must be real with the required sign.
    """
    y = np.geomspace(float(y_range[0]), float(y_range[1]), n)
    iy = 1j * y
    My = np.asarray(M(iy), dtype=complex)
    growth = _power_fit(y, My)

    def classify(r, allow_zero):
        e = _power_fit(y, r)
        if e > MARGIN:
            return "inf", e
        if e < -MARGIN:
            return ("zero" if allow_zero else "bad"), e
        last = r[-1]
        real = abs(last.imag) <= 1e-3 * abs(last)
        if real and last.real > 0:
            return "finite", e
        return "bad", e

    for kappa in range(kappa_max + 1):
        r1 = -My / iy ** (2 * kappa - 1)
        r2 = My / iy ** (2 * kappa + 1)
        c1, e1 = classify(r1, allow_zero=False)
        c2, e2 = classify(r2, allow_zero=True)
        if c1 in ("inf", "finite") and c2 in ("zero", "finite"):
            return {"kappa": kappa, "growth_exponent": growth,
                    "limits": {"lower": complex(r1[-1]) if c1 == "finite" else c1,
                               "upper": complex(r2[-1]) if c2 == "finite" else c2},
                    "exponents": (e1, e2)}
    return {"kappa": None, "growth_exponent": growth, "limits": {}, "exponents": ()}


def moment_growth_check(measure: SpectralMeasure, M: Callable, k: int, gamma: float,
                        y_range=(1e2, 1e5), n: int = 40) -> dict:
    """Compare finiteness of int d rho/(1+|lam|^(2k+gamma)) with that of
    int_1^inf (-1)^k Im M(iy) / y^(2k+gamma) dy by tail exponents.
    ``equivalent`` is None when either exponent sits within MARGIN of the
    boundary between the two classes.

    For gamma = 0 the comparison is between int (1+lam^2)^-k d rho and
    lim (-1)^k Im M(iy)/y^(2k-1); when both are finite their values are
    reported too.
    """
    if not 0 <= gamma < 2:
        raise PreconditionError("gamma must lie in [0, 2)")
    p, _ = tail_fit(measure)
    y = np.geomspace(float(y_range[0]), float(y_range[1]), n)
    im = (-1) ** k * np.imag(np.asarray(M(1j * y)))
    s = _power_fit(y, im)
    out = {"k": k, "gamma": gamma, "density_exponent": p, "im_exponent": s}
    if gamma > 0:
        a, b = p - 2 * k - gamma, s - 2 * k - gamma
        out["measure_finite"] = bool(a < -1)
        out["growth_finite"] = bool(b < -1)
        out["determinate"] = bool(abs(a + 1) >= MARGIN and abs(b + 1) >= MARGIN)
    else:
        a, b = p - 2 * k, s - (2 * k - 1)
        out["measure_finite"] = bool(a < -1)
        out["growth_finite"] = bool(b < MARGIN)
        out["determinate"] = bool(abs(a + 1) >= MARGIN and abs(b) >= MARGIN or b < -MARGIN)
        if out["measure_finite"] and out["growth_finite"]:
            lam = measure.grid
            out["measure_value"] = float(simpson(measure.density / (1 + lam ** 2) ** k, x=lam)) + \
                sum(m / (1 + l0 ** 2) ** k for l0, m in measure.atoms)
            out["growth_value"] = float(im[-1] / y[-1] ** (2 * k - 1))
    # an exponent within MARGIN of the log-divergent boundary cannot be classified
    out["equivalent"] = out["measure_finite"] == out["growth_finite"] if out["determinate"] else None
    return out


def nevanlinna_report(M: Callable, measure: SpectralMeasure, points=None, trials: int = 20,
                      gammas=(0.5, 1.0, 1.5)) -> NevanlinnaReport:
    """kappa by kernel sampling, minimal k, fitted polynomial part, moment
    tests and the growth fit, with the (k, degree, a_l) consistency flag."""
    pts = default_points() if points is None else points
    kappa = kernel_negative_squares(M, pts, trials)
    kr = minimal_k(measure)
    rep = NevanlinnaReport(kappa=kappa, k=kr.k)
    rep.growth_exponents["density"] = kr.exponent
    gro = kappa_from_growth(M)
    rep.growth_exponents["M_iy"] = gro["growth_exponent"]
    rep.limits = {key: str(v) for key, v in gro["limits"].items()}
    rep.flags["kappa_growth"] = gro["kappa"]
    if kr.k is not None:
        coeffs = fit_polynomial(M, measure, kr.k)
        rep.poly_coeffs = [float(a) for a in coeffs]
        rep.flags["kappa_representation"] = kappa_from_representation(kr.k, coeffs)
        rep.flags["consistent"] = rep.flags["kappa_representation"] == kappa
        for g in gammas:
            rep.moments_ok[str(g)] = moment_growth_check(measure, M, kr.k, g)["equivalent"]
    rep.flags["poly_is_fit"] = True
    return rep
