"""Special functions and entire-product primitives.

Bessel functions of real order and complex argument, the upper incomplete
gamma function for real order, and truncated Hadamard (genus zero) products
with a Weyl-law tail correction.

All complex powers, roots and logarithms use the principal branch, i.e. the
cut runs along the negative real axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import BesselOverflowError, NumericalError, PreconditionError

SWITCH_RADIUS = 20.0
OVERFLOW_IM = 700.0

_LD = np.clongdouble
_EULER = np.longdouble("0.577215664901532860606512090082402431")
_SERIES_TERMS = 160


def _is_int(nu: float) -> bool:
    return float(nu) == round(float(nu))


def _is_half_int(nu: float) -> bool:
    return _is_int(2.0 * nu) and not _is_int(nu)


def _prep(w):
    w = np.asarray(w, dtype=complex)
    return w, w.ndim == 0


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------

def _series_j(nu: float, w: np.ndarray) -> np.ndarray:
    """Ascending series, summed in extended precision.  Any real nu that is
    not a negative integer."""
    x = -(w.astype(_LD) ** 2) / 4
    term = np.full(w.shape, special.rgamma(nu + 1.0), dtype=_LD)
    total = term.copy()
    peak = np.abs(total)
    nul = np.longdouble(nu)
    for k in range(1, _SERIES_TERMS):
        term = term * x / (k * (nul + k))
        total += term
        mag = np.abs(term)
        peak = np.maximum(peak, mag)
        if k > 8 and np.all(mag <= 1e-21 * peak):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        pref = (w / 2) ** nu
    return total.astype(complex) * pref


def _hankel_pq(nu: float, w: np.ndarray):
    """Asymptotic P, Q series truncated at the smallest term (exact for
    half-integer orders)."""
    mu = 4.0 * nu * nu
    P = np.ones(w.shape, dtype=complex)
    Q = np.zeros(w.shape, dtype=complex)
    t = np.ones(w.shape, dtype=complex)
    active = np.ones(w.shape, dtype=bool)
    prev = np.full(w.shape, np.inf)
    for k in range(1, 200):
        t = t * (mu - (2 * k - 1) ** 2) / (k * 8.0 * w)
        mag = np.abs(t)
        active &= mag < prev
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            P = P + np.where(active, sign * t, 0)
        else:
            Q = Q + np.where(active, sign * t, 0)
        active &= mag > 1e-18
        prev = mag
    return P, Q


def _trig_scaled(chi: np.ndarray, scaled: bool):
    if not scaled:
        return np.cos(chi), np.sin(chi)
    s = np.abs(chi.imag)
    ep = np.exp(1j * chi - s)
    em = np.exp(-1j * chi - s)
    return (ep + em) / 2, (ep - em) / 2j


def _asym_jy(nu: float, w: np.ndarray, scaled: bool):
    """Hankel asymptotics, valid for Re w >= 0."""
    P, Q = _hankel_pq(nu, w)
    chi = w - (nu / 2 + 0.25) * np.pi
    c, s = _trig_scaled(chi, scaled)
    amp = np.sqrt(2.0 / (np.pi * w))
    if scaled:
        amp = amp * np.exp(np.abs(chi.imag) - np.abs(w.imag))
    return amp * (P * c - Q * s), amp * (P * s + Q * c)


def _j_core(nu: float, w: np.ndarray, scaled: bool) -> np.ndarray:
    if _is_int(nu) and nu < 0:
        n = int(round(-nu))
        return (-1) ** n * _j_core(float(n), w, scaled)
    out = np.empty(w.shape, dtype=complex)
    small = np.abs(w) <= SWITCH_RADIUS
    if small.any():
        ws = w[small]
        v = _series_j(nu, ws)
        if scaled:
            v = v * np.exp(-np.abs(ws.imag))
        out[small] = v
    big = ~small
    if big.any():
        wb = w[big]
        left = wb.real < 0
        wr = np.where(left, -wb, wb)
        j, _ = _asym_jy(nu, wr, scaled)
        # J(w e^{+-i pi}) = e^{+-i nu pi} J(w); the negative real axis has arg +pi
        phase = np.where(wb.imag >= 0, np.exp(1j * np.pi * nu), np.exp(-1j * np.pi * nu))
        out[big] = np.where(left, phase * j, j)
    return out


def _series_y_int(n: int, w: np.ndarray) -> np.ndarray:
    """Integer-order Neumann function from the ascending expansion with
    digamma coefficients (extended precision)."""
    wl = w.astype(_LD)
    h2 = wl * wl / 4
    x = -h2
    # finite part: sum_{k<n} (n-k-1)!/k! (w^2/4)^k
    fin = np.zeros(w.shape, dtype=_LD)
    p = np.ones(w.shape, dtype=_LD)
    for k in range(n):
        fin += p * (special.factorial(n - k - 1, exact=True) / special.factorial(k, exact=True))
        p = p * h2
    # digamma sum
    harm_k = np.longdouble(0)
    harm_nk = np.longdouble(sum(np.longdouble(1) / m for m in range(1, n + 1)))
    term = np.full(w.shape, np.longdouble(1) / np.longdouble(special.factorial(n, exact=True)), dtype=_LD)
    dsum = term * (2 * (-_EULER) + harm_k + harm_nk)
    peak = np.abs(dsum)
    for k in range(1, _SERIES_TERMS):
        term = term * x / (k * (n + k))
        harm_k += np.longdouble(1) / k
        harm_nk += np.longdouble(1) / (n + k)
        add = term * (2 * (-_EULER) + harm_k + harm_nk)
        dsum += add
        mag = np.abs(add)
        peak = np.maximum(peak, mag)
        if k > 8 and np.all(mag <= 1e-21 * peak):
            break
    half = w / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        res = (-(1 / np.pi) * half ** (-n) * fin.astype(complex)
               + (2 / np.pi) * np.log(half) * _series_j(float(n), w)
               - (1 / np.pi) * half ** n * dsum.astype(complex))
    return res


def _y_core(nu: float, w: np.ndarray, scaled: bool) -> np.ndarray:
    if _is_int(nu):
        n = int(round(nu))
        if n < 0:
            return (-1) ** (-n) * _y_core(float(-n), w, scaled)
        out = np.empty(w.shape, dtype=complex)
        small = np.abs(w) <= SWITCH_RADIUS
        if small.any():
            ws = w[small]
            v = _series_y_int(n, ws)
            if scaled:
                v = v * np.exp(-np.abs(ws.imag))
            out[small] = v
        big = ~small
        if big.any():
            wb = w[big]
            left = wb.real < 0
            wr = np.where(left, -wb, wb)
            j, y = _asym_jy(float(n), wr, scaled)
            sgn = np.where(wb.imag >= 0, 1.0, -1.0)
            refl = (-1) ** n * (y + sgn * 2j * j)
            out[big] = np.where(left, refl, y)
        return out
    out = np.empty(w.shape, dtype=complex)
    big = (np.abs(w) > SWITCH_RADIUS) & (w.real >= 0)
    if big.any():
        out[big] = _asym_jy(nu, w[big], scaled)[1]
    rest = ~big
    if rest.any():
        wr = w[rest]
        cos = 0.0 if _is_half_int(nu) else np.cos(nu * np.pi)
        out[rest] = (_j_core(nu, wr, scaled) * cos - _j_core(-nu, wr, scaled)) / np.sin(nu * np.pi)
    return out


def _check_overflow(w: np.ndarray, scaled: bool) -> None:
    if not scaled and np.any(np.abs(w.imag) > OVERFLOW_IM):
        raise BesselOverflowError(
            f"|Im w| exceeds {OVERFLOW_IM}; call with scaled=True for e^(-|Im w|)-scaled output")
    if not np.all(np.isfinite(w)):
        raise PreconditionError("non-finite Bessel argument")


def bessel_j(nu: float, w, scaled: bool = False):
    """Bessel function of the first kind J_nu(w).

    Parameters
    ----------
    nu : float
        Real order.  Negative orders are accepted (the ascending series is
        valid for every order that is not a negative integer, and
        J_{-n} = (-1)^n J_n covers the rest).
    w : complex or array_like
        Argument, principal branch.
    scaled : bool
        If true return ``exp(-|Im w|) * J_nu(w)``; required when |Im w| > 700.

    Notes
    -----
    Power series for |w| <= 20, Hankel asymptotics beyond (reflected to
    Re w >= 0 first).
    """
    w, scalar = _prep(w)
    _check_overflow(w, scaled)
    out = _j_core(float(nu), np.atleast_1d(w), scaled)
    return out[0] if scalar else out.reshape(w.shape)


def bessel_y(nu: float, w, scaled: bool = False):
    """Bessel function of the second kind Y_nu(w); see :func:`bessel_j`.

    Half-integer orders go through Y_{n+1/2} = (-1)^{n+1} J_{-n-1/2}, whose
    Hankel expansion terminates (closed trigonometric form).
    """
    w, scalar = _prep(w)
    _check_overflow(w, scaled)
    out = _y_core(float(nu), np.atleast_1d(w), scaled)
    return out[0] if scalar else out.reshape(w.shape)


# ---------------------------------------------------------------------------
# Upper incomplete gamma
# ---------------------------------------------------------------------------

def _gamma_cf(a: float, w: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Modified Lentz evaluation of the Legendre continued fraction."""
    tiny = 1e-300
    b = w + 1.0 - a
    c = np.full(w.shape, 1.0 / tiny, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(w.shape, dtype=bool)
    for i in range(1, max_iter):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < tol * 1e-3
        if done.all():
            break
    else:
        raise NumericalError(
            f"incomplete gamma continued fraction did not converge in {max_iter} iterations "
            f"(a={a}, worst w={w[~done][0]})")
    return np.exp(-w + a * np.log(w)) * h


def _exp1_series(w: np.ndarray) -> np.ndarray:
    wl = w.astype(_LD)
    term = np.ones(w.shape, dtype=_LD)
    total = np.zeros(w.shape, dtype=_LD)
    for k in range(1, 400):
        term = term * (-wl) / k
        add = term / k
        total += add
        if k > np.abs(w).max() * 3 + 10 and np.all(np.abs(add) <= 1e-21 * (np.abs(total) + 1e-300)):
            break
    return -float(_EULER) - np.log(w) - total.astype(complex)


def _lower_series(a: float, w: np.ndarray) -> np.ndarray:
    """w^a sum_k (-w)^k / (k! (a+k)), i.e. the lower incomplete gamma."""
    wl = w.astype(_LD)
    term = np.ones(w.shape, dtype=_LD)
    total = term / np.longdouble(a)
    for k in range(1, 400):
        term = term * (-wl) / k
        add = term / (np.longdouble(a) + k)
        total += add
        if k > np.abs(w).max() * 3 + 10 and np.all(np.abs(add) <= 1e-21 * (np.abs(total) + 1e-300)):
            break
    return w ** a * total.astype(complex)


def _gamma_asym(a: float, w: np.ndarray) -> np.ndarray:
    """Large-|w| expansion w^(a-1) e^(-w) sum_k (a-1)...(a-k)/w^k."""
    term = np.ones(w.shape, dtype=complex)
    total = term.copy()
    prev = np.full(w.shape, np.inf)
    active = np.ones(w.shape, dtype=bool)
    for k in range(1, 400):
        term = term * (a - k) / w
        mag = np.abs(term)
        active &= mag < prev
        if not active.any():
            break
        total = total + np.where(active, term, 0)
        active &= mag > 1e-18
        prev = mag
    return w ** (a - 1) * np.exp(-w) * total


def incomplete_gamma_upper(a: float, w, tol: float = 1e-10, max_iter: int = 20000):
    """Upper incomplete gamma function Gamma(a, w) for real a.

    Continued fraction when |w| > a + 4, series otherwise.  Inside the sector
    |arg w| > 0.8 pi the fraction converges too slowly, so the series (no
    cancellation there) is used up to |w| = 50 and the large-|w| expansion
    beyond.  Integer orders a <= 0 go through the exponential integral and
    the downward recurrence in closed form.
    """
    a = float(a)
    w, scalar = _prep(w)
    w1 = np.atleast_1d(w).astype(complex)
    entire = _is_int(a) and a > 0
    if not entire and np.any((w1.imag == 0) & (w1.real < 0)):
        raise PreconditionError("incomplete_gamma_upper: w on the branch cut (negative real axis)")
    out = np.empty(w1.shape, dtype=complex)
    zero = w1 == 0
    if zero.any():
        out[zero] = special.gamma(a) if a > 0 else np.inf
    r = np.abs(w1)
    near_cut = np.abs(np.angle(w1)) > 0.8 * np.pi
    large = (r > a + 4) & ~zero
    use_cf = large & ~near_cut
    use_asym = large & near_cut & (r > 50)
    if use_cf.any():
        out[use_cf] = _gamma_cf(a, w1[use_cf], tol, max_iter)
    if use_asym.any():
        out[use_asym] = _gamma_asym(a, w1[use_asym])
    ser = ~use_cf & ~use_asym & ~zero
    if ser.any():
        ws = w1[ser]
        if _is_int(a) and a <= 0:
            n = int(round(-a))
            e1 = _exp1_series(ws)
            corr = np.zeros(ws.shape, dtype=complex)
            for k in range(n):
                corr += (-1) ** k * special.factorial(k, exact=True) / ws ** (k + 1)
            out[ser] = (-1) ** n / special.factorial(n, exact=True) * (e1 - np.exp(-ws) * corr)
        else:
            out[ser] = special.gamma(a) - _lower_series(a, ws)
    return out[0] if scalar else out.reshape(w.shape)


# ---------------------------------------------------------------------------
# Hadamard products
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroSequence:
    """Ordered real zeros of a genus-zero entire function.

    ``zero_at_origin`` marks a sequence whose zero at 0 is to be handled by
    replacing the factor (1 - z/0) by z.
    """

    zeros: np.ndarray = field(default_factory=lambda: np.empty(0))
    zero_at_origin: bool = False

    def __post_init__(self):
        z = np.asarray(self.zeros, dtype=float).ravel()
        if not np.all(np.isfinite(z)):
            raise PreconditionError("zero sequence contains non-finite values")
        if z.size > 1 and np.any(np.diff(z) <= 0):
            raise PreconditionError("zero sequence must be strictly increasing")
        object.__setattr__(self, "zeros", z)

    @property
    def count(self) -> int:
        return int(self.zeros.size)


def weyl_fit(zeros: np.ndarray, index_offset: int = 1):
    """Least-squares fit sqrt(mu_k) ~ alpha*k + beta over the upper half.

    Indices run from ``index_offset``.  Returns (alpha, beta).
    """
    mu = np.asarray(zeros, dtype=float)
    k = np.arange(mu.size) + index_offset
    keep = mu > 0
    k, mu = k[keep], mu[keep]
    if mu.size < 4:
        raise PreconditionError("need at least 4 positive zeros for a Weyl-law fit")
    half = mu.size // 2
    alpha, beta = np.polyfit(k[half:], np.sqrt(mu[half:]), 1)
    return float(alpha), float(beta)


def tail_sums(zeros: np.ndarray, J: int, index_offset: int = 1):
    """Estimates of sum_{k>J} 1/mu_k and sum_{k>J} 1/mu_k^2 from the
    Weyl-law fit of the stored zeros."""
    alpha, beta = weyl_fit(zeros[:J], index_offset)
    start = J + index_offset + beta / alpha
    if alpha <= 0 or start <= 0:
        raise NumericalError("Weyl-law fit unusable for the tail correction")
    s1 = special.polygamma(1, start) / alpha ** 2
    s2 = special.polygamma(3, start) / (6 * alpha ** 4)
    return float(s1), float(s2)


def hadamard_eval(zeros: ZeroSequence, z, scale: float = 1.0, truncation: int | None = None,
                  tail: bool = True, index_offset: int = 1):
    """Evaluate scale * prod_{j<=J} (1 - z/mu_j) with a tail correction.

    The tail factor is exp(-z S1 - z^2 S2 / 2) where S1, S2 are the sums of
    1/mu and 1/mu^2 over the omitted zeros, estimated from a Weyl-law fit.
    On the real axis the result is exactly real; it is conjugate symmetric.
    """
    z, scalar = _prep(z)
    z1 = np.atleast_1d(z)
    mu = zeros.zeros if truncation is None else zeros.zeros[:truncation]
    if mu.size == 0:
        raise PreconditionError("hadamard_eval needs a nonempty zero sequence")
    at0 = mu == 0
    if at0.any() and not zeros.zero_at_origin:
        raise PreconditionError("zero sequence contains 0 but the origin replacement rule is not flagged")
    mu_nz = mu[~at0]
    out = np.empty(z1.shape, dtype=complex)
    chunk = max(1, 2_000_000 // max(mu_nz.size, 1))
    for i in range(0, z1.size, chunk):
        zz = z1[i:i + chunk]
        ratio = zz[:, None] / mu_nz[None, :]
        with np.errstate(divide="ignore"):
            real = zz.imag == 0
            logs = np.log1p(-ratio)
            mag = np.exp(np.sum(np.log(np.abs(1.0 - ratio.real)), axis=1))
            sign = np.where(np.sum(ratio.real > 1.0, axis=1) % 2 == 1, -1.0, 1.0)
        val = np.exp(np.sum(logs, axis=1))
        out[i:i + chunk] = np.where(real, sign * mag + 0j, val)
    if at0.any():
        out = out * z1
    if tail and mu_nz.size >= 8:
        s1, s2 = tail_sums(mu_nz, mu_nz.size, index_offset + int(at0.sum()))
        out = out * np.exp(-z1 * s1 - z1 * z1 * s2 / 2)
    out = scale * out
    return out[0] if scalar else out.reshape(z.shape)


def convergence_exponent(zeros: ZeroSequence) -> float:
    """Fitted rho with mu_j ~ j^(1/rho) over the upper half of the zeros."""
    mu = zeros.zeros[zeros.zeros > 0]
    if mu.size < 4:
        raise PreconditionError("need at least 4 positive zeros")
    k = np.arange(1, mu.size + 1)
    half = mu.size // 2
    slope = np.polyfit(np.log(mu[half:]), np.log(k[half:]), 1)[0]
    return float(slope)


def product_lower_bound_check(zeros: ZeroSequence, z, r: float, s: float,
                              calibration=None) -> dict:
    """Exclusion-disc test and lower bound |prod(1 - z/zeta_j)| >= B exp(-A |z|^s).

    ``excluded`` is true when z lies in some disc |z - zeta_j| < |zeta_j|^(-r).
    Outside the discs (A, B) are fitted on a calibration grid so that the
    bound holds there; the returned ``holds`` flag tests the point z itself.
    """
    if r <= 0:
        raise PreconditionError("r must be positive")
    rho = convergence_exponent(zeros)
    if not (rho < s < 1):
        raise PreconditionError(f"s={s} must lie strictly between the convergence exponent {rho:.3f} and 1")
    z = complex(z)
    zeta = zeros.zeros
    radii = np.abs(zeta) ** (-r)

    def outside(pts):
        return np.all(np.abs(pts[:, None] - zeta[None, :]) >= radii[None, :], axis=1)

    if calibration is None:
        rmax = max(10.0, 2.0 * abs(z))
        rr = np.logspace(-1, np.log10(rmax), 25)
        ang = np.linspace(-np.pi, np.pi, 24, endpoint=False) + np.pi / 48
        calibration = (rr[:, None] * np.exp(1j * ang[None, :])).ravel()
    calibration = np.asarray(calibration, dtype=complex)
    calibration = calibration[outside(calibration)]
    cal_val = np.abs(hadamard_eval(zeros, calibration))
    near = np.abs(calibration) <= 1.0
    B = float(min(1.0, cal_val[near].min())) if near.any() else 1.0
    A = float(max(0.0, np.max((np.log(B) - np.log(cal_val)) / np.abs(calibration) ** s)))
    excluded = not bool(outside(np.array([z]))[0])
    value = float(abs(hadamard_eval(zeros, z)))
    if excluded:
        return {"excluded": True, "bound": float("nan"), "value": value, "A": A, "B": B, "holds": None}
    bound = B * np.exp(-A * abs(z) ** s)
    return {"excluded": False, "bound": float(bound), "value": value, "A": A, "B": B,
            "holds": bool(value >= bound)}
