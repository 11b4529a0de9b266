"""Dirichlet and Neumann eigenvalues on (a, c), counting functions, the
interlacing/gap report, the Krein product for m_- and the product
reconstruction of phi."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PoleError, PreconditionError
from .io import write_csv
from .schrodinger import Potential, pruefer_angle, regular_solution_phi
from .specfun import ZeroSequence, hadamard_eval, weyl_fit

REL_TOL = 1e-10
MAX_ITER = 200
MAX_EXPAND = 60


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues of the truncated problem on (a, c).

    ``mu`` holds the Dirichlet eigenvalues mu_1, mu_2, ..., ``nu`` the Neumann
    eigenvalues nu_0, nu_1, ...; ``delta`` is the Weyl-law slope.
    ``cprime`` is the Krein constant calibrated from one ODE evaluation.
    """

    c: float
    mu: ZeroSequence
    nu: ZeroSequence
    delta: float
    cprime: float | None = None

    def rows(self):
        n = max(self.mu.count + 1, self.nu.count)
        for j in range(n):
            mu = self.mu.zeros[j - 1] if 1 <= j <= self.mu.count else ""
            nu = self.nu.zeros[j] if j < self.nu.count else ""
            yield (j, mu, nu)

    def to_csv(self, path: str) -> None:
        write_csv(path, ["j", "mu", "nu"], self.rows())


def _to_s(lam):
    return np.sign(lam) * np.sqrt(np.abs(lam))


def _to_lam(s):
    return s * np.abs(s)


def _phase_roots(pot: Potential, c: float, targets: np.ndarray, tol: float) -> np.ndarray:
    """Solve theta(c, lam) = target for every target, all indices at once.

    The search runs in s = sign(lam) sqrt|lam|, where the phase is close to
    linear.  Illinois steps with a bisection fallback when a bracket stalls.
    """
    n = targets.size
    length = c - pot.a

    def g(s, idx):
        return pruefer_angle(pot, _to_lam(s), c) - targets[idx]

    # global bracket: below every target at lo, above every target at hi
    lo = -1.0
    for _ in range(MAX_EXPAND):
        if pruefer_angle(pot, [_to_lam(lo)], c)[0] < targets[0]:
            break
        lo *= 2.0
    else:
        raise NumericalError("eigenvalue bracket failure at index 0: no lower bound found")
    hi = (targets[-1] + math.pi * (1 + abs(pot.strength))) / length + 1.0
    for _ in range(MAX_EXPAND):
        if pruefer_angle(pot, [_to_lam(hi)], c)[0] > targets[-1]:
            break
        hi *= 2.0
    else:
        raise NumericalError(f"eigenvalue bracket failure at index {n - 1}: no upper bound found")

    idx = np.arange(n)
    a = np.full(n, lo)
    b = np.full(n, hi)
    fa = g(a, idx)
    fb = g(b, idx)
    if np.any(fa >= 0) or np.any(fb <= 0):
        bad = int(np.flatnonzero((fa >= 0) | (fb <= 0))[0])
        raise NumericalError(f"eigenvalue bracket failure at index {bad}")
    width_ref = np.abs(b - a)
    active = np.ones(n, dtype=bool)
    for it in range(MAX_ITER):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        aa, bb, ffa, ffb = a[act], b[act], fa[act], fb[act]
        x = bb - ffb * (bb - aa) / (ffb - ffa)
        mid = 0.5 * (aa + bb)
        if it % 4 == 3:
            stalled = np.abs(bb - aa) > 0.25 * width_ref[act]
            x = np.where(stalled, mid, x)
            width_ref[act] = np.abs(bb - aa)
        bad = ~np.isfinite(x) | (x <= np.minimum(aa, bb)) | (x >= np.maximum(aa, bb))
        x = np.where(bad, mid, x)
        fx = g(x, act)
        flip = np.sign(fx) != np.sign(ffb)
        # Illinois: keep the old endpoint and halve its value when not flipped
        new_a = np.where(flip, bb, aa)
        new_fa = np.where(flip, ffb, 0.5 * ffa)
        a[act], fa[act], b[act], fb[act] = new_a, new_fa, x, fx
        lam_a, lam_b = _to_lam(new_a), _to_lam(x)
        done = (np.abs(lam_a - lam_b) <= tol * np.maximum(1.0, np.abs(lam_b))) | (fx == 0)
        active[act[done]] = False
    if active.any():
        raise NumericalError(f"eigenvalue refinement did not converge at index {int(np.flatnonzero(active)[0])}")
    return _to_lam(b)


def dirichlet_eigs(pot: Potential, c: float, count: int, tol: float = REL_TOL) -> ZeroSequence:
    """First ``count`` zeros mu_1 < mu_2 < ... of z -> phi(z, c)."""
    if count < 1:
        raise PreconditionError("count must be positive")
    targets = math.pi * np.arange(1, count + 1)
    return ZeroSequence(_phase_roots(pot, c, targets, tol))


def neumann_eigs(pot: Potential, c: float, count: int, tol: float = REL_TOL) -> ZeroSequence:
    """First ``count`` zeros nu_0 < nu_1 < ... of z -> phi'(z, c)."""
    if count < 1:
        raise PreconditionError("count must be positive")
    targets = math.pi * (np.arange(count) + 0.5)
    return ZeroSequence(_phase_roots(pot, c, targets, tol))


def _calibrate_cprime(pot: Potential, c: float, mu: ZeroSequence, nu: ZeroSequence) -> float:
    z0 = min(0.0, float(nu.zeros[0]) - 1.0)
    s = regular_solution_phi(pot, z0, c)
    m_ode = -float(np.real(s.du)) / float(np.real(s.u))
    prod = _krein_product(mu, nu, z0)
    return float(np.real(-m_ode / prod))


def eigen_data(pot: Potential, c: float, count: int, tol: float = REL_TOL) -> EigenData:
    """Dirichlet and Neumann eigenvalues, Weyl slope and Krein constant."""
    mu = dirichlet_eigs(pot, c, count, tol)
    nu = neumann_eigs(pot, c, count, tol)
    delta = math.pi / weyl_fit(mu.zeros, 1)[0] if count >= 4 else float("nan")
    cprime = _calibrate_cprime(pot, c, mu, nu)
    return EigenData(c=c, mu=mu, nu=nu, delta=delta, cprime=cprime)


def counting_function(eigs: ZeroSequence, R: float) -> int:
    """#{lambda in eigs : lambda <= R}; R must lie below the last computed value."""
    if eigs.count == 0 or R >= eigs.zeros[-1]:
        raise PreconditionError("R lies beyond the computed eigenvalues; compute more of them")
    return int(np.searchsorted(eigs.zeros, R, side="right"))


def verify_hypothesis_ev(data: EigenData, r: float) -> dict:
    """Interlacing, the gap inequalities with exponent r and the Weyl slope."""
    mu, nu = data.mu.zeros, data.nu.zeros
    failures = []
    n = min(mu.size, nu.size)
    if n < 10:
        failures.append(f"only {n} eigenvalue pairs; at least 10 required")
    merged = []
    for j in range(1, n + 1):
        merged.append(nu[j - 1])
        merged.append(mu[j - 1])
    if n < nu.size:
        merged.append(nu[n])
    merged = np.asarray(merged)
    interlacing = bool(np.all(np.diff(merged) > 0))
    if not interlacing:
        failures.append("interlacing violated")

    def w(v):
        with np.errstate(divide="ignore"):
            return np.abs(v) ** (-r)

    ok = []
    for j in range(1, n + 1):
        m, nl = mu[j - 1], nu[j - 1]
        good = m - nl >= w(nl) + w(m)
        if j < nu.size:
            good = good and (nu[j] - m >= w(nu[j]) + w(m))
        ok.append(bool(good))
    j0 = None
    for j in range(n, 0, -1):
        if not ok[j - 1]:
            break
        j0 = j
    if j0 is None:
        failures.append("gap inequalities fail at the last computed index")
    elif j0 > 1:
        failures.append(f"gap inequalities fail below index {j0}")
    try:
        delta = math.pi / weyl_fit(mu, 1)[0]
    except PreconditionError:
        delta = float("nan")
    return {"interlacing": interlacing, "J0": j0, "r": r, "delta": delta,
            "gap_ok": ok, "failures": failures}


def _krein_product(mu: ZeroSequence, nu: ZeroSequence, z):
    num = hadamard_eval(nu, z, index_offset=0)
    den = hadamard_eval(mu, z, index_offset=1)
    return num / den


def krein_m_minus(data: EigenData, z):
    """m_-(z) = -C' prod (1 - z/nu_{j-1}) / (1 - z/mu_j)."""
    if data.cprime is None:
        raise PreconditionError("Krein constant not calibrated; build the data with eigen_data")
    zz = np.asarray(z, dtype=complex)
    mu = data.mu.zeros
    near = np.abs(zz[..., None] - mu) <= 1e-12 * np.maximum(1.0, np.abs(mu))
    if np.any(near):
        raise PoleError("z coincides with a Dirichlet eigenvalue")
    out = -data.cprime * _krein_product(data.mu, data.nu, zz)
    return complex(out) if np.ndim(z) == 0 else out


def _origin_rule(seq: ZeroSequence, rel: float = 1e-8) -> ZeroSequence:
    zeros = seq.zeros.copy()
    at0 = np.abs(zeros) <= rel * max(1.0, float(np.max(np.abs(zeros))) ** 0.5)
    if not at0.any():
        return seq
    zeros[at0] = 0.0
    return ZeroSequence(zeros, zero_at_origin=True)


def phi_from_products(data: EigenData, pot: Potential, z, x: float | None = None) -> dict:
    """phi(z, x) and phi'(z, x) from their zero sets at x = data.c.

    The constants phi(0, x), phi'(0, x) come from one ODE evaluation.  When 0
    is itself an eigenvalue its factor becomes z and the constant is matched
    at z0 = -1 below the spectrum instead.
    """
    if x is not None and abs(x - data.c) > 1e-12 * max(1.0, abs(data.c)):
        raise PreconditionError("eigenvalue data were computed at a different truncation point")
    x = data.c
    out = {}
    for key, seq, off in (("phi", data.mu, 1), ("dphi", data.nu, 0)):
        seq = _origin_rule(seq)
        z0 = 0.0
        if seq.zero_at_origin:
            z0 = min(-1.0, float(seq.zeros[0]) - 1.0)
        s = regular_solution_phi(pot, z0, x)
        ref = float(np.real(s.u if key == "phi" else s.du))
        scale = ref / float(np.real(hadamard_eval(seq, z0, index_offset=off))) if z0 != 0.0 else ref
        out[key] = hadamard_eval(seq, z, scale=scale, index_offset=off)
    return out


def corona_bound_check(data: EigenData, pot: Potential, zgrid, s: float) -> dict:
    """Fit |phi(z,c)| + |phi'(z,c)| >= B exp(-A |z|^s) on a grid.

    B is the smaller of 1 and the minimum over |z| <= 1 (over the whole grid
    if no point is that close); A is then the least admissible value.  The
    same fit with exponent 1/2 is reported as ``A_half``.
    """
    if s <= 0.5:
        raise PreconditionError("the corona exponent s must exceed 1/2")
    zg = np.atleast_1d(np.asarray(zgrid, dtype=complex))
    smp = regular_solution_phi(pot, zg, data.c)
    vals = np.abs(np.asarray(smp.u)).ravel() + np.abs(np.asarray(smp.du)).ravel()
    if np.any(vals == 0):
        raise NumericalError("alpha and beta vanish simultaneously")
    small = np.abs(zg) <= 1.0
    B = min(1.0, float(np.min(vals[small] if small.any() else vals)))
    r = np.abs(zg)

    def fit(exponent):
        with np.errstate(divide="ignore", invalid="ignore"):
            need = (math.log(B) - np.log(vals)) / r ** exponent
        need = np.where(r > 0, need, 0.0)
        return max(0.0, float(np.max(need)))

    A = fit(s)
    A_half = fit(0.5)
    bound = B * np.exp(-A * r ** s)
    return {"s": s, "A": A, "B": B, "A_half": A_half, "values": vals,
            "min_value": float(np.min(vals)),
            "holds": bool(np.all(vals >= bound * (1 - 1e-12)))}
