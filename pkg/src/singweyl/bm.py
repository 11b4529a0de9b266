"""Numerical Borg-Marchenko comparator: decay of M_1 - M_0 - f along
nonreal rays against the rate exp(-2 (c - eps) Im sqrt z)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import eigen, weyl
from .errors import PreconditionError
from .io import write_json
from .schrodinger import Potential

DEFAULT_RAYS = (math.pi / 3, math.pi / 2, 2 * math.pi / 3)
NOISE_FACTOR = 10.0
FAR_FACTOR = 10.0


class IncomparableNormalizationError(PreconditionError):
    """phi_1/phi_0 does not tend to 1: the two systems are not normalized alike."""


@dataclass
class BMReport:
    rays: list
    decay_fit: list
    threshold: float
    verdict: str
    c: float
    eps: float
    f_degree: int
    f_coeffs: list = field(default_factory=list)
    ray_ok: list = field(default_factory=list)
    samples_used: list = field(default_factory=list)
    far_excess: list = field(default_factory=list)
    phi_ratio_defect: float = 0.0
    hypothesis: dict = field(default_factory=dict)
    status: str = "numerical evidence"

    def to_json(self, path: str) -> None:
        write_json(path, asdict(self))


def ray_points(angle: float, t) -> np.ndarray:
    """Points on arg z = angle with Im sqrt z = t."""
    t = np.asarray(t, dtype=float)
    return (t / math.sin(angle / 2)) ** 2 * np.exp(1j * angle)


def _hypothesis(pot: Potential, c: float, count: int = 12) -> dict:
    data = eigen.eigen_data(pot, c, count)
    rep = eigen.verify_hypothesis_ev(data, 1.0)
    return {"interlacing": bool(rep["interlacing"]), "J0": rep["J0"], "failures": list(rep["failures"])}


def _fit_f(z, D, degree):
    """Real polynomial f of the given degree by least squares on z (scaled)."""
    R = float(np.max(np.abs(z)))
    V = (z[:, None] / R) ** np.arange(degree + 1)[None, :]
    A = np.vstack([V.real, V.imag])
    b = np.concatenate([D.real, D.imag])
    a = np.linalg.lstsq(A, b, rcond=None)[0]
    return a / R ** np.arange(degree + 1)


def compare(pot0: Potential, pot1: Potential, sys0: weyl.SolutionSystem, sys1: weyl.SolutionSystem,
            c: float, eps: float = 0.05, rays=DEFAULT_RAYS, f_fit_degree: int = 3,
            t_range=(1.0, 10.0), n: int = 19, t_split: float | None = None,
            anchor: float | None = None, tol: float = 1e-11, check_hypothesis: bool = True,
            ratio_tol: float = 0.1) -> BMReport:
    """Sample D = M_1 - M_0 on each ray at Im sqrt z = t, remove a real
    polynomial f fitted on the far samples (t >= t_split), and fit
    log|D - f| against t on the near samples that clear the noise floor.

    The noise floor of each sample is the disagreement of M between two
    anchors evaluated at tolerances tol and 10 tol.  A ray passes when its
    slope is at most -2 (c - eps), or when the remainder never clears the
    floor.  The verdict is consistent-equal iff every ray passes.  far_excess
    (far remainder over FAR_FACTOR times the fitted exponential plus floor)
    is diagnostic only: it also picks up solver noise that the two-anchor
    floor cannot see.
    """
    if not 0 < eps < c:
        raise PreconditionError("need 0 < eps < c")
    if pot0.strength != pot1.strength:
        raise PreconditionError("the two potentials must share the singularity strength l")
    if f_fit_degree < 0:
        raise PreconditionError("f_fit_degree must be nonnegative")
    threshold = -2.0 * (c - eps)
    t = np.linspace(t_range[0], t_range[1], n)
    t_split = 0.5 * (t_range[0] + t_range[1]) + 0.1 * (t_range[1] - t_range[0]) if t_split is None else t_split
    near, far = t < t_split, t >= t_split
    if near.sum() < 3 or far.sum() * len(rays) < f_fit_degree + 1:
        raise PreconditionError("too few samples on one side of t_split")
    anchor = min(0.25, c / 2) if anchor is None else anchor

    hyp = {}
    if check_hypothesis:
        for key, pot in (("pot0", pot0), ("pot1", pot1)):
            hyp[key] = _hypothesis(pot, max(c, 1.0))
            if not hyp[key]["interlacing"]:
                raise PreconditionError(f"{key} fails the eigenvalue hypothesis: {hyp[key]['failures']}")

    # phi-ratio normalization check at x = c/2 on the largest sample of each ray
    zmax = np.array([ray_points(a, t[-1]) for a in rays])
    r = np.asarray(sys1.phi(zmax, c / 2).u) / np.asarray(sys0.phi(zmax, c / 2).u)
    ratio_defect = float(np.max(np.abs(r - 1)))
    if ratio_defect > ratio_tol:
        raise IncomparableNormalizationError(
            f"phi_1/phi_0 - 1 reaches {ratio_defect:.3g} at x = {c / 2:g}; normalizations differ")

    Z = np.concatenate([ray_points(a, t) for a in rays])
    M = []
    for sys, pot in ((sys0, pot0), (sys1, pot1)):
        Ma = np.asarray(weyl.singular_M(sys, pot, anchor, Z, tol))
        Mb = np.asarray(weyl.singular_M(sys, pot, 2 * anchor, Z, 10 * tol))
        M.append((Ma, np.abs(Ma - Mb)))
    D = M[1][0] - M[0][0]
    noise = M[0][1] + M[1][1] + 1e-14 * (np.abs(M[0][0]) + np.abs(M[1][0]))

    far_all = np.tile(far, len(rays))
    coeffs = _fit_f(Z[far_all], D[far_all], f_fit_degree)
    rem = np.abs(D - np.polyval(coeffs[::-1], Z))

    slopes, ok, used, excess = [], [], [], []
    for i in range(len(rays)):
        sl = slice(i * n, (i + 1) * n)
        ri, ni = rem[sl], NOISE_FACTOR * noise[sl]
        sel = near & (ri > ni)
        used.append(int(sel.sum()))
        if sel.sum() >= 3:
            s, b = np.polyfit(t[sel], np.log(ri[sel]), 1)
            env = np.exp(b + s * t[far])
            exc = float(np.max(ri[far] / (FAR_FACTOR * env + ni[far])))
            slopes.append(float(s))
            excess.append(exc)
            ok.append(bool(s <= threshold))
        elif sel.sum() == 0 and np.all(ri[far] <= ni[far]):
            # remainder at the noise floor everywhere: no decay to measure
            slopes.append(None)
            excess.append(0.0)
            ok.append(True)
        else:
            slopes.append(None)
            excess.append(float(np.max(ri[far] / ni[far])))
            ok.append(False)
    verdict = "consistent-equal" if all(ok) else "inconsistent"
    return BMReport(rays=[float(a) for a in rays], decay_fit=slopes, threshold=threshold,
                    verdict=verdict, c=float(c), eps=float(eps), f_degree=int(f_fit_degree),
                    f_coeffs=[float(a) for a in coeffs], ray_ok=ok, samples_used=used,
                    far_excess=excess, phi_ratio_defect=ratio_defect, hypothesis=hyp)
