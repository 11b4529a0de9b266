"""Potentials and integration of -u'' + q u = z u for complex z.

The left endpoint ``a`` may carry a centrifugal singularity l(l+1)/(x-a)^2.
Solutions that are regular there are started from a short Frobenius series
a little to the right of ``a`` and propagated with an embedded Runge-Kutta
pair (DOP853, complex state, batched over z).
"""

from __future__ import annotations

import ast
import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import interpolate, special
from scipy.integrate import solve_ivp

from .errors import (ConfigError, NearPoleError, NumericalError, PreconditionError,
                     StepUnderflowError)

FROBENIUS_TERMS = 14
NEAR_POLE_THRESHOLD = 1e-10


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """q(x) = l(l+1)/(x-a)^2 + qtilde(x) on (a, b).

    ``l=None`` marks a regular left endpoint (no centrifugal term, Dirichlet
    condition).  ``tail`` is "limit-point decaying" for b = inf or "regular"
    for a finite b carrying a Dirichlet condition.
    """

    qtilde: Callable = field(default=lambda x: np.zeros_like(np.asarray(x, dtype=float)))
    l: float | None = 0.0
    a: float = 0.0
    b: float = math.inf
    tail: str = "limit-point decaying"
    name: str = "custom"

    def __post_init__(self):
        if self.l is not None and self.l < -0.5:
            raise PreconditionError(f"unsupported singularity strength l={self.l} < -1/2")
        if self.tail not in ("limit-point decaying", "regular"):
            raise ConfigError(f"unknown tail classification {self.tail!r}")
        if self.tail == "regular" and not math.isfinite(self.b):
            raise ConfigError("a regular tail needs a finite right endpoint")

    @property
    def strength(self) -> float:
        return 0.0 if self.l is None else float(self.l)

    def q(self, x):
        x = np.asarray(x, dtype=float)
        lv = self.strength
        if lv == 0.0:
            return self.qtilde(x)
        s = x - self.a
        return lv * (lv + 1.0) / (s * s) + self.qtilde(x)

    def with_qtilde(self, qtilde: Callable, name: str | None = None) -> "Potential":
        return Potential(qtilde, self.l, self.a, self.b, self.tail, name or self.name)


_ALLOWED_FUNCS = {"ln": np.log, "exp": np.exp, "step": lambda t: np.heaviside(t, 0.5)}
_ALLOWED_NAMES = {"pi": math.pi}


def compile_expression(text: str, variables=("x",), dtype=float) -> Callable:
    """Vectorized evaluator of an arithmetic expression in one variable.

    Every name in ``variables`` denotes the argument; ``pi`` is the only
    constant.  Operators + - * / ^ and the functions ln, exp, step.
    """
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = float(node.value)
            return lambda x: v
        if isinstance(node, ast.Name):
            if node.id in variables:
                return lambda x: x
            if node.id in _ALLOWED_NAMES:
                v = _ALLOWED_NAMES[node.id]
                return lambda x: v
            raise ConfigError(f"unknown symbol {node.id!r} in expression {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            f = build(node.operand)
            return (lambda x: -f(x)) if isinstance(node.op, ast.USub) else f
        if isinstance(node, ast.BinOp):
            f, g = build(node.left), build(node.right)
            ops = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
                   ast.Div: np.divide, ast.Pow: np.power}
            for kind, op in ops.items():
                if isinstance(node.op, kind):
                    return lambda x, op=op: op(f(x), g(x))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _ALLOWED_FUNCS and len(node.args) == 1 and not node.keywords):
            fn, arg = _ALLOWED_FUNCS[node.func.id], build(node.args[0])
            return lambda x: fn(arg(x))
        raise ConfigError(f"unsupported construct in expression {text!r}")

    body = build(tree)

    def evaluate(x):
        x = np.asarray(x, dtype=dtype)
        return np.broadcast_to(np.asarray(body(x), dtype=dtype), x.shape).copy()

    return evaluate


def _compile_expr(text: str) -> Callable:
    return compile_expression(text)


def potential_from_expression(expr: str, l: float | None = 0.0, a: float = 0.0, b: float = math.inf,
                              tail: str = "limit-point decaying") -> Potential:
    """Potential whose regular part qtilde is given as an arithmetic
    expression in x (operators + - * / ^, functions ln, exp and the unit
    step)."""
    return Potential(_compile_expr(expr), l, a, b, tail, name=f"expr:{expr}")


def potential_from_csv(path: str, l: float | None = 0.0, a: float = 0.0) -> Potential:
    """Tabulated qtilde from a CSV with header ``x,q``.

    The table is interpolated by a cubic spline; its last abscissa becomes a
    regular right endpoint with a Dirichlet condition.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        xs = np.array([float(r["x"]) for r in rows])
        qs = np.array([float(r["q"]) for r in rows])
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read potential table {path}: {exc}") from None
    if xs.size < 4 or np.any(np.diff(xs) <= 0):
        raise ConfigError("potential table needs at least 4 rows with increasing x")
    spline = interpolate.CubicSpline(xs, qs)
    lo, hi = xs[0], xs[-1]

    def qt(x):
        return spline(np.clip(np.asarray(x, dtype=float), lo, hi))

    return Potential(qt, l, a, float(hi), "regular", name=f"csv:{path}")


# ---------------------------------------------------------------------------
# solution samples and the integrator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolutionSample:
    """Value ``u`` and x-derivative ``du`` of a solution at (z, x).  Fields
    may be arrays (z along the leading axes, x along the last)."""

    z: complex | np.ndarray
    x: float | np.ndarray
    u: complex | np.ndarray
    du: complex | np.ndarray


def _solve(pot: Potential, zvec: np.ndarray, x0: float, y0u, y0du, xs, tol: float):
    """Propagate (u, u') for every z in ``zvec`` from x0 to each point in the
    sorted (monotone away from x0) array ``xs``.  Returns arrays (nz, nx)."""
    xs = np.asarray(xs, dtype=float)
    n = zvec.size
    u_out = np.empty((n, xs.size), dtype=complex)
    du_out = np.empty((n, xs.size), dtype=complex)
    at0 = xs == x0
    u_out[:, at0] = np.asarray(y0u)[:, None]
    du_out[:, at0] = np.asarray(y0du)[:, None]
    rest = ~at0
    if not rest.any():
        return u_out, du_out
    targets = xs[rest]
    x_end = targets[np.argmax(np.abs(targets - x0))]

    def rhs(x, y):
        return np.concatenate([y[n:], (pot.q(x) - zvec) * y[:n]])

    y0 = np.concatenate([np.asarray(y0u, dtype=complex), np.asarray(y0du, dtype=complex)])
    scale = np.max(np.abs(y0)) if np.any(y0 != 0) else 1.0
    sol = solve_ivp(rhs, (x0, x_end), y0, method="DOP853", rtol=tol, atol=1e-3 * tol * scale,
                    t_eval=targets if targets.size > 1 else None)
    if sol.status < 0:
        last = float(sol.t[-1]) if sol.t.size else x0
        raise StepUnderflowError(f"integration failed: {sol.message}", last)
    if targets.size > 1:
        yy = sol.y
    else:
        yy = sol.y[:, -1:]
    u_out[:, rest] = yy[:n]
    du_out[:, rest] = yy[n:]
    return u_out, du_out


def _shape_out(z, x, arr):
    z = np.asarray(z)
    x = np.asarray(x)
    return arr.reshape(z.shape + x.shape)


def integrate(pot: Potential, z, x_from: float, init: SolutionSample, x_to, tol: float = 1e-10) -> SolutionSample:
    """Propagate the data ``init`` (given at ``x_from``) to ``x_to``.

    ``z`` may be an array; ``init.u``/``init.du`` broadcast against it.
    ``x_to`` may be a scalar or an array on one side of ``x_from``.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if init.x != x_from:
        raise PreconditionError("init.x must equal x_from")
    zarr = np.asarray(z, dtype=complex)
    zvec = zarr.ravel()
    u0 = np.broadcast_to(np.asarray(init.u, dtype=complex), zarr.shape).ravel()
    du0 = np.broadcast_to(np.asarray(init.du, dtype=complex), zarr.shape).ravel()
    xt = np.atleast_1d(np.asarray(x_to, dtype=float))
    if np.any(xt - x_from > 0) and np.any(xt - x_from < 0):
        raise PreconditionError("x_to points must lie on one side of x_from")
    lo_ok = (lambda xx: xx >= pot.a) if pot.l is None else (lambda xx: xx > pot.a)
    for xx in (x_from, *xt):
        if not (lo_ok(xx) and xx <= pot.b):
            raise PreconditionError(f"x={xx} outside ({pot.a}, {pot.b})")
    order = np.argsort(np.abs(xt - x_from), kind="stable")
    u, du = _solve(pot, zvec, x_from, u0, du0, xt[order], tol)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    u, du = u[:, inv], du[:, inv]
    return SolutionSample(zarr, np.asarray(x_to), _shape_out(zarr, np.asarray(x_to), u),
                          _shape_out(zarr, np.asarray(x_to), du))


# ---------------------------------------------------------------------------
# regular solution phi
# ---------------------------------------------------------------------------

def double_factorial_general(l: float) -> float:
    """(2l+1)!! continued to real l: 2^(l+1) Gamma(l+3/2) / sqrt(pi)."""
    return 2.0 ** (l + 1.0) * special.gamma(l + 1.5) / math.sqrt(math.pi)


def frobenius_offset(l: float, tol: float, zmax: float) -> float:
    """Start offset: min(0.01, tol^(1/(2l+3)), 0.5/sqrt|z|)."""
    d = min(0.01, tol ** (1.0 / (2.0 * l + 3.0)))
    if zmax > 0:
        d = min(d, 0.5 / math.sqrt(zmax))
    return d


def _frobenius_coeffs(pot: Potential, zvec: np.ndarray, delta: float):
    """Coefficients c_k of u = s^(l+1) sum c_k s^k for the local model
    qtilde ~ q1/s + q0, with q1, q0 read off s*qtilde(s) at s = delta, delta/2."""
    lv = pot.strength
    h1 = delta * float(pot.qtilde(pot.a + delta))
    h2 = 0.5 * delta * float(pot.qtilde(pot.a + 0.5 * delta))
    q0 = 2.0 * (h1 - h2) / delta
    q1 = 2.0 * h2 - h1
    c = np.zeros((FROBENIUS_TERMS, zvec.size), dtype=complex)
    c[0] = 1.0 / double_factorial_general(lv)
    for k in range(1, FROBENIUS_TERMS):
        acc = q1 * c[k - 1]
        if k >= 2:
            acc = acc + (q0 - zvec) * c[k - 2]
        c[k] = acc / (k * (k + 2.0 * lv + 1.0))
    return c


def _frobenius_eval(coeffs: np.ndarray, l: float, s):
    s = np.asarray(s, dtype=float)
    k = np.arange(coeffs.shape[0])
    pw = s[..., None] ** k  # (..., K)
    u = np.einsum("kz,...k->z...", coeffs, pw) * s ** (l + 1.0)
    du = np.einsum("kz,...k->z...", coeffs * (k + l + 1.0)[:, None], pw) * s ** l
    return u, du


def regular_solution_phi(pot: Potential, z, x, tol: float = 1e-10) -> SolutionSample:
    """Solution in the domain of H near a, normalized by
    phi ~ (x-a)^(l+1) / (2l+1)!! as x -> a.

    Frobenius series up to (x-a)^(l+1+13) at a + delta, then the integrator.
    Points closer to a than delta are read off the series directly.
    """
    if pot.l is not None and pot.l < -0.5:
        raise PreconditionError("unsupported singularity strength")
    zarr = np.asarray(z, dtype=complex)
    zvec = zarr.ravel()
    xarr = np.asarray(x, dtype=float)
    xv = np.atleast_1d(xarr).ravel()
    if np.any(xv <= pot.a) or np.any(xv > pot.b):
        raise PreconditionError("x must lie in (a, b]")
    lv = pot.strength
    delta = frobenius_offset(lv, tol, float(np.max(np.abs(zvec))) if zvec.size else 0.0)
    coeffs = _frobenius_coeffs(pot, zvec, delta)
    u = np.empty((zvec.size, xv.size), dtype=complex)
    du = np.empty_like(u)
    near = xv - pot.a <= delta
    if near.any():
        un, dun = _frobenius_eval(coeffs, lv, xv[near] - pot.a)
        u[:, near], du[:, near] = un, dun
    far = ~near
    if far.any():
        u0, du0 = _frobenius_eval(coeffs, lv, np.array(delta))
        order = np.argsort(xv[far])
        uu, dd = _solve(pot, zvec, pot.a + delta, u0.ravel(), du0.ravel(), xv[far][order], tol)
        idx = np.flatnonzero(far)[order]
        u[:, idx], du[:, idx] = uu, dd
    return SolutionSample(zarr, xarr, _shape_out(zarr, xarr, u), _shape_out(zarr, xarr, du))


def second_solution_theta_numeric(pot: Potential, z, c: float, x, tol: float = 1e-10) -> SolutionSample:
    """Second solution from the ansatz theta(c) = beta/(alpha^2+beta^2),
    theta'(c) = -alpha/(alpha^2+beta^2) with alpha = phi(z,c),
    beta = phi'(z,c).  W(theta, phi) = 1 by construction.

    Only trustworthy near the real axis, where alpha^2 + beta^2 stays away
    from zero.
    """
    zarr = np.asarray(z, dtype=complex)
    ph = regular_solution_phi(pot, zarr, c, tol)
    alpha, beta = np.asarray(ph.u), np.asarray(ph.du)
    den = alpha * alpha + beta * beta
    if np.any(np.abs(den) < NEAR_POLE_THRESHOLD * (np.abs(alpha) ** 2 + np.abs(beta) ** 2)):
        raise NearPoleError("alpha^2 + beta^2 nearly vanishes; shrink |Im z| for the numeric theta")
    t0, dt0 = beta / den, -alpha / den
    xarr = np.asarray(x, dtype=float)
    xv = np.atleast_1d(xarr).ravel()
    zvec = zarr.ravel()
    u = np.empty((zvec.size, xv.size), dtype=complex)
    du = np.empty_like(u)
    for side in (xv < c, xv >= c):
        if side.any():
            order = np.argsort(np.abs(xv[side] - c))
            uu, dd = _solve(pot, zvec, c, np.ravel(t0), np.ravel(dt0), xv[side][order], tol)
            idx = np.flatnonzero(side)[order]
            u[:, idx], du[:, idx] = uu, dd
    return SolutionSample(zarr, xarr, _shape_out(zarr, xarr, u), _shape_out(zarr, xarr, du))


# ---------------------------------------------------------------------------
# Pruefer phase
# ---------------------------------------------------------------------------

def pruefer_angle(pot: Potential, lam, c: float, tol: float = 1e-12) -> np.ndarray:
    """Continuous modified Pruefer angle at c of the regular solution, for
    real spectral parameters ``lam`` (array).  u = rho sin(t), u' = k rho cos(t)
    with k = sqrt(max(lam, 1)); t increases through every multiple of pi."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(~np.isfinite(lam)):
        raise PreconditionError("spectral parameter must be finite")
    k = np.sqrt(np.maximum(lam, 1.0))
    lv = pot.strength
    delta = frobenius_offset(lv, 1e-10, float(np.max(np.abs(lam))))
    if c <= pot.a + delta:
        raise PreconditionError("c too close to the left endpoint")
    coeffs = _frobenius_coeffs(pot, lam.astype(complex), delta)
    u0, du0 = _frobenius_eval(coeffs, lv, np.array(delta))
    t0 = np.arctan2(k * u0.real.ravel(), du0.real.ravel())

    def rhs(x, t):
        s2 = np.sin(t) ** 2
        return k * (1.0 - s2) - (pot.q(x) - lam) / k * s2

    sol = solve_ivp(rhs, (pot.a + delta, c), t0, method="DOP853", rtol=tol, atol=tol)
    if sol.status < 0:
        raise StepUnderflowError(f"phase tracking failed: {sol.message}", float(sol.t[-1]))
    return sol.y[:, -1]


def pruefer_count(pot: Potential, z: float, c: float, bc: str = "Dirichlet") -> int:
    """Number of Dirichlet (resp. Neumann) eigenvalues of (a, c) below z.

    For Dirichlet this equals the number of zeros of phi(z, .) in (a, c)."""
    if np.iscomplexobj(z) and np.imag(z) != 0:
        raise PreconditionError("pruefer_count needs real z")
    t = float(pruefer_angle(pot, [float(np.real(z))], c)[0])
    if bc.lower().startswith("d"):
        return int(math.floor(t / math.pi))
    if bc.lower().startswith("n"):
        return int(math.floor(t / math.pi + 0.5))
    raise ConfigError(f"unknown boundary condition {bc!r}")


# ---------------------------------------------------------------------------
# Wronskian and Kneser check
# ---------------------------------------------------------------------------

def lagrange_bracket(u: SolutionSample, v: SolutionSample):
    """W_x(u, v) = u v' - u' v at the common point x."""
    if not np.array_equal(np.asarray(u.x), np.asarray(v.x)):
        raise PreconditionError("lagrange_bracket: samples taken at different x")
    return np.asarray(u.u) * np.asarray(v.du) - np.asarray(u.du) * np.asarray(v.u)


def _decade_integrals(f, lo: float, hi: float, decades: int) -> np.ndarray:
    out = []
    for k in range(decades):
        b = hi * 10.0 ** (-k)
        a = b / 10.0
        s = np.geomspace(a, b, 201)
        out.append(np.trapezoid(f(s), s))
    return np.array(out)


def check_kneser(pot: Potential, c: float, decades: int = 8) -> dict:
    """Fit the largest C with min(q, 0) >= -C/(x-a)^2 - Q(x), Q >= 0, and
    test integrability of (x-a) Q(x) near a.

    Satisfied iff C < 1/4, or C = 1/4 for the logarithmic (l = -1/2) case,
    and the remainder is integrable.
    """
    if not math.isfinite(pot.a):
        raise PreconditionError("check_kneser needs a finite left endpoint")
    width = c - pot.a
    s_small = np.geomspace(width * 10.0 ** (-decades), width * 10.0 ** (1 - decades), 200)
    neg = -np.minimum(pot.q(pot.a + s_small), 0.0)
    C = float(np.max(neg * s_small ** 2))
    if abs(C - round(C * 1e9) / 1e9) < 1e-12:
        C = round(C * 1e9) / 1e9

    def weighted_remainder(s):
        qn = -np.minimum(pot.q(pot.a + s), 0.0)
        return s * np.maximum(qn - C / s ** 2, 0.0)

    ints = _decade_integrals(weighted_remainder, 0.0, width, decades)
    total = ints.sum()
    integrable = bool(total == 0 or ints[-1] <= 1e-12 * max(total, 1.0) or ints[-1] <= 0.5 * ints[-2])
    log_case = pot.l is not None and abs(pot.l + 0.5) < 1e-12
    ok_c = C < 0.25 - 1e-9 or (log_case and abs(C - 0.25) <= 1e-6)
    return {"satisfied": bool(ok_c and integrable), "C": C, "remainder_integrable": integrable}
