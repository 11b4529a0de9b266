"""Command-line front end: ``singweyl <command> [options]``.

Options may also come from a flat ``key = value`` file given by
``--config``; command-line flags override it.  Exit codes: 0 success,
1 a golden criterion failed, 2 configuration error, 3 numerical failure,
4 violated precondition.  SINGWEYL_THREADS caps the BLAS/OpenMP threads.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field

_threads = os.environ.get("SINGWEYL_THREADS")
if _threads:
    # effective only when numpy is first imported below
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import numpy as np  # noqa: E402
from scipy.integrate import quad, simpson  # noqa: E402

from . import bm, eigen, golden, models, nevanlinna, spectral, weyl  # noqa: E402
from .errors import ConfigError, NumericalError, PreconditionError, SingWeylError  # noqa: E402
from .io import write_csv, write_json  # noqa: E402
from .schrodinger import compile_expression, potential_from_csv, potential_from_expression  # noqa: E402

HERGLOTZ_GRID = "sq:0,8,8001"
NEVANLINNA_GRID = "sq:0.025,100,4000"
TRANSFORM_GRID = "sq:0.01,200,8000"
TRANSFORM_XGRID = "lin:0.0025,3,600"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Settings shared by every command; command-specific flags go in ``options``."""

    command: str
    model: str | None = None
    potential: str | None = None
    l: float = 0.0
    c: float = 1.0
    zgrid: str | None = None
    lgrid: str | None = None
    xgrid: str | None = None
    tol: float = 1e-9
    eps_schedule: tuple = spectral.DEFAULT_EPS
    out: str | None = None
    seed: int = 1
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.tol > 0 or any(not e > 0 for e in self.eps_schedule):
            raise ConfigError("tolerances and the eps schedule must be positive")
        if self.model and self.potential:
            raise ConfigError("give either --model or --potential, not both")
        for name in ("zgrid", "lgrid", "xgrid"):
            text = getattr(self, name)
            if text is not None:
                parse_grid(text, complex_ok=name == "zgrid")


def load_config_file(path: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    out = {}
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _number(text: str, complex_ok: bool = False):
    text = text.strip()
    try:
        return float(compile_expression(text)(0.0))
    except ConfigError:
        if not complex_ok:
            raise
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def parse_grid(text: str, complex_ok: bool = False) -> np.ndarray:
    """Grid from ``kind:args`` pieces joined by ``;``.

    lin:a,b,n   n equispaced points; log:a,b,n geometric; sq:a,b,n squares of lin:a,b,n;
    ray:angle,rmin,rmax,n   geometric radii on arg z = angle (complex grids only);
    list:v1,v2,...   explicit values.  Numbers may be expressions such as pi/2.
    """
    pieces = []
    for part in text.split(";"):
        kind, _, args = part.strip().partition(":")
        vals = [a for a in args.split(",") if a.strip()]
        if kind == "list":
            pieces.append(np.array([_number(v, complex_ok) for v in vals]))
            continue
        if kind not in ("lin", "log", "sq", "ray") or len(vals) != (4 if kind == "ray" else 3):
            raise ConfigError(f"malformed grid {part!r}")
        nums = [_number(v) for v in vals]
        n = int(nums[-1])
        if n < 1 or n != nums[-1]:
            raise ConfigError(f"grid size must be a positive integer in {part!r}")
        if kind == "ray":
            if not complex_ok:
                raise ConfigError("ray grids are only allowed for spectral points z")
            if nums[1] <= 0 or nums[2] <= 0:
                raise ConfigError("ray radii must be positive")
            pieces.append(np.geomspace(nums[1], nums[2], n) * np.exp(1j * nums[0]))
        elif kind == "log":
            if nums[0] <= 0 or nums[1] <= 0:
                raise ConfigError("log grid bounds must be positive")
            pieces.append(np.geomspace(nums[0], nums[1], n))
        else:
            g = np.linspace(nums[0], nums[1], n)
            pieces.append(g ** 2 if kind == "sq" else g)
    out = np.concatenate(pieces)
    if out.size == 0:
        raise ConfigError(f"empty grid {text!r}")
    if not complex_ok:
        if np.iscomplexobj(out):
            raise ConfigError(f"grid {text!r} must be real")
        out = out.astype(float)
    return out


def _pair(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a,b, got {text!r}")
    try:
        return tuple(_number(p) for p in parts)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _floats(text: str) -> tuple:
    try:
        return tuple(_number(p) for p in text.split(","))
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_gauge(text: str) -> tuple:
    """``g=EXPR[,f=EXPR]`` in the variable z (alias lambda, lam) -> (g, f or None)."""
    parts = {}
    for item in text.split(","):
        k, eq, v = item.partition("=")
        if not eq or k.strip() not in ("g", "f") or not v.strip():
            raise ConfigError(f"malformed gauge {text!r}; expected g=EXPR[,f=EXPR]")
        expr = re.sub(r"\blambda\b", "lam", v.strip())
        parts[k.strip()] = compile_expression(expr, variables=("z", "lam"), dtype=complex)
    if "g" not in parts:
        raise ConfigError("the gauge needs g=EXPR")
    return parts["g"], parts.get("f")


# ---------------------------------------------------------------------------
# model plumbing
# ---------------------------------------------------------------------------

def _bm_system(pot):
    return models.perturbed_system(pot, x_ref=1e-2, tol=1e-13)


def resolve_model(model: str | None, potential: str | None, l: float, c: float) -> models.Model:
    if model and potential:
        raise ConfigError("give either a model or a potential, not both")
    if model:
        return models.load_model(model, c)
    if potential:
        if potential.startswith("csv:"):
            pot = potential_from_csv(potential[4:], l=l)
        else:
            pot = potential_from_expression(potential, l=l)
        return models.Model(pot.name, pot, _bm_system(pot))
    raise ConfigError("give --model or --potential")


def m_evaluator(model: models.Model, c: float, tol: float, route: str = "auto"):
    """M by the ODE route (``ode``), the closed form (``closed``), or the
    closed form when one exists (``auto``)."""
    if route == "closed" and model.M is None:
        raise ConfigError(f"model {model.name} has no closed-form M")
    if route in ("closed", "auto") and model.M is not None:
        return model.M
    if "lc" in model.extra:
        return lambda z: models.lc_singular_M(model.extra["lc"], z, tol)
    return lambda z: weyl.singular_M(model.system, model.potential, c, z, tol)


def _measure(cfg: RunConfig, M, default_grid: str, atoms: bool = True):
    grid = parse_grid(cfg.lgrid or default_grid)
    return spectral.stieltjes_invert(M, grid=grid, eps_schedule=cfg.eps_schedule, atoms=atoms)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_mfun(cfg: RunConfig) -> int:
    model = resolve_model(cfg.model, cfg.potential, cfg.l, cfg.c)
    if cfg.zgrid is None:
        raise ConfigError("mfun needs --zgrid")
    z = parse_grid(cfg.zgrid, complex_ok=True).astype(complex)
    M = m_evaluator(model, cfg.c, cfg.tol, cfg.options["route"])
    vals = np.asarray(M(z), dtype=complex)
    if cfg.options.get("gauge"):
        g, f = parse_gauge(cfg.options["gauge"])
        if f is not None:
            vals = np.exp(-2 * g(z)) * vals + np.exp(-g(z)) * f(z)
        else:
            vals = _herglotz_gauge(cfg, M, g)(z)
    write_csv(cfg.out, ["re_z", "im_z", "re_M", "im_M"],
              ((a.real, a.imag, b.real, b.imag) for a, b in zip(z, vals)))
    return 0


def _herglotz_gauge(cfg: RunConfig, M, g):
    """M~ = int e^(-2 g) d rho / (lam - z) for a linear g(lam) = s lam."""
    g0, g1, g2 = (complex(g(np.array(v, complex))) for v in (0.0, 1.0, 2.0))
    s = g1.real
    if abs(g0) > 1e-12 or abs(g1.imag) > 1e-12 or abs(g2 - 2 * g1) > 1e-9 * max(1.0, abs(g1)) or s <= 0:
        raise ConfigError("without f the gauge must be g = s*lambda with s > 0; give f=EXPR otherwise")
    measure = _measure(cfg, M, HERGLOTZ_GRID)
    h = nevanlinna.herglotzify(measure, M, rate=2 * s)
    if not h["im_positive"]:
        raise NumericalError(f"rescaled function is not Herglotz on the check grid (min Im {h['min_im']:.3g})")
    return h["Mtilde"]


def cmd_eig(cfg: RunConfig) -> int:
    model = resolve_model(cfg.model, cfg.potential, cfg.l, cfg.c)
    count, bc = cfg.options["count"], cfg.options["bc"]
    if count < 1:
        raise ConfigError("--count must be positive")
    if bc == "dirichlet":
        seq = eigen.dirichlet_eigs(model.potential, cfg.c, count)
        rows = ((j + 1, v) for j, v in enumerate(seq.zeros))
        header = ["j", "mu"]
    else:
        seq = eigen.neumann_eigs(model.potential, cfg.c, count)
        rows = ((j, v) for j, v in enumerate(seq.zeros))
        header = ["j", "nu"]
    write_csv(cfg.out, header, rows)
    return 0


def cmd_measure(cfg: RunConfig) -> int:
    model = resolve_model(cfg.model, cfg.potential, cfg.l, cfg.c)
    M = m_evaluator(model, cfg.c, cfg.tol, cfg.options["route"])
    o = cfg.options
    if cfg.lgrid is not None:
        grid = parse_grid(cfg.lgrid)
    elif o.get("window") is not None:
        grid = np.linspace(o["window"][0], o["window"][1], o["npoints"])
    else:
        raise ConfigError("measure needs --window or --lgrid")
    m = spectral.stieltjes_invert(M, grid=grid, eps_schedule=cfg.eps_schedule, atoms=not o["no_atoms"])
    write_csv(cfg.out, ["lambda", "density", "flag"],
              zip(m.grid, m.density, m.flags.astype(int)))
    atoms_out = o.get("atoms_out")
    if atoms_out is None and cfg.out not in (None, "-"):
        atoms_out = os.path.splitext(cfg.out)[0] + "_atoms.json"
    if atoms_out is not None:
        write_json(atoms_out, [{"lambda": l0, "mass": mass} for l0, mass in m.atoms])
    return 0


def cmd_transform(cfg: RunConfig) -> int:
    model = resolve_model(cfg.model, cfg.potential, cfg.l, cfg.c)
    M = m_evaluator(model, cfg.c, cfg.tol, cfg.options["route"])
    o = cfg.options
    a, b = o["support"]
    if not 0 <= a < b or (math.isfinite(model.potential.b) and b > model.potential.b):
        raise PreconditionError("the support must be a bounded interval inside the half line")
    f = compile_expression(o["f"])
    m = _measure(cfg, M, TRANSFORM_GRID)
    fh = spectral.transform_forward(model.system, model.potential, f, m, support=(a, b))
    par = spectral.parseval_norm(fh, m, tail_power=o["tail_power"])
    fnorm = quad(lambda t: float(f(t)) ** 2, a, b, limit=200)[0]
    x = parse_grid(cfg.xgrid or TRANSFORM_XGRID)
    if np.any(x <= 0):
        raise ConfigError("the x grid must be positive")
    back = np.real(spectral.transform_inverse(model.system, m, fh, x))
    target = np.where((x >= a) & (x <= b), f(x), 0.0)
    defect = math.sqrt(float(simpson((back - target) ** 2, x=x))) if x.size > 1 else float(abs(back - target)[0])
    report = {"model": model.name, "f": o["f"], "support": [a, b], "f_norm_sq": fnorm,
              "norm_sq": par["norm_sq"], "raw_norm_sq": par["raw"], "tail": par["tail"],
              "cutoff": par["cutoff"], "parseval_defect": abs(par["norm_sq"] - fnorm),
              "round_trip_defect": defect, "x_range": [float(x[0]), float(x[-1])],
              "grid_points": int(m.grid.size)}
    write_json(cfg.out, report)
    return 0


def cmd_nevanlinna(cfg: RunConfig) -> int:
    model = resolve_model(cfg.model, cfg.potential, cfg.l, cfg.c)
    M = m_evaluator(model, cfg.c, cfg.tol, cfg.options["route"])
    m = _measure(cfg, M, NEVANLINNA_GRID, atoms=not cfg.options["no_atoms"])
    rep = nevanlinna.nevanlinna_report(M, m, points=nevanlinna.default_points(cfg.options["points"], cfg.seed),
                                       trials=cfg.options["trials"])
    write_json(cfg.out, asdict(rep))
    return 0


def cmd_bm(cfg: RunConfig) -> int:
    o = cfg.options
    m0 = resolve_model(cfg.model, cfg.potential, cfg.l, cfg.c)
    m1 = resolve_model(o.get("model1"), o.get("potential1"), cfg.l, cfg.c)
    systems = [m.system if m.M is not None else _bm_system(m.potential) for m in (m0, m1)]
    rays = o["rays"] if o.get("rays") else bm.DEFAULT_RAYS
    rep = bm.compare(m0.potential, m1.potential, systems[0], systems[1], c=cfg.c, eps=o["bm_eps"],
                     rays=rays, f_fit_degree=o["f_degree"], check_hypothesis=not o["no_hypothesis"])
    write_json(cfg.out, asdict(rep))
    return 0


def cmd_golden(cfg: RunConfig) -> int:
    only = cfg.options.get("only")
    which = None
    if only:
        try:
            which = [int(v) for v in only.split(",")]
        except ValueError:
            raise ConfigError(f"--only expects criterion numbers, got {only!r}") from None
        if any(n not in golden.CRITERIA for n in which):
            raise ConfigError(f"criteria are numbered 1..{len(golden.CRITERIA)}")
    rows = golden.run(which, stream=sys.stdout)
    failed = [r["criterion"] for r in rows if not r["passed"]]
    print(f"{len(rows) - len(failed)}/{len(rows)} criteria pass"
          + (f"; failing: {', '.join(map(str, failed))}" if failed else ""))
    if cfg.out:
        write_json(cfg.out, {"criteria": [{k: r[k] for k in ("criterion", "passed", "detail", "seconds")}
                                          for r in rows],
                             "all_passed": not failed})
    return 1 if failed else 0


COMMANDS = {"mfun": cmd_mfun, "eig": cmd_eig, "measure": cmd_measure, "transform": cmd_transform,
            "nevanlinna": cmd_nevanlinna, "bm": cmd_bm, "golden": cmd_golden}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="flat key = value file; flags override it")
    g.add_argument("--model", help="preset: bessel:l=L, bessel+coulomb:l=L,q1=Q, soliton:A=A,v1=V, limitcircle:l=L")
    g.add_argument("--potential", help="expression in x for the regular part (ln, exp, step allowed) or csv:PATH")
    g.add_argument("--l", type=float, default=0.0, help="singularity strength for --potential (default 0)")
    g.add_argument("--c", type=float, default=1.0, help="interior reference point (default 1)")
    g.add_argument("--tol", type=float, default=1e-9, help="ODE tolerance (default 1e-9)")
    g.add_argument("--eps-schedule", type=_floats, default=spectral.DEFAULT_EPS,
                   help="comma-separated decreasing eps values for Stieltjes inversion")
    g.add_argument("--lgrid", help="spectral grid, e.g. sq:0,100,4001 or lin:0,50,501")
    g.add_argument("--seed", type=int, default=1, help="seed for sampled point sets (default 1)")
    g.add_argument("--out", help="output path (default: standard output)")

    route = argparse.ArgumentParser(add_help=False)
    route.add_argument("--route", choices=("auto", "ode", "closed"), default="auto",
                       help="M from the closed form when available (auto), the ODE route, or the closed form")

    p = argparse.ArgumentParser(prog="singweyl", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    subs = {}

    s = sub.add_parser("mfun", parents=[common], help="singular Weyl function M on a z grid (CSV)")
    s.add_argument("--zgrid", help="e.g. ray:pi/2,1,1e4,40 or list:-4,1+2j; join pieces with ;")
    s.add_argument("--route", choices=("auto", "ode", "closed"), default="ode",
                   help="ODE route (default), closed form, or closed form when available")
    s.add_argument("--gauge", help="g=EXPR[,f=EXPR] in z (alias lambda); without f, a linear g gives "
                                   "the Herglotz function of e^(-2g) d rho")
    subs["mfun"] = s

    s = sub.add_parser("eig", parents=[common], help="eigenvalues of the problem truncated at c (CSV)")
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    subs["eig"] = s

    s = sub.add_parser("measure", parents=[common, route], help="spectral density and atoms (CSV + JSON)")
    s.add_argument("--window", type=_pair, help="lambda window a,b (write --window=-3,5 when a < 0)")
    s.add_argument("--npoints", type=int, default=501)
    s.add_argument("--no-atoms", action="store_true", help="skip atom detection")
    s.add_argument("--atoms-out", help="atoms JSON path (default: next to --out)")
    subs["measure"] = s

    s = sub.add_parser("transform", parents=[common, route], help="Parseval and round-trip report (JSON)")
    s.add_argument("--f", default="1", help="function of x on the support (default 1)")
    s.add_argument("--support", type=_pair, default=(0.0, 1.0))
    s.add_argument("--xgrid", help=f"x grid for the round trip (default {TRANSFORM_XGRID})")
    s.add_argument("--tail-power", type=float, default=0.5)
    subs["transform"] = s

    s = sub.add_parser("nevanlinna", parents=[common, route], help="generalized Nevanlinna report (JSON)")
    s.add_argument("--points", type=int, default=30, help="kernel points per trial")
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--no-atoms", action="store_true")
    subs["nevanlinna"] = s

    s = sub.add_parser("bm", parents=[common], help="Borg-Marchenko decay comparison (JSON)")
    s.add_argument("--model1", help="second model preset")
    s.add_argument("--potential1", help="second potential expression (same --l)")
    s.add_argument("--bm-eps", type=float, default=0.05)
    s.add_argument("--rays", type=_floats, help="ray angles, e.g. pi/3,pi/2")
    s.add_argument("--f-degree", type=int, default=3)
    s.add_argument("--no-hypothesis", action="store_true", help="skip the eigenvalue hypothesis check")
    subs["bm"] = s

    s = sub.add_parser("golden", parents=[common], help="run the acceptance criteria; exit 1 if any fails")
    s.add_argument("--only", help="comma-separated criterion numbers")
    subs["golden"] = s
    return p, subs


_COMMON = {"config", "model", "potential", "l", "c", "tol", "eps_schedule", "lgrid", "seed", "out",
           "zgrid", "xgrid", "command"}
_TRUE, _FALSE = {"1", "true", "yes", "on"}, {"0", "false", "no", "off"}


def parse_config(argv=None) -> RunConfig:
    parser, subs = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        values = load_config_file(ns.config)
        sp = subs[ns.command]
        actions = {a.dest: a for a in sp._actions}
        for k, v in values.items():
            if k not in actions or k in ("config", "help"):
                raise ConfigError(f"unknown config key {k!r} for {ns.command}")
            if actions[k].nargs == 0:
                if v.lower() not in _TRUE | _FALSE:
                    raise ConfigError(f"config key {k!r} expects true or false")
                values[k] = v.lower() in _TRUE
        sp.set_defaults(**values)
        ns = parser.parse_args(argv)
    d = vars(ns)
    cfg = RunConfig(command=ns.command, model=ns.model, potential=ns.potential, l=ns.l, c=ns.c,
                    zgrid=d.get("zgrid"), lgrid=ns.lgrid, xgrid=d.get("xgrid"), tol=ns.tol,
                    eps_schedule=tuple(ns.eps_schedule), out=ns.out, seed=ns.seed,
                    options={k: v for k, v in d.items() if k not in _COMMON})
    cfg.validate()
    return cfg


def _module_tag(exc: BaseException) -> str:
    tag = "cli"
    tb = exc.__traceback__
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("singweyl."):
            tag = mod.split(".", 1)[1]
        tb = tb.tb_next
    return tag


def main(argv=None) -> int:
    command = ""
    try:
        cfg = parse_config(argv)
        command = " " + cfg.command
        return COMMANDS[cfg.command](cfg)
    except SingWeylError as exc:
        print(f"singweyl{command}: [{_module_tag(exc)}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"singweyl{command}: [{_module_tag(exc)}] numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())
