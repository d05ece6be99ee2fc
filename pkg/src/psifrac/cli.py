"""Command-line front end.

Every subcommand maps onto one library call.  Settings come from, in
increasing priority, the built-in defaults, a ``psifrac.conf`` file, the
``PSIFRAC_ATOL`` environment variable and command-line flags.  Tables are
written as CSV with 17 significant digits so that identical settings give
byte-identical files.

Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParameter, NumericalError, ToleranceNotMet, ValidationError
from .frac_operators import (
    FracOrder,
    psi_caputo_derivative,
    psi_hilfer_derivative,
    psi_integral,
    psi_rl_derivative,
)
from .laplace import ContourSpec, ExponentialOrder, glt_forward, glt_inverse, psi_convolve, reference_image
from .psi_kernel import PsiFunction, RealFunction, builtin_psi, conjugate_in
from .quadrature import QuadratureSpec
from .solvers import (
    FdeProblem,
    SolutionTable,
    check_regularity_bound,
    diffusion_solve,
    solve,
    volterra_oracle,
)
from .special_functions import ml2, ml3, wright

__all__ = ["RunConfig", "COMMANDS", "catalog_function", "catalog_profile", "run", "main"]

COMMANDS = ("ml", "wright", "fracop", "transform", "invtransform", "convolve",
            "solve", "oracle", "compare", "diffuse", "regularity")
SPACINGS = ("linear", "log", "psi-uniform")
OPERATORS = ("integral", "rl", "caputo", "hilfer")
PROBLEM_ALIASES = {"rl": "rl-ivp", "rl-ivp": "rl-ivp", "caputo": "caputo-ivp", "caputo-ivp": "caputo-ivp",
                   "hilfer2": "hilfer2", "hilfer3": "hilfer3"}
CONFIG_NAME = "psifrac.conf"
ENV_ATOL = "PSIFRAC_ATOL"


# -- configuration ------------------------------------------------------------

def _floats(kind="floats"):
    return {"kind": kind}


@dataclass
class RunConfig:
    """Flat run settings; the dotted key of a field replaces its first ``_`` by ``.``.

    ``psi_kind`` is written ``psi.kind``, ``grid_t_max`` is ``grid.t_max`` and
    so on.  :meth:`to_text` and :meth:`from_text` convert to and from the
    ``key = value`` file format.
    """

    command: str = ""
    psi_kind: str = "identity"
    psi_parameter: Optional[float] = field(default=None, metadata=_floats("float"))
    problem_kind: str = "caputo"
    problem_mu: Tuple[float, ...] = field(default=(0.5,), metadata=_floats())
    problem_nu: Tuple[float, ...] = field(default=(), metadata=_floats())
    problem_gamma: float = field(default=1.0, metadata=_floats("float"))
    problem_lambda: float = field(default=0.0, metadata=_floats("float"))
    problem_c: float = field(default=1.0, metadata=_floats("float"))
    problem_coefficients: Tuple[float, ...] = field(default=(), metadata=_floats())
    problem_initial: Tuple[float, ...] = field(default=(), metadata=_floats())
    problem_forcing: str = "zero"
    problem_variant: str = "prabhakar"
    operator_name: str = "integral"
    operator_function: str = "one"
    operator_second: str = "one"
    operator_a: float = field(default=0.0, metadata=_floats("float"))
    transform_s: Tuple[float, ...] = field(default=(1.0,), metadata=_floats())
    transform_image: str = "power:0.5"
    special_z: Tuple[float, ...] = field(default=(0.0,), metadata=_floats())
    diffusion_kappa: float = field(default=1.0, metadata=_floats("float"))
    diffusion_profile: str = "gauss:1"
    diffusion_window: float = field(default=10.0, metadata=_floats("float"))
    diffusion_time: float = field(default=1.0, metadata=_floats("float"))
    diffusion_x_max: float = field(default=3.0, metadata=_floats("float"))
    regularity_c: float = field(default=0.0, metadata=_floats("float"))
    grid_t_min: Optional[float] = field(default=None, metadata=_floats("float"))
    grid_t_max: float = field(default=1.0, metadata=_floats("float"))
    grid_points: int = field(default=11, metadata=_floats("int"))
    grid_spacing: str = "linear"
    oracle_steps: int = field(default=64, metadata=_floats("int"))
    compare_max_deviation: float = field(default=1e-3, metadata=_floats("float"))
    tol_atol: float = field(default=1e-12, metadata=_floats("float"))
    tol_rtol: float = field(default=1e-10, metadata=_floats("float"))
    output_csv: Optional[str] = None
    output_plot: Optional[str] = None

    # -- key mapping ------------------------------------------------------
    @staticmethod
    def key_of(name: str) -> str:
        return name.replace("_", ".", 1)

    @classmethod
    def field_of(cls, key: str):
        for f in dataclasses.fields(cls):
            if cls.key_of(f.name) == key:
                return f
        raise InvalidParameter(f"unknown configuration key {key!r}")

    @staticmethod
    def _parse_value(f, text: str):
        kind = f.metadata.get("kind")
        text = text.strip()
        try:
            if kind == "floats":
                return tuple(float(v) for v in text.split(",") if v.strip())
            if kind == "float":
                return None if text == "" else float(text)
            if kind == "int":
                return int(text)
        except ValueError as exc:
            raise InvalidParameter(f"{RunConfig.key_of(f.name)}: cannot parse {text!r}") from exc
        return text or None if f.default is None else text

    @staticmethod
    def _format_value(f, value) -> str:
        kind = f.metadata.get("kind")
        if kind == "floats":
            return ",".join(repr(float(v)) for v in value)
        if kind == "float":
            return repr(float(value))
        return str(value)

    # -- text format ------------------------------------------------------
    @classmethod
    def from_text(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        """Apply ``key = value`` lines on top of ``base`` (defaults when omitted)."""
        updates = {}
        for number, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameter(f"config line {number}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            f = cls.field_of(key)
            updates[f.name] = cls._parse_value(f, value)
        return dataclasses.replace(base or cls(), **updates)

    def to_text(self) -> str:
        """Non-default settings, one ``key = value`` line each, in field order."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value == f.default or value is None:
                continue
            lines.append(f"{self.key_of(f.name)} = {self._format_value(f, value)}")
        return "".join(line + "\n" for line in lines)

    def validate(self):
        if self.command and self.command not in COMMANDS:
            raise InvalidParameter(f"unknown command {self.command!r}")
        if self.grid_spacing not in SPACINGS:
            raise InvalidParameter(f"grid.spacing must be one of {SPACINGS}")
        if self.grid_points < 1:
            raise InvalidParameter("grid.points must be positive")
        if not (self.tol_atol > 0 and self.tol_rtol > 0):
            raise InvalidParameter("tolerances must be positive")
        if self.operator_name not in OPERATORS:
            raise InvalidParameter(f"operator.name must be one of {OPERATORS}")
        if self.problem_kind not in PROBLEM_ALIASES:
            raise InvalidParameter(f"problem.kind must be one of {tuple(PROBLEM_ALIASES)}")
        values = [getattr(self, f.name) for f in dataclasses.fields(self) if f.metadata.get("kind")]
        flat = [v for value in values if value is not None for v in np.atleast_1d(value)]
        if not all(np.isfinite(flat)):
            raise InvalidParameter("numeric settings must be finite")
        return self

    @property
    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(atol=self.tol_atol, rtol=self.tol_rtol)


# -- catalogues ---------------------------------------------------------------

def _selector(text: str, names: Sequence[str]):
    parts = text.split(":")
    name, args = parts[0], parts[1:]
    if name not in names:
        raise InvalidParameter(f"unknown selector {text!r}; expected one of {', '.join(names)}")
    try:
        return name, [float(a) for a in args]
    except ValueError as exc:
        raise InvalidParameter(f"bad arguments in selector {text!r}") from exc


def _arity(text, args, n):
    if len(args) != n:
        raise InvalidParameter(f"selector {text!r} takes {n} argument(s)")


FUNCTIONS = ("zero", "one", "power", "exp", "ml")


def catalog_function(text: str, psi: PsiFunction) -> RealFunction:
    """Forcing or test function ``t -> g(Psi(t))`` named by a selector.

    ``zero``, ``one``, ``power:p`` (``Psi^p``), ``exp:a`` (``exp(a Psi)``) and
    ``ml:mu:lam`` (``E_mu(lam Psi^mu)``).  Two derivatives are attached.
    """
    name, args = _selector(text, FUNCTIONS)
    if name in ("zero", "one"):
        _arity(text, args, 0)
        level = 0.0 if name == "zero" else 1.0
        zero = lambda x: np.zeros_like(x)  # noqa: E731
        g = RealFunction(lambda x: np.full_like(x, level), (zero, zero), name)
    elif name == "power":
        _arity(text, args, 1)
        p = args[0]
        if p < 0:
            raise InvalidParameter("power:p needs p >= 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            g = RealFunction(lambda x: x ** p, (lambda x: p * x ** (p - 1), lambda x: p * (p - 1) * x ** (p - 2)),
                             text, (0.0, math.inf))
    elif name == "exp":
        _arity(text, args, 1)
        a = args[0]
        g = RealFunction(lambda x: np.exp(a * x), (lambda x: a * np.exp(a * x), lambda x: a * a * np.exp(a * x)), text)
    else:
        _arity(text, args, 2)
        mu, lam = args
        if not mu > 0:
            raise InvalidParameter("ml:mu:lam needs mu > 0")
        g = RealFunction(lambda x: ml2(mu, 1.0, lam * x ** mu),
                         (lambda x: lam * x ** (mu - 1) * ml2(mu, mu, lam * x ** mu),
                          lambda x: lam * x ** (mu - 2) * ml2(mu, mu - 1, lam * x ** mu)),
                         text, (0.0, math.inf))
    return conjugate_in(psi, g)


PROFILES = ("zero", "box", "gauss", "heat")


def catalog_profile(text: str, kappa: float) -> RealFunction:
    """Initial profile: ``zero``, ``box:w``, ``gauss:s`` or ``heat:t0`` (heat kernel at time ``t0``)."""
    name, args = _selector(text, PROFILES)
    if name == "zero":
        _arity(text, args, 0)
        return RealFunction(lambda x: np.zeros_like(x), label=text)
    _arity(text, args, 1)
    w = args[0]
    if not w > 0:
        raise InvalidParameter(f"profile {text!r} needs a positive argument")
    if name == "box":
        return RealFunction(lambda x: (np.abs(x) <= w).astype(float), label=text, breakpoints=(-w, w))
    if name == "gauss":
        return RealFunction(lambda x: np.exp(-0.5 * (x / w) ** 2), label=text)
    return RealFunction(lambda x: np.exp(-x * x / (4 * kappa * w)) / math.sqrt(4 * math.pi * kappa * w), label=text)


IMAGES = ("power", "exp", "ml", "ml-kernel")


def catalog_image(text: str):
    name, args = _selector(text, IMAGES)
    if name == "power":
        _arity(text, args, 1)
        return reference_image("power", mu=args[0])
    if name == "exp":
        _arity(text, args, 1)
        return reference_image("exp", a=args[0])
    _arity(text, args, 2)
    return reference_image("ml2" if name == "ml" else "ml-kernel", mu=args[0], lam=args[1])


# -- helpers ------------------------------------------------------------------

def _psi(cfg: RunConfig) -> PsiFunction:
    return builtin_psi(cfg.psi_kind, cfg.psi_parameter)


def _grid(cfg: RunConfig, psi: PsiFunction, singular: bool = False) -> np.ndarray:
    a = psi.domain[0]
    t_min = cfg.grid_t_min
    if t_min is None:
        t_min = float(psi.inverse(psi(a) + 1e-4)) if singular else a
    if not cfg.grid_t_max > t_min:
        raise InvalidParameter("grid.t_max must exceed grid.t_min")
    n = cfg.grid_points
    if n == 1:
        return np.array([cfg.grid_t_max])
    if cfg.grid_spacing == "linear":
        return np.linspace(t_min, cfg.grid_t_max, n)
    if cfg.grid_spacing == "log":
        if not t_min > 0:
            raise InvalidParameter("log spacing needs grid.t_min > 0")
        return np.geomspace(t_min, cfg.grid_t_max, n)
    u = np.linspace(float(psi(t_min)), float(psi(cfg.grid_t_max)), n)
    return np.asarray(psi.inverse(u), dtype=float)


def _problem(cfg: RunConfig, psi: PsiFunction) -> FdeProblem:
    kind = PROBLEM_ALIASES[cfg.problem_kind]
    forcing = None if cfg.problem_forcing == "zero" else catalog_function(cfg.problem_forcing, psi)
    if kind in ("rl-ivp", "caputo-ivp"):
        if len(cfg.problem_mu) != 1:
            raise InvalidParameter(f"{kind} takes a single order")
        make = FdeProblem.rl if kind == "rl-ivp" else FdeProblem.caputo
        return make(psi, cfg.problem_mu[0], cfg.problem_lambda, cfg.problem_c, forcing)
    if len(cfg.problem_nu) != len(cfg.problem_mu):
        raise InvalidParameter("problem.nu must list one type per order")
    return FdeProblem.hilfer(psi, cfg.problem_mu, cfg.problem_nu, cfg.problem_coefficients,
                             cfg.problem_initial, forcing)


def _solve_kwargs(cfg, p):
    kwargs = {"q": cfg.quadrature}
    if p.kind == "hilfer3":
        kwargs["variant"] = cfg.problem_variant
    return kwargs


def _bound(cfg, values):
    return np.maximum(cfg.tol_atol, cfg.tol_rtol * np.abs(values))


def _fmt(v) -> str:
    return "%.17g" % v


def _table_text(header: Sequence[str], columns) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in zip(*columns):
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _plot(path: str, x, y, xlabel: str, title: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed ids and no timestamp keep the SVG reproducible
    with matplotlib.rc_context({"svg.hashsalt": "psifrac", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(x, y, marker=".")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("value")
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _emit(cfg, out, header, columns, title):
    text = _table_text(header, columns)
    if cfg.output_csv:
        with open(cfg.output_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    if cfg.output_plot:
        _plot(cfg.output_plot, columns[0], columns[1], header[0], title)


# -- commands -----------------------------------------------------------------

def _cmd_special(cfg, out):
    z = np.asarray(cfg.special_z, dtype=float)
    mu, nu = cfg.problem_mu[0], (cfg.problem_nu[0] if cfg.problem_nu else 1.0)
    if cfg.command == "wright":
        values = np.atleast_1d(wright(z, mu, nu, atol=cfg.tol_atol, rtol=cfg.tol_rtol))
    elif cfg.problem_gamma != 1.0:
        values = np.atleast_1d(ml3(mu, nu, cfg.problem_gamma, z, atol=cfg.tol_atol, rtol=cfg.tol_rtol))
    else:
        values = np.atleast_1d(ml2(mu, nu, z, atol=cfg.tol_atol, rtol=cfg.tol_rtol))
    if z.size == 1 and not cfg.output_csv and not cfg.output_plot:
        out.write(repr(float(values[0])) + "\n")
        return
    _emit(cfg, out, ("z", "value", "est_error"), (z, values, _bound(cfg, values)), cfg.command)


def _cmd_fracop(cfg, out):
    psi = _psi(cfg)
    f = catalog_function(cfg.operator_function, psi)
    nu = cfg.problem_nu[0] if cfg.problem_nu else None
    order = FracOrder(cfg.problem_mu[0], nu)
    t = _grid(cfg, psi, singular=True)
    op = {"integral": psi_integral, "rl": psi_rl_derivative, "caputo": psi_caputo_derivative,
          "hilfer": psi_hilfer_derivative}[cfg.operator_name]
    values = np.atleast_1d(op(psi, order, f, cfg.operator_a, t, cfg.quadrature))
    _emit(cfg, out, ("t", "value", "est_error"), (t, values, _bound(cfg, values)), cfg.operator_name)


def _cmd_transform(cfg, out):
    psi = _psi(cfg)
    f = catalog_function(cfg.operator_function, psi)
    s = np.asarray(cfg.transform_s, dtype=float)
    values = np.array([glt_forward(psi, f, v, q=cfg.quadrature).real for v in s])
    _emit(cfg, out, ("s", "value", "est_error"), (s, values, _bound(cfg, values)), "transform")


def _cmd_invtransform(cfg, out):
    psi = _psi(cfg)
    image = catalog_image(cfg.transform_image)
    t = _grid(cfg, psi, singular=True)
    values = np.atleast_1d(glt_inverse(psi, image, t, ContourSpec()))
    check = np.atleast_1d(glt_inverse(psi, image, t, ContourSpec(nodes=24)))
    _emit(cfg, out, ("t", "value", "est_error"), (t, values, np.abs(values - check)), "inverse transform")


def _cmd_convolve(cfg, out):
    psi = _psi(cfg)
    f = catalog_function(cfg.operator_function, psi)
    g = catalog_function(cfg.operator_second, psi)
    t = _grid(cfg, psi)
    values = np.atleast_1d(psi_convolve(psi, f, g, t, cfg.quadrature))
    _emit(cfg, out, ("t", "value", "est_error"), (t, values, _bound(cfg, values)), "convolution")


def _time_problem(cfg):
    psi = _psi(cfg)
    p = _problem(cfg, psi)
    return p, _grid(cfg, psi, singular=p.kind in ("rl-ivp", "hilfer2", "hilfer3"))


def _cmd_solve(cfg, out):
    p, t = _time_problem(cfg)
    table = solve(p, t, **_solve_kwargs(cfg, p))
    _emit(cfg, out, ("t", "value", "est_error"), (t, table.values, _bound(cfg, table.values)), p.kind)


def _oracle(cfg, p, t) -> SolutionTable:
    return volterra_oracle(p, t, steps=cfg.oracle_steps)


def _cmd_oracle(cfg, out):
    p, t = _time_problem(cfg)
    table = _oracle(cfg, p, t)
    err = np.full(t.shape, table.meta["change"])
    _emit(cfg, out, ("t", "value", "est_error"), (t, table.values, err), f"{p.kind} oracle")


def _cmd_compare(cfg, out):
    p, t = _time_problem(cfg)
    closed = solve(p, t, **_solve_kwargs(cfg, p))
    oracle = _oracle(cfg, p, t)
    deviation = np.abs(closed.values - oracle.values)
    worst = float(deviation.max())
    if cfg.output_csv or cfg.output_plot:
        _emit(cfg, out, ("t", "value", "est_error"), (t, closed.values, deviation), f"{p.kind} vs oracle")
    out.write(f"max_abs_deviation {_fmt(worst)}\n")
    if worst > cfg.compare_max_deviation:
        raise ToleranceNotMet(f"closed form and oracle differ by {worst:.3g} > {cfg.compare_max_deviation:g}")


def _cmd_diffuse(cfg, out):
    psi = _psi(cfg)
    profile = catalog_profile(cfg.diffusion_profile, cfg.diffusion_kappa)
    p = FdeProblem.diffusion(psi, cfg.problem_mu[0], cfg.diffusion_kappa, profile, cfg.diffusion_window)
    xs = np.linspace(-cfg.diffusion_x_max, cfg.diffusion_x_max, cfg.grid_points)
    table = diffusion_solve(p, xs, cfg.diffusion_time, cfg.quadrature)
    err = np.maximum(table.errors, cfg.tol_atol)
    _emit(cfg, out, ("x", "value", "est_error"), (xs, table.values, err), "diffusion")


def _cmd_regularity(cfg, out):
    p, t = _time_problem(cfg)
    if p.kind != "caputo-ivp":
        raise InvalidParameter("regularity runs on caputo problems")
    table = solve(p, t, q=cfg.quadrature)
    report = check_regularity_bound(p, table, ExponentialOrder(c=cfg.regularity_c))
    if cfg.output_csv or cfg.output_plot:
        _emit(cfg, out, ("t", "value", "est_error"), (t, report.ratios, _bound(cfg, report.ratios)), "ratio")
    out.write(f"exponent {_fmt(report.exponent)}\nmax_ratio {_fmt(report.max_ratio)}\n"
              f"slope {_fmt(report.slope)}\nslope_stderr {_fmt(report.slope_stderr)}\n"
              f"passed {str(report.passed).lower()}\n")


def _dispatch(cfg, out):
    cmd = cfg.command
    if cmd in ("ml", "wright"):
        return _cmd_special(cfg, out)
    if cmd == "compare":
        return _cmd_compare(cfg, out)
    handler = {"fracop": _cmd_fracop, "transform": _cmd_transform, "invtransform": _cmd_invtransform,
               "convolve": _cmd_convolve, "solve": _cmd_solve, "oracle": _cmd_oracle,
               "diffuse": _cmd_diffuse, "regularity": _cmd_regularity}[cmd]
    return handler(cfg, out)


# -- argument parsing ---------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


#: flag -> config field
_FLAGS = {
    "--psi": "psi_kind", "--psi-parameter": "psi_parameter",
    "--kind": "problem_kind", "--mu": "problem_mu", "--nu": "problem_nu", "--gamma": "problem_gamma",
    "--lambda": "problem_lambda", "--c": "problem_c", "--coefficients": "problem_coefficients",
    "--initial": "problem_initial", "--forcing": "problem_forcing", "--variant": "problem_variant",
    "--op": "operator_name", "--function": "operator_function", "--second": "operator_second",
    "--a": "operator_a", "--s": "transform_s", "--image": "transform_image", "--z": "special_z",
    "--kappa": "diffusion_kappa", "--profile": "diffusion_profile", "--window": "diffusion_window",
    "--time": "diffusion_time", "--x-max": "diffusion_x_max", "--order-c": "regularity_c",
    "--t-min": "grid_t_min", "--t-max": "grid_t_max", "--points": "grid_points", "--spacing": "grid_spacing",
    "--steps": "oracle_steps", "--max-deviation": "compare_max_deviation",
    "--atol": "tol_atol", "--rtol": "tol_rtol", "--csv": "output_csv", "--plot": "output_plot",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psifrac", description="Fractional calculus with respect to a function.")
    parser.add_argument("--config", help=f"settings file (default: ./{CONFIG_NAME} when present)")
    parser.add_argument("--save-config", metavar="PATH", help="write the effective settings and exit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        for flag, dest in _FLAGS.items():
            # raw strings are parsed with the config rules so flags and files agree
            cmd.add_argument(flag, dest=dest, default=argparse.SUPPRESS, metavar="VALUE")
    return parser


def load_config(argv: Sequence[str], environ=None) -> Tuple[RunConfig, Optional[str]]:
    """Resolve the effective configuration: defaults < file < environment < flags."""
    environ = os.environ if environ is None else environ
    args = _build_parser().parse_args(list(argv))
    cfg = RunConfig()
    path = args.config or (CONFIG_NAME if os.path.exists(CONFIG_NAME) else None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = RunConfig.from_text(fh.read(), cfg)
        except OSError as exc:
            raise InvalidParameter(f"cannot read {path}: {exc.strerror}") from exc
    if environ.get(ENV_ATOL):
        cfg = RunConfig.from_text(f"tol.atol = {environ[ENV_ATOL]}", cfg)
    updates = {"command": args.command}
    for f in dataclasses.fields(RunConfig):
        if hasattr(args, f.name) and f.name != "command":
            updates[f.name] = RunConfig._parse_value(f, getattr(args, f.name))
    return dataclasses.replace(cfg, **updates).validate(), args.save_config


def run(argv: Optional[Sequence[str]] = None, out=None, err=None, environ=None) -> int:
    """Execute one command; returns the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, save = load_config(argv, environ)
        if save:
            with open(save, "w", encoding="utf-8") as fh:
                fh.write(cfg.to_text())
            return 0
        with np.errstate(all="ignore"):
            _dispatch(cfg, out)
    except _UsageError as exc:
        err.write(f"psifrac: usage error: {exc}\n")
        return 1
    except ValidationError as exc:
        err.write(f"psifrac: invalid input: {exc}\n")
        return 1
    except NumericalError as exc:
        err.write(f"psifrac: numerical failure: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)
