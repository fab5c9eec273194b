"""Command-line front end: ``ltlab {verify, eval, probe, sweep}``.

Exit codes: 0 when no check failed (inconclusive does not fail), 1 when a
check failed or an evaluation did not converge, 2 on usage or config errors.
Lists are comma-separated without spaces. A ``--config`` file holds one
``key = value`` per line (``#`` starts a comment); flags given on the command
line override it.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ltlab import functionals as fn
from ltlab import reports
from ltlab.errors import ConvergenceError, LtlabError
from ltlab.testfunctions import FamilyParams, TestFunction, change_gauge, make_family, relabel
from ltlab.verifier import SUITES, poincare_estimate, run_suite, sharpness_probe

COMMANDS = ("verify", "eval", "probe", "sweep")
FUNCTIONALS = ("leray", "hardy", "energy:grad_n_x1", "energy:mixed_link2", "energy:ft_weight",
               "lq", "moser", "ft")
FAMILY_KEYS = ("eps", "amplitude", "radius", "inner_cut", "order")
SWEEP_PARAMS = FAMILY_KEYS + ("alpha", "beta", "q")
DEFAULT_EPS = (0.1, 0.03, 0.01, 0.003, 0.001)


class UsageError(Exception):
    """Bad flags or config; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str = "verify"
    dims: list = field(default_factory=lambda: [2, 3, 4])
    suite: str = "core"
    family: FamilyParams | None = None
    functional: str = "leray"
    q: float | None = None
    q_grid: list | None = None
    eps_grid: list | None = None
    alpha: float | None = None
    beta: float | None = None
    tol: float | None = None
    seed: int = 0
    out_path: str | None = None
    format: str | None = None
    param: str | None = None
    range: tuple | None = None

    def output_format(self) -> str:
        if self.format:
            return self.format
        if self.out_path and self.out_path.endswith(".json"):
            return "json"
        return "csv"


# value parsers, shared by flags and config files --------------------------

def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"expected an integer, got {text!r}") from None


def _real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"expected a number, got {text!r}") from None


def _family(text: str) -> FamilyParams:
    try:
        return FamilyParams.parse(text)
    except (LtlabError, ValueError) as exc:
        raise UsageError(f"bad family {text!r}: {exc}") from None


def _range(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:steps, got {text!r}")
    lo, hi = _real(parts[0]), _real(parts[1])
    try:
        steps = int(parts[2])
    except ValueError:
        raise UsageError(f"range steps must be an integer, got {parts[2]!r}") from None
    if steps < 1:
        raise UsageError("range needs at least one step")
    return lo, hi, steps


def _choice(options):
    def parse(text):
        if text not in options:
            raise UsageError(f"{text!r} is not one of {', '.join(options)}")
        return text
    return parse


# config key -> (RunConfig field, parser)
_KEYS = {
    "command": ("command", _choice(COMMANDS)),
    "dims": ("dims", _ints),
    "dim": ("dims", _ints),
    "suite": ("suite", _choice(SUITES)),
    "family": ("family", _family),
    "functional": ("functional", _choice(FUNCTIONALS)),
    "q": ("q", _real),
    "q_grid": ("q_grid", _floats),
    "eps": ("eps_grid", _floats),
    "eps_grid": ("eps_grid", _floats),
    "alpha": ("alpha", _real),
    "beta": ("beta", _real),
    "tol": ("tol", _real),
    "seed": ("seed", _int),
    "out": ("out_path", str),
    "out_path": ("out_path", str),
    "format": ("format", _choice(("csv", "json"))),
    "param": ("param", _choice(SWEEP_PARAMS)),
    "range": ("range", _range),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` text to a dict of RunConfig field values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        name, parse = _KEYS[key]
        try:
            out[name] = parse(value)
        except UsageError as exc:
            raise UsageError(f"{source}:{lineno}: {exc}") from None
    return out


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    return RunConfig(**parse_config_text(text, str(path)))


# argument grammar ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--dims", "--dim", dest="dims", type=str)
    shared.add_argument("--seed", type=str)
    shared.add_argument("--tol", type=str)
    shared.add_argument("--out", dest="out_path", type=str)
    shared.add_argument("--format", type=str)
    shared.add_argument("--config", type=str)

    parser = _Parser(prog="ltlab", description="Numerical checks for the Leray-Trudinger inequality.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    v = sub.add_parser("verify", parents=[shared], help="run a check suite")
    v.add_argument("--suite", type=str)

    e = sub.add_parser("eval", parents=[shared], help="evaluate one functional")
    e.add_argument("--functional", type=str)
    e.add_argument("--family", type=str)
    e.add_argument("--q", type=str)
    e.add_argument("--alpha", type=str)
    e.add_argument("--beta", type=str)

    p = sub.add_parser("probe", parents=[shared], help="sharpness probe along a family")
    p.add_argument("--beta", type=str)
    p.add_argument("--alpha", type=str)
    p.add_argument("--eps", type=str)
    p.add_argument("--family", type=str, help="family kind (default moser_log)")

    s = sub.add_parser("sweep", parents=[shared], help="evaluate a functional over a parameter range")
    s.add_argument("--param", type=str)
    s.add_argument("--range", type=str)
    s.add_argument("--functional", type=str)
    s.add_argument("--family", type=str)
    s.add_argument("--q", type=str)
    s.add_argument("--alpha", type=str)
    s.add_argument("--beta", type=str)
    return parser


def resolve(argv) -> RunConfig:
    """Parse ``argv``; config-file values first, then explicit flags."""
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config:
        values.update(parse_config_text(_read(ns.config), ns.config))
    flag_keys = {"dims": "dims", "seed": "seed", "tol": "tol", "out_path": "out", "format": "format",
                 "suite": "suite", "functional": "functional", "family": "family", "q": "q",
                 "alpha": "alpha", "beta": "beta", "eps": "eps", "param": "param", "range": "range"}
    for attr, key in flag_keys.items():
        raw = getattr(ns, attr, None)
        if raw is None:
            continue
        name, parse = _KEYS[key]
        values[name] = parse(raw)
    values["command"] = ns.command
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None


def _validate(cfg: RunConfig):
    if not cfg.dims:
        raise UsageError("at least one dimension is needed")
    if any(d < 1 for d in cfg.dims):
        raise UsageError("dimensions must be positive")
    if cfg.command != "verify" and any(d < 2 for d in cfg.dims):
        raise UsageError("fields need n >= 2")
    if cfg.tol is not None and not cfg.tol >= 0:
        raise UsageError("tolerance must be nonnegative")
    if cfg.command == "sweep" and (cfg.param is None or cfg.range is None):
        raise UsageError("sweep needs --param and --range")
    if cfg.command == "probe" and (cfg.alpha is None or cfg.beta is None):
        raise UsageError("probe needs --alpha and --beta")


# evaluation ---------------------------------------------------------------

def evaluate(functional: str, u: TestFunction, q=None, alpha=None, beta=None):
    """``(value, quad_error)`` of a named functional on a u-gauge field."""
    n = u.dim
    if functional == "leray":
        res = fn.leray_functional(u)
        return res.value, res.quad_error
    if functional == "hardy":
        res = fn.hardy_difference(u)
        return res.value, res.quad_error
    if functional.startswith("energy:"):
        kind = functional.split(":", 1)[1]
        g = change_gauge(u, "w" if kind == "ft_weight" else "v")
        res = fn.weighted_energy(g, kind=kind)
        return res.value, res.quad_error
    if functional == "lq":
        if q is None:
            raise UsageError("lq needs --q")
        return fn.weighted_lq_norm(u, q, beta or 0.0), float("nan")
    if functional == "moser":
        if alpha is None:
            raise UsageError("moser needs --alpha")
        b = 1.0 / n if beta is None else beta
        if u.is_radial and u.is_linear:
            res = fn.moser_report_deep(u, alpha, b)
        else:
            res = fn.moser_report(u, alpha, b)
        return res.value, res.quad_error
    if functional == "ft":
        zeta = change_gauge(relabel(u, "w"), "zeta")
        res = fn.ft_difference(zeta)
        return res.value, res.quad_error
    raise UsageError(f"unknown functional {functional!r}")


def _eval_row(cfg: RunConfig, params: FamilyParams, dim, q, alpha, beta, param="", pval=""):
    start = time.perf_counter()
    value, err = evaluate(cfg.functional, make_family(params, dim), q, alpha, beta)
    ms = int(round(1000 * (time.perf_counter() - start)))
    return {"functional": cfg.functional, "dim": dim, "family": params.describe(), "param": param,
            "param_value": pval, "value": float(value), "quad_error": float(err), "runtime_ms": ms}


# commands -----------------------------------------------------------------

def _write(cfg: RunConfig, text: str):
    if cfg.out_path:
        Path(cfg.out_path).write_text(text)


def _cmd_verify(cfg: RunConfig) -> int:
    reps = run_suite(cfg.suite, cfg.dims, seed=cfg.seed, tol=cfg.tol)
    for r in reps:
        fam = reports.describe_family(r.family_descriptor)
        print(f"{r.status.upper():<12} {r.check_id:<18} n={r.dim} margin={r.margin:.3e} {fam}")
    text = reports.checks_to_json(reps) if cfg.output_format() == "json" else reports.checks_to_csv(reps)
    _write(cfg, text)
    failed = sum(r.status == "fail" for r in reps)
    inconclusive = sum(r.status == "inconclusive" for r in reps)
    print(f"{len(reps)} checks: {len(reps) - failed - inconclusive} pass, {failed} fail, "
          f"{inconclusive} inconclusive")
    if 2 in cfg.dims and cfg.suite in ("nonradial", "all"):
        # informative only; step2 uses ratio semantics and never asserts it
        print(f"sphere Poincare constant estimate (n=2): {poincare_estimate(2):.6f}")
    return 1 if failed else 0


def _cmd_eval(cfg: RunConfig) -> int:
    params = cfg.family or FamilyParams("bump")
    rows = []
    for d in cfg.dims:
        row = _eval_row(cfg, params, d, cfg.q, cfg.alpha, cfg.beta)
        print(f"{row['functional']} n={d} {row['family']}: {row['value']:.17g} "
              f"(+- {row['quad_error']:.2g})")
        rows.append(row)
    _write(cfg, reports.evals_to_json(rows) if cfg.output_format() == "json" else reports.evals_to_csv(rows))
    return 0


def _cmd_probe(cfg: RunConfig) -> int:
    kind = cfg.family.kind if cfg.family else "moser_log"
    eps = cfg.eps_grid if cfg.eps_grid is not None else list(DEFAULT_EPS)
    rep = None
    for d in cfg.dims:
        rep = sharpness_probe(d, cfg.beta, cfg.alpha, eps, family=kind)
        vals = ", ".join(f"{v:.4g}" for v in rep.values)
        print(f"probe n={d} {kind} beta={cfg.beta:g} alpha={cfg.alpha:g}: {rep.verdict} [{vals}]")
        if rep.note:
            print(f"  note: {rep.note}")
    _write(cfg, reports.probe_to_json(rep) if cfg.output_format() == "json" else reports.probe_to_csv(rep))
    return 0


def _cmd_sweep(cfg: RunConfig) -> int:
    lo, hi, steps = cfg.range
    base = cfg.family or FamilyParams("bump")
    rows = []
    for x in np.linspace(lo, hi, steps):
        x = float(x)
        params, q, alpha, beta = base, cfg.q, cfg.alpha, cfg.beta
        if cfg.param in FAMILY_KEYS:
            val = int(round(x)) if cfg.param == "order" else x
            rec = {f.name: getattr(base, f.name) for f in fields(FamilyParams)}
            rec[cfg.param] = val
            params = FamilyParams(**rec)
        elif cfg.param == "q":
            q = x
        elif cfg.param == "alpha":
            alpha = x
        else:
            beta = x
        for d in cfg.dims:
            row = _eval_row(cfg, params, d, q, alpha, beta, cfg.param, x)
            print(f"{cfg.param}={x:.6g} n={d}: {row['value']:.17g}")
            rows.append(row)
    _write(cfg, reports.evals_to_json(rows) if cfg.output_format() == "json" else reports.evals_to_csv(rows))
    return 0


_COMMANDS = {"verify": _cmd_verify, "eval": _cmd_eval, "probe": _cmd_probe, "sweep": _cmd_sweep}


def run_command(argv) -> int:
    try:
        cfg = resolve(list(argv))
        return _COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"ltlab: error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"ltlab: quadrature did not converge: {exc}", file=sys.stderr)
        return 1
    except LtlabError as exc:
        print(f"ltlab: error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    code = run_command(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
