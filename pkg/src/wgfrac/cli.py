"""Command-line front end.

Configuration is a UTF-8 file of ``key = value`` lines grouped under
``[section]`` headers, with ``#`` comments. Any key may also be given as a
``--key value`` flag, which overrides the file. See README.md for the
key reference and the per-command required keys.

Exit status: 0 success, 1 error, 2 computation succeeded but a configured
``threshold`` was exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import identities as idn
from . import operators as ops
from . import variational as var
from .core import Grid, Normalization, as_weight, make_params, sample
from .errors import ConfigError, WgfracError
from .expr import parse
from .mlf import MLEvalOptions, mittag_leffler_info

logger = logging.getLogger(__name__)

COMMANDS = (
    "ml-eval", "frac-int", "frac-deriv", "verify-ibp", "verify-inverse", "verify-ab",
    "el-residual", "solve-variational", "newton-law",
)

# key -> (home section, type)
KEYS: dict[str, tuple[str, str]] = {
    "command": ("run", "command"),
    "side": ("run", "side"),
    "operator": ("run", "operator"),
    "identity": ("run", "identity"),
    "sign_convention": ("run", "sign_convention"),
    "a": ("grid", "float"),
    "b": ("grid", "float"),
    "n": ("grid", "int"),
    "n_list": ("grid", "int_list"),
    "alpha": ("params", "float"),
    "beta": ("params", "float"),
    "normalization": ("params", "normalization"),
    "z": ("params", "float_list"),
    "w": ("functions", "expr"),
    "f": ("functions", "expr"),
    "g": ("functions", "expr"),
    "V": ("functions", "expr"),
    "F2": ("functions", "expr"),
    "F3": ("functions", "expr"),
    "F4": ("functions", "expr"),
    "X": ("functions", "expr"),
    "X_init": ("functions", "expr"),
    "lagrangian": ("lagrangian", "lagrangian"),
    "m": ("lagrangian", "float"),
    "c2": ("lagrangian", "float"),
    "c3": ("lagrangian", "float"),
    "c4": ("lagrangian", "float"),
    "X_a": ("lagrangian", "float"),
    "X_b": ("lagrangian", "float"),
    "max_iters": ("solver", "int"),
    "grad_tol": ("solver", "float"),
    "step_control": ("solver", "step_control"),
    "step_size": ("solver", "float"),
    "threshold": ("tolerances", "float"),
    "series_tol": ("tolerances", "float"),
    "max_terms": ("tolerances", "int"),
    "abs_tol": ("tolerances", "float"),
    "band": ("tolerances", "float"),
    "output": ("output", "str"),
    "format": ("output", "format"),
    "sidecar": ("output", "str"),
}
SECTIONS = frozenset(section for section, _ in KEYS.values())

_GRID = ("a", "b", "n")
_LAGRANGIAN_EXTRA = {"quadratic-kinetic": ("m", "V"), "general-sum": ()}
REQUIRED: dict[str, tuple[str, ...]] = {
    "ml-eval": ("beta", "z"),
    "frac-int": _GRID + ("alpha", "beta", "f"),
    "frac-deriv": _GRID + ("alpha", "beta", "f"),
    "verify-ibp": _GRID + ("beta", "f", "g"),  # plus alpha unless identity = samko
    "verify-inverse": _GRID + ("alpha", "beta", "f"),
    "verify-ab": _GRID + ("alpha", "f", "g"),
    "el-residual": _GRID + ("alpha", "beta", "X"),
    "solve-variational": _GRID + ("alpha", "beta", "X_a", "X_b"),
    "newton-law": _GRID + ("alpha", "beta", "X", "m", "V"),
}
IBP_IDENTITIES = ("samko", "unweighted", "weighted", "corollary-right", "symmetric")

_CHOICES = {
    "command": COMMANDS,
    "side": ("left", "right"),
    "operator": ("integral", "derivative"),
    "identity": IBP_IDENTITIES,
    "sign_convention": ("definition", "printed"),
    "normalization": tuple(v.value for v in Normalization),
    "lagrangian": tuple(_LAGRANGIAN_EXTRA),
    "step_control": ("backtracking", "fixed"),
    "format": ("csv", "json"),
}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def __getitem__(self, key):
        return self.values[key]

    def __contains__(self, key):
        return key in self.values


def _convert(key: str, raw: str, line: int | None):
    kind = KEYS[key][1]
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "int_list":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if kind == "float_list":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if kind == "expr":
            parse(raw)
            return raw
        if kind == "str":
            return raw
    except WgfracError as exc:
        raise ConfigError(f"invalid expression {raw!r}: {exc}", key, line) from exc
    except ValueError as exc:
        raise ConfigError(f"cannot read {raw!r} as {kind}", key, line) from exc
    choices = _CHOICES[kind]
    if raw not in choices:
        raise ConfigError(f"{raw!r} is not one of {', '.join(choices)}", key, line)
    return raw


def read_config_file(path) -> tuple[dict, dict]:
    """Read a ``key = value`` file; return (raw values, line numbers)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file {path} is not UTF-8") from exc
    raw, lines = {}, {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"malformed section header {body!r}", line=lineno)
            section = body[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", key, lineno)
        if section is not None and KEYS[key][0] != section:
            raise ConfigError(f"belongs in section [{KEYS[key][0]}], found in [{section}]",
                              key, lineno)
        if key in raw:
            raise ConfigError(f"duplicate key (first on line {lines[key]})", key, lineno)
        raw[key], lines[key] = value, lineno
    return raw, lines


def parse_config(path=None, flags: dict | None = None) -> RunConfig:
    """Merge a config file and flag overrides into a validated RunConfig."""
    raw, lines = ({}, {}) if path is None else read_config_file(path)
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key not in KEYS:
            raise ConfigError("unknown key", key)
        raw[key] = value
        lines.pop(key, None)
    values = {key: _convert(key, str(value), lines.get(key)) for key, value in raw.items()}
    if "command" not in values:
        raise ConfigError("no command given", "command")
    command = values["command"]
    required = list(REQUIRED[command])
    if command == "verify-ibp" and values.get("identity", "weighted") != "samko":
        required.append("alpha")
    if command in ("el-residual", "solve-variational"):
        required.extend(_LAGRANGIAN_EXTRA[values.get("lagrangian", "quadratic-kinetic")])
    for key in required:
        if key not in values:
            raise ConfigError(f"required for command {command}", key)
    cfg = RunConfig(command, values, lines)
    _validate_ranges(cfg)
    return cfg


def _validate_ranges(cfg: RunConfig) -> None:
    def check(key, ok, message):
        if key in cfg and not ok(cfg[key]):
            raise ConfigError(message, key, cfg.lines.get(key))

    check("n", lambda n: n >= 2, "must be >= 2")
    check("n_list", lambda ns: all(n >= 2 for n in ns), "entries must be >= 2")
    check("alpha", lambda a: 0 <= a < 1, "must lie in [0, 1)")
    check("beta", lambda b: b > 0, "must be positive")
    check("m", lambda m: m > 0, "must be positive")
    for key in ("threshold", "series_tol", "abs_tol", "grad_tol", "step_size"):
        check(key, lambda v: v > 0, "must be positive")
    for key in ("max_terms", "max_iters"):
        check(key, lambda v: v >= 1, "must be >= 1")
    check("band", lambda v: 0 <= v < 0.5, "must lie in [0, 0.5)")
    if "a" in cfg and "b" in cfg and not cfg["a"] < cfg["b"]:
        raise ConfigError("need a < b", "b", cfg.lines.get("b"))


# ------------------------------------------------------------------ output


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def csv_text(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    rows = [",".join(names)]
    for i in range(len(columns[names[0]])):
        rows.append(",".join(_fmt(columns[name][i]) for name in names))
    return "\n".join(rows) + "\n"


def json_text(payload) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    out = cfg.get("output")
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


# --------------------------------------------------------------- commands


def _grid(cfg) -> Grid:
    return Grid(cfg["a"], cfg["b"], cfg["n"])


def _params(cfg, alpha=None, beta=None):
    return make_params(cfg["alpha"] if alpha is None else alpha,
                       cfg["beta"] if beta is None else beta,
                       cfg.get("normalization", Normalization.CONSTANT_ONE.value))


def _series_kwargs(cfg) -> dict:
    return {"series_tol": cfg.get("series_tol", ops.DEFAULT_SERIES_TOL),
            "max_terms": cfg.get("max_terms", ops.DEFAULT_MAX_TERMS)}


def _cmd_ml_eval(cfg):
    opts = MLEvalOptions(cfg.get("abs_tol", 1e-15), cfg.get("max_terms", 400))
    infos = [mittag_leffler_info(cfg["beta"], z, opts) for z in cfg["z"]]
    if cfg.get("format", "csv") == "csv":
        text = csv_text({"z": np.array(cfg["z"]), "value": np.array([i.value for i in infos])})
    else:
        text = json_text({"beta": cfg["beta"], "points": [
            {"z": z, "value": i.value, "terms": i.terms, "precision_warning": i.precision_warning}
            for z, i in zip(cfg["z"], infos)]})
    flagged = sum(i.precision_warning for i in infos)
    summary = f"ml-eval beta={cfg['beta']:g} points={len(infos)} value[0]={infos[0].value:.17g}"
    if flagged:
        summary += f" precision_warnings={flagged}"
    return text, summary, None


def _cmd_frac(cfg):
    grid = _grid(cfg)
    p = _params(cfg)
    w = as_weight(cfg.get("w"))
    f = sample(cfg["f"], grid)
    side = cfg.get("side", "left")
    extra = {}
    if cfg.command == "frac-int":
        m = ops.gen_integral(grid, p, w, side)
    elif side == "left":
        m, report = ops.gen_derivative_left(grid, p, w, **_series_kwargs(cfg))
        extra = {"terms_used": report.terms_used, "last_term_norm": report.last_term_norm,
                 "warning_flags": sorted(report.warning_flags)}
    else:
        m, report = ops.gen_derivative_right(
            grid, p, w, sign_convention=cfg.get("sign_convention", "definition"),
            **_series_kwargs(cfg))
        extra = {"terms_used": report.terms_used, "last_term_norm": report.last_term_norm,
                 "warning_flags": sorted(report.warning_flags)}
    result = ops.apply(m, f).values
    if cfg.get("format", "csv") == "csv":
        text = csv_text({"t": grid.nodes, "value": result})
    else:
        text = json_text({"t": grid.nodes.tolist(), "value": result.tolist(), **extra})
    summary = f"{cfg.command} n={grid.n} side={side} max|value|={np.abs(result).max():.6e}"
    return text, summary, None


def _report_output(cfg, report: idn.IdentityReport, gap: float):
    if cfg.get("format", "json") == "json":
        text = report.to_json()
    else:
        rows = np.array(report.convergence_rows, dtype=float).reshape(-1, 2)
        text = csv_text({"n": rows[:, 0], "abs_gap": rows[:, 1]})
    summary = (f"{cfg.command} n={report.grid_n} identity={report.identity_id.value} "
               f"abs_gap={report.abs_gap:.6e} rel_gap={report.rel_gap:.6e}")
    return text, summary, gap


def _cmd_verify_ibp(cfg):
    grid = _grid(cfg)
    which = cfg.get("identity", "weighted")
    n_list = cfg.get("n_list", idn.DEFAULT_LADDER)
    f, g = cfg["f"], cfg["g"]
    op = cfg.get("operator", "integral")
    if which == "samko":
        report = idn.verify_samko(cfg["beta"], f, g, grid, n_list)
    elif which == "unweighted":
        report = idn.verify_ibp_unweighted(_params(cfg), f, g, grid, op, n_list)
    else:
        fn = {"weighted": idn.verify_ibp_weighted,
              "corollary-right": idn.verify_ibp_corollary_right,
              "symmetric": idn.verify_ibp_symmetric}[which]
        report = fn(_params(cfg), cfg.get("w"), f, g, grid, op, n_list)
    return _report_output(cfg, report, report.abs_gap)


def _cmd_verify_inverse(cfg):
    report = idn.verify_inversion(
        _params(cfg), cfg.get("w"), cfg["f"], _grid(cfg), cfg.get("side", "left"),
        cfg.get("n_list", idn.DEFAULT_LADDER),
        sign_convention=cfg.get("sign_convention", "definition"))
    return _report_output(cfg, report, report.abs_gap)


def _cmd_verify_ab(cfg):
    report = idn.verify_ab_reduction(cfg["alpha"], cfg["f"], cfg["g"], _grid(cfg),
                                     cfg.get("n_list", idn.DEFAULT_LADDER))
    return _report_output(cfg, report, report.abs_gap)


def _problem(cfg, X_expr=None) -> var.VariationalProblem:
    grid = _grid(cfg)
    form = cfg.get("lagrangian", "quadratic-kinetic")
    if form == "quadratic-kinetic":
        lag = var.LagrangianSpec.quadratic_kinetic(cfg["m"], cfg["V"])
    else:
        lag = var.LagrangianSpec.general_sum(
            cfg.get("F2", "0"), cfg.get("F3", "0"), cfg.get("F4", "0"),
            cfg.get("c2", 1.0), cfg.get("c3", 1.0), cfg.get("c4", 1.0))
    if X_expr is not None:
        X = parse(X_expr)
        X_a = cfg.get("X_a", float(X(grid.a)))
        X_b = cfg.get("X_b", float(X(grid.b)))
    else:
        X_a, X_b = cfg["X_a"], cfg["X_b"]
    return var.VariationalProblem(grid, _params(cfg), as_weight(cfg.get("w")), lag, X_a, X_b,
                                  **_series_kwargs(cfg))


def _trajectory_output(cfg, prob, X, residual, summary_extra, gap):
    table = var.trajectory_table(prob, X, residual)
    if cfg.get("format", "csv") == "csv":
        text = csv_text(table)
    else:
        text = json_text({k: np.asarray(v).tolist() for k, v in table.items()})
    band = var.interior_band(prob.grid, cfg.get("band", 0.05))
    band_max = float(np.abs(residual.values[band]).max(initial=0.0))
    summary = f"{cfg.command} n={prob.grid.n} band_residual={band_max:.6e}{summary_extra}"
    return text, summary, band_max if gap is None else gap


def _cmd_el_residual(cfg):
    prob = _problem(cfg, cfg["X"])
    X = var.sample_trajectory(prob, cfg["X"])
    return _trajectory_output(cfg, prob, X, var.el_residual(prob, X), "", None)


def _cmd_newton_law(cfg):
    prob = _problem(cfg, cfg["X"])
    X = var.sample_trajectory(prob, cfg["X"])
    return _trajectory_output(cfg, prob, X, var.newton_law_residual(prob, X), "", None)


def _cmd_solve(cfg):
    prob = _problem(cfg)
    X0 = var.sample_trajectory(prob, cfg["X_init"]) if "X_init" in cfg else None
    opts = var.SolveOptions(cfg.get("max_iters", 5000), cfg.get("grad_tol", 1e-10),
                            cfg.get("step_control", "backtracking"), cfg.get("step_size", 0.5))
    X, diag = var.solve(prob, X0, opts)
    extra = (f" path={diag.path} iterations={diag.iterations} grad_norm={diag.grad_norm:.6e}"
             f" J={var.evaluate_functional(prob, X):.12g}")
    return _trajectory_output(cfg, prob, X, var.el_residual(prob, X), extra, diag.grad_norm)


HANDLERS = {
    "ml-eval": _cmd_ml_eval,
    "frac-int": _cmd_frac,
    "frac-deriv": _cmd_frac,
    "verify-ibp": _cmd_verify_ibp,
    "verify-inverse": _cmd_verify_inverse,
    "verify-ab": _cmd_verify_ab,
    "el-residual": _cmd_el_residual,
    "solve-variational": _cmd_solve,
    "newton-law": _cmd_newton_law,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``; return 0, 1 (error) or 2 (threshold exceeded)."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            text, summary, gap = HANDLERS[cfg.command](cfg)
        _emit(cfg, text)
    except (WgfracError, OSError) as exc:
        print(f"error: {cfg.command}: {exc}", file=sys.stderr)
        return 1
    if cfg.get("sidecar"):
        _write_sidecar(cfg)
    stream = sys.stdout if cfg.get("output") else sys.stderr
    print(summary, file=stream)
    threshold = cfg.get("threshold")
    if threshold is not None and gap is not None and not gap <= threshold:
        print(f"threshold exceeded: {gap:.6e} > {threshold:.6e}", file=sys.stderr)
        return 2
    return 0


def _write_sidecar(cfg: RunConfig) -> None:
    import datetime
    import platform

    from . import __version__

    meta = {
        "command": cfg.command,
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.values.items()},
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    Path(cfg["sidecar"]).write_text(json_text(meta), encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wgfrac",
        description="Weighted generalized fractional operators: evaluation, "
                    "identity checks and variational problems.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="command to run (overrides 'command' in the config file)")
    parser.add_argument("-c", "--config", help="key = value config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    for key in KEYS:
        if key == "command":
            continue
        dest = f"opt_{key}"
        names = {f"--{key}", f"--{key.replace('_', '-')}"}
        parser.add_argument(*sorted(names), dest=dest, metavar=key.upper(), default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {key[4:]: value for key, value in vars(args).items()
             if key.startswith("opt_") and value is not None}
    if args.command:
        flags["command"] = args.command
    try:
        cfg = parse_config(args.config, flags)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
