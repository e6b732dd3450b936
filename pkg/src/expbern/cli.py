"""Command-line front end.

Usage::

    expbern COMMAND [--eigs L ...] [--interval A B] [--fix I J] [--function NAME]
                    [--family KIND] [--samples N] [--nlist N1,N2,...]
                    [--out PATH] [--format csv|json] [--config PATH]

Commands are ``check``, ``fundamental``, ``basis``, ``operator``, ``approx``,
``converge`` and ``muntz``.  Complex literals are ``re``, ``imi``, ``re+imi``
or ``re-imi`` (``i`` and ``-i`` also work).  Exit status is 0 on success,
1 on a computational failure and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import build_basis
from .convergence import FamilySpec, convergence_study, test_function
from .errors import ExpBernError
from .exppoly import canonicalize, format_complex, parse_complex
from .fundamental import chebyshev_interval_test, condition_estimate, fundamental_function
from .operator import (
    apply,
    build_operator,
    build_operator_confluent,
    fixed_point_residuals,
    muntz_to_exponential,
)

COMMANDS = ("check", "fundamental", "basis", "operator", "approx", "converge", "muntz")
FORMATS = ("csv", "json")
FAMILIES = ("equidistant", "morigi_neamtu", "classical")
DEFAULT_FORMAT = {
    "check": "json",
    "fundamental": "json",
    "basis": "csv",
    "operator": "json",
    "approx": "csv",
    "converge": "csv",
    "muntz": "json",
}
NEEDS_INTERVAL = ("check", "basis", "operator", "approx", "converge", "muntz")
NEEDS_EIGS = ("check", "fundamental", "basis", "operator", "approx", "converge", "muntz")
MULTI_VALUE = ("--eigs", "--interval", "--fix")


class UsageError(Exception):
    """Invalid invocation (exit status 2)."""


@dataclass
class RunConfig:
    """Validated invocation."""

    command: str
    eigenvalues: list = field(default_factory=list)
    interval: tuple | None = None
    fix: tuple | None = None
    function: str | None = None
    family: str | None = None
    samples: int = 512
    n_list: tuple | None = None
    output: str | None = None
    format: str | None = None

    @property
    def out_format(self) -> str:
        return self.format or DEFAULT_FORMAT[self.command]

    def render(self) -> list[str]:
        """argv that parses back to this configuration."""
        argv = [self.command]
        if self.eigenvalues:
            argv.append("--eigs=" + ",".join(format_complex(v) for v in self.eigenvalues))
        if self.interval is not None:
            argv.append("--interval=" + ",".join(repr(float(v)) for v in self.interval))
        if self.fix is not None:
            argv.append("--fix=" + ",".join(str(i) for i in self.fix))
        if self.function is not None:
            argv += ["--function", self.function]
        if self.family is not None:
            argv += ["--family", self.family]
        argv += ["--samples", str(self.samples)]
        if self.n_list is not None:
            argv += ["--nlist", ",".join(str(n) for n in self.n_list)]
        if self.output is not None:
            argv += ["--out", self.output]
        if self.format is not None:
            argv += ["--format", self.format]
        return argv


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _join_multi(argv: Sequence[str]) -> list[str]:
    """Fold ``--eigs 0 -1i 2`` into ``--eigs=0,-1i,2`` so signs survive argparse."""
    out = []
    i = 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        if tok in MULTI_VALUE:
            vals = []
            i += 1
            while i < len(argv) and not argv[i].startswith("--"):
                vals.append(argv[i])
                i += 1
            out.append(f"{tok}=" + ",".join(vals))
            continue
        out.append(tok)
        i += 1
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="expbern", description="Bernstein bases and operators for exponential polynomials.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--eigs", help="eigenvalues (or Muntz exponents)")
    p.add_argument("--interval", help="endpoints A B")
    p.add_argument("--fix", help="indices I J of the fixed pair (equal eigenvalues select the confluent case)")
    p.add_argument("--function", help="test function: abs_mid, square, exp:L, sin, runge")
    p.add_argument("--family", choices=FAMILIES, help="family for converge (eigs give its endpoints)")
    p.add_argument("--samples", help="grid size (default 512)")
    p.add_argument("--nlist", help="comma-separated n values for converge")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--config", help="JSON file with defaults; flags override it")
    return p


CONFIG_KEYS = {
    "command": "command",
    "eigenvalues": "eigs",
    "eigs": "eigs",
    "interval": "interval",
    "fix": "fix",
    "function": "function",
    "family": "family",
    "samples": "samples",
    "n_list": "nlist",
    "nlist": "nlist",
    "output": "out",
    "out": "out",
    "format": "format",
}


def _split(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [s for s in str(value).replace(",", " ").split() if s]


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return {CONFIG_KEYS[k]: v for k, v in data.items()}


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Parse flags (and an optional JSON config file) into a :class:`RunConfig`.

    Raises
    ------
    UsageError
        Malformed literal, ``a >= b``, unknown key or a missing required field.
    """
    ns = _build_parser().parse_args(_join_multi(argv))
    merged = _load_config(ns.config) if ns.config else {}
    for key in ("command", "eigs", "interval", "fix", "function", "family", "samples", "nlist", "out", "format"):
        v = getattr(ns, key)
        if v is not None:
            merged[key] = v
    command = merged.get("command")
    if command not in COMMANDS:
        raise UsageError(f"command: expected one of {', '.join(COMMANDS)}")
    cfg = RunConfig(command=command)
    if "eigs" in merged:
        try:
            cfg.eigenvalues = [parse_complex(s) for s in _split(merged["eigs"])]
        except ValueError as exc:
            raise UsageError(f"eigs: {exc}") from exc
    if command in NEEDS_EIGS and not cfg.eigenvalues:
        raise UsageError("eigs: at least one eigenvalue is required")
    if "interval" in merged:
        parts = _split(merged["interval"])
        try:
            a, b = (float(s) for s in parts)
        except ValueError as exc:
            raise UsageError(f"interval: expected two reals, got {parts}") from exc
        if not a < b:
            raise UsageError(f"interval: need a < b, got {a} >= {b}")
        cfg.interval = (a, b)
    elif command in NEEDS_INTERVAL:
        raise UsageError("interval: required for " + command)
    if "fix" in merged:
        parts = _split(merged["fix"])
        try:
            i, j = (int(s) for s in parts)
        except ValueError as exc:
            raise UsageError(f"fix: expected two indices, got {parts}") from exc
        for idx in (i, j):
            if not 0 <= idx < len(cfg.eigenvalues):
                raise UsageError(f"fix: index {idx} out of range")
        cfg.fix = (i, j)
    if "function" in merged:
        cfg.function = str(merged["function"])
        try:
            test_function(cfg.function)
        except ValueError as exc:
            raise UsageError(f"function: {exc}") from exc
    elif command in ("approx", "converge"):
        raise UsageError("function: required for " + command)
    if "family" in merged:
        if merged["family"] not in FAMILIES:
            raise UsageError(f"family: expected one of {', '.join(FAMILIES)}")
        cfg.family = merged["family"]
    if "samples" in merged:
        try:
            cfg.samples = int(merged["samples"])
        except ValueError as exc:
            raise UsageError(f"samples: not an integer: {merged['samples']}") from exc
        if cfg.samples < 2:
            raise UsageError("samples: must be at least 2")
    if "nlist" in merged:
        try:
            cfg.n_list = tuple(int(s) for s in _split(merged["nlist"]))
        except ValueError as exc:
            raise UsageError(f"nlist: {exc}") from exc
        if not cfg.n_list or min(cfg.n_list) < 1:
            raise UsageError("nlist: need positive integers")
    if "out" in merged:
        cfg.output = str(merged["out"])
    if "format" in merged:
        if merged["format"] not in FORMATS:
            raise UsageError("format: expected csv or json")
        cfg.format = merged["format"]
    return cfg


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        if v.imag == 0:
            return _num(v.real)
        return json.dumps(format_complex(v))
    x = float(v)
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return json.dumps("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def _to_json(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_to_json(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    return _num(obj)


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    if isinstance(v, (complex, np.complexfloating)) and complex(v).imag != 0:
        return format_complex(v)
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v).real
    s = _num(v)
    return "nan" if s == "null" else s.strip('"')


def render_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _record_csv(record: dict) -> str:
    rows = []
    for k, v in record.items():
        if isinstance(v, (list, tuple)):
            v = " ".join(_cell(x) if not isinstance(x, (list, tuple)) else ":".join(_cell(y) for y in x) for x in v)
        rows.append([k, v if isinstance(v, str) else _cell(v)])
    return render_csv(["key", "value"], rows)


def emit(report: dict, fmt: str, destination: str | None) -> None:
    """Write ``report`` (``{"record": ...}`` or ``{"header": ..., "rows": ...}``).

    Raises
    ------
    OSError
        When the destination cannot be written.
    """
    if fmt == "json":
        body = report.get("record")
        if body is None:
            body = {"columns": list(report["header"]), "rows": [list(r) for r in report["rows"]]}
        text = _to_json(body) + "\n"
    elif "rows" in report:
        text = render_csv(report["header"], report["rows"])
    else:
        text = _record_csv(report["record"])
    if destination is None or destination == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _grid(cfg: RunConfig) -> np.ndarray:
    a, b = cfg.interval
    return np.linspace(a, b, cfg.samples)


def _real_or_complex(values):
    arr = np.asarray(values)
    if np.iscomplexobj(arr) and np.all(np.abs(arr.imag) <= 1e-12 * np.maximum(1.0, np.abs(arr))):
        return arr.real
    return arr


def _default_fix(values) -> tuple[int, int]:
    reals = sorted((v.real, i) for i, v in enumerate(values) if v.imag == 0)
    distinct = []
    for val, i in reals:
        if not distinct or val != values[distinct[-1]].real:
            distinct.append(i)
    if len(distinct) < 2:
        raise UsageError("fix: fewer than two distinct real eigenvalues; pass --fix")
    return distinct[0], distinct[1]


def _operator(cfg: RunConfig):
    lam = canonicalize(cfg.eigenvalues)
    a, b = cfg.interval
    i, j = cfg.fix if cfg.fix is not None else _default_fix(cfg.eigenvalues)
    l0, l1 = cfg.eigenvalues[i], cfg.eigenvalues[j]
    if lam.find(l0) == lam.find(l1):
        return build_operator_confluent(lam, a, b, l0)
    return build_operator(lam, a, b, (l0, l1))


def _cmd_check(cfg):
    lam = canonicalize(cfg.eigenvalues)
    a, b = cfg.interval
    d = chebyshev_interval_test(lam, a, b, cfg.samples)
    rec = {"eigenvalues": [complex(v) for v in lam.values()]}
    rec.update(d.to_record())
    return {"record": rec}


def _cmd_fundamental(cfg):
    lam = canonicalize(cfg.eigenvalues)
    phi = fundamental_function(lam)
    if cfg.out_format == "csv":
        a, b = cfg.interval if cfg.interval else (0.0, 1.0)
        x = np.linspace(a, b, cfg.samples)
        return {"header": ["x", "phi"], "rows": list(zip(x, _real_or_complex(phi(x))))}
    rec = {
        "eigenvalues": [complex(v) for v in lam.values()],
        "phi": phi.to_text(),
        "taylor_at_0": [complex(v) for v in phi.taylor_derivatives(0.0, lam.n)],
        "condition": condition_estimate(lam),
    }
    return {"record": rec}


def _cmd_basis(cfg):
    lam = canonicalize(cfg.eigenvalues)
    a, b = cfg.interval
    basis = build_basis(lam, a, b)
    if cfg.out_format == "json":
        rec = {
            "eigenvalues": [complex(v) for v in lam.values()],
            "interval": [a, b],
            "functions": [p.to_text() for p in basis],
            "construction_log": [[complex(x), complex(y)] for x, y in basis.construction_log],
        }
        return {"record": rec}
    x = _grid(cfg)
    P = _real_or_complex(basis.evaluate(x))
    header = ["x"] + [f"p{k}" for k in range(basis.n + 1)]
    return {"header": header, "rows": [[x[i]] + list(P[:, i]) for i in range(len(x))]}


def _cmd_operator(cfg):
    op = _operator(cfg)
    r0, r1 = fixed_point_residuals(op, cfg.samples)
    rec = op.to_record()
    rec["residual_0"] = r0
    rec["residual_1"] = r1
    if cfg.out_format == "csv":
        rows = [[k, t, w] for k, (t, w) in enumerate(zip(op.nodes, op.weights))]
        return {"header": ["k", "t", "alpha"], "rows": rows}
    return {"record": rec}


def _cmd_approx(cfg):
    op = _operator(cfg)
    a, b = cfg.interval
    f = test_function(cfg.function, a, b)
    x = _grid(cfg)
    fx = np.array([f(float(v)) for v in x])
    bx = apply(op, f, x)
    if cfg.out_format == "json":
        rec = op.to_record()
        rec["function"] = cfg.function
        rec["sup_error"] = float(np.max(np.abs(bx - fx)))
        return {"record": rec}
    return {"header": ["x", "f", "Bf"], "rows": list(zip(x, fx, bx))}


def _family(cfg) -> FamilySpec:
    a, b = cfg.interval
    kind = cfg.family or "morigi_neamtu"
    e = cfg.eigenvalues
    if kind == "classical":
        return FamilySpec("classical", a, b, {"lam0": e[0].real})
    if len(e) != 2:
        raise UsageError(f"eigs: the {kind} family needs two endpoint eigenvalues")
    if kind == "equidistant":
        return FamilySpec("equidistant", a, b, {"lam0": e[0], "lam_end": e[1]})
    return FamilySpec("morigi_neamtu", a, b, {"mu0": e[0], "mu1": e[1]})


def _cmd_converge(cfg):
    fam = _family(cfg)
    nl = cfg.n_list or (2, 4, 8, 16, 32)
    rep = convergence_study(fam, cfg.function, nl, grid=cfg.samples)
    failed = [e for e in rep.entries if e.error]
    header = ["n", "sup_error", "mesh", "ratio_dev", "log_ratio_dev"]
    if cfg.out_format == "json":
        rec = {
            "family": fam.kind,
            "interval": [fam.a, fam.b],
            "function": cfg.function,
            "columns": header,
            "rows": rep.rows(),
            "errors": [[e.n, e.error] for e in failed],
        }
        return {"record": rec}
    return {"header": header, "rows": rep.rows()}


def _cmd_muntz(cfg):
    if any(v.imag != 0 for v in cfg.eigenvalues):
        raise UsageError("eigs: Muntz exponents must be real")
    a, b = cfg.interval
    lam, (ta, tb) = muntz_to_exponential([v.real for v in cfg.eigenvalues], a, b)
    rec = {
        "exponents": [v.real for v in cfg.eigenvalues],
        "eigenvalues": [complex(v) for v in lam.values()],
        "interval": [ta, tb],
        "note": "density in C[a,b] requires the sum of 1/r_j to diverge",
    }
    return {"record": rec}


DISPATCH = {
    "check": _cmd_check,
    "fundamental": _cmd_fundamental,
    "basis": _cmd_basis,
    "operator": _cmd_operator,
    "approx": _cmd_approx,
    "converge": _cmd_converge,
    "muntz": _cmd_muntz,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``; returns the exit status."""
    try:
        report = DISPATCH[cfg.command](cfg)
    except UsageError as exc:
        print(f"expbern: usage error: {exc}", file=sys.stderr)
        return 2
    except (ExpBernError, ValueError, ArithmeticError) as exc:
        print(f"expbern: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    try:
        emit(report, cfg.out_format, cfg.output)
    except OSError as exc:
        print(f"expbern: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if any(a in ("-h", "--help") for a in argv):
        _build_parser().print_help()
        return 0
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"expbern: usage error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
