"""Command-line entry point: ``python -m plbarrier --config run.json --out outdir``.

Exit status is 0 when every check passes, 1 when any check fails and 2
for configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .errors import (BParameterTooLarge, CFLViolation, ConditionCFailure, ContractViolation,
                     HypothesisFailure, SolverBreakdown, WrongRegime)
from .reports import to_jsonable

log = logging.getLogger("plbarrier")

COMMANDS = ("operator-check", "aux-check", "barrier-super", "barrier-sub", "limits", "simulate",
            "acceptance")
REPORT_SCHEMA_VERSION = 1

_profile_schema = {
    "oneOf": [
        {"type": "number"},
        {"type": "object",
         "properties": {"kind": {"enum": ["constant", "linear", "tabulated", "bump"]}}},
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "operator": {"oneOf": [
            {"type": "string"},
            {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}},
        ]},
        "n": {"type": "integer", "minimum": 2},
        "p": {"type": "number", "minimum": 2},
        "lower": {"type": "number", "exclusiveMinimum": 0},
        "upper": {"type": "number", "exclusiveMinimum": 0},
        "prefactor_power": {"type": "number", "minimum": 0},
        "sigma": {"type": "number", "minimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "Z": _profile_schema,
        "chi": _profile_schema,
        "h": _profile_schema,
        "seed": {"type": "integer", "minimum": 0},
        "sphere_budget": {"type": "integer", "minimum": 1000},
        "numeric": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "m": {"type": "number"},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "omega0": {"type": "number", "minimum": 0.7071067811865475, "exclusiveMaximum": 1},
                "R": {"type": "number", "exclusiveMinimum": 1},
                "family": {"enum": ["auto", "compact", "growth"]},
                "subcase": {"enum": ["a", "b", "c"]},
                "b_sequence": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "R_sequence": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "k": {"type": "number", "minimum": 1},
                "beta": {"type": "number", "exclusiveMinimum": 1},
                "beta_bar": {"type": "number", "minimum": 1},
                "rho": {"type": "number", "exclusiveMinimum": 0},
                "nr": {"type": "integer", "minimum": 5},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "grad_reg": {"type": "number", "minimum": 1e-8, "maximum": 1e-4},
                "kind": {"enum": ["radial_1d", "box_2d"]},
                "n_save": {"type": "integer", "minimum": 2},
                "sample_budget": {"type": "integer", "minimum": 10},
                "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1,
                                                         "maximum": 9}},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["json", "csv", "bin"]}},
            },
        },
    },
}

DEFAULT_NUMERIC = {"tol": 1e-9, "omega0": 0.75, "family": "auto", "b_sequence": [1e-2, 1e-3, 1e-4],
                   "R_sequence": [1e2, 1e3, 1e4], "rho": 10.0, "nr": 201, "grad_reg": 1e-6,
                   "kind": "radial_1d", "n_save": 51, "sample_budget": 1000}


class ConfigError(Exception):
    """Invalid configuration; carries human-readable diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def _describe(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "minimum":
        return f"{path} must be ≥ {err.validator_value}"
    if err.validator == "exclusiveMinimum":
        return f"{path} must be > {err.validator_value}"
    if err.validator in ("maximum", "exclusiveMaximum"):
        op = "≤" if err.validator == "maximum" else "<"
        return f"{path} must be {op} {err.validator_value}"
    if err.validator == "additionalProperties":
        return f"{path}: {err.message}"
    return f"{path}: {err.message}"


def load_config(path: str) -> dict:
    """Read and validate a JSON config.

    Raises
    ------
    ConfigError
        With line/column for JSON syntax errors and field paths for schema errors.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    v = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errs = sorted(v.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errs:
        raise ConfigError([_describe(e) for e in errs])


def _problem(cfg):
    from .problem import problem_from_dict

    try:
        return problem_from_dict(cfg)
    except (ContractViolation, TypeError, KeyError) as exc:
        raise ConfigError([f"problem: {exc}"]) from exc


def _check(name, passed, **info):
    return {"name": name, "passed": bool(passed), **info}


# ---------------------------------------------------------------------------
# commands


def cmd_operator_check(cfg, num, out, formats):
    from .operators import check_structure_conditions

    pb = _problem(cfg)
    rep = check_structure_conditions(pb.operator, num["sample_budget"], pb.seed, pb.L, pb.T,
                                     pb.sphere_budget)
    env = rep.envelope or {}
    checks = [_check("condition A", rep.passes_A, worst_monotone=rep.worst_monotone,
                     worst_zero=rep.worst_zero),
              _check("condition B", rep.passes_B, k1_estimate=rep.k1_estimate),
              _check("condition C", rep.passes_C, message=rep.message)]
    return checks, {"operator": pb.operator.to_dict(), "k1": pb.operator.k1,
                    "lambda0": env.get("lambda0"), "script_H": rep.script_H,
                    "envelopes": env, "Lambda_max_samples": rep.Lambda_max_samples}


def cmd_aux_check(cfg, num, out, formats):
    from .aux_functions import AuxFn, AuxFnParams, aux_bounds_check, make_aux_params, remark_forms_check

    if "beta" in num:
        params = AuxFnParams(num["beta"], num.get("beta_bar", num["beta"]))
        sigma = None
    else:
        pb = _problem(cfg)
        k = num.get("k", pb.k)
        sigma = pb.sigma
        eps = num.get("epsilon")
        if eps is None and math.isclose(k, 1.0) and sigma <= k + 1:
            from .barriers_super import default_epsilon
            eps = default_epsilon(sigma)
        params = make_aux_params(k, sigma, eps)
    fn = AuxFn(params)
    rep = aux_bounds_check(fn)
    checks = [_check(label, v["passed"], worst_slack=v["worst_slack"])
              for label, v in rep.items.items()]
    checks += [_check(label, v["passed"], max_rel_error=v["max_rel_error"])
               for label, v in rep.identities.items()]
    extra = {"aux": fn.to_dict()}
    if params.case in ("A", "C"):
        extra["case_displays"] = remark_forms_check(fn, sigma).to_dict()
    return checks, extra


def _case_filter(tag, full_tag, case):
    return case is None or case in (tag, full_tag)


def cmd_barrier_super(cfg, num, out, formats, case=None):
    from .barriers_super import admissible_b, build_super, super_residual

    pb = _problem(cfg)
    adm = admissible_b(pb, num.get("epsilon"))
    b = num.get("b", min(0.01, 0.5 * adm["bound"]))
    w = build_super(pb, b, m=num.get("m", pb.nu), epsilon=num.get("epsilon"))
    if not _case_filter(w.case_tag, w.full_tag, case):
        return [], {"skipped": f"case {w.full_tag} filtered out"}
    rep = super_residual(w, pb, tol=num["tol"])
    if "csv" in formats:
        rep.to_csv(os.path.join(out, "residual.csv"))
    checks = [_check(f"super residual {w.full_tag}", rep.residual_ok, max_residual=rep.extreme,
                     worst_node=list(rep.worst_node)),
              _check(f"bound dominance {w.full_tag}", rep.bound_ok, slack=rep.bound_slack)]
    return checks, {"barrier": w.to_dict(), "admissible_b": adm}


def cmd_barrier_sub(cfg, num, out, formats, case=None):
    from .barriers_sub import (build_sub_compact, build_sub_growth, compact_subcase,
                               growth_admissible_b, sub_residual)

    pb = _problem(cfg)
    fam = num["family"]
    if fam == "auto":
        try:
            compact_subcase(pb)
            fam = "compact"
        except WrongRegime:
            fam = "growth"
    if fam == "compact":
        w = build_sub_compact(pb, num["omega0"], num.get("R"), num.get("subcase"))
    else:
        b = num.get("b", min(0.01, 0.5 * growth_admissible_b(pb)["bound"]))
        w = build_sub_growth(pb, b, num.get("m"), num.get("epsilon"))
    if not _case_filter(w.case_tag, w.full_tag, case):
        return [], {"skipped": f"case {w.full_tag} filtered out"}
    rep = sub_residual(w, pb, tol=num["tol"])
    if "csv" in formats:
        rep.to_csv(os.path.join(out, "residual.csv"))
    checks = [_check(f"sub residual {w.full_tag}", rep.residual_ok, min_residual=rep.extreme,
                     worst_node=list(rep.worst_node)),
              _check(f"bound dominance {w.full_tag}", rep.bound_ok, slack=rep.bound_slack)]
    return checks, {"barrier": w.to_dict()}


def cmd_limits(cfg, num, out, formats, case=None):
    from .barriers_sub import compact_subcase, f_limit_study
    from .barriers_super import a_limit_study

    pb = _problem(cfg)
    checks, extra = [], {}
    st = a_limit_study(pb, m=pb.nu, b_sequence=num["b_sequence"], epsilon=num.get("epsilon"))
    if _case_filter(st.case_tag, "5." + st.case_tag, case):
        checks.append(_check(f"a-limit 5.{st.case_tag}", st.passed, tail_error=st.tail_error,
                             target=st.target))
        extra["a_limit"] = st.to_dict()
    try:
        sub = num.get("subcase") or compact_subcase(pb)
    except WrongRegime:
        sub = None
    if sub is not None and _case_filter("I." + sub, "6.I." + sub, case):
        fs = f_limit_study(pb, num["R_sequence"], num["omega0"], sub)
        checks.append(_check(f"F-limit 6.I.{sub}", fs.passed, tail_error=fs.tail_error,
                             target=fs.target))
        extra["F_limit"] = fs.to_dict()
    return checks, extra


def cmd_simulate(cfg, num, out, formats):
    from .verification import GrowthHypothesis, fd_solve, principle_check, select_principles

    pb = _problem(cfg)
    fld = fd_solve(pb, num["rho"], num["nr"], num.get("dt"), grad_reg=num["grad_reg"],
                   kind=num["kind"], n_save=num["n_save"])
    checks, extra = [], {"field": {k: v for k, v in fld.meta.items()}}
    for side, key in zip((1, -1), select_principles(pb)):
        hyp = GrowthHypothesis.for_problem(pb, side, eta=max(1.0, abs(pb.nu), abs(pb.mu)))
        try:
            rep = principle_check(fld, pb, key, hyp)
        except HypothesisFailure as exc:
            checks.append(_check(key, True, skipped=True, reason=str(exc)))
            continue
        checks.append(_check(key, rep.passed, min_margin=rep.min_margin, empirical=True))
        extra[key] = rep.to_dict()
    if "csv" in formats:
        fld.to_csv(os.path.join(out, "field.csv"))
    if "bin" in formats:
        fld.to_binary(os.path.join(out, "field.bin"))
    return checks, extra


def cmd_acceptance(cfg, num, out, formats, case=None, threads=1, seed=0):
    from .acceptance import run_all

    results = run_all(seed, case, threads, num.get("criteria"))
    checks = []
    for r in results:
        print(r.line())
        checks.append(_check(f"criterion {r.number}: {r.title}", r.passed, failures=r.failures,
                             limit_s=r.limit))
    runtimes = {str(r.number): {"runtime_s": r.runtime, "within_time": r.within_time}
                for r in results}
    timing_ok = all(r.within_time for r in results)
    return checks, {"criteria": [r.to_dict() for r in results]}, runtimes, timing_ok


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plbarrier", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, default=None, help="seed for sampling (overrides config)")
    ap.add_argument("--threads", type=int, default=1, help="parallel acceptance criteria")
    ap.add_argument("--case", default=None, help="only run barrier cases with this tag")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.threads < 1:
            raise ConfigError(["--threads must be ≥ 1"])
        num = {**DEFAULT_NUMERIC, **cfg.get("numeric", {})}
        output = cfg.get("output", {})
        out = args.out or output.get("dir", "plbarrier_out")
        formats = output.get("formats", ["json"])
        os.makedirs(out, exist_ok=True)
        command = cfg["command"]
        runtimes, timing_ok = None, True
        if command == "acceptance":
            checks, extra, runtimes, timing_ok = cmd_acceptance(
                cfg, num, out, formats, args.case, args.threads, cfg.get("seed", 0))
        elif command in ("barrier-super", "barrier-sub", "limits"):
            fn = {"barrier-super": cmd_barrier_super, "barrier-sub": cmd_barrier_sub,
                  "limits": cmd_limits}[command]
            checks, extra = fn(cfg, num, out, formats, args.case)
        else:
            fn = {"operator-check": cmd_operator_check, "aux-check": cmd_aux_check,
                  "simulate": cmd_simulate}[command]
            checks, extra = fn(cfg, num, out, formats)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return 2
    except (ContractViolation, WrongRegime, BParameterTooLarge) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ConditionCFailure, CFLViolation, SolverBreakdown) as exc:
        checks, extra = [_check(type(exc).__name__, False, message=str(exc))], {}
    passed = all(c["passed"] for c in checks) and timing_ok
    report = {"schema": REPORT_SCHEMA_VERSION, "command": command, "config": cfg,
              "passed": passed, "checks": checks, **extra}
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(to_jsonable(_finite(report)), fh, indent=2, sort_keys=True)
        fh.write("\n")
    meta = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "elapsed_s": time.perf_counter() - t0,
            "version": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "threads": args.threads, "case_filter": args.case, "runtimes": runtimes}
    with open(os.path.join(out, "metadata.json"), "w") as fh:
        json.dump(to_jsonable(meta), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in checks:
        if not c["passed"]:
            print(f"FAILED: {c['name']}", file=sys.stderr)
    return 0 if passed else 1


def _finite(x):
    """Replace non-finite floats by strings so the report is strict JSON."""
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    if isinstance(x, (float, np.floating)) and not math.isfinite(float(x)):
        return str(float(x))
    return x
