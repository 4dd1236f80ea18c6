"""
Batch front end.

    heatctl {kernel,flow,control-full,control-sub,invert,verify}
            [--config PATH] [--out DIR] [--seed N] [--variant V] [--modes N] [--grid M]

Exit codes: 0 success, 1 configuration error, 2 convergence failure,
3 invariant failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import backinv, checks, export, fullctl, kernel, subctl
from .domain import (
    CIRCLE,
    INTERVAL,
    STURM_LIOUVILLE,
    SubdomainWindow,
    build_circle_domain,
    build_interval_domain,
    build_sturm_liouville_domain,
    synthesize,
)
from .errors import (
    CholeskyBreakdown,
    ConvergenceError,
    DomainError,
    EigensolverError,
    RouteMismatch,
    WindowError,
)
from .lcg import random_coefficients

log = logging.getLogger("heatctl")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_INVARIANT = 0, 1, 2, 3

_number = {"type": "number"}
_field = {
    "oneOf": [
        {"type": "array", "items": _number, "minItems": 1},
        {
            "type": "object",
            "properties": {
                "coefficients": {"type": "array", "items": _number, "minItems": 1},
                "random": {"type": "integer", "minimum": 1},
                "evolve": {"type": "number", "minimum": 0},
                "scale": _number,
            },
            "additionalProperties": False,
        },
    ]
}

SCHEMA = {
    "type": "object",
    "required": ["domain", "problem"],
    "additionalProperties": False,
    "properties": {
        "domain": {
            "type": "object",
            "required": ["kind", "length", "modes", "grid"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": [INTERVAL, CIRCLE, STURM_LIOUVILLE]},
                "length": {"type": "number", "exclusiveMinimum": 0},
                "modes": {"type": "integer", "minimum": 1},
                "grid": {"type": "integer", "minimum": 4},
                "coefficient": {"type": "array", "items": _number},
            },
        },
        "problem": {
            "type": "object",
            "required": ["horizon"],
            "additionalProperties": False,
            "properties": {
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "switch_time": _number,
                "u0": _field,
                "z": _field,
                "window": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
                "m": {"type": "integer", "minimum": 1},
                "kernel_time": {"type": "number", "exclusiveMinimum": 0},
                "invert_time": {"type": "number", "exclusiveMinimum": 0},
                "segments": {"type": "integer", "minimum": 1},
                "segment_target": {"type": "number", "exclusiveMinimum": 0},
                "terms": {"type": "integer", "minimum": 0},
                "grid_terms": {"type": "integer", "minimum": 0},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "series_cutoff": {"type": "number", "exclusiveMinimum": 0},
                "max_terms": {"type": "integer", "minimum": 1},
                "max_index": {"type": "integer", "minimum": 1},
                "cn_steps": {"type": "integer", "minimum": 64},
                "rk4_steps": {"type": "integer", "minimum": 16},
                "variant": {"enum": list(fullctl.VARIANTS)},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "trajectory_samples": {"type": "integer", "minimum": 2},
            },
        },
    },
}

DEFAULT_CONFIG = {
    "domain": {"kind": INTERVAL, "length": math.pi, "modes": 32, "grid": 512},
    "problem": {
        "horizon": 1.0,
        "switch_time": 0.9,
        "u0": [1.0, 0.0, 0.5],
        "z": {"coefficients": [1.0, 1.0], "evolve": 0.3, "scale": 0.2},
        "window": [0.5, 1.5],
        "m": 8,
        "kernel_time": 0.1,
        "invert_time": 0.7,
        "segments": 3,
        "segment_target": 0.3,
        "terms": 40,
        "grid_terms": 25,
    },
    "tolerances": {
        "series_cutoff": 1e-14,
        "max_terms": 200,
        "max_index": 200,
        "cn_steps": 4096,
        "rk4_steps": 2000,
        "variant": "integers",
    },
    "output": {"dir": "out", "trajectory_samples": 11},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, overrides=None) -> dict:
    """Validate the user document, then fill defaults for optional keys.

    Validation runs on the document as written, so a missing required key
    (such as problem.horizon) is reported even though a default exists.
    """
    if path is None:
        user = copy.deepcopy(DEFAULT_CONFIG)
    else:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(user, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = [str(p) for p in exc.absolute_path]
        if exc.validator == "required":
            # name the missing key itself, e.g. problem/horizon
            missing = [k for k in exc.validator_value if k not in exc.instance]
            path += missing[:1]
        where = "/".join(path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    cfg = _merge(DEFAULT_CONFIG, user)
    for section, key, value in overrides or ():
        if value is not None:
            cfg[section][key] = value
    return cfg


def build_domain(dcfg: dict):
    kind, L, N, M = dcfg["kind"], dcfg["length"], dcfg["modes"], dcfg["grid"]
    if kind == INTERVAL:
        return build_interval_domain(L, N, M)
    if kind == CIRCLE:
        return build_circle_domain(L, N, M)
    a = dcfg.get("coefficient")
    if a is None:
        raise ConfigError("config error at domain/coefficient: required for sturm_liouville")
    return build_sturm_liouville_domain(np.asarray(a, dtype=float), L, M, N)


def build_field(domain, spec, seed: int, label: str):
    if isinstance(spec, list):
        spec = {"coefficients": spec}
    if ("coefficients" in spec) == ("random" in spec):
        raise ConfigError(f"config error at problem/{label}: give exactly one of coefficients, random")
    if "random" in spec:
        m = min(spec["random"], domain.n_modes)
        c = random_coefficients(m, seed)
    else:
        c = np.asarray(spec["coefficients"], dtype=float)
    if c.size > domain.n_modes:
        raise ConfigError(f"config error at problem/{label}: more coefficients than modes")
    f = synthesize(domain, c)
    if spec.get("evolve"):
        f = kernel.semigroup_apply(domain, spec["evolve"], f)
    return f * float(spec.get("scale", 1.0))


def _window(domain, problem):
    a, b = problem["window"]
    try:
        return SubdomainWindow(a, b)
    except DomainError as exc:
        raise ConfigError(f"config error at problem/window: {exc}") from exc


# commands return (summary, exit code); each writes its files into ``out``


def cmd_kernel(cfg, out: Path, seed: int):
    d = build_domain(cfg["domain"])
    t = cfg["problem"]["kernel_time"]
    xs = d.x[:: max(1, d.n_grid // 64)]
    g = kernel.kernel_matrix(d, t, xs, xs)
    export.matrix_csv(out / "kernel.csv", g, rows=xs, cols=xs)
    export.domain_descriptor_json(out / "domain.json", d)
    summary = {
        "command": "kernel",
        "time": t,
        "tail_bound": kernel.truncation_tail(d, t),
        "mass_center": kernel.kernel_mass(d, t, d.length / 2),
        "symmetry_error": float(np.max(np.abs(g - g.T))),
    }
    return summary, EXIT_OK


def cmd_flow(cfg, out: Path, seed: int):
    d = build_domain(cfg["domain"])
    p = cfg["problem"]
    T = p["horizon"]
    u0 = build_field(d, p["u0"], seed, "u0")
    times = np.linspace(0.0, T, cfg["output"]["trajectory_samples"])
    states = np.array([kernel.semigroup_apply(d, t, u0).values for t in times])
    uT = kernel.semigroup_apply(d, T, u0)
    export.trajectory_csv(out / "trajectory.csv", times, states, d.x)
    export.field_csv(out / "u0.csv", u0)
    export.field_csv(out / "uT.csv", uT)
    return {"command": "flow", "horizon": T, "norm_u0": u0.norm(), "norm_uT": uT.norm()}, EXIT_OK


def cmd_control_full(cfg, out: Path, seed: int):
    d = build_domain(cfg["domain"])
    p, tol = cfg["problem"], cfg["tolerances"]
    spec = fullctl.FullControlSpec(
        domain=d, u0=build_field(d, p["u0"], seed, "u0"), z=build_field(d, p["z"], seed + 1, "z"),
        horizon=p["horizon"], switch_time=p.get("switch_time"),
        series_cutoff=tol["series_cutoff"], max_terms=tol["max_terms"],
        max_index=tol["max_index"], variant=tol["variant"], cn_steps=tol["cn_steps"],
        trajectory_samples=cfg["output"]["trajectory_samples"],
    )
    r = fullctl.run_full_control(spec)
    export.field_csv(out / "f.csv", r.f)
    export.field_csv(out / "b.csv", r.b)
    export.field_csv(out / "terminal.csv", r.terminal)
    export.trajectory_csv(out / "trajectory.csv", r.times, r.trajectory, d.x)
    export.vector_csv(out / "mode_discrepancy.csv", "discrepancy", r.mode_discrepancy)
    summary = {"command": "control-full", **r.summary()}
    return summary, EXIT_OK if r.consistent else EXIT_INVARIANT


def cmd_control_sub(cfg, out: Path, seed: int):
    d = build_domain(cfg["domain"])
    p, tol = cfg["problem"], cfg["tolerances"]
    u0 = build_field(d, p["u0"], seed, "u0")
    w = _window(d, p)
    sy = subctl.solve_control(d, w, p["horizon"], p["m"], u0)
    rep = subctl.galerkin_verify(sy, u0, tol["rk4_steps"])
    export.matrix_csv(out / "alpha.csv", sy.alpha)
    export.vector_csv(out / "beta.csv", "beta", sy.beta)
    export.vector_csv(out / "s.csv", "s", sy.s)
    export.field_csv(out / "phi.csv", sy.phi())
    summary = {
        "command": "control-sub",
        **sy.summary(),
        "energy_quadrature": subctl.control_energy_quadrature(sy),
        "terminal_closed_form": rep.closed_form,
        "terminal_rk4": rep.integrated,
    }
    ok = sy.residual <= 1e-10 * max(float(np.max(np.abs(sy.beta))), np.finfo(float).tiny) \
        or not np.any(sy.beta)
    return summary, EXIT_OK if ok else EXIT_INVARIANT


def cmd_invert(cfg, out: Path, seed: int):
    d = build_domain(cfg["domain"])
    p = cfg["problem"]
    T, t = p["horizon"], p["invert_time"]
    u0 = build_field(d, p["u0"], seed, "u0")
    uT = kernel.semigroup_apply(d, T, u0)
    ref = kernel.semigroup_apply(d, t, u0)
    spec = backinv.invert_spectral(d, uT, t, T, p["terms"])
    grid = backinv.invert_grid(d, uT, t, T, p["grid_terms"])
    seg = backinv.invert_segmented(d, uT, p["segment_target"], T, p["segments"], p["terms"])
    seg_ref = kernel.semigroup_apply(d, p["segment_target"], u0)
    export.field_csv(out / "spectral.csv", spec)
    export.field_csv(out / "grid_best.csv", grid.field)
    export.field_csv(out / "segmented.csv", seg.field)
    export.trace_csv(out / "grid_trace.csv", grid.trace)
    win = backinv.inversion_window(T)
    summary = {
        "command": "invert",
        "window": [win.lower, win.upper],
        "t": t,
        "in_window": win.contains(t),
        "spectral_error": (spec - ref).norm() / max(ref.norm(), np.finfo(float).tiny),
        "grid_best_K": grid.best_K,
        "grid_min_error": grid.min_error,
        "grid_nonincreasing_to_min": grid.nonincreasing_to_min(),
        "grid_diverges": grid.diverges(),
        "segment_times": list(seg.times),
        "segment_ratio": seg.ratio,
        "segment_growth": seg.growth,
        "segment_violations": seg.violations,
        "segmented_error": (seg.field - seg_ref).norm() / max(seg_ref.norm(), np.finfo(float).tiny),
    }
    return summary, EXIT_OK


def cmd_verify(cfg, out: Path, seed: int):
    setup = checks.Setup(seed=seed, modes=cfg["domain"]["modes"], grid=cfg["domain"]["grid"])
    results = checks.run_checks(setup)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = [n for n, ok, _ in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    export.write_csv(out / "checks.csv", ["check", "status", "detail"],
                     ([n, "pass" if ok else "fail", d.replace(",", ";")] for n, ok, d in results))
    summary = {"command": "verify", "checks": len(results), "failed": failed}
    return summary, EXIT_INVARIANT if failed else EXIT_OK


COMMANDS = {
    "kernel": cmd_kernel,
    "flow": cmd_flow,
    "control-full": cmd_control_full,
    "control-sub": cmd_control_sub,
    "invert": cmd_invert,
    "verify": cmd_verify,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heatctl", description="Spectral heat-equation control toolkit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config; built-in defaults when omitted")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, default=0, help="LCG seed for random fields")
    ap.add_argument("--variant", choices=fullctl.VARIANTS)
    ap.add_argument("--modes", type=int)
    ap.add_argument("--grid", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, [
            ("domain", "modes", args.modes),
            ("domain", "grid", args.grid),
            ("tolerances", "variant", args.variant),
        ])
        out = Path(args.out or cfg["output"]["dir"])
        out.mkdir(parents=True, exist_ok=True)
        summary, code = COMMANDS[args.command](cfg, out, args.seed)
    except (ConfigError, DomainError, WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, EigensolverError, CholeskyBreakdown) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except RouteMismatch as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    summary["seed"] = args.seed
    summary["config"] = cfg
    summary["exit_code"] = code
    export.write_json(out / "summary.json", summary)
    return code


if __name__ == "__main__":
    sys.exit(main())
