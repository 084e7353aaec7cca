"""Batch front end: INI config in, CSV/JSON artifacts out.

One scenario per invocation; every run writes a manifest echoing the fully
resolved configuration so outputs are reproducible byte for byte from the
config and seed alone (no timestamps, sorted keys, fixed float formatting).

Exit codes: 0 ok, 2 config error, 3 numerical non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .averages import average_trace, default_centers, grid_lipschitz
from .capacity import (
    CapacityCache,
    ball_capacity_estimate,
    capacity_ball_radial,
    capacity_variational,
    riesz_capacity_variational,
)
from .errors import ConfigurationError, NumericalError
from .grid import ball_mask, build_domain, save_csv
from .norms import luxemburg_norm, modular
from .strongtype import (
    TestFunctionSpec,
    build_test_function,
    derived_psi,
    explicit_psi,
    verify_strong_type,
)
from .young import (
    YoungSpec,
    check_delta2,
    check_delta2_plus,
    check_pairing,
    check_submultiplicative_f,
    factored,
    load_table_csv,
)

SCENARIOS = ("check-conditions", "norm", "capacity", "strong-type", "averages")

_YOUNG_KEYS = {"family": str, "p": float, "theta": float, "gamma": float,
               "c0": float, "table": str}

SCHEMA = {
    "young": _YOUNG_KEYS,
    "psi": {"mode": str, **_YOUNG_KEYS},
    "domain": {"n": int, "r": float, "resolution": int},
    "run": {"scenario": str, "seed": int, "threads": int},
    "check-conditions": {"ceiling": float},
    "norm": {"shape": str, "amplitude": float, "tent_r": float, "sigma": float,
             "r_in": float, "r_out": float},
    "capacity": {"r": float, "method": str, "radial_oracle": bool,
                 "estimate": bool, "write_minimizer": bool},
    "strong-type": {"functions": str, "lambda_min_exp": int,
                    "lambda_max_exp": int},
    "averages": {"functions": str, "j_max": int, "r0": float,
                 "epsilon": float, "center_spacing": float},
}

DEFAULTS = {
    "young": {"family": "power", "p": 2.0, "theta": 0.0, "gamma": 0.0,
              "c0": None, "table": None},
    "psi": {"mode": "derived"},
    "domain": {"n": 2, "r": 1.0, "resolution": 128},
    "run": {"scenario": None, "seed": 0, "threads": 1},
    "check-conditions": {"ceiling": math.inf},
    "norm": {"shape": "tent", "amplitude": 1.0, "tent_r": 0.5, "sigma": 0.2,
             "r_in": 0.2, "r_out": 0.5},
    "capacity": {"r": 0.25, "method": "variational", "radial_oracle": True,
                 "estimate": False, "write_minimizer": False},
    "strong-type": {"functions": "tent,bump,plateau,two_peak,random_smooth",
                    "lambda_min_exp": -4, "lambda_max_exp": 4},
    "averages": {"functions": "tent,bump", "j_max": 2, "r0": 0.25,
                 "epsilon": 0.05, "center_spacing": 0.2},
}


def _coerce(raw: str, typ, section: str, key: str):
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError as exc:
        raise ConfigurationError(f"[{section}] {key} = {raw!r}: not a {typ.__name__}") from exc


def load_config(path: Path) -> dict:
    """Parse and validate an INI config into a nested dict with defaults."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc

    if not parser.sections():
        raise ConfigurationError("config file defines no sections")

    cfg = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        cfg[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]")
            cfg[section][key] = _coerce(raw, SCHEMA[section][key], section, key)

    resolved = {}
    for section, defaults in DEFAULTS.items():
        resolved[section] = dict(defaults)
        resolved[section].update(cfg.get(section, {}))
    return resolved


def _young_from(section: dict, base_dir: Path) -> YoungSpec:
    family = section.get("family", "power")
    kw = {}
    if section.get("p") is not None:
        kw["p"] = section["p"]
    if section.get("theta") is not None:
        kw["theta"] = section["theta"]
    if section.get("gamma") is not None:
        kw["gamma"] = section["gamma"]
    if section.get("c0") is not None:
        kw["c0"] = section["c0"]
    if family == "custom_table":
        table = section.get("table")
        if not table:
            raise ConfigurationError("custom_table needs a table CSV path")
        return load_table_csv(base_dir / table)
    return YoungSpec(family, **kw)


def _psi_from(cfg: dict, phi_spec: YoungSpec, base_dir: Path):
    section = dict(cfg["psi"])
    mode = section.pop("mode", "derived")
    if mode == "derived":
        return derived_psi(phi_spec)
    if mode == "explicit":
        defaults_only = all(section.get(k) is None for k in _YOUNG_KEYS)
        if defaults_only:
            raise ConfigurationError("explicit psi needs its own family record")
        return explicit_psi(_young_from(section, base_dir))
    raise ConfigurationError(f"psi mode must be derived or explicit, got {mode!r}")


def _report_dict(rep) -> dict:
    return {
        "condition": rep.condition,
        "c_emp": rep.c_emp,
        "worst_point": list(rep.worst_point),
        "passed": rep.passed,
        "growing": rep.growing,
        "truncated": rep.truncated,
        "details": rep.details,
    }


def _json_dump(obj, path: Path) -> None:
    def clean(x):
        if isinstance(x, dict):
            return {k: clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, (np.floating, np.integer, np.bool_)):
            x = x.item()
        if isinstance(x, float):
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            if math.isnan(x):
                return "nan"
        return x

    path.write_text(json.dumps(clean(obj), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _parse_functions(names: str, seed: int):
    specs = []
    for name in names.split(","):
        name = name.strip()
        if not name:
            continue
        if name == "random_smooth":
            specs.append(TestFunctionSpec("random_smooth", seed=seed))
        else:
            specs.append(TestFunctionSpec(name))
    if not specs:
        raise ConfigurationError("no test functions requested")
    return specs


def _norm_function_spec(params: dict) -> TestFunctionSpec:
    return TestFunctionSpec(params["shape"], amplitude=params["amplitude"],
                            r=params["tent_r"], sigma=params["sigma"],
                            r_in=params["r_in"], r_out=params["r_out"])


def run(config: dict, scenario: str, out_dir: Path, base_dir: Path) -> int:
    """Execute one scenario; returns the process exit code."""
    if scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {scenario!r}")
    phi_spec = _young_from(config["young"], base_dir)
    seed = config["run"]["seed"]

    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "scenario": scenario, "config": config}
    _json_dump(manifest, out_dir / "manifest.json")

    exit_code = 0

    if scenario == "check-conditions":
        ceiling = config["check-conditions"]["ceiling"]
        pair = factored(phi_spec)
        psi = _psi_from(config, phi_spec, base_dir)
        psi_part = (lambda t: np.asarray(psi(t), dtype=float)
                    / pair.f_part(np.asarray(t, dtype=float)))
        reports = {
            "delta2": check_delta2(phi_spec, ceiling=ceiling),
            "delta2_plus": check_delta2_plus(phi_spec),
            "submultiplicative_f": check_submultiplicative_f(pair.f_part, ceiling=ceiling),
            "pairing": check_pairing(pair.phi_part, psi_part, ceiling=ceiling),
        }
        payload = {name: _report_dict(rep) for name, rep in reports.items()}
        payload["all_passed"] = all(rep.passed for rep in reports.values())
        _json_dump(payload, out_dir / "conditions.json")

    elif scenario == "norm":
        dom = build_domain(config["domain"]["n"], config["domain"]["r"],
                           config["domain"]["resolution"])
        fn_spec = _norm_function_spec(config["norm"])
        u = build_test_function(fn_spec, dom)
        mod = modular(u, phi_spec)
        _json_dump({"function": fn_spec.tag, "modular": mod.value,
                    "luxemburg_norm": luxemburg_norm(u, phi_spec)},
                   out_dir / "norm.json")

    elif scenario == "capacity":
        dom = build_domain(config["domain"]["n"], config["domain"]["r"],
                           config["domain"]["resolution"])
        params = config["capacity"]
        E = ball_mask(dom, params["r"])
        if params["method"] == "variational":
            res = capacity_variational(E, phi_spec, dom)
        elif params["method"] == "riesz":
            res = riesz_capacity_variational(E, phi_spec, dom)
        else:
            raise ConfigurationError(f"unknown capacity method {params['method']!r}")
        payload = res.summary()
        payload["set"] = f"ball(r={params['r']:g})"
        if params["radial_oracle"] and params["method"] == "variational":
            payload["radial_oracle"] = capacity_ball_radial(
                params["r"], phi_spec, dom.R, dom.n)
        if params["estimate"]:
            est = ball_capacity_estimate(params["r"], phi_spec, dom.R, dom.n)
            payload["ball_estimate"] = {"F": est.F_value, "estimate": est.estimate}
        _json_dump(payload, out_dir / "capacity.json")
        if params["write_minimizer"]:
            save_csv(res.minimizer, out_dir / "minimizer.csv")
        if not res.converged:
            exit_code = 3

    elif scenario == "strong-type":
        dom = build_domain(config["domain"]["n"], config["domain"]["r"],
                           config["domain"]["resolution"])
        psi = _psi_from(config, phi_spec, base_dir)
        params = config["strong-type"]
        suite = _parse_functions(params["functions"], seed)
        lambdas = [2.0 ** j for j in range(params["lambda_min_exp"],
                                           params["lambda_max_exp"] + 1)]
        reports, verdict = verify_strong_type(suite, phi_spec, psi, dom,
                                              lambdas=lambdas)
        with open(out_dir / "strongtype.csv", "w", encoding="utf-8") as fh:
            fh.write("tag,lambda,k,level_capacity,psi_weight,lhs_partial\n")
            for rep in reports:
                for row in rep.levels:
                    fh.write(f"{rep.tag},{rep.amplitude:.12g},{row.k},"
                             f"{row.capacity:.12g},{row.psi_weight:.12g},"
                             f"{row.lhs_partial:.12g}\n")
        _json_dump({
            "reports": [rep.summary() for rep in reports],
            "verdict": {
                "max_k_emp": verdict.max_k_emp,
                "stable": verdict.stable,
                "all_converged": verdict.all_converged,
                "conditions_ok": verdict.conditions_ok,
                "per_function": verdict.per_function,
            },
        }, out_dir / "strongtype.json")
        if not verdict.all_converged:
            exit_code = 3

    elif scenario == "averages":
        dom = build_domain(config["domain"]["n"], config["domain"]["r"],
                           config["domain"]["resolution"])
        psi = _psi_from(config, phi_spec, base_dir)
        params = config["averages"]
        suite = _parse_functions(params["functions"], seed)
        cache = CapacityCache(phi_spec, dom)
        traces = []
        rows = []
        for fn_spec in suite:
            u = build_test_function(fn_spec, dom)
            L = grid_lipschitz(u)
            for center in default_centers(dom, params["center_spacing"]):
                tr = average_trace(u, center, phi_spec, psi,
                                   j_max=params["j_max"], r0=params["r0"],
                                   epsilon=params["epsilon"], cache=cache)
                traces.append({
                    "function": fn_spec.tag,
                    "center": list(tr.center),
                    "final": tr.final,
                    "passed": tr.passed,
                    "truncated": tr.truncated,
                    "lipschitz": L,
                })
                for r, v in zip(tr.radii, tr.values):
                    rows.append((fn_spec.tag, tr.center, r, v))
        with open(out_dir / "traces.csv", "w", encoding="utf-8") as fh:
            fh.write("tag,x0,r,average\n")
            for tag, center, r, v in rows:
                loc = "(" + " ".join(f"{c:.6g}" for c in center) + ")"
                fh.write(f"{tag},{loc},{r:.12g},{v:.12g}\n")
        _json_dump({"traces": traces,
                    "all_passed": all(t["passed"] for t in traces)},
                   out_dir / "verdict.json")

    return exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="orlicap",
        description="Capacitary strong-type inequality workbench")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", required=True, type=Path)
        sp.add_argument("--threads", type=int, default=None,
                        help="recorded in the manifest; solves are"
                             " deterministic single-process chains")
        sp.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        declared = config["run"]["scenario"]
        if declared is not None and declared != args.scenario:
            raise ConfigurationError(
                f"config declares scenario {declared!r} but {args.scenario!r} was invoked")
        config["run"]["scenario"] = args.scenario
        if args.seed is not None:
            config["run"]["seed"] = args.seed
        if args.threads is not None:
            config["run"]["threads"] = args.threads
        return run(config, args.scenario, args.out, args.config.parent)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
