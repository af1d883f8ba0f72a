"""Command-line interface: ``pairbounds {bounds,ci,simulate,verify,stats}``.

Exit codes: 0 on success (an empty identified set is a success with status
``"empty"``), 1 on solver or check failure, 2 on usage, config or data errors.
Reports are JSON documents validated against ``schemas/report-v1.json``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .data import AllBlocksEmpty, ParseError, empirical_cells, ingest, write_long, write_wide, array_to_records
from .inference import METHODS, ConfidenceReport, InferenceConfig, confidence_interval
from .program import (
    ADE,
    ASE,
    EmptyTypeSpace,
    FixedAllocation,
    IdentifiedInterval,
    PolicyTarget,
    SolverFailure,
    bounds,
    build_program,
    witness_summary,
)
from .restrictions import Restriction, RestrictionError, UnsupportedNonlinear, compile_all, falsifiable_combination_check
from .simulate import PRESETS, MemberParams, StructuralDgp, sample_dataset
from .typespace import TypeSpaceConfig
from . import verify as verify_mod

log = logging.getLogger("pairbounds")

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad flags, config or input data."""


def _load_schema(name: str) -> dict:
    return json.loads(resources.files("pairbounds").joinpath("schemas", name).read_text(encoding="utf-8"))


def validate_report(report: dict) -> None:
    jsonschema.validate(report, _load_schema("report-v1.json"))


# --- config ---------------------------------------------------------------

def load_config(path) -> dict:
    """Parse and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config {path} is not valid TOML: {exc}") from exc
    validator = jsonschema.Draft202012Validator(_load_schema("config-v1.json"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = [f"{'/'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
        raise UsageError("config schema violation:\n  " + "\n  ".join(lines))
    return cfg


def _merge(flag_value, cfg_value, name, warn_list):
    """Config supersedes flags; a differing flag raises a warning."""
    if cfg_value is None:
        return flag_value
    if flag_value is not None and flag_value != cfg_value:
        msg = f"config value for {name} ({cfg_value!r}) overrides flag ({flag_value!r})"
        warn_list.append(msg)
        log.warning(msg)
    return cfg_value


def _estimand_from(spec: dict):
    kind = spec.get("kind", "ade")
    member = int(spec.get("member", 1))
    if kind == "ade":
        return ADE(member)
    if kind == "ase":
        return ASE(member)
    if kind == "fixed_allocation":
        if "alloc1" not in spec:
            raise UsageError("estimand.alloc1 is required for fixed_allocation")
        alloc2 = spec.get("alloc2", (0, 0))
        return FixedAllocation(member, tuple(spec["alloc1"]), None if alloc2 in (None, "none") else tuple(alloc2))
    if kind == "policy_target":
        contrast = spec.get("contrast")
        if contrast is not None:
            contrast = (int(contrast["d_forced"]), tuple(contrast["offers"]))
        return PolicyTarget(member, int(spec.get("d_forced", 1)), tuple(spec.get("offers", (0, 0))), contrast)
    raise UsageError(f"unknown estimand kind {kind!r}")


def _resolve_estimand(args, cfg, warn_list):
    cfg_est = cfg.get("estimand")
    flag = {"kind": args.estimand} if args.estimand else None
    if flag is not None and args.member is not None:
        flag["member"] = args.member
    if cfg_est is not None:
        if flag is not None and (flag.get("kind") != cfg_est.get("kind") or
                                 flag.get("member", cfg_est.get("member", 1)) != cfg_est.get("member", 1)):
            msg = f"config estimand {cfg_est} overrides flags {flag}"
            warn_list.append(msg)
            log.warning(msg)
        return _estimand_from(cfg_est)
    spec = flag or {"kind": "ade"}
    if args.member is not None:
        spec["member"] = args.member
    return _estimand_from(spec)


def _resolve_restrictions(args, cfg, warn_list) -> list[Restriction]:
    if "restrictions" in cfg:
        if args.restriction:
            msg = "config restrictions override --restriction flags"
            warn_list.append(msg)
            log.warning(msg)
        return [Restriction(r["kind"], r.get("eps"), r.get("scope", "both")) for r in cfg["restrictions"]]
    return [Restriction.parse(r) for r in (args.restriction or [])]


def _resolve_data(args, cfg, warn_list):
    dcfg = cfg.get("data", {})
    path = _merge(args.data, dcfg.get("path"), "data.path", warn_list)
    if path is None:
        raise UsageError("no data file: pass --data or set data.path in the config")
    schema = _merge(args.schema, dcfg.get("schema"), "data.schema", warn_list) or "wide"
    role_map = dcfg.get("role_map")
    try:
        records = ingest(path, schema=schema, role_map=role_map)
        obs = empirical_cells(records)
    except FileNotFoundError as exc:
        raise UsageError(f"data file not found: {path}") from exc
    except (ParseError, AllBlocksEmpty) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return records, obs


def _resolve_dgp(args, cfg):
    dcfg = cfg.get("dgp", {})
    preset = dcfg.get("preset", args.preset)
    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        return PRESETS[preset](), preset
    kwargs = {}
    for m in ("member1", "member2"):
        if m in dcfg:
            kwargs[m] = MemberParams(**dcfg[m])
    for key in ("rho", "offer_probs", "selection"):
        if key in dcfg:
            kwargs[key] = dcfg[key]
    return StructuralDgp(**kwargs), None


def _threads(args, cfg):
    return int(cfg.get("threads", args.threads or os.cpu_count() or 1))


# --- reports ---------------------------------------------------------------

def _base_report(command: str, status: str, warn_list, timings) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "status": status,
            "timings": {k: float(v) for k, v in timings.items()}, "warnings": list(warn_list)}


def _emit(report: dict, out) -> None:
    validate_report(report)
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _restriction_warnings(restrictions, warn_list):
    for msg in falsifiable_combination_check(compile_all(restrictions)):
        warn_list.append(msg)
        log.warning(msg)


# --- commands ---------------------------------------------------------------

def _program_for(args, cfg, warn_list, timings):
    estimand = _resolve_estimand(args, cfg, warn_list)
    restrictions = _resolve_restrictions(args, cfg, warn_list)
    _restriction_warnings(restrictions, warn_list)
    t = time.perf_counter()
    records, obs = _resolve_data(args, cfg, warn_list)
    timings["ingest"] = time.perf_counter() - t
    t = time.perf_counter()
    try:
        spec = build_program(TypeSpaceConfig(active_profiles=obs.active_blocks), restrictions, estimand, obs)
    except EmptyTypeSpace as exc:
        spec = None
        warn_list.append(f"{exc}; the identified set is empty")
    timings["build"] = time.perf_counter() - t
    return estimand, restrictions, records, obs, spec


def _empty_interval():
    return IdentifiedInterval(np.nan, np.nan, "empty", message="no admissible pair type")


def _data_summary(obs):
    return {"n": obs.n, "n_z": [int(v) for v in obs.n_z], "active_blocks": list(obs.active_blocks)}


def cmd_bounds(args, cfg) -> int:
    warn_list, timings = [], {}
    estimand, restrictions, _, obs, spec = _program_for(args, cfg, warn_list, timings)
    t = time.perf_counter()
    iv = bounds(spec) if spec is not None else _empty_interval()
    timings["solve"] = time.perf_counter() - t
    report = _base_report("bounds", iv.status, warn_list, timings)
    report.update({
        "estimand": estimand.to_dict(),
        "restrictions": [r.to_dict() for r in restrictions],
        "interval": iv.to_dict(),
        "witness": {"lower": witness_summary(spec, iv.witness_lower) if spec is not None else [],
                    "upper": witness_summary(spec, iv.witness_upper) if spec is not None else []},
        "program": _program_summary(spec),
        "data": _data_summary(obs),
    })
    _emit(report, _merge(args.out, cfg.get("output"), "output", warn_list))
    return EXIT_OK


def _program_summary(spec) -> dict:
    if spec is None:
        return {"columns": 0}
    return {"raw_pair_types": int(spec.raw_count), "columns": int(spec.n_columns),
            "dedup_ratio": float(spec.raw_count / max(1, spec.n_columns)), "build_seconds": float(spec.build_seconds)}


def cmd_ci(args, cfg) -> int:
    warn_list, timings = [], {}
    estimand, restrictions, records, obs, spec = _program_for(args, cfg, warn_list, timings)
    icfg = dict(cfg.get("inference", {}))
    method = _merge(args.method, icfg.pop("method", None), "inference.method", warn_list) or "basis_bootstrap"
    alpha = _merge(args.alpha, icfg.pop("alpha", None), "inference.alpha", warn_list)
    reps = _merge(args.reps, icfg.pop("reps", None), "inference.reps", warn_list)
    seed = _merge(args.seed, cfg.get("seed"), "seed", warn_list)
    conf = InferenceConfig(method=method, alpha=0.05 if alpha is None else alpha, reps=200 if reps is None else reps,
                           seed=0 if seed is None else seed, threads=_threads(args, cfg), **icfg)
    t = time.perf_counter()
    if spec is None:
        rep = ConfidenceReport(conf.method, np.nan, np.nan, _empty_interval(), conf.alpha)
    else:
        rep = confidence_interval(spec, records, conf)
    timings["inference"] = time.perf_counter() - t
    status = "empty" if rep.point_bounds.is_empty else "interval"
    report = _base_report("ci", status, warn_list, timings)
    report.update({
        "estimand": estimand.to_dict(),
        "restrictions": [r.to_dict() for r in restrictions],
        "interval": rep.point_bounds.to_dict(),
        "ci": rep.to_dict(),
        "data": _data_summary(obs),
    })
    _emit(report, _merge(args.out, cfg.get("output"), "output", warn_list))
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    warn_list, timings = [], {}
    dcfg = cfg.get("dgp", {})
    n = _merge(args.n, dcfg.get("n"), "dgp.n", warn_list)
    if n is None or n < 1:
        raise UsageError(f"sample size must be a positive integer, got {n}")
    if not args.data_out:
        raise UsageError("simulate needs --data-out for the generated CSV")
    seed = _merge(args.seed, cfg.get("seed"), "seed", warn_list) or 0
    dgp, preset = _resolve_dgp(args, cfg)
    t = time.perf_counter()
    arr = sample_dataset(dgp, n, seed=seed)
    records = array_to_records(arr)
    (write_long if args.schema == "long" else write_wide)(records, args.data_out)
    timings["simulate"] = time.perf_counter() - t
    obs = empirical_cells(arr)
    takeup = []
    for k in obs.active_blocks:
        blk = obs.block(k)
        takeup.append({"block": k, "p_d1": float(blk[[j for j in range(16) if j & 2]].sum()),
                       "p_d2": float(blk[[j for j in range(16) if j & 1]].sum())})
    report = _base_report("simulate", "ok", warn_list, timings)
    report.update({"simulation": {"n": int(n), "seed": int(seed), "path": str(args.data_out), "preset": preset,
                                  "observed_takeup": takeup},
                   "data": _data_summary(obs)})
    _emit(report, _merge(args.out, cfg.get("output"), "output", warn_list))
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    warn_list, timings = [], {}
    seed = _merge(args.seed, cfg.get("seed"), "seed", warn_list) or 0
    t = time.perf_counter()
    try:
        results = verify_mod.run_checks(args.checks, trials=args.trials, seed=seed, scale=args.scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    timings["verify"] = time.perf_counter() - t
    passed = all(r.passed for r in results)
    report = _base_report("verify", "pass" if passed else "fail", warn_list, timings)
    report["checks"] = [_finite(r.to_dict()) for r in results]
    _emit(report, _merge(args.out, cfg.get("output"), "output", warn_list))
    return EXIT_OK if passed else EXIT_FAIL


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def cmd_stats(args, cfg) -> int:
    warn_list, timings = [], {}
    restrictions = _resolve_restrictions(args, cfg, warn_list)
    _restriction_warnings(restrictions, warn_list)
    estimand = _resolve_estimand(args, cfg, warn_list)
    blocks = tuple(sorted({int(b) for b in args.blocks.split(",")})) if args.blocks else (0, 1, 2, 3)
    if not blocks or any(b not in range(4) for b in blocks):
        raise UsageError("--blocks must list offer blocks among 0,1,2,3")
    t = time.perf_counter()
    spec = build_program(TypeSpaceConfig(active_profiles=blocks, class_filter=args.class_filter), restrictions, estimand)
    timings["build"] = time.perf_counter() - t
    st = spec.stats()
    report = _base_report("stats", "ok", warn_list, timings)
    report.update({
        "estimand": estimand.to_dict(),
        "restrictions": [r.to_dict() for r in restrictions],
        "stats": {"raw_pairs": int(st["raw_pair_types"]), "columns": int(st["columns"]),
                  "dedup_ratio": float(st["dedup_ratio"]), "rows": int(st["rows"]), "rank": int(st["rank"]),
                  "active_blocks": list(blocks)},
    })
    _emit(report, _merge(args.out, cfg.get("output"), "output", warn_list))
    return EXIT_OK


COMMANDS = {"bounds": cmd_bounds, "ci": cmd_ci, "simulate": cmd_simulate, "verify": cmd_verify, "stats": cmd_stats}


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration; its values supersede flags")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--estimand", choices=["ade", "ase"], default=None)
    model.add_argument("--member", type=int, choices=[1, 2], default=None)
    model.add_argument("--restriction", action="append", metavar="KIND[:EPS][:SCOPE]",
                       help="repeatable, e.g. dominance or eps_vb_monotone:0.02:member2")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--data", help="household CSV file")
    data.add_argument("--schema", choices=["wide", "long"], default=None)

    p = argparse.ArgumentParser(prog="pairbounds", description="Sharp bounds for paired encouragement designs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("bounds", parents=[common, model, data], help="identified interval from data")

    ci = sub.add_parser("ci", parents=[common, model, data], help="confidence interval for the identified set")
    ci.add_argument("--method", choices=list(METHODS), default=None)
    ci.add_argument("--alpha", type=float, default=None)
    ci.add_argument("--reps", type=int, default=None)

    sim = sub.add_parser("simulate", parents=[common], help="draw a household dataset from a DGP")
    sim.add_argument("--preset", choices=sorted(PRESETS), default=None)
    sim.add_argument("--n", type=int, default=None)
    sim.add_argument("--data-out", help="CSV path for the simulated households")
    sim.add_argument("--schema", choices=["wide", "long"], default="wide")

    ver = sub.add_parser("verify", parents=[common], help="run structural checks on random instances")
    ver.add_argument("checks", nargs="*", help=f"subset of {sorted(verify_mod.CHECKS)} (default: all)")
    ver.add_argument("--trials", type=int, default=20)
    ver.add_argument("--scale", choices=["reduced", "full"], default="reduced")

    st = sub.add_parser("stats", parents=[common, model], help="type-space and program size diagnostics")
    st.add_argument("--blocks", help="comma-separated active offer blocks (default 0,1,2,3)")
    st.add_argument("--class-filter", choices=["dominant", "supermodular", "submodular", "symmetric"], default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else {}
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RestrictionError, UnsupportedNonlinear, EmptyTypeSpace, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverFailure, jsonschema.ValidationError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
