"""Command-line front end: runs, sweeps, bound tables, and ML queries.

Configs are JSON objects with a `schema_version` field and sections for the
problem, the flow law, initial conditions, integration options, and output
paths (documented in the README).  Trajectory CSVs carry 9-significant-digit
values and are byte-deterministic for identical configs.

Exit codes: 0 success, 2 usage/config/domain error, 3 simulation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from .flows import (
    ConditionNotMetError,
    FlowLaw,
    InsufficientConstantsError,
    SingularityError,
    bound_finite_time,
    bound_fixed_time_fractional,
    bound_fixed_time_second_order,
)
from .problems import quadratic_problem, zakharov_problem
from .sim import DivergenceError, SimOptions, applicable_bound, integrate, sweep
from .special import (
    MLSpec,
    PrecisionLossError,
    ZeroQuery,
    ZeroSearchError,
    ml_eval,
    ml_first_positive_zero,
)

SCHEMA_VERSION = 1

_TABLE_EXPONENTS = (1.7, 1.5, 1.3, 1.1, 1.05)

_TOP_LEVEL_KEYS = {"schema_version", "problem", "flow", "initial", "variations", "sim", "output"}


class ConfigError(ValueError):
    """A config file is unreadable, malformed, or fails validation."""


def _load_config(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc))
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError("%s is not valid JSON: %s" % (path, exc))
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(cfg) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            "config must declare schema_version %d, got %r"
            % (SCHEMA_VERSION, cfg.get("schema_version"))
        )
    return cfg


def _build_problem(cfg: dict):
    section = cfg.get("problem")
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError("config needs a problem section with a name")
    name = section["name"]
    try:
        if name == "quadratic":
            if "matrix" not in section:
                raise ConfigError("quadratic problem needs a matrix")
            return quadratic_problem(section["matrix"])
        if name == "zakharov":
            if "dimension" not in section:
                raise ConfigError("zakharov problem needs a dimension")
            return zakharov_problem(section["dimension"])
    except (ValueError, TypeError) as exc:
        raise ConfigError("invalid problem parameters: %s" % exc)
    raise ConfigError("unknown problem name %r (choose quadratic or zakharov)" % (name,))


def _build_flow(cfg: dict) -> FlowLaw:
    section = cfg.get("flow")
    if not isinstance(section, dict):
        raise ConfigError("config needs a flow section")
    kwargs = dict(section)
    variant = kwargs.pop("variant", None)
    if variant is None:
        raise ConfigError("flow section needs a variant")
    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    allowed = {"rho", "alpha", "lam", "beta", "delta"}
    unknown = set(kwargs) - allowed
    if unknown:
        raise ConfigError("unknown flow keys: %s" % ", ".join(sorted(unknown)))
    if "rho" not in kwargs or "alpha" not in kwargs:
        raise ConfigError("flow section needs rho and alpha")
    try:
        return FlowLaw(variant=variant, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError("invalid flow law: %s" % exc)


def _build_sim(cfg: dict, args) -> SimOptions:
    section = cfg.get("sim", {})
    if not isinstance(section, dict):
        raise ConfigError("sim section must be an object")
    allowed = {"step", "horizon", "eps_x", "eps_g", "record_stride"}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError("unknown sim keys: %s" % ", ".join(sorted(unknown)))
    kwargs = dict(section)
    if getattr(args, "step", None) is not None:
        kwargs["step"] = args.step
    if getattr(args, "horizon", None) is not None:
        kwargs["horizon"] = args.horizon
    try:
        return SimOptions(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError("invalid sim options: %s" % exc)


def _output_paths(cfg: dict, args, default_prefix: str):
    section = cfg.get("output", {})
    if not isinstance(section, dict):
        raise ConfigError("output section must be an object")
    unknown = set(section) - {"directory", "prefix"}
    if unknown:
        raise ConfigError("unknown output keys: %s" % ", ".join(sorted(unknown)))
    directory = section.get("directory", ".")
    if getattr(args, "out", None) is not None:
        directory = args.out
    prefix = section.get("prefix", default_prefix)
    if not isinstance(prefix, str) or not prefix:
        raise ConfigError("output prefix must be a non-empty string")
    return directory, prefix


def _fmt(value: float) -> str:
    return "%.9g" % value


def _write_trajectory_csv(path: str, traj) -> None:
    n = traj.states.shape[1]
    lines = ["t," + ",".join("x_%d" % (i + 1) for i in range(n)) + ",theta,V"]
    for i in range(len(traj.times)):
        cells = [_fmt(traj.times[i])]
        cells.extend(_fmt(v) for v in traj.states[i])
        cells.append(_fmt(traj.gains[i]) if traj.gains is not None else "")
        cells.append(_fmt(traj.lyapunov[i]) if traj.lyapunov is not None else "")
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _bound_payload(report) -> dict:
    return {
        "rule": report.rule,
        "bound": report.bound,
        "inputs": dict(report.inputs),
        "observed": report.observed,
        "notes": list(report.notes),
        "extras": dict(report.extras),
    }


def _sanitize(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("_") or "run"


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    problem = _build_problem(cfg)
    law = _build_flow(cfg)
    opts = _build_sim(cfg, args)
    x0 = cfg.get("initial")
    if x0 is None:
        raise ConfigError("run needs an initial section (a state vector)")
    directory, prefix = _output_paths(cfg, args, "run")

    try:
        traj = integrate(law, problem, x0, opts)
    except (ValueError, TypeError) as exc:
        raise ConfigError("invalid initial state: %s" % exc)

    bound_payload = None
    bound_error = None
    try:
        report = applicable_bound(law, problem, x0)
        if traj.convergence_time is not None:
            report = report.with_observed(traj.convergence_time)
        bound_payload = _bound_payload(report)
    except (InsufficientConstantsError, ConditionNotMetError, ZeroSearchError) as exc:
        bound_error = str(exc)

    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, prefix + ".csv")
    report_path = os.path.join(directory, prefix + "_report.json")
    _write_trajectory_csv(csv_path, traj)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "converged": traj.convergence_time is not None,
        "convergence_time": traj.convergence_time,
        "final_state": [float(v) for v in traj.final_state],
        "final_gain": float(traj.gains[-1]) if traj.gains is not None else None,
        "diagnostics": dict(traj.diagnostics),
        "bound": bound_payload,
        "bound_error": bound_error,
    }
    with open(report_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")

    if traj.convergence_time is not None:
        line = "converged at t=%s" % _fmt(traj.convergence_time)
    else:
        line = "no convergence before t=%s" % _fmt(opts.horizon)
    if bound_payload is not None:
        line += "  bound=%s (%s)" % (_fmt(bound_payload["bound"]), bound_payload["rule"])
    print(line)
    print("wrote %s and %s" % (csv_path, report_path))
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    problem = _build_problem(cfg)
    law = _build_flow(cfg)
    opts = _build_sim(cfg, args)
    variations = cfg.get("variations")
    if not isinstance(variations, list) or not all(isinstance(v, dict) for v in variations):
        raise ConfigError("sweep needs a variations list of objects")
    directory, prefix = _output_paths(cfg, args, "sweep")

    entries = sweep(law, problem, variations, opts, x0=cfg.get("initial"))

    os.makedirs(directory, exist_ok=True)
    summary_path = os.path.join(directory, prefix + "_summary.csv")
    summary_lines = ["label,convergence_time,bound,status"]
    for i, entry in enumerate(entries):
        if entry.trajectory is not None:
            run_path = os.path.join(
                directory, "%s_%02d_%s.csv" % (prefix, i, _sanitize(entry.label))
            )
            _write_trajectory_csv(run_path, entry.trajectory)
        if entry.error is not None:
            status = "error: " + entry.error.replace("\n", " ")
        elif entry.trajectory.convergence_time is None:
            status = "no_detection"
        else:
            status = "ok"
        ct = entry.trajectory.convergence_time if entry.trajectory is not None else None
        cells = [
            '"%s"' % entry.label.replace('"', "'"),
            _fmt(ct) if ct is not None else "",
            _fmt(entry.bound.bound) if entry.bound is not None else "",
            '"%s"' % status.replace('"', "'"),
        ]
        summary_lines.append(",".join(cells))
        print("%-24s %-12s %s" % (entry.label, _fmt(ct) if ct is not None else "-", status))
    with open(summary_path, "w", newline="") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    print("wrote %s" % summary_path)

    if entries and all(e.error is not None for e in entries):
        return 3
    return 0


_KIND_ALIASES = {"standard": "standard", "kernel": "kernel"}


def _normalize_kind(raw: str) -> str:
    key = raw.strip().lower()
    if key.endswith("form"):
        key = key[: -len("form")]
    if key not in _KIND_ALIASES:
        raise ValueError("unknown zero kind %r (choose standard or kernel)" % (raw,))
    return _KIND_ALIASES[key]


def cmd_ml(args) -> int:
    if args.ml_command == "eval":
        value = ml_eval(MLSpec(args.alpha, args.beta), args.z, tol=args.tol)
        print("%.12g" % value)
        return 0
    if args.ml_command == "zero":
        query = ZeroQuery(alpha=args.alpha, rho=args.rho, kind=_normalize_kind(args.kind))
        zero = ml_first_positive_zero(query, tol=args.tol)
        print("%.9g" % zero)
        return 0
    # table: first positive zeros of the standard form at unit rate
    print("alpha  first_zero")
    for a in _TABLE_EXPONENTS:
        query = ZeroQuery(alpha=a, rho=1.0, kind="standard")
        zero = ml_first_positive_zero(query, tol=1e-6)
        print("%-6.4g %.6f" % (a, zero))
    return 0


def cmd_bounds(args) -> int:
    L = args.lipschitz
    mu = args.strong_convexity
    rows = []

    def attempt(fn, rule):
        try:
            report = fn()
            rows.append((report.rule, report, None))
        except (ValueError, ZeroSearchError) as exc:
            rows.append((rule, None, str(exc)))

    if args.distance is None:
        rows.append(("finite_time_alpha2", None, "needs --distance"))
        rows.append(("finite_time_general", None, "needs --distance"))
    else:
        attempt(
            lambda: bound_finite_time(L, args.rho, 2.0, args.distance), "finite_time_alpha2"
        )
        if args.alpha != 2.0:
            attempt(
                lambda: bound_finite_time(
                    L, args.rho, args.alpha, args.distance, strong_convexity=mu
                ),
                "finite_time_general",
            )
    if mu is None:
        rows.append(("fixed_time_second_order", None, "needs --strong-convexity"))
    else:
        attempt(
            lambda: bound_fixed_time_second_order(
                L, mu, args.rho, args.alpha, lam=args.lam or 0.0
            ),
            "fixed_time_second_order",
        )
    if mu is None or args.beta is None:
        rows.append(
            ("fixed_time_fractional", None, "needs --strong-convexity and --beta")
        )
    else:
        attempt(
            lambda: bound_fixed_time_fractional(L, mu, args.rho, args.alpha, args.beta),
            "fixed_time_fractional",
        )

    applicable = 0
    for rule, report, problem_text in rows:
        if report is not None:
            applicable += 1
            line = "%-24s bound=%s" % (rule, _fmt(report.bound))
            if report.extras:
                line += "  [%s]" % ", ".join(
                    "%s=%s" % (k, _fmt(v)) for k, v in sorted(report.extras.items())
                )
            print(line)
        else:
            print("%-24s inapplicable: %s" % (rule, problem_text))
    if applicable == 0:
        print("no applicable convergence-time guarantee for these constants", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradflows",
        description="Finite- and fixed-time gradient-flow experiments",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="accepted for interface stability; every computation is deterministic",
    )
    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("--config", required=True, help="path to a JSON config")
    io.add_argument("--out", default=None, help="output directory (overrides the config)")
    io.add_argument("--step", type=float, default=None, help="override the integration step")
    io.add_argument("--horizon", type=float, default=None, help="override the time horizon")

    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common, io], help="one trajectory from a config")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser(
        "sweep", parents=[common, io], help="a family of trajectories from a config"
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_ml = sub.add_parser("ml", parents=[common], help="special-function queries")
    mlsub = p_ml.add_subparsers(dest="ml_command", required=True)
    p_eval = mlsub.add_parser("eval", parents=[common], help="evaluate the two-parameter series")
    p_eval.add_argument("--alpha", type=float, required=True)
    p_eval.add_argument("--beta", type=float, default=1.0)
    p_eval.add_argument("--z", type=float, required=True)
    p_eval.add_argument("--tol", type=float, default=1e-9)
    p_eval.set_defaults(func=cmd_ml)
    p_zero = mlsub.add_parser("zero", parents=[common], help="first positive zero")
    p_zero.add_argument("--alpha", type=float, required=True)
    p_zero.add_argument("--rho", type=float, default=1.0)
    p_zero.add_argument("--kind", default="standard", help="standard or kernel")
    p_zero.add_argument("--tol", type=float, default=1e-6)
    p_zero.set_defaults(func=cmd_ml)
    p_table = mlsub.add_parser("table", parents=[common], help="reference zero table at unit rate")
    p_table.set_defaults(func=cmd_ml)

    p_bounds = sub.add_parser(
        "bounds", parents=[common], help="evaluate every applicable guarantee"
    )
    p_bounds.add_argument("--lipschitz", type=float, required=True)
    p_bounds.add_argument("--strong-convexity", type=float, default=None)
    p_bounds.add_argument("--rho", type=float, required=True)
    p_bounds.add_argument("--alpha", type=float, required=True)
    p_bounds.add_argument("--lam", type=float, default=None)
    p_bounds.add_argument("--beta", type=float, default=None)
    p_bounds.add_argument("--distance", type=float, default=None)
    p_bounds.set_defaults(func=cmd_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (DivergenceError, SingularityError) as exc:
        print("simulation failed: %s" % exc, file=sys.stderr)
        return 3
    except (ValueError, PrecisionLossError, ZeroSearchError, OverflowError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
