"""Command-line front end.

Subcommands: ``design`` (emit a frequency plan plus its closed-form
report), ``analyze`` (report for an existing plan file), ``estimate``
(one LS grid search), ``simulate`` (seeded Monte Carlo campaigns from a
config file), and ``replay`` (estimate every experiment of a recorded
phase file).

Plan and campaign files use a flat ``key = value`` text format with the
unit in the key name (``_hz``, ``_m``, ``_db``); '#' starts a comment.
Outputs are CSV (default) or JSON with full-precision round-trip floats.
Every failure exits nonzero after printing one line ``error: <code>: <reason>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, montecarlo
from .core import C_EXACT, C_PAPER, FrequencyPlan, NoiseModel, sigma_theta_from_snr_db
from .design import (
    DesignInfeasible,
    DesignParams,
    PrimePoolExhausted,
    design_constrained_optimal,
    design_prime_max_error,
    design_prime_min_error,
    design_random,
    design_rips,
    design_towers,
    prime_window_select,
    towers_ideal_frequencies,
)
from .estimator import EstimatorConfig, ls_estimate, unwrap_ok
from .montecarlo import CampaignSpec, CampaignValidationError, CurveRow
from .records import RecordFormatError, c_mode_name, read_record

C_MODES = {"exact": C_EXACT, "paper-repro": C_PAPER}

DESIGN_METHODS = (
    "rips",
    "towers",
    "constrained-optimal",
    "prime-min-error",
    "prime-max-error",
    "random",
)


class CliError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    """Argument parser that fails with the one-line error contract."""

    def error(self, message):
        raise CliError("usage", message)


# ---------------------------------------------------------------------------
# key = value files


def parse_kv_file(path) -> dict[str, str]:
    fields: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError("config", f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in fields:
            raise CliError("config", f"{path}:{lineno}: duplicate key {key!r}")
        fields[key] = value.strip()
    return fields


def write_plan_file(path, plan: FrequencyPlan) -> None:
    lines = [
        "# mfirange frequency plan",
        f"f1_hz = {plan.f1!r}",
        f"resolution_hz = {plan.resolution!r}",
        f"spacings_grid = {','.join(str(k) for k in plan.spacings)}",
        f"c_mode = {c_mode_name(plan.c)}",
        "# derived values (informational)",
        f"# n = {plan.n}",
        f"# bandwidth_hz = {plan.bandwidth!r}",
        f"# spacings_hz = {','.join(repr(float(s)) for s in plan.spacings_hz)}",
        f"# frequencies_hz = {','.join(repr(float(f)) for f in plan.frequencies)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_plan_file(path) -> FrequencyPlan:
    fields = parse_kv_file(path)
    missing = [k for k in ("f1_hz", "resolution_hz", "spacings_grid") if k not in fields]
    if missing:
        raise CliError("plan", f"{path}: missing keys {missing}")
    c_text = fields.get("c_mode", "exact")
    try:
        c = C_MODES[c_text] if c_text in C_MODES else float(c_text)
        return FrequencyPlan(
            f1=float(fields["f1_hz"]),
            resolution=float(fields["resolution_hz"]),
            spacings=tuple(int(s) for s in fields["spacings_grid"].split(",")),
            c=c,
        )
    except ValueError as exc:
        raise CliError("plan", f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# table output


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip, numpy scalars included
    return str(value)


def write_table(path, header: list[str], rows: list[list], fmt: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def curve_rows_table(rows: list[CurveRow]) -> tuple[list[str], list[list]]:
    header = list(CurveRow.FIELDS)
    return header, [[getattr(r, f) for f in header] for r in rows]


# ---------------------------------------------------------------------------
# subcommands


def _sigma_from_args(args) -> float:
    if args.sigma is not None and args.snr is not None:
        raise CliError("usage", "give only one of --snr / --sigma")
    if args.sigma is not None:
        return args.sigma
    return sigma_theta_from_snr_db(args.snr if args.snr is not None else 10.0)


def _report_rows(plan: FrequencyPlan, sigma: float, include_sidelobe: bool) -> list[list]:
    report = analysis.analyze(plan, sigma_theta=sigma, include_sidelobe=include_sidelobe)
    rows = [
        ["umr_m", report.umr],
        ["practical_umr_m", report.practical_umr],
        ["grid_offset", report.grid_offset],
        ["sigma_theta_rad", sigma],
        ["mmse_m2", report.mmse],
        ["hmse_m2", report.hmse],
        ["crb_m2", report.crb],
        ["coprime", report.coprime],
    ]
    if include_sidelobe:
        rows.insert(7, ["max_sidelobe", report.sidelobe_value])
        rows.insert(8, ["max_sidelobe_location_m", report.sidelobe_location])
    return rows


def cmd_design(args) -> int:
    c = C_MODES[args.c_mode]
    method = args.method
    extra: list[list] = []
    if method == "rips":
        _require(args, "f1", "B", "N")
        plan = design_rips(args.f1, args.B, args.N, resolution=args.res, c=c)
    elif method == "towers":
        _require(args, "fN", "B", "N")
        plan = design_towers(args.fN, args.B, args.N, resolution=args.res or 1.0, c=c)
        ideal = towers_ideal_frequencies(args.fN, args.B, args.N)
        extra.append(["max_snap_error_hz", float(np.max(np.abs(plan.frequencies - ideal)))])
    elif method == "constrained-optimal":
        _require(args, "f1", "B", "N", "res")
        plan = design_constrained_optimal(args.f1, args.B, args.N, args.res, c=c)
    elif method in ("prime-min-error", "prime-max-error"):
        _require(args, "f1", "B", "N", "res")
        params = DesignParams(
            bandwidth=args.B,
            n=args.N,
            resolution=args.res,
            prime_index=args.i,
            umr_requirement=args.umr_requirement,
        )
        window = prime_window_select(params, c=c)
        designer = design_prime_min_error if method == "prime-min-error" else design_prime_max_error
        plan = designer(params, args.f1, c=c)
        extra.extend(
            [
                ["design_tuple_b_hz", args.B],
                ["design_tuple_n", args.N],
                ["design_tuple_resolution_hz", args.res],
                ["design_tuple_prime_index", window.prime_index],
                ["design_tuple_common_factor_k", window.common_factor],
                ["primes", " ".join(str(p) for p in window.primes)],
            ]
        )
    else:  # random
        _require(args, "f1", "B", "N", "res")
        if args.seed is None:
            raise CliError("usage", "--seed is required for the random method")
        rng = np.random.Generator(np.random.Philox(key=args.seed))
        plan = design_random(args.f1, args.B, args.N, args.res, rng, c=c)
        extra.append(["seed", args.seed])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.label or method
    plan_path = out / f"{name}.plan"
    write_plan_file(plan_path, plan)
    sigma = _sigma_from_args(args)
    rows = _report_rows(plan, sigma, include_sidelobe=not args.skip_sidelobe) + extra
    report_path = out / f"{name}_report.{args.format}"
    write_table(report_path, ["metric", "value"], rows, args.format)
    print(f"wrote {plan_path} and {report_path}")
    return 0


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join(f"--{n}" for n in missing)
        raise CliError("usage", f"method {args.method!r} requires {flags}")


def cmd_analyze(args) -> int:
    plan = read_plan_file(args.plan)
    sigma = _sigma_from_args(args)
    rows = _report_rows(plan, sigma, include_sidelobe=not args.skip_sidelobe)
    if args.out:
        path = Path(args.out) / f"{Path(args.plan).stem}_report.{args.format}"
        write_table(path, ["metric", "value"], rows, args.format)
        print(f"wrote {path}")
    else:
        for key, value in rows:
            print(f"{key} = {_fmt(value)}")
    return 0


def cmd_estimate(args) -> int:
    if (args.phases is None) == (args.record is None):
        raise CliError("usage", "give exactly one of --phases / --record")
    cfg = EstimatorConfig(
        search_lo=args.lo, search_hi=args.hi, step=args.step, refine=args.refine
    )
    if args.phases is not None:
        plan = read_plan_file(args.plan)
        phases = np.array([float(x) for x in args.phases.split(",")])
        est = ls_estimate(phases, plan, cfg)
        print(f"q_hat_m = {est.q_hat!r}")
        print(f"cost_at_min = {est.cost_at_min!r}")
        return 0
    record = read_record(args.record)
    if args.experiment is None:
        raise CliError("usage", "--experiment is required with --record")
    match = [e for e in record.experiments if e.experiment_id == args.experiment]
    if not match:
        raise CliError("record", f"experiment {args.experiment!r} not found")
    est = ls_estimate(match[0].phases, record.plan, cfg)
    print(f"q_hat_m = {est.q_hat!r}")
    print(f"cost_at_min = {est.cost_at_min!r}")
    return 0


def _campaign_from_config(fields: dict[str, str], config_path) -> tuple[CampaignSpec, str]:
    problems: list[str] = []

    def take(key, conv, default=None, required=False):
        if key not in fields:
            if required:
                problems.append(f"missing key {key!r}")
            return default
        try:
            return conv(fields[key])
        except ValueError as exc:
            problems.append(f"bad value for {key!r}: {exc}")
            return default

    kind = take("kind", str, default="mse")
    if kind not in ("mse", "pf", "ambiguity", "pumr"):
        problems.append("kind must be one of mse, pf, ambiguity, pumr")
    plans = []
    base = Path(config_path).parent
    for key, value in fields.items():
        if key.startswith("plan."):
            label = key[len("plan.") :]
            path = Path(value)
            if not path.is_absolute():
                path = base / path
            try:
                plans.append((label, read_plan_file(path)))
            except CliError as exc:
                problems.append(f"plan {label!r}: {exc}")
    if not plans:
        problems.append("no plan.<label> entries found")
    q0 = take("q0_m", float, default=0.0)
    snrs = take("snr_db", lambda s: tuple(float(x) for x in s.split(",")), required=True)
    trials = take("trials", int, required=True)
    seed = take("seed", int, required=True)
    lo = take("search_lo_m", float, required=True)
    hi = take("search_hi_m", float, required=True)
    step = take("step_m", float, required=True)
    refine = take("refine", lambda s: s.lower() in ("1", "true", "yes"), default=False)
    noise = take("noise", str, default="phase-gaussian")
    if problems:
        raise CliError("validation", "; ".join(problems))
    try:
        cfg = EstimatorConfig(search_lo=lo, search_hi=hi, step=step, refine=refine)
        spec = CampaignSpec.build(
            plans=plans,
            q0=q0,
            snr_grid=snrs,
            trials=trials,
            seed=seed,
            estimator=cfg,
            noise_kind=noise,
        )
    except (ValueError, CampaignValidationError) as exc:
        raise CliError("validation", str(exc)) from exc
    return spec, kind


def cmd_simulate(args) -> int:
    fields = parse_kv_file(args.config)
    spec, kind = _campaign_from_config(fields, args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if kind in ("mse", "pf"):
        errors = montecarlo.campaign_errors(spec)
        header = list(CurveRow.FIELDS)
        for metric in ("mse", "pf") if kind == "pf" else ("mse",):
            rows = montecarlo.rows_from_errors(spec, errors, metric)
            path = out / f"{metric}.{args.format}"
            write_table(path, header, [[getattr(r, f) for f in header] for r in rows], args.format)
            print(f"wrote {path}")
        return 0
    if kind == "ambiguity":
        rows = []
        hist_rows = []
        for label, plan in spec.plans:
            sweep = montecarlo.run_ambiguity_sweep(
                plan,
                spec.q0,
                (spec.estimator.search_lo, spec.estimator.search_hi),
                spec.snr_grid[0],
                spec.trials,
                spec.seed,
                spec.estimator.step,
                label=label,
                noise_kind=spec.noise_kind,
            )
            rows.extend(
                [label, t, float(e)] for t, e in enumerate(sweep.errors)
            )
            counts, edges = np.histogram(sweep.errors, bins=20)
            hist_rows.extend(
                [label, float(lo_e), float(hi_e), int(n)]
                for lo_e, hi_e, n in zip(edges[:-1], edges[1:], counts)
            )
        path = out / f"ambiguity_errors.{args.format}"
        write_table(path, ["label", "trial", "error_m"], rows, args.format)
        hist_path = out / f"ambiguity_hist.{args.format}"
        write_table(hist_path, ["label", "bin_lo_m", "bin_hi_m", "count"], hist_rows, args.format)
        print(f"wrote {path}")
        print(f"wrote {hist_path}")
        return 0
    # kind == "pumr": cost comparison at the practical-UMR dip per SNR.
    rows = []
    for label, plan in spec.plans:
        for snr in spec.snr_grid:
            check = montecarlo.run_pumr_check(
                plan,
                snr,
                spec.trials,
                spec.seed,
                q0=spec.q0,
                window=(spec.estimator.search_lo, spec.estimator.search_hi),
                step=spec.estimator.step,
                label=label,
                noise_kind=spec.noise_kind,
            )
            rows.append([label, snr, "pa_empirical", check.confusion_rate, spec.trials])
            rows.append([label, snr, "pa_bound", check.bound, spec.trials])
            rows.append([label, snr, "pa_bound_valid", int(check.bound_valid), spec.trials])
            if check.far_cluster_rate is not None:
                rows.append([label, snr, "far_cluster_rate", check.far_cluster_rate, spec.trials])
    path = out / f"pumr.{args.format}"
    write_table(path, ["label", "snr_db", "metric", "value", "trials"], rows, args.format)
    print(f"wrote {path}")
    return 0


def cmd_replay(args) -> int:
    record = read_record(args.record)
    plan = record.plan
    cfg = EstimatorConfig(
        search_lo=args.lo, search_hi=args.hi, step=args.step, refine=args.refine
    )
    rows = []
    errors = []
    for exp in record.experiments:
        est = ls_estimate(exp.phases, plan, cfg)
        err = None if exp.q0 is None else est.q_hat - exp.q0
        ok = None if exp.q0 is None else unwrap_ok(est.q_hat, exp.q0, plan)
        rows.append(
            [
                exp.experiment_id,
                est.q_hat,
                exp.q0,
                err,
                None if ok is None else int(ok),
                est.cost_at_min,
            ]
        )
        if err is not None:
            errors.append(err)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.record).stem
    path = out / f"{stem}_estimates.{args.format}"
    write_table(
        path,
        ["experiment_id", "q_hat_m", "q0_m", "error_m", "unwrap_ok", "cost_at_min"],
        rows,
        args.format,
    )
    print(f"wrote {path}")
    if errors:
        arr = np.asarray(errors)
        counts, edges = np.histogram(arr, bins=20)
        summary = [["mse_m2", float(np.mean(arr**2))], ["experiments", arr.size]]
        hist = [
            [float(lo_e), float(hi_e), int(n)]
            for lo_e, hi_e, n in zip(edges[:-1], edges[1:], counts)
        ]
        sum_path = out / f"{stem}_summary.{args.format}"
        write_table(sum_path, ["metric", "value"], summary, args.format)
        hist_path = out / f"{stem}_histogram.{args.format}"
        write_table(hist_path, ["bin_lo_m", "bin_hi_m", "count"], hist, args.format)
        print(f"wrote {sum_path}")
        print(f"wrote {hist_path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="mfirange", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--c-mode", choices=tuple(C_MODES), default="exact")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("design", help="design a frequency plan and report on it")
    common(p)
    p.add_argument("--method", choices=DESIGN_METHODS, required=True)
    p.add_argument("--f1", type=float, help="base (lowest) frequency, Hz")
    p.add_argument("--fN", type=float, help="top frequency, Hz (towers)")
    p.add_argument("--B", type=float, help="bandwidth, Hz")
    p.add_argument("--N", type=int, help="frequency count")
    p.add_argument("--res", type=float, help="grid resolution, Hz")
    p.add_argument("--i", type=int, default=1, help="1-based prime window start")
    p.add_argument("--umr-requirement", type=float, default=None, help="meters")
    p.add_argument("--label", default=None, help="basename for output files")
    p.add_argument("--snr", type=float, default=None, help="report SNR, dB")
    p.add_argument("--sigma", type=float, default=None, help="report phase std, rad")
    p.add_argument("--skip-sidelobe", action="store_true")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("analyze", help="closed-form report for a plan file")
    common(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--skip-sidelobe", action="store_true")
    # Default to stdout for analyze; --out still redirects to a file.
    p.set_defaults(func=cmd_analyze, out=None)

    p = sub.add_parser("estimate", help="one LS grid-search estimate")
    common(p)
    p.add_argument("--plan", help="plan file (with --phases)")
    p.add_argument("--phases", help="comma-separated wrapped phases, rad")
    p.add_argument("--record", help="phase record file")
    p.add_argument("--experiment", help="experiment id within the record")
    p.add_argument("--lo", type=float, required=True, help="search low edge, m")
    p.add_argument("--hi", type=float, required=True, help="search high edge, m")
    p.add_argument("--step", type=float, required=True, help="grid step, m")
    p.add_argument("--refine", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign config")
    common(p)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="estimate every experiment in a record")
    common(p)
    p.add_argument("--record", required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--refine", action="store_true")
    p.set_defaults(func=cmd_replay)

    return parser


_ERROR_CODES = {
    DesignInfeasible: "design-infeasible",
    PrimePoolExhausted: "prime-pool-exhausted",
    RecordFormatError: "record-format",
    CampaignValidationError: "validation",
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except tuple(_ERROR_CODES) as exc:
        print(f"error: {_ERROR_CODES[type(exc)]}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: invalid-value: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
