"""Command-line front end.

Subcommands: vrs-scan, eit-scan, ringdown, sweep, validate.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import json
import math
import sys
from pathlib import Path

from . import analytics, config as cfg, dynamics, runio
from .model import Model, ValidationError, validate

TWO_PI = 2.0 * math.pi

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

SCAN_DEFAULTS = {
    "vrs-scan": {"steps": 200, "duration_s": 0.1e-3, "span_factor": 4.0},
    "eit-scan": {"steps": 200, "duration_s": 1.0e-3, "span_halfwidths": 6.0},
}


def _resolve_p_in(raw: dict, kind: str) -> dict:
    """Turn a drive.p_out_peak_w target into the p_in_w that produces it,
    using the linear-response transmission of the relevant peak."""
    drive = raw.get("drive", {})
    if "p_out_peak_w" not in drive:
        return raw
    if drive.get("p_in_w"):
        raise cfg.ConfigError("drive.p_in_w conflicts with drive.p_out_peak_w")
    probe = {sec: dict(keys) for sec, keys in raw.items()}
    probe["drive"] = {k: v for k, v in drive.items() if k != "p_out_peak_w"}
    probe["drive"]["p_in_w"] = 0.0
    model = validate(probe)
    cv, lv = model.cavity, model.levels
    if kind == "vrs-scan":
        ratio = analytics.vrs_peak_transmission(
            cv.kappa_t, cv.kappa_r1, cv.kappa_r2, lv.gamma_t,
            convention=model.flux_convention)
    else:
        ratio = analytics.eit_peak_transmission(
            cv.kappa_t, cv.kappa_r1, cv.kappa_r2,
            convention=model.flux_convention)
    out = {sec: dict(keys) for sec, keys in raw.items()}
    out["drive"] = dict(drive)
    del out["drive"]["p_out_peak_w"]
    out["drive"]["p_in_w"] = drive["p_out_peak_w"] / ratio
    return out


def _load_model(args, kind: str) -> tuple[dict, Model, dict]:
    if args.from_manifest:
        with open(args.from_manifest, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        raw = manifest["config"]
        rerun = {"run_id": manifest["run_id"], "created": manifest["created_utc"]}
    else:
        raw = cfg.load_config(args.config)
        rerun = {}
    raw = cfg.apply_overrides(raw, args.set or [])
    raw = _resolve_p_in(raw, kind)
    run = raw.get("run", {})
    if run.get("kind", kind) != kind:
        raise cfg.ConfigError(f"run.kind={run['kind']} does not match subcommand {kind}")
    return raw, validate(raw), rerun


def _tolerances(run: dict) -> dynamics.IntegratorTolerances:
    return dynamics.IntegratorTolerances(rtol=run.get("rtol", 1e-9),
                                         atol=run.get("atol", 1e-12))


def _scan_spec(model: Model, run: dict, kind: str) -> dynamics.ScanSpec:
    defaults = SCAN_DEFAULTS[kind]
    steps = run.get("steps", defaults["steps"])
    if "dwell_s" in run and "duration_s" in run:
        raise cfg.ConfigError("run.dwell_s conflicts with run.duration_s")
    dwell = run.get("dwell_s", run.get("duration_s", defaults["duration_s"]) / steps)
    if "span_hz" in run:
        half = 0.5 * TWO_PI * run["span_hz"]
        start, stop = -half, half
    elif kind == "vrs-scan":
        start, stop = dynamics.vrs_auto_span(
            model, factor=run.get("span_factor", defaults["span_factor"]))
    else:
        start, stop = dynamics.eit_auto_span(
            model, halfwidths=run.get("span_halfwidths", defaults["span_halfwidths"]))
    return dynamics.ScanSpec(start=start, stop=stop, steps=steps, dwell=dwell)


def run_scan_command(args, kind: str) -> Path:
    raw, model, rerun = _load_model(args, kind)
    run = raw.get("run", {})
    spec = _scan_spec(model, run, kind)
    tol = _tolerances(run)
    method = run.get("method", "auto")
    if kind == "vrs-scan":
        result = dynamics.run_vrs_scan(model, spec, tolerances=tol, method=method)
        summary = runio.vrs_summary(result, model)
    else:
        result = dynamics.run_eit_scan(model, spec, tolerances=tol, method=method)
        summary = runio.eit_summary(result, model)
    summary["span_hz"] = spec.span / TWO_PI
    summary["steps"] = spec.steps
    summary["dwell_s"] = spec.dwell
    columns = runio.scan_csv_columns(result)
    return runio.write_run(Path(args.outdir), kind, raw, model, columns,
                           summary, **rerun)


def run_ringdown_command(args) -> Path:
    raw, model, rerun = _load_model(args, "ringdown")
    run = raw.get("run", {})
    cycles = args.cycles if args.cycles is not None else run.get("cycles", 1)
    criterion = dynamics.SteadyStateCriterion(
        rel_tol=run.get("settle_rel_tol", 1e-6),
        max_settle=run.get("settle_max_s", 0.02))
    result = dynamics.run_ringdown(
        model, criterion=criterion, observe_duration=run.get("observe_s"),
        cycles=cycles, samples=run.get("samples", 400),
        tolerances=_tolerances(run), method=run.get("method", "auto"))
    summary = runio.ringdown_summary(result, model)
    columns = {"t_s": result.t, "p_out_w": result.p_out}
    return runio.write_run(Path(args.outdir), "ringdown", raw, model, columns,
                           summary, **rerun)


def run_validate_command(args) -> int:
    raw = cfg.apply_overrides(cfg.load_config(args.config), args.set or [])
    kind = raw.get("run", {}).get("kind", "vrs-scan")
    raw = _resolve_p_in(raw, kind)
    model = validate(raw)
    print("configuration valid")
    for key, value in runio.derived_block(model).items():
        print(f"  {key} = {value}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweeps

def _point_run(outdir: str, kind: str, raw: dict, model: Model) -> Path:
    run = raw.get("run", {})
    tol = _tolerances(run)
    method = run.get("method", "auto")
    if kind == "ringdown":
        criterion = dynamics.SteadyStateCriterion(
            rel_tol=run.get("settle_rel_tol", 1e-6),
            max_settle=run.get("settle_max_s", 0.02))
        result = dynamics.run_ringdown(
            model, criterion=criterion, observe_duration=run.get("observe_s"),
            cycles=run.get("cycles", 1), samples=run.get("samples", 400),
            tolerances=tol, method=method)
        summary = runio.ringdown_summary(result, model)
        columns = {"t_s": result.t, "p_out_w": result.p_out}
    else:
        spec = _scan_spec(model, run, kind)
        runner = dynamics.run_vrs_scan if kind == "vrs-scan" else dynamics.run_eit_scan
        result = runner(model, spec, tolerances=tol, method=method)
        summary = runio.vrs_summary(result, model) if kind == "vrs-scan" \
            else runio.eit_summary(result, model)
        summary["span_hz"] = spec.span / TWO_PI
        columns = runio.scan_csv_columns(result)
    return runio.write_run(Path(outdir), kind, raw, model, columns, summary)


def _sweep_point(task: tuple) -> tuple[int, str, dict | None, str | None]:
    """Worker for one sweep point; returns (index, point_id, summary, error)."""
    index, point_id, kind, raw, outdir = task
    try:
        model = validate(raw)
        run_dir = _point_run(outdir, kind, raw, model)
        with open(run_dir / "summary.json", "r", encoding="utf-8") as fh:
            return index, point_id, json.load(fh), None
    except Exception as exc:  # per-point failures recorded, sweep continues
        return index, point_id, None, f"{type(exc).__name__}: {exc}"


AGGREGATE_KEYS = {
    "vrs-scan": ("splitting_hz", "formula_splitting_hz", "loss_fraction",
                 "peak_p_out_w", "max_n_bar"),
    "eit-scan": ("fwhm_fit_hz", "fwhm_eq9_hz", "fwhm_eq10_hz", "loss_fraction",
                 "peak_p_out_w"),
    "ringdown": ("rate_fit_per_s", "rate_eq10_per_s", "cumulative_loss_fraction",
                 "steady_p_out_w"),
}


def run_sweep_command(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    kind = spec["kind"]
    if kind not in ("vrs-scan", "eit-scan", "ringdown"):
        raise cfg.ConfigError(f"sweep kind must be a run kind, got {kind!r}")
    template = cfg.load_config(Path(args.spec).parent / spec["template"]
                               if not Path(spec["template"]).is_absolute()
                               else spec["template"])
    axes = spec.get("axes", [])
    if not axes:
        raise cfg.ConfigError("sweep needs at least one axis")
    base_overrides = [f"{k}={v}" for k, v in spec.get("overrides", {}).items()]
    template = cfg.apply_overrides(template, base_overrides)

    combos = list(itertools.product(*(axis["values"] for axis in axes)))
    print(f"sweep: {len(combos)} points "
          f"({' x '.join(str(len(a['values'])) for a in axes)})")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for index, combo in enumerate(combos):
        overrides = [f"{axis['path']}={value}"
                     for axis, value in zip(axes, combo)]
        raw = cfg.apply_overrides(template, overrides)
        raw = _resolve_p_in(raw, kind)
        point_id = f"p{index:04d}"
        tasks.append((index, point_id, kind, raw, str(outdir / point_id)))

    parallelism = spec.get("parallelism", 1)
    results: list = [None] * len(tasks)
    if parallelism > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallelism) as pool:
            for index, point_id, summary, error in pool.map(_sweep_point, tasks):
                results[index] = (point_id, summary, error)
    else:
        for task in tasks:
            index, point_id, summary, error = _sweep_point(task)
            results[index] = (point_id, summary, error)

    axis_names = [axis["path"] for axis in axes]
    value_keys = AGGREGATE_KEYS[kind]
    failures = []
    lines = [",".join(["point_id", *axis_names, *value_keys])]
    for (point_id, summary, error), combo in zip(results, combos):
        if error is not None:
            failures.append({"point_id": point_id, "error": error})
            continue
        cells = [point_id]
        cells += [runio.fmt(v) for v in combo]
        cells += [runio.fmt(summary[k]) if isinstance(summary.get(k), (int, float))
                  else "" for k in value_keys]
        lines.append(",".join(cells))
    (outdir / "aggregate.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if failures:
        runio.write_json(outdir / "failures.json", {"failures": failures})
        print(f"{len(failures)} point(s) failed; see failures.json")
    print(f"aggregate written to {outdir / 'aggregate.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavimol",
        description="Mean-field cavity QED molecule-detection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("config", nargs="?", help="INI configuration file")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config value (repeatable, last wins)")
        p.add_argument("--outdir", default="runs", help="output directory root")
        p.add_argument("--from-manifest", metavar="MANIFEST",
                       help="re-run from a manifest.json (bit-identical outputs)")

    for kind in ("vrs-scan", "eit-scan"):
        p = sub.add_parser(kind, help=f"run a {kind.split('-')[0].upper()} probe scan")
        add_common(p)
    p = sub.add_parser("ringdown", help="settle, switch the probe off, record the decay")
    add_common(p)
    p.add_argument("--cycles", type=int, default=None,
                   help="number of detection cycles (default from config)")
    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON spec")
    p.add_argument("spec", help="sweep specification (JSON)")
    p.add_argument("--outdir", default="runs/sweep", help="output directory root")
    p = sub.add_parser("validate", help="validate a configuration and print derived values")
    p.add_argument("config")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("vrs-scan", "eit-scan"):
            if not args.config and not args.from_manifest:
                raise cfg.ConfigError("a config file or --from-manifest is required")
            run_dir = run_scan_command(args, args.command)
            print(f"run written to {run_dir}")
        elif args.command == "ringdown":
            if not args.config and not args.from_manifest:
                raise cfg.ConfigError("a config file or --from-manifest is required")
            run_dir = run_ringdown_command(args)
            print(f"run written to {run_dir}")
        elif args.command == "sweep":
            return run_sweep_command(args)
        elif args.command == "validate":
            return run_validate_command(args)
    except (cfg.ConfigError, ValidationError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except dynamics.NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
