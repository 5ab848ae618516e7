"""Result persistence: run directories with manifest.json, scan.csv, summary.json.

Floats are serialized with 17 significant digits so that re-running from a
manifest reproduces every output file byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np

from . import __version__, analytics, config as cfg
from .model import Model, RingdownResult, ScanResult

TWO_PI = 2.0 * math.pi

CSV_COLUMNS = {
    "vrs-scan": ("detuning_hz", "p_out_w", "n_bar", "rho_g", "rho_e", "rho_gp"),
    "eit-scan": ("detuning_hz", "p_out_w", "n_bar", "rho_g", "rho_e", "rho_gp",
                 "rho_gpp"),
    "ringdown": ("t_s", "p_out_w"),
}


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def make_run_id(kind: str, raw_config: dict, created: str) -> str:
    digest = hashlib.sha256(
        (created + cfg.dump_config(raw_config)).encode()).hexdigest()[:8]
    stamp = created.replace("-", "").replace(":", "").replace("T", "-")[:15]
    return f"{kind}-{stamp}-{digest}"


def utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())


def derived_block(model: Model) -> dict:
    """Every derived quantity materialized, for reproducibility audits."""
    from . import physparams

    lv, cv, dr, en = model.levels, model.cavity, model.drive, model.ensemble
    block = {
        "gamma_t_hz": lv.gamma_t / TWO_PI,
        "kappa_r1_hz": cv.kappa_r1 / TWO_PI,
        "kappa_r2_hz": cv.kappa_r2 / TWO_PI,
        "waist_m": cv.waist,
        "mode_volume_m3": cv.mode_volume,
        "omega_cv_hz": cv.omega_cv / TWO_PI,
        "g0_hz": cv.g0 / TWO_PI,
        "n_c": en.n_c,
        "p_in_w": dr.p_in,
        "eta_rad_s": dr.eta,
        "omega_control_rad_s": dr.omega_control,
        "flux_convention": model.flux_convention,
    }
    if lv.mu_ge > 0 and cv.mode_volume > 0:
        block["g0_from_dipole_hz"] = physparams.coupling_g0(
            lv.mu_ge, cv.omega_cv, cv.mode_volume) / TWO_PI
    return block


def write_csv(path: Path, kind: str, columns: dict[str, np.ndarray]) -> None:
    names = CSV_COLUMNS[kind]
    rows = zip(*(columns[name] for name in names))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def scan_csv_columns(result: ScanResult) -> dict[str, np.ndarray]:
    return {
        "detuning_hz": result.detuning / TWO_PI,
        "p_out_w": result.p_out,
        "n_bar": result.n_bar,
        "rho_g": result.rho_gg,
        "rho_e": result.rho_ee,
        "rho_gp": result.rho_gpgp,
        "rho_gpp": result.rho_gpp,
    }


def vrs_summary(result: ScanResult, model: Model) -> dict:
    peaks = analytics.find_peaks(result)
    loss = analytics.loss_fraction(result)
    coupled = model.ensemble.n_c > 0   # no molecules, no loss
    summary = {
        "kind": "vrs-scan",
        "n_c": model.ensemble.n_c,
        "peaks_hz": [p.position / TWO_PI for p in peaks],
        "peak_heights_w": [p.height for p in peaks],
        "n_peaks": len(peaks),
        "formula_splitting_hz": analytics.vrs_splitting_formula(
            model.cavity.g0, model.ensemble.n_c) / TWO_PI,
        "loss_fraction": loss.rho_gprime if coupled else 0.0,
        "lost_molecules": model.ensemble.n_c * loss.rho_gprime,
        "peak_p_out_w": float(np.max(result.p_out)),
        "max_n_bar": float(np.max(result.n_bar)),
        "scan_rate_hz_per_s": result.scan_rate / TWO_PI,
    }
    if len(peaks) >= 2:
        summary["splitting_hz"] = (peaks[-1].position - peaks[0].position) / TWO_PI
    return summary


def eit_summary(result: ScanResult, model: Model) -> dict:
    lv, cv, dr, en = model.levels, model.cavity, model.drive, model.ensemble
    loss = analytics.loss_fraction(result)
    coupled = en.n_c > 0
    summary = {
        "kind": "eit-scan",
        "n_c": en.n_c,
        "fwhm_eq9_hz": analytics.eit_fwhm(cv.g0, en.n_c, dr.omega_control,
                                          cv.kappa_t, lv.gamma_t) / TWO_PI,
        "fwhm_eq10_hz": analytics.eit_fwhm(cv.g0, en.n_c, dr.omega_control,
                                           cv.kappa_t, lv.gamma_t,
                                           simplified=True) / TWO_PI,
        "loss_fraction": loss.rho_gdprime if coupled else 0.0,  # |g''> is lost
        "rho_gprime_final": loss.rho_gprime,    # |g'> is recycled by the control
        "lost_molecules": en.n_c * loss.rho_gdprime,
        "peak_p_out_w": float(np.max(result.p_out)),
        "max_n_bar": float(np.max(result.n_bar)),
        "scan_rate_hz_per_s": result.scan_rate / TWO_PI,
    }
    try:
        fit = analytics.fit_lorentzian(result)
        summary["fwhm_fit_hz"] = fit.params["fwhm"] / TWO_PI
        summary["fit_center_hz"] = fit.params["center"] / TWO_PI
        summary["fit_amplitude_w"] = fit.params["amplitude"]
        summary["fit_residual_norm"] = fit.residual_norm
        summary["fit_flagged"] = fit.flagged
    except (analytics.FitError, ValueError) as exc:
        summary["fit_error"] = str(exc)
    return summary


def ringdown_summary(result: RingdownResult, model: Model) -> dict:
    lv, cv, dr, en = model.levels, model.cavity, model.drive, model.ensemble
    summary = {
        "kind": "ringdown",
        "n_c": en.n_c,
        "cycles": result.cycles,
        "steady_p_out_w": result.steady_p_out,
        "steady_n_bar": result.steady_n_bar,
        "settle_time_s": result.settle_time,
        "rate_eq10_per_s": analytics.eit_fwhm(cv.g0, en.n_c, dr.omega_control,
                                              cv.kappa_t, lv.gamma_t,
                                              simplified=True),
        "rate_eq9_per_s": analytics.eit_fwhm(cv.g0, en.n_c, dr.omega_control,
                                             cv.kappa_t, lv.gamma_t),
        "rate_empty_cavity_per_s": 2.0 * cv.kappa_t,
        # |g''> is the lost fraction; |g'> rides the dark superposition
        "per_cycle_loss_fraction": [float(v) if en.n_c > 0 else 0.0
                                    for v in result.rho_gpp_cycles],
        "cumulative_loss_fraction": float(result.rho_gpp_cycles[-1])
                                    if en.n_c > 0 else 0.0,
        "rho_gprime_cycles": [float(v) for v in result.rho_gpgp_cycles],
        "lost_molecules": en.n_c * float(result.rho_gpp_cycles[-1]),
    }
    try:
        fit = analytics.fit_exponential(result)
        summary["rate_fit_per_s"] = fit.params["rate"]
        summary["fit_i0_w"] = fit.params["i0"]
        summary["fit_residual_norm"] = fit.residual_norm
        summary["fit_flagged"] = fit.flagged
        summary["fit_notes"] = list(fit.notes)
    except (analytics.FitError, ValueError) as exc:
        summary["fit_error"] = str(exc)
    return summary


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run(outdir: Path, kind: str, raw_config: dict, model: Model,
              csv_columns: dict, summary: dict,
              run_id: str | None = None, created: str | None = None) -> Path:
    """Create runs/<id>/ with manifest.json, scan.csv, summary.json."""
    created = created or utc_now()
    run_id = run_id or make_run_id(kind, raw_config, created)
    run_dir = outdir / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    write_csv(run_dir / "scan.csv", kind, csv_columns)
    write_json(run_dir / "summary.json", summary)
    manifest = {
        "run_id": run_id,
        "created_utc": created,
        "tool": {"name": "cavimol", "version": __version__},
        "kind": kind,
        "config": raw_config,
        "derived": derived_block(model),
        "outputs": {"csv": "scan.csv", "summary": "summary.json"},
    }
    write_json(run_dir / "manifest.json", manifest)
    return run_dir
