"""Configuration file handling.

INI-style files with sections [levels], [cavity], [drive], [ensemble], [run].
All frequencies/rates are ordinary hertz, lengths meters, powers watts; the
conversion to angular units happens once, in model.validate().  The full key
schema is documented in the README.
"""

from __future__ import annotations

import configparser
import io
import math
from typing import Any, Mapping

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Malformed configuration file or overrides (CLI exit status 1)."""


_FLOAT = "float"
_INT = "int"
_BOOL = "bool"
_STR = "str"

# key -> type; None-typed sections accept no unknown keys
SCHEMA: dict[str, dict[str, str]] = {
    "levels": {
        "gamma1_hz": _FLOAT,
        "gamma2_hz": _FLOAT,
        "gamma3_hz": _FLOAT,
        "gamma_gg_prime_hz": _FLOAT,
        "mu_ge_cm": _FLOAT,
        "mu_gprime_e_cm": _FLOAT,
        "lambda_transition_m": _FLOAT,
    },
    "cavity": {
        "kappa_t_hz": _FLOAT,
        "kappa_r1_hz": _FLOAT,
        "kappa_r1_frac": _FLOAT,
        "kappa_r2_hz": _FLOAT,
        "kappa_r2_frac": _FLOAT,
        "length_m": _FLOAT,
        "roc_m": _FLOAT,
        "waist_m": _FLOAT,
        "mode_volume_m3": _FLOAT,
        "g0_hz": _FLOAT,
        "omega_cv_hz": _FLOAT,
    },
    "drive": {
        "p_in_w": _FLOAT,
        "p_out_peak_w": _FLOAT,
        "delta_pc_hz": _FLOAT,
        "atom_cavity_offset_hz": _FLOAT,
        "delta_ra_hz": _FLOAT,
        "omega_control_hz": _FLOAT,
    },
    "ensemble": {
        "n_total": _FLOAT,
        "n_c": _FLOAT,
        "cloud_sigma_x_m": _FLOAT,
        "cloud_sigma_y_m": _FLOAT,
        "cloud_sigma_z_m": _FLOAT,
        "cloud_center_x_m": _FLOAT,
        "cloud_center_y_m": _FLOAT,
        "cloud_center_z_m": _FLOAT,
    },
    "run": {
        "kind": _STR,
        "span_hz": _FLOAT,
        "span_factor": _FLOAT,
        "span_halfwidths": _FLOAT,
        "steps": _INT,
        "dwell_s": _FLOAT,
        "duration_s": _FLOAT,
        "cycles": _INT,
        "observe_s": _FLOAT,
        "samples": _INT,
        "settle_rel_tol": _FLOAT,
        "settle_max_s": _FLOAT,
        "rtol": _FLOAT,
        "atol": _FLOAT,
        "method": _STR,
        "flux_convention": _STR,
        "omega_is_angular": _BOOL,
    },
}

RUN_KINDS = ("vrs-scan", "eit-scan", "ringdown")


def _convert(section: str, key: str, text: str):
    kind = SCHEMA[section].get(key)
    if kind is None:
        raise ConfigError(f"unknown key {section}.{key}")
    try:
        if kind == _FLOAT:
            return float(text)
        if kind == _INT:
            return int(text)
        if kind == _BOOL:
            lowered = text.strip().lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        return text.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {text!r}") from exc


def parse_config(text: str) -> dict[str, dict[str, Any]]:
    """Parse INI text into a nested {section: {key: value}} mapping."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    raw: dict[str, dict[str, Any]] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        raw[section] = {key: _convert(section, key, val)
                        for key, val in cp[section].items()}
    return raw


def load_config(path) -> dict[str, dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def apply_overrides(raw: Mapping[str, Mapping[str, Any]],
                    overrides: list[str]) -> dict[str, dict[str, Any]]:
    """Apply ``section.key=value`` overrides, last one wins."""
    out = {sec: dict(keys) for sec, keys in raw.items()}
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        path, value = item.split("=", 1)
        section, key = path.split(".", 1)
        if section not in SCHEMA:
            raise ConfigError(f"unknown section in override: {section}")
        out.setdefault(section, {})[key] = _convert(section, key, value)
    return out


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def dump_config(raw: Mapping[str, Mapping[str, Any]]) -> str:
    """Serialize a raw config mapping; floats keep 17 significant digits so a
    load/dump round trip is bit-identical."""
    buf = io.StringIO()
    for section in SCHEMA:
        keys = raw.get(section)
        if not keys:
            continue
        buf.write(f"[{section}]\n")
        for key, value in keys.items():
            buf.write(f"{key} = {format_value(value)}\n")
        buf.write("\n")
    return buf.getvalue()


def require(raw: Mapping[str, Mapping[str, Any]], section: str, key: str):
    try:
        return raw[section][key]
    except KeyError:
        raise ConfigError(f"missing required key {section}.{key}") from None
