"""Domain types, unit conventions, and validation shared by the whole simulator.

Unit convention: every frequency/rate inside the model is angular (rad/s).
Configuration files and CSV/JSON outputs use ordinary-frequency hertz; the
factor 2*pi is applied exactly once, inside :func:`validate`.  Lengths are in
meters, powers in watts, dipole moments in C*m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

TWO_PI = 2.0 * math.pi

#: photon-flux bookkeeping conventions, see physparams module
FLUX_CONVENTIONS = ("field", "energy")


class ValidationError(ValueError):
    """Raised when a configuration violates a model invariant.

    ``errors`` is a list of "section.key: message" strings, one per violation.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class LevelScheme:
    """Decay rates and dipoles of the effective 3-/4-level molecule.

    gamma3 == 0 selects the 3-level scheme (dark reservoir |g'> only);
    gamma3 > 0 adds the second dark reservoir |g''> used by the EIT scheme.
    """

    gamma1: float            # |e> -> |g>   (rad/s)
    gamma2: float            # |e> -> |g'>  (rad/s)
    gamma3: float = 0.0      # |e> -> |g''> aggregate of all other dark levels (rad/s)
    gamma_gg_prime: float = 0.0   # ground-state decoherence (rad/s)
    mu_ge: float = 0.0       # C*m
    mu_gprime_e: float = 0.0  # C*m
    lambda_transition: float = 675e-9  # m, used for photon-energy bookkeeping
    gamma_t: float = 0.0     # total excited-state decay, filled by validate()


@dataclass(frozen=True)
class CavityParams:
    """Mirror geometry, loss rates and mode properties of the resonator."""

    kappa_t: float           # total cavity field decay rate (rad/s)
    kappa_r1: float          # input-mirror loss rate (rad/s)
    kappa_r2: float          # output-mirror loss rate (rad/s)
    length: float            # mirror separation (m)
    roc: float               # mirror radius of curvature (m)
    waist: float = 0.0       # mode waist (m), derived unless overridden
    mode_volume: float = 0.0  # m^3, derived unless overridden
    g0: float = 0.0          # max atom-cavity coupling (rad/s), derived unless overridden
    omega_cv: float = 0.0    # cavity resonance angular frequency (rad/s)


@dataclass(frozen=True)
class DriveParams:
    """Probe and control fields.

    ``eta`` is the classical injection amplitude of the cavity equation,
    derived from ``p_in`` by validate().  ``omega_control`` is the half-Rabi
    frequency of the control beam; zero for VRS runs.
    """

    p_in: float = 0.0        # probe power on the input mirror (W)
    eta: float = 0.0         # injection rate (rad/s-scaled amplitude)
    delta_pc: float = 0.0    # probe-cavity detuning (rad/s)
    delta_pa: float = 0.0    # probe-atom detuning (rad/s)
    delta_ra: float = 0.0    # control-atom detuning (rad/s)
    omega_control: float = 0.0  # control half-Rabi frequency (rad/s)


@dataclass(frozen=True)
class EnsembleParams:
    """Molecule cloud and its effective coupling to the mode."""

    n_total: float           # physical molecule count
    n_c: float               # effective coupled number, derived unless overridden
    cloud_sigmas: tuple[float, float, float] | None = None  # RMS radii (m)
    cloud_center: tuple[float, float, float] = (0.0, 0.0, 0.0)  # offset from mode center (m)


@dataclass
class MeanFieldState:
    """Cavity amplitude plus single-molecule density-matrix elements.

    ``alpha`` is normalized so that ``|alpha|**2`` is the intracavity photon
    number.  ``rho_ggp``/``rho_gpe`` are unused (identically zero) in 3-level
    runs.
    """

    alpha: complex = 0.0 + 0.0j
    rho_gg: float = 1.0
    rho_ee: float = 0.0
    rho_gpgp: float = 0.0    # population of |g'>
    rho_gpp: float = 0.0     # population of |g''>
    rho_ge: complex = 0.0 + 0.0j
    rho_ggp: complex = 0.0 + 0.0j
    rho_gpe: complex = 0.0 + 0.0j

    @property
    def n_bar(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def trace(self) -> float:
        return self.rho_gg + self.rho_ee + self.rho_gpgp + self.rho_gpp


@dataclass(frozen=True)
class Model:
    """A fully validated, immutable parameter set.

    ``snapshot`` preserves the raw ordinary-unit configuration for manifests
    and bit-identical round-trips.  Safe to share across concurrent runs.
    """

    levels: LevelScheme
    cavity: CavityParams
    drive: DriveParams
    ensemble: EnsembleParams
    flux_convention: str = "field"
    snapshot: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def with_drive(self, **changes) -> "Model":
        return replace(self, drive=replace(self.drive, **changes))


@dataclass
class ScanResult:
    """Detuning series recorded by a probe scan, plus run metadata."""

    detuning: np.ndarray       # probe-cavity detuning (rad/s), strictly increasing
    p_out: np.ndarray          # output power (W)
    n_bar: np.ndarray
    rho_gg: np.ndarray
    rho_ee: np.ndarray
    rho_gpgp: np.ndarray
    rho_gpp: np.ndarray
    mode: str                  # "vrs" | "eit"
    scan_rate: float           # span / total time (rad/s per s)
    dwell: float
    metadata: dict = field(default_factory=dict)
    final_state: MeanFieldState | None = None


@dataclass
class RingdownResult:
    """Output-power transient(s) after the probe is switched off."""

    t: np.ndarray              # time since switch-off (s), first cycle grid
    p_out: np.ndarray          # first-cycle output power (W)
    p_out_cycles: np.ndarray   # (cycles, len(t)) output power per cycle
    steady_p_out: float        # pre-switch-off steady output (W)
    steady_n_bar: float
    settle_time: float         # first-cycle settle duration (s)
    rho_gpgp_cycles: np.ndarray  # dark populations at the end of each cycle
    rho_gpp_cycles: np.ndarray
    cycles: int
    metadata: dict = field(default_factory=dict)
    final_state: MeanFieldState | None = None


def _get(raw: Mapping, section: str, key: str, default=None):
    return raw.get(section, {}).get(key, default)


def _angular(value_hz: float) -> float:
    return TWO_PI * value_hz


def validate(config: Mapping[str, Mapping[str, Any]] | Model) -> Model:
    """Check every invariant and materialize derived fields exactly once.

    Accepts a raw configuration mapping (sections -> ordinary-unit keys, as
    produced by :mod:`cavimol.config`) or an already-validated Model, in which
    case it is returned unchanged (idempotence).

    Raises ValidationError listing every violated invariant with its field
    path.
    """
    if isinstance(config, Model):
        return config

    from . import physparams  # deferred: physparams imports model types

    errors: list[str] = []
    lv = dict(config.get("levels", {}))
    cv = dict(config.get("cavity", {}))
    dr = dict(config.get("drive", {}))
    en = dict(config.get("ensemble", {}))
    run = dict(config.get("run", {}))

    flux_convention = run.get("flux_convention", "field")
    if flux_convention not in FLUX_CONVENTIONS:
        errors.append(f"run.flux_convention: must be one of {FLUX_CONVENTIONS}")

    # --- levels ---
    gamma1 = _angular(lv.get("gamma1_hz", 0.0))
    gamma2 = _angular(lv.get("gamma2_hz", 0.0))
    gamma3 = _angular(lv.get("gamma3_hz", 0.0))
    gamma_gg = _angular(lv.get("gamma_gg_prime_hz", 0.0))
    for name, val in (("gamma1_hz", gamma1), ("gamma2_hz", gamma2),
                      ("gamma3_hz", gamma3), ("gamma_gg_prime_hz", gamma_gg)):
        if val < 0:
            errors.append(f"levels.{name}: rate must be >= 0")
    gamma_t = gamma1 + gamma2 + gamma3
    if gamma_t <= 0:
        errors.append("levels.gamma1_hz: total decay rate gamma1+gamma2+gamma3 must be > 0")
    mu_ge = lv.get("mu_ge_cm", 0.0)
    mu_gpe = lv.get("mu_gprime_e_cm", 0.0)
    wavelength = lv.get("lambda_transition_m", 675e-9)
    if wavelength <= 0:
        errors.append("levels.lambda_transition_m: must be > 0")

    # --- cavity ---
    kappa_t = _angular(cv.get("kappa_t_hz", 0.0))
    if kappa_t <= 0:
        errors.append("cavity.kappa_t_hz: must be > 0")
    kr1, kr2 = 0.0, 0.0
    for mirror in ("r1", "r2"):
        key_hz, key_frac = f"kappa_{mirror}_hz", f"kappa_{mirror}_frac"
        if key_hz in cv and key_frac in cv:
            errors.append(f"cavity.{key_hz}: conflicts with {key_frac}; give one")
        val = _angular(cv[key_hz]) if key_hz in cv else cv.get(key_frac, 0.0) * kappa_t
        if val < 0:
            errors.append(f"cavity.kappa_{mirror}: rate must be >= 0")
        if mirror == "r1":
            kr1 = val
        else:
            kr2 = val
    if kappa_t > 0 and kr1 + kr2 > kappa_t * (1 + 1e-12):
        errors.append("cavity.kappa_r1+kappa_r2: mirror losses exceed total")

    length = cv.get("length_m", 0.0)
    roc = cv.get("roc_m", 0.0)
    if not (0 < length < 2 * roc):
        errors.append("cavity.length_m: unstable resonator (need 0 < L < 2*roc)")

    omega_cv = _angular(cv["omega_cv_hz"]) if "omega_cv_hz" in cv \
        else TWO_PI * physparams.C_LIGHT / wavelength

    if "waist_m" in cv and "mode_volume_m3" in cv:
        errors.append("cavity.waist_m: conflicts with mode_volume_m3; give one")
    waist = cv.get("waist_m", 0.0)
    if not waist and not errors:
        waist = physparams.cavity_waist(length, roc, wavelength)
    mode_volume = cv.get("mode_volume_m3", 0.0)
    if not mode_volume and waist:
        mode_volume = physparams.mode_volume(waist, length)
    if mode_volume <= 0:
        errors.append("cavity.mode_volume_m3: must be > 0")

    g0_derived = 0.0
    if mu_ge > 0 and mode_volume > 0:
        g0_derived = physparams.coupling_g0(mu_ge, omega_cv, mode_volume)
    if "g0_hz" in cv:
        g0 = _angular(cv["g0_hz"])
    else:
        if mu_ge <= 0:
            errors.append("levels.mu_ge_cm: must be > 0 to derive cavity.g0_hz")
        g0 = g0_derived
    if g0 <= 0 and not errors:
        errors.append("cavity.g0_hz: must be > 0")

    # --- ensemble ---
    sig_keys = ("cloud_sigma_x_m", "cloud_sigma_y_m", "cloud_sigma_z_m")
    have_sigmas = any(k in en for k in sig_keys)
    sigmas = tuple(en.get(k, 0.0) for k in sig_keys) if have_sigmas else None
    center = (en.get("cloud_center_x_m", 0.0), en.get("cloud_center_y_m", 0.0),
              en.get("cloud_center_z_m", 0.0))
    if "n_c" in en and have_sigmas:
        errors.append("ensemble.n_c: conflicts with cloud_sigma_*; give one")
    n_total = en.get("n_total", en.get("n_c", 0.0))
    if n_total < 0:
        errors.append("ensemble.n_total: must be >= 0")
    if "n_c" in en:
        n_c = en["n_c"]
    elif have_sigmas and not errors:
        geom = physparams.ModeGeometry.from_cavity(waist, length, wavelength)
        n_c = physparams.effective_atom_number(
            EnsembleParams(n_total=n_total, n_c=0.0, cloud_sigmas=sigmas,
                           cloud_center=center), geom)
    else:
        n_c = n_total
    if not (0 <= n_c <= n_total * (1 + 1e-12)):
        errors.append("ensemble.n_c: must satisfy 0 <= n_c <= n_total")

    # --- drive ---
    p_in = dr.get("p_in_w", 0.0)
    if p_in < 0:
        errors.append("drive.p_in_w: must be >= 0")
    omega_is_angular = bool(run.get("omega_is_angular", False))
    omega_raw = dr.get("omega_control_hz", 0.0)
    omega = omega_raw if omega_is_angular else _angular(omega_raw)
    delta_ra = _angular(dr.get("delta_ra_hz", 0.0))
    offset = _angular(dr.get("atom_cavity_offset_hz", 0.0))
    delta_pc = _angular(dr.get("delta_pc_hz", 0.0))
    delta_pa = delta_pc + offset

    if errors:
        raise ValidationError(errors)

    eta = physparams.eta_from_input(p_in, kr1, wavelength, convention=flux_convention)

    snapshot = {sec: dict(config.get(sec, {})) for sec in
                ("levels", "cavity", "drive", "ensemble", "run")}

    return Model(
        levels=LevelScheme(gamma1=gamma1, gamma2=gamma2, gamma3=gamma3,
                           gamma_gg_prime=gamma_gg, mu_ge=mu_ge,
                           mu_gprime_e=mu_gpe, lambda_transition=wavelength,
                           gamma_t=gamma_t),
        cavity=CavityParams(kappa_t=kappa_t, kappa_r1=kr1, kappa_r2=kr2,
                            length=length, roc=roc, waist=waist,
                            mode_volume=mode_volume, g0=g0, omega_cv=omega_cv),
        drive=DriveParams(p_in=p_in, eta=eta, delta_pc=delta_pc,
                          delta_pa=delta_pa, delta_ra=delta_ra,
                          omega_control=omega),
        ensemble=EnsembleParams(n_total=n_total, n_c=n_c, cloud_sigmas=sigmas,
                                cloud_center=center),
        flux_convention=flux_convention,
        snapshot=snapshot,
    )
