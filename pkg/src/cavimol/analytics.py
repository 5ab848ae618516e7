"""Closed-form observables and signal extraction: peaks, fits, loss accounting.

The susceptibility and linewidth formulas here are the analytic cross-checks
for the time-domain engine in :mod:`cavimol.dynamics`; tests compare the two
routes, so neither should be expressed in terms of the other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks as _scipy_find_peaks

from .model import RingdownResult, ScanResult

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Formula evaluated at an exact pole of its domain."""


class FitError(RuntimeError):
    """Least-squares fit failed to converge; carries the residual trace."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ValidityWarning(UserWarning):
    """A closed-form expression was used outside its validity regime."""


@dataclass(frozen=True)
class Susceptibility:
    """Collective linear susceptibility chi = chi1 + i*chi2 (rad/s)."""

    chi: complex
    chi1: float
    chi2: float


@dataclass
class FitReport:
    """Fitted parameters plus goodness-of-fit bookkeeping."""

    kind: str
    params: dict[str, float]
    residual_norm: float          # RMS residual / peak amplitude
    covariance: np.ndarray | None = None
    flagged: bool = False
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Peak:
    position: float   # detuning (rad/s), sub-step interpolated
    height: float


@dataclass
class LossReport:
    """Dark-state loss per detection cycle."""

    rho_gprime: float
    rho_gdprime: float
    n_c: float
    per_cycle: np.ndarray | None = None   # total dark fraction after each cycle
    cycles: int = 1

    @property
    def total_fraction(self) -> float:
        return self.rho_gprime + self.rho_gdprime

    @property
    def lost_molecules(self) -> float:
        return self.n_c * self.total_fraction


def vrs_splitting_formula(g0: float, n_c: float) -> float:
    """Vacuum Rabi peak separation 2*g0*sqrt(N_c) (rad/s)."""
    if n_c < 0:
        raise ValueError("n_c must be >= 0")
    return 2.0 * g0 * math.sqrt(n_c)


def susceptibility(delta_pa: float, delta_ra: float, omega_control: float,
                   g0: float, n_c: float, gamma_t: float) -> Susceptibility:
    """Weak-probe susceptibility of the driven lambda system.

    chi = 2 g0^2 N_c (d_ra - d_pa) / (2|Omega|^2 + (2 d_pa + i Gamma_t)(d_ra - d_pa))

    chi1/chi2 are the exact real/imaginary parts (chi == chi1 + 1j*chi2).
    Vanishes identically at two-photon resonance d_pa == d_ra.
    """
    delta2 = delta_ra - delta_pa
    denom = 2.0 * abs(omega_control) ** 2 + (2.0 * delta_pa + 1j * gamma_t) * delta2
    if denom == 0:
        raise DomainError("susceptibility evaluated at an exact pole "
                          "(requires gamma_t = 0 or omega = delta2 = 0)")
    chi = 2.0 * g0 * g0 * n_c * delta2 / denom
    return Susceptibility(chi=chi, chi1=chi.real, chi2=chi.imag)


def steady_photon_number(eta: float, delta_pc: float, kappa_t: float,
                         chi: Susceptibility) -> float:
    """n_bar = eta^2 / ((delta_pc - chi1)^2 + (kappa_t - chi2)^2)."""
    if kappa_t <= 0:
        raise ValueError("kappa_t must be > 0")
    return eta**2 / ((delta_pc - chi.chi1) ** 2 + (kappa_t - chi.chi2) ** 2)


def eit_fwhm(g0: float, n_c: float, omega_control: float, kappa_t: float,
             gamma_t: float, simplified: bool = False) -> float:
    """FWHM (2d, rad/s) of the cavity-EIT transmission window.

    Exact form: 2d = 2|Omega|^2 kappa_t / sqrt(Gamma_t g0^2 kappa_t N_c
    + (g0^2 N_c + |Omega|^2)^2).  The simplified form
    2d = 2 kappa_t / (g0^2 N_c/|Omega|^2 + 1) requires |Omega|^2 >> Gamma_t*kappa_t.
    """
    om2 = abs(omega_control) ** 2
    if simplified:
        if om2 < 10.0 * gamma_t * kappa_t:
            warnings.warn("simplified FWHM outside its validity regime "
                          "(|Omega|^2 >> Gamma_t*kappa_t not satisfied)",
                          ValidityWarning, stacklevel=2)
        return 2.0 * kappa_t / (g0 * g0 * n_c / om2 + 1.0)
    gn = g0 * g0 * n_c
    return 2.0 * om2 * kappa_t / math.sqrt(gamma_t * gn * kappa_t + (gn + om2) ** 2)


def vrs_peak_transmission(kappa_t: float, kappa_r1: float, kappa_r2: float,
                          gamma_t: float, convention: str = "field") -> float:
    """Linear-response P_out/P_in at a vacuum Rabi peak (g0*sqrt(N_c) >> kappa, Gamma).

    At the polariton resonance the system responds like an empty cavity with
    total width kappa_t + Gamma_t/2.
    """
    width = kappa_t + 0.5 * gamma_t
    factor = 4.0 if convention == "field" else 1.0
    return factor * kappa_r1 * kappa_r2 / width**2


def eit_peak_transmission(kappa_t: float, kappa_r1: float, kappa_r2: float,
                          convention: str = "field") -> float:
    """P_out/P_in at the EIT window center, where chi = 0 (empty-cavity ratio)."""
    factor = 4.0 if convention == "field" else 1.0
    return factor * kappa_r1 * kappa_r2 / kappa_t**2


def _series(obj) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(obj, ScanResult):
        return np.asarray(obj.detuning), np.asarray(obj.p_out)
    if isinstance(obj, RingdownResult):
        return np.asarray(obj.t), np.asarray(obj.p_out)
    x, y = obj
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def find_peaks(scan, prominence_frac: float = 0.05) -> list[Peak]:
    """Local maxima above a relative prominence floor, with sub-step interpolation.

    Accepts a ScanResult or an (x, y) pair with >= 5 samples.
    """
    x, y = _series(scan)
    if len(x) < 5:
        raise ValueError("need at least 5 samples to locate peaks")
    top = float(np.max(y))
    if top <= 0 or np.ptp(y) == 0:
        return []
    idx, _ = _scipy_find_peaks(y, prominence=prominence_frac * top)
    peaks = []
    for i in idx:
        xi, hi = x[i], y[i]
        if 0 < i < len(x) - 1:
            d1 = y[i - 1] - y[i + 1]
            d2 = y[i - 1] - 2.0 * y[i] + y[i + 1]
            if d2 != 0:
                frac = 0.5 * d1 / d2
                xi = x[i] + frac * (x[i + 1] - x[i - 1]) / 2.0
                hi = y[i] - 0.25 * d1 * frac
        peaks.append(Peak(position=float(xi), height=float(hi)))
    return peaks


def _lorentzian(x, amplitude, center, hwhm):
    return amplitude * hwhm**2 / ((x - center) ** 2 + hwhm**2)


def fit_lorentzian(series, p0: tuple[float, float, float] | None = None) -> FitReport:
    """Least-squares fit of A*d^2/((x-x0)^2+d^2); reports FWHM = 2d.

    The series must contain one dominant peak; a clearly bimodal input either
    fails to converge (FitError) or comes back with ``flagged`` set.
    """
    x, y = _series(series)
    if p0 is None:
        i = int(np.argmax(y))
        amp = float(y[i])
        above = y >= 0.5 * amp
        hwhm = max(0.5 * (x[above][-1] - x[above][0]), abs(x[1] - x[0]))
        p0 = (amp, float(x[i]), hwhm)
    try:
        popt, pcov = curve_fit(_lorentzian, x, y, p0=p0,
                               bounds=([0, -np.inf, 0], [np.inf, np.inf, np.inf]),
                               maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"lorentzian fit did not converge: {exc}",
                       residuals=y - _lorentzian(x, *p0)) from exc
    resid = y - _lorentzian(x, *popt)
    rel_resid = float(np.sqrt(np.mean(resid**2))) / max(float(popt[0]), 1e-300)
    flagged = bool(rel_resid > 0.05)
    notes = ("large residual: series may not be a single Lorentzian",) if flagged else ()
    return FitReport(kind="lorentzian",
                     params={"amplitude": popt[0], "center": popt[1],
                             "hwhm": popt[2], "fwhm": 2.0 * popt[2]},
                     residual_norm=rel_resid, covariance=pcov,
                     flagged=flagged, notes=notes)


def _exponential(t, i0, rate):
    return i0 * np.exp(-rate * t)


def fit_exponential(ringdown, rel_residual_flag: float = 5e-3) -> FitReport:
    """Fit I0*exp(-r*t) to a ring-down trace; reports the decay rate r (1/s).

    Needs >= 10 samples spanning >= 2 decay constants.  A non-positive tail
    truncates the fit window (noted); a clearly non-exponential trace is
    flagged via the residual norm.
    """
    t, p = _series(ringdown)
    notes: list[str] = []
    positive = p > 0
    if not positive.all():
        cut = int(np.argmin(positive))  # first non-positive sample
        t, p = t[:cut], p[:cut]
        notes.append(f"fit window truncated to {cut} samples (non-positive tail)")
    if len(t) < 10:
        raise ValueError("need at least 10 positive samples to fit a decay")
    # log-linear seed, then a proper nonlinear fit
    slope, intercept = np.polyfit(t - t[0], np.log(p), 1)
    decades = -slope * (t[-1] - t[0])
    if decades < 2.0:
        notes.append("trace spans fewer than 2 decay constants")
    p0 = (math.exp(intercept), -slope)
    try:
        popt, pcov = curve_fit(_exponential, t - t[0], p, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"exponential fit did not converge: {exc}",
                       residuals=np.log(p) - (intercept + slope * (t - t[0]))) from exc
    resid = p - _exponential(t - t[0], *popt)
    rel_resid = float(np.sqrt(np.mean(resid**2))) / max(abs(popt[0]), 1e-300)
    flagged = bool(rel_resid > rel_residual_flag)
    if flagged:
        notes.append("large residual: decay is not a single exponential")
    return FitReport(kind="exponential",
                     params={"i0": popt[0], "rate": popt[1]},
                     residual_norm=rel_resid, covariance=pcov,
                     flagged=flagged, notes=tuple(notes))


def loss_fraction(result) -> LossReport:
    """Dark-state populations at the end of a run, as fractions and counts."""
    if isinstance(result, ScanResult):
        return LossReport(rho_gprime=float(result.rho_gpgp[-1]),
                          rho_gdprime=float(result.rho_gpp[-1]),
                          n_c=float(result.metadata.get("n_c", 0.0)))
    if isinstance(result, RingdownResult):
        per_cycle = result.rho_gpgp_cycles + result.rho_gpp_cycles
        return LossReport(rho_gprime=float(result.rho_gpgp_cycles[-1]),
                          rho_gdprime=float(result.rho_gpp_cycles[-1]),
                          n_c=float(result.metadata.get("n_c", 0.0)),
                          per_cycle=np.asarray(per_cycle),
                          cycles=result.cycles)
    state = result  # a MeanFieldState
    return LossReport(rho_gprime=float(state.rho_gpgp),
                      rho_gdprime=float(state.rho_gpp), n_c=0.0)
