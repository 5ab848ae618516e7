"""Physical parameter derivations: mode geometry, coupling, photon-flux bookkeeping.

Flux conventions (selectable per run, default "field"):

* ``field``: the kappas are field (amplitude) decay rates, photon number
  decays at 2*kappa_t, input/output fluxes carry 2*kappa_r1 / 2*kappa_r2.
  eta = sqrt(2*kappa_r1*flux_in), flux_out = 2*kappa_r2*n_bar.
* ``energy``: same equations of motion, but the flux bookkeeping drops the
  factors of two (eta = sqrt(kappa_r1*flux_in), flux_out = kappa_r2*n_bar).

Either way the empty resonant cavity transmits 4*kappa_r1*kappa_r2/kappa_t**2
of the incident flux.  The sign of eta is dropped throughout: only |alpha|**2
is observable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.constants import epsilon_0 as EPS0
from scipy.constants import h as H_PLANCK
from scipy.constants import hbar as HBAR

from .model import EnsembleParams

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModeGeometry:
    """Standing-wave Gaussian mode of a symmetric resonator."""

    waist: float          # m
    rayleigh_range: float  # m
    mode_volume: float    # m^3
    wavelength: float     # m
    length: float         # m

    @classmethod
    def from_cavity(cls, waist: float, length: float, wavelength: float) -> "ModeGeometry":
        zr = math.pi * waist**2 / wavelength
        return cls(waist=waist, rayleigh_range=zr,
                   mode_volume=mode_volume(waist, length),
                   wavelength=wavelength, length=length)


def rayleigh_range(length: float, roc: float) -> float:
    """z_R of a symmetric two-mirror resonator: 0.5*sqrt(L*(2*roc - L))."""
    if not (0 < length < 2 * roc):
        raise ValueError("unstable resonator: need 0 < length < 2*roc")
    return 0.5 * math.sqrt(length * (2.0 * roc - length))


def cavity_waist(length: float, roc: float, wavelength: float) -> float:
    """Waist of the symmetric resonator mode, w0**2 = (lambda/pi)*z_R."""
    zr = rayleigh_range(length, roc)
    return math.sqrt(wavelength / math.pi * zr)


def mode_volume(waist: float, length: float) -> float:
    """V = (pi/4) * w0**2 * L for the standing-wave Gaussian mode."""
    return 0.25 * math.pi * waist**2 * length


def coupling_g0(mu_ge: float, omega_cv: float, mode_vol: float) -> float:
    """Maximum atom-cavity coupling mu*sqrt(omega/(2*hbar*eps0*V)), magnitude.

    Only g0**2 and g0*sqrt(N_c) enter observables, so the sign is dropped.
    """
    if omega_cv <= 0 or mode_vol <= 0:
        raise ValueError("omega_cv and mode volume must be positive")
    if mu_ge < 0:
        raise ValueError("dipole moment must be >= 0")
    return mu_ge * math.sqrt(omega_cv / (2.0 * HBAR * EPS0 * mode_vol))


def photon_flux(power: float, wavelength: float) -> float:
    """Photons per second in a beam of the given power, P*lambda/(h*c)."""
    if power < 0:
        raise ValueError("power must be >= 0")
    return power * wavelength / (H_PLANCK * C_LIGHT)


def power_from_flux(flux: float, wavelength: float) -> float:
    """Inverse of photon_flux."""
    return flux * H_PLANCK * C_LIGHT / wavelength


def eta_from_input(p_in: float, kappa_r1: float, wavelength: float,
                   convention: str = "field") -> float:
    """Classical injection amplitude for the cavity equation.

    field: eta = sqrt(2*kappa_r1*flux_in); the empty resonant cavity then has
    n_bar = eta**2/kappa_t**2 and emits flux_out = 2*kappa_r2*n_bar.
    """
    if p_in < 0 or kappa_r1 < 0:
        raise ValueError("p_in and kappa_r1 must be >= 0")
    flux = photon_flux(p_in, wavelength)
    factor = 2.0 if convention == "field" else 1.0
    return math.sqrt(factor * kappa_r1 * flux)


def output_power(alpha: complex, kappa_r2: float, wavelength: float,
                 convention: str = "field") -> float:
    """Power leaking through the output mirror, hbar*omega * 2*kappa_r2 * |alpha|**2."""
    n_bar = abs(alpha) ** 2
    omega = TWO_PI * C_LIGHT / wavelength
    factor = 2.0 if convention == "field" else 1.0
    return HBAR * omega * factor * kappa_r2 * n_bar


def mode_function(x, y, z, mode: ModeGeometry):
    """Standing-wave Gaussian mode f(x,y,z) = cos(k z) * exp(-(x^2+y^2)/w(z)^2)."""
    k = TWO_PI / mode.wavelength
    wz2 = mode.waist**2 * (1.0 + (z / mode.rayleigh_range) ** 2)
    return np.cos(k * z) * np.exp(-(x**2 + y**2) / wz2)


def effective_atom_number(ensemble: EnsembleParams, mode: ModeGeometry,
                          rel_step: float = 0.025) -> float:
    """N_c = N * <f^2> over the Gaussian cloud, by deterministic quadrature.

    The transverse average has a closed form per axial slice; only the axial
    integral (which must resolve the cos^2(kz) standing wave) is numeric.
    rel_step is the z step in units of lambda/(2*pi).
    """
    if ensemble.cloud_sigmas is None:
        raise ValueError("cloud sigmas required to derive n_c")
    sx, sy, sz = ensemble.cloud_sigmas
    x0, y0, z0 = ensemble.cloud_center
    if min(sx, sy, sz) < 0:
        raise ValueError("cloud sigmas must be >= 0")
    k = TWO_PI / mode.wavelength
    w0, zr = mode.waist, mode.rayleigh_range

    def transverse(wz2: float) -> float:
        # <exp(-2 x^2/w^2)> for x ~ N(x0, s): Gaussian-Gaussian overlap
        out = 1.0
        for s, c0 in ((sx, x0), (sy, y0)):
            denom = wz2 + 4.0 * s * s
            out *= math.sqrt(wz2 / denom) * math.exp(-2.0 * c0 * c0 / denom)
        return out

    if sz == 0.0:
        wz2 = w0**2 * (1.0 + (z0 / zr) ** 2)
        mean_f2 = math.cos(k * z0) ** 2 * transverse(wz2)
    else:
        dz = min(rel_step / k, sz / 50.0)
        half = 6.0 * sz
        n = int(2 * half / dz) + 1
        z = np.linspace(z0 - half, z0 + half, n)
        rho = np.exp(-0.5 * ((z - z0) / sz) ** 2) / (sz * math.sqrt(TWO_PI))
        wz2 = w0**2 * (1.0 + (z / zr) ** 2)
        trans = np.ones_like(z)
        for s, c0 in ((sx, x0), (sy, y0)):
            denom = wz2 + 4.0 * s * s
            trans *= np.sqrt(wz2 / denom) * np.exp(-2.0 * c0 * c0 / denom)
        mean_f2 = float(np.trapezoid(rho * np.cos(k * z) ** 2 * trans, z))

    if mean_f2 < 1e-9:
        warnings.warn("cloud barely overlaps the cavity mode (<f^2> < 1e-9)",
                      stacklevel=2)
    return ensemble.n_total * mean_f2
