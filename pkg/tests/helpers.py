"""Shared builders for the reference operating points used across the tests."""

from __future__ import annotations

import math

from cavimol import analytics, physparams
from cavimol.model import Model, validate

TWO_PI = 2.0 * math.pi

# effective molecule: total excited-state decay 6.44 MHz, split per scheme
GAMMA_1_HZ = 401.5e3        # |e> -> |g>
GAMMA_2EIT_HZ = 456.6e3     # |e> -> |g'>
GAMMA_T_HZ = 6.44e6
LAMBDA_M = 675e-9

CAVITY_GEOMETRY = {"length_m": 11.8e-3, "roc_m": 10e-3}
G0_HZ = 219.2e3
MU_GE = 4.8e-29
MU_GPE = 5.1e-29


def vrs_config(n_c, kappa_t_hz=2.5e6, r1=0.1, r2=0.8, p_in_w=0.23e-9,
               extra_run=None):
    cfg = {
        "levels": {"gamma1_hz": GAMMA_1_HZ, "gamma2_hz": GAMMA_T_HZ - GAMMA_1_HZ,
                   "mu_ge_cm": MU_GE, "lambda_transition_m": LAMBDA_M},
        "cavity": {"kappa_t_hz": kappa_t_hz, "kappa_r1_frac": r1,
                   "kappa_r2_frac": r2, "g0_hz": G0_HZ, **CAVITY_GEOMETRY},
        "drive": {"p_in_w": p_in_w},
        "ensemble": {"n_c": n_c},
        "run": dict(extra_run or {}),
    }
    return cfg


def eit_config(n_c, kappa_t_hz=0.5e6, r1=0.1, r2=0.8, p_in_w=40e-12,
               omega_hz=10e6, extra_run=None):
    cfg = {
        "levels": {"gamma1_hz": GAMMA_1_HZ, "gamma2_hz": GAMMA_2EIT_HZ,
                   "gamma3_hz": GAMMA_T_HZ - GAMMA_1_HZ - GAMMA_2EIT_HZ,
                   "mu_ge_cm": MU_GE, "mu_gprime_e_cm": MU_GPE,
                   "lambda_transition_m": LAMBDA_M},
        "cavity": {"kappa_t_hz": kappa_t_hz, "kappa_r1_frac": r1,
                   "kappa_r2_frac": r2, "g0_hz": G0_HZ, **CAVITY_GEOMETRY},
        "drive": {"p_in_w": p_in_w, "omega_control_hz": omega_hz},
        "ensemble": {"n_c": n_c},
        "run": dict(extra_run or {}),
    }
    return cfg


def vrs_model(n_c, p_out_peak_w=None, **kw) -> Model:
    cfg = vrs_config(n_c, **kw)
    if p_out_peak_w is not None:
        m = validate(cfg)
        ratio = analytics.vrs_peak_transmission(
            m.cavity.kappa_t, m.cavity.kappa_r1, m.cavity.kappa_r2,
            m.levels.gamma_t)
        cfg["drive"]["p_in_w"] = p_out_peak_w / ratio
    return validate(cfg)


def eit_model(n_c, **kw) -> Model:
    return validate(eit_config(n_c, **kw))


def eit_model_fixed_flux(n_c, kappa_t_hz, r1=0.1, r2=0.8,
                         base_p_in_w=40e-12, base_kappa_t_hz=0.5e6) -> Model:
    """EIT model with p_in set so the transparency-window output flux equals
    that of the base operating point (base_p_in_w at base_kappa_t_hz)."""
    base = validate(eit_config(1e3, kappa_t_hz=base_kappa_t_hz, p_in_w=base_p_in_w))
    flux_out = physparams.photon_flux(base_p_in_w, LAMBDA_M) * \
        analytics.eit_peak_transmission(base.cavity.kappa_t, base.cavity.kappa_r1,
                                        base.cavity.kappa_r2)
    probe = validate(eit_config(1e3, kappa_t_hz=kappa_t_hz, r1=r1, r2=r2))
    ratio = analytics.eit_peak_transmission(probe.cavity.kappa_t,
                                            probe.cavity.kappa_r1,
                                            probe.cavity.kappa_r2)
    p_in = physparams.power_from_flux(flux_out / ratio, LAMBDA_M)
    return validate(eit_config(n_c, kappa_t_hz=kappa_t_hz, r1=r1, r2=r2,
                               p_in_w=p_in))
