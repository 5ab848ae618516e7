import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavimol import config as cfg
from cavimol.model import TWO_PI, ValidationError, validate

from helpers import GAMMA_T_HZ, eit_config, vrs_config


def test_reference_molecule_gives_expected_total_decay():
    model = validate(vrs_config(5e4))
    assert model.levels.gamma_t == pytest.approx(TWO_PI * GAMMA_T_HZ, rel=1e-12)
    assert model.levels.gamma_t > 0


def test_mirror_losses_exceeding_total_rejected():
    bad = vrs_config(1e3)
    bad["cavity"]["kappa_r1_frac"] = 0.5
    bad["cavity"]["kappa_r2_frac"] = 0.8
    with pytest.raises(ValidationError, match="mirror losses exceed total"):
        validate(bad)


def test_unstable_resonator_rejected():
    bad = vrs_config(1e3)
    bad["cavity"]["length_m"] = 25e-3
    bad["cavity"]["roc_m"] = 10e-3
    with pytest.raises(ValidationError, match="unstable resonator"):
        validate(bad)


def test_every_violation_reported_with_field_path():
    bad = vrs_config(1e3)
    bad["cavity"]["kappa_r1_frac"] = 0.9
    bad["cavity"]["length_m"] = 25e-3
    bad["drive"]["p_in_w"] = -1.0
    with pytest.raises(ValidationError) as err:
        validate(bad)
    text = "; ".join(err.value.errors)
    assert "cavity.kappa_r1" in text
    assert "cavity.length_m" in text
    assert "drive.p_in_w" in text


def test_derivation_conflicts_rejected():
    bad = vrs_config(1e3)
    bad["cavity"]["kappa_r1_hz"] = 2.5e5
    with pytest.raises(ValidationError, match="conflicts"):
        validate(bad)
    bad = vrs_config(1e3)
    bad["cavity"]["waist_m"] = 30e-6
    bad["cavity"]["mode_volume_m3"] = 1e-11
    with pytest.raises(ValidationError, match="conflicts"):
        validate(bad)
    bad = eit_config(1e3)
    bad["ensemble"]["cloud_sigma_x_m"] = 1e-5
    with pytest.raises(ValidationError, match="conflicts"):
        validate(bad)


def test_validate_is_idempotent():
    model = validate(eit_config(1e3))
    assert validate(model) is model


def test_negative_rates_rejected():
    bad = vrs_config(1e3)
    bad["levels"]["gamma1_hz"] = -1.0
    with pytest.raises(ValidationError, match="levels.gamma1_hz"):
        validate(bad)


def test_n_c_above_n_total_rejected():
    bad = vrs_config(1e3)
    bad["ensemble"] = {"n_total": 10.0, "n_c": 20.0}
    with pytest.raises(ValidationError, match="ensemble.n_c"):
        validate(bad)


def test_angular_conversion_applied_exactly_once():
    model = validate(vrs_config(1e3))
    assert model.cavity.kappa_t == pytest.approx(TWO_PI * 2.5e6, rel=1e-15)
    assert model.drive.omega_control == 0.0
    eit = validate(eit_config(1e3))
    assert eit.drive.omega_control == pytest.approx(TWO_PI * 1e7, rel=1e-15)


def test_omega_is_angular_flag_skips_conversion():
    raw = eit_config(1e3)
    raw["run"]["omega_is_angular"] = True
    model = validate(raw)
    assert model.drive.omega_control == pytest.approx(1e7, rel=1e-15)


def test_config_round_trip_is_bit_identical():
    raw = cfg.load_config("configs/eit_base.ini")
    model = validate(raw)
    dumped = cfg.dump_config(model.snapshot)
    reparsed = cfg.parse_config(dumped)
    assert reparsed == raw
    # and a second trip through text changes nothing at all
    assert cfg.dump_config(validate(reparsed).snapshot) == dumped


@settings(max_examples=40, deadline=None)
@given(kappa_hz=st.floats(1e4, 1e8), r1=st.floats(0.0, 0.45),
       r2=st.floats(0.0, 0.45), n_c=st.floats(0.0, 1e7))
def test_valid_configs_validate_and_revalidate(kappa_hz, r1, r2, n_c):
    model = validate(vrs_config(n_c, kappa_t_hz=kappa_hz, r1=r1, r2=r2))
    assert model.cavity.kappa_r1 + model.cavity.kappa_r2 <= \
        model.cavity.kappa_t * (1 + 1e-12)
    assert validate(model) is model


def test_missing_required_key_names_it():
    raw = cfg.parse_config("[levels]\ngamma1_hz = 1e5\n")
    with pytest.raises(cfg.ConfigError, match="cavity.kappa_t_hz"):
        cfg.require(raw, "cavity", "kappa_t_hz")


def test_unknown_key_rejected():
    with pytest.raises(cfg.ConfigError, match="unknown key"):
        cfg.parse_config("[levels]\nnot_a_key = 1\n")


def test_override_parsing():
    raw = cfg.apply_overrides(vrs_config(1e3), ["ensemble.n_c=99", "run.steps=7"])
    assert raw["ensemble"]["n_c"] == 99.0
    assert raw["run"]["steps"] == 7
    with pytest.raises(cfg.ConfigError):
        cfg.apply_overrides(vrs_config(1e3), ["nonsense"])
