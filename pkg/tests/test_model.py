from __future__ import annotations

import json
import math

import numpy as np
import pytest

from acimflow.errors import ConfigurationError, FeasibilityError, ValidationError
from acimflow.explorer import SearchBounds, enumerate_feasible
from acimflow.model import (
    DesignPoint,
    adc_energy,
    analog_nonideality_variance,
    area_per_bit,
    cycle_time,
    energy_per_op,
    evaluate,
    fit_snr_coefficients,
    input_quantization_variance,
    signal_variance,
    snr_pre,
    snr_simplified_db,
    snr_total_db,
    sqnr_output_db,
    throughput,
)
from acimflow.profile import TechnologyProfile, load_profile, save_profile

from oracles import exact_adc_energy, mc_input_quantization_variance, mc_output_sqnr_db, ref_area

FIG5A = DesignPoint(128, 128, 2, 3)


@pytest.fixture
def clean(profile):
    """No analog noise and near-infinite input precision."""
    return profile.with_updates(kappa=1e-30, temperature_K=1e-30, B_x=60, B_w=60)


# --------------------------------------------------------------------------- #
# DesignPoint

def test_point_constraints():
    assert DesignPoint(128, 128, 2, 3).violations() == []
    assert DesignPoint(32, 32, 8, 3).violations()  # H/L = 4 < 8
    assert DesignPoint(12, 4, 2, 1).violations()   # H not a power of two
    assert DesignPoint(4, 4, 8, 1).violations()    # L > H
    with pytest.raises(ValidationError):
        DesignPoint(0, 1, 1, 1)
    with pytest.raises(ValidationError):
        DesignPoint(True, 1, 1, 1)


def test_point_derived():
    assert FIG5A.N == 64
    assert FIG5A.bits == 16384


# --------------------------------------------------------------------------- #
# quantization and analog noise

def test_input_quantization_linear_in_n(profile):
    one = input_quantization_variance(profile, 1)
    assert input_quantization_variance(profile, 2) == pytest.approx(2 * one, rel=1e-15)
    assert input_quantization_variance(profile, 7) > input_quantization_variance(profile, 6)


def test_input_quantization_vanishes_with_precision(profile):
    fine = profile.with_updates(B_x=200, B_w=200)
    assert input_quantization_variance(fine, 1) == pytest.approx(0.0, abs=1e-100)


def test_input_quantization_decreases_with_bits(profile):
    v = input_quantization_variance(profile, 16)
    assert input_quantization_variance(profile.with_updates(B_x=profile.B_x + 1), 16) < v
    assert input_quantization_variance(profile.with_updates(B_w=profile.B_w + 1), 16) < v


def test_input_quantization_matches_monte_carlo(profile):
    p = profile.with_updates(x_m=1.0, w_m=1.0, sigma_x=1.0, sigma_w=1.0, Ex2=1.0, B_x=4, B_w=4)
    analytic = input_quantization_variance(p, 16)
    empirical = mc_input_quantization_variance(16, 2.0**-4, 2.0**-3, 1_000_000, seed=7)
    assert empirical == pytest.approx(analytic, rel=0.02)


def test_analog_noise_limits(profile):
    zero = profile.with_updates(kappa=1e-300, temperature_K=1e-300)
    assert analog_nonideality_variance(zero, 16) == pytest.approx(0.0, abs=1e-200)
    assert analog_nonideality_variance(profile, 8) == pytest.approx(2 * analog_nonideality_variance(profile, 4), rel=1e-15)


def test_analog_noise_scales_inverse_with_capacitance(profile):
    base = analog_nonideality_variance(profile, 16)
    big = analog_nonideality_variance(profile.with_updates(C_o=4 * profile.C_o), 16)
    assert big == pytest.approx(base / 4, rel=1e-12)


def test_sqnr_arithmetic(profile):
    unit = profile.with_updates(x_m=1.0, w_m=1.0, sigma_x=1.0, sigma_w=1.0)
    assert sqnr_output_db(unit, 8, 1) == pytest.approx(52.8, abs=1e-12)
    assert sqnr_output_db(unit, 8, 64) == pytest.approx(52.8 - 10 * math.log10(64), abs=1e-12)


def test_sqnr_matches_monte_carlo(profile):
    p = profile.with_updates(x_m=2.0, w_m=2.0, sigma_x=1.0, sigma_w=1.0)
    analytic = sqnr_output_db(p, 6, 16)
    empirical = mc_output_sqnr_db(6, 16, 2.0, 2.0, 1_000_000, seed=3)
    assert abs(analytic - empirical) < 1.0


# --------------------------------------------------------------------------- #
# total SNR

def test_total_snr_is_below_both_parts(profile):
    for p in enumerate_feasible(SearchBounds(1024)):
        total = snr_total_db(p, profile)
        assert total < 10 * math.log10(snr_pre(profile, p.N))
        assert total < sqnr_output_db(profile, p.B_adc, p.N)


def test_total_snr_limits(profile, clean):
    p = DesignPoint(64, 1, 2, 4)
    assert snr_total_db(p, clean) == pytest.approx(sqnr_output_db(clean, 4, p.N), abs=1e-6)
    # a huge ADC leaves only the pre-ADC noise
    big = DesignPoint(2**41, 1, 2, 40)
    assert snr_total_db(big, profile) == pytest.approx(10 * math.log10(snr_pre(profile, big.N)), abs=1e-6)


def test_snr_pre_definition(profile):
    N = 32
    expected = signal_variance(profile, N) / (
        input_quantization_variance(profile, N) + analog_nonideality_variance(profile, N))
    assert snr_pre(profile, N) == pytest.approx(expected, rel=1e-15)


def test_total_snr_rejects_infeasible(profile):
    with pytest.raises(FeasibilityError):
        snr_total_db(DesignPoint(32, 32, 8, 3), profile)


# --------------------------------------------------------------------------- #
# simplified SNR

def test_simplified_needs_coefficients(profile):
    with pytest.raises(ConfigurationError):
        snr_simplified_db(FIG5A, profile)


def test_simplified_linearity(profile):
    p = profile.with_updates(k3=profile.C_o, k4=1.5)
    a = snr_simplified_db(DesignPoint(64, 1, 2, 3), p)
    assert snr_simplified_db(DesignPoint(64, 1, 2, 4), p) == pytest.approx(a + 6.0, abs=1e-12)
    assert snr_simplified_db(DesignPoint(256, 1, 2, 3), p) == pytest.approx(a - 10 * math.log10(4), abs=1e-12)


def test_simplified_fit_on_16kb(profile):
    points = enumerate_feasible(SearchBounds(16384))
    fitted, max_err = fit_snr_coefficients(profile, points)
    worst = max(abs(snr_simplified_db(p, fitted) - snr_total_db(p, profile)) for p in points)
    assert worst == pytest.approx(max_err, abs=1e-9)
    assert max_err <= 3.0


# --------------------------------------------------------------------------- #
# throughput, energy, area

def test_fig5a_throughput(profile):
    assert throughput(FIG5A, profile) == pytest.approx(3.277e12, rel=1e-3)
    # the calibration fixes the cycle time at (H/L) W / 3.277e12
    assert cycle_time(3, profile) == pytest.approx(64 * 128 / 3.277e12, rel=1e-9)


def test_throughput_proportional_to_accumulation_length(profile):
    a = throughput(DesignPoint(128, 128, 2, 3), profile)
    b = throughput(DesignPoint(128, 128, 4, 3), profile)
    assert b == pytest.approx(a / 2, rel=1e-15)


def test_throughput_with_only_conversion_time(profile):
    p = profile.with_updates(t_com=0.0, tau=1e-300)
    t = throughput(FIG5A, p)
    assert t == pytest.approx(64 * 128 / (3 * profile.t_conv_per_bit), rel=1e-12)


def test_adc_energy_terms(profile):
    only_cap = profile.with_updates(k1=0.0, V_dd=1.0)
    for B in range(1, 8):
        assert adc_energy(B + 1, only_cap) / adc_energy(B, only_cap) == pytest.approx(4.0, rel=1e-14)
    only_logic = profile.with_updates(k2=0.0, V_dd=1.0)
    diffs = np.diff([adc_energy(B, only_logic) for B in range(1, 9)])
    assert np.allclose(diffs, profile.k1, rtol=1e-12)


def test_adc_energy_exact(profile):
    p = profile.with_updates(k1=1e-15, k2=1e-16, V_dd=0.9)
    assert adc_energy(4, p) == exact_adc_energy(4, 1e-15, 1e-16, 0.9)


def test_energy_without_adc(profile):
    p = profile.with_updates(k1=0.0, k2=0.0)
    base = profile.E_compute + profile.E_control
    for point in (FIG5A, DesignPoint(64, 256, 4, 2), DesignPoint(16, 1024, 2, 3)):
        assert energy_per_op(point, p) == base


def test_energy_amortization(profile):
    base = profile.E_compute + profile.E_control
    a = energy_per_op(DesignPoint(64, 1, 2, 3), profile) - base
    b = energy_per_op(DesignPoint(128, 1, 2, 3), profile) - base
    assert b == pytest.approx(a / 2, rel=1e-12)


def test_area_arithmetic(profile):
    p = profile.with_updates(A_sram=1000.0, A_lc=2000.0, A_comp=8000.0, A_dff=500.0)
    assert area_per_bit(FIG5A, p) == 2074.21875


def test_area_matches_reference(profile):
    raw = profile.to_dict()
    for p in enumerate_feasible(SearchBounds(4096)):
        assert area_per_bit(p, profile) == pytest.approx(ref_area(raw, p.H, p.L, p.B_adc), rel=1e-15)


def test_area_tends_to_sram(profile):
    big = DesignPoint(2**24, 1, 2**20, 1)
    assert area_per_bit(big, profile) == pytest.approx(profile.A_sram, rel=1e-3)


# --------------------------------------------------------------------------- #
# evaluate

def test_evaluate_components(profile):
    perf = evaluate(FIG5A, profile)
    assert perf.as_tuple() == (
        snr_total_db(FIG5A, profile), throughput(FIG5A, profile),
        energy_per_op(FIG5A, profile), area_per_bit(FIG5A, profile))
    assert evaluate(FIG5A, profile) == perf
    assert perf.objectives() == (-perf.snr_db, -perf.throughput, perf.energy_per_op, perf.area_per_bit)


def test_evaluate_rejects_infeasible(profile):
    with pytest.raises(FeasibilityError):
        evaluate(DesignPoint(32, 32, 8, 3), profile)


# --------------------------------------------------------------------------- #
# profile file

def test_profile_round_trip(profile, tmp_path):
    path = tmp_path / "p.json"
    save_profile(profile, path)
    assert load_profile(path) == profile


def test_profile_rejects_unknown_key(profile, tmp_path):
    data = profile.to_dict()
    data["voltage"] = 1.0
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigurationError, match="voltage"):
        load_profile(path)


@pytest.mark.parametrize("field,value", [("C_o", 0.0), ("tau", -1.0), ("t_set_margin", 1.0), ("x_m", 0.5)])
def test_profile_validation(profile, field, value):
    with pytest.raises(ValidationError):
        profile.with_updates(**{field: value})


def test_profile_requires_fields(profile):
    data = profile.to_dict()
    del data["C_o"]
    with pytest.raises(ConfigurationError, match="C_o"):
        TechnologyProfile.from_dict(data)
