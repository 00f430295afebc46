"""Closed-form SNR, throughput, energy and area of the ACIM macro.

All functions are pure; ``N`` denotes the accumulation length ``H // L``.
Power ratios are converted with ``10*log10`` and amplitude ratios (the
loading factors ``zeta = max / sigma``) with ``20*log10``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, FeasibilityError, ValidationError
from .profile import TechnologyProfile

# t_set must exceed 0.69 * tau * B_adc; the profile margin scales this bound.
SETTLING_FACTOR = 0.69


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True, order=True)
class DesignPoint:
    """One macro instance: array height/width, local array size, ADC bits."""

    H: int
    W: int
    L: int
    B_adc: int

    def __post_init__(self) -> None:
        for name in ("H", "W", "L", "B_adc"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def N(self) -> int:
        """Accumulation length (number of local arrays per column)."""
        return self.H // self.L

    @property
    def bits(self) -> int:
        return self.H * self.W

    def violations(self) -> list[str]:
        """Architecture constraints this point breaks (empty when valid)."""
        out = []
        for name in ("H", "W", "L"):
            if not _is_pow2(getattr(self, name)):
                out.append(f"{name}={getattr(self, name)} is not a power of two")
        if self.L > self.H:
            out.append(f"L={self.L} exceeds H={self.H}")
        elif self.H % self.L:
            out.append(f"L={self.L} does not divide H={self.H}")
        elif self.N < 2 ** self.B_adc:
            out.append(f"H/L={self.N} < 2^B_adc={2 ** self.B_adc}")
        return out

    def check(self) -> None:
        problems = self.violations()
        if problems:
            raise FeasibilityError(f"infeasible design point {self}: " + "; ".join(problems))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.H, self.W, self.L, self.B_adc)


@dataclass(frozen=True)
class PerformanceVector:
    snr_db: float
    throughput: float
    energy_per_op: float
    area_per_bit: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.snr_db, self.throughput, self.energy_per_op, self.area_per_bit)

    def objectives(self) -> tuple[float, float, float, float]:
        """Minimization form: maximize SNR and throughput, minimize the rest."""
        return (-self.snr_db, -self.throughput, self.energy_per_op, self.area_per_bit)


def _check_length(N: int) -> int:
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 1:
        raise ValidationError(f"accumulation length N must be a positive integer, got {N!r}")
    return int(N)


def _check_bits(B: float, name: str = "B_adc") -> None:
    if isinstance(B, bool) or not isinstance(B, (int, float, np.integer)) or not B >= 1:
        raise ValidationError(f"{name} must be >= 1, got {B!r}")


# --------------------------------------------------------------------------- #
# SNR
# --------------------------------------------------------------------------- #
def quantization_steps(profile: TechnologyProfile) -> tuple[float, float]:
    """(input step, weight step); the weight is signed so it loses one bit."""
    dx = profile.x_m * 2.0 ** (-profile.B_x)
    dw = profile.w_m * 2.0 ** (-profile.B_w + 1)
    return dx, dw


def input_quantization_variance(profile: TechnologyProfile, N: int) -> float:
    N = _check_length(N)
    dx, dw = quantization_steps(profile)
    return N * dx**2 * profile.sigma_w**2 / 12.0 + N * dw**2 * profile.Ex2 / 12.0


def analog_nonideality_variance(profile: TechnologyProfile, N: int) -> float:
    """Capacitor mismatch plus kT/C noise; charge injection is neglected."""
    N = _check_length(N)
    mismatch = profile.Ex2 * profile.kappa**2 / profile.C_o  # sigma_C^2 / C_o^2
    thermal = 2.0 * profile.boltzmann * profile.temperature_K / (profile.C_o * profile.V_dd**2)
    bit_planes = (2.0 / 3.0) * (1.0 - 4.0 ** (-profile.B_w))
    return bit_planes * N * (mismatch + thermal)


def signal_variance(profile: TechnologyProfile, N: int) -> float:
    return _check_length(N) * profile.sigma_w**2 * profile.Ex2


def snr_pre(profile: TechnologyProfile, N: int) -> float:
    """Linear SNR before the ADC (input quantization and analog noise)."""
    noise = input_quantization_variance(profile, N) + analog_nonideality_variance(profile, N)
    if noise == 0:
        return math.inf
    return signal_variance(profile, N) / noise


def sqnr_output_db(profile: TechnologyProfile, B_y: int, N: int) -> float:
    _check_bits(B_y, "B_y")
    N = _check_length(N)
    zeta_db = 20.0 * math.log10(profile.zeta_x) + 20.0 * math.log10(profile.zeta_w)
    return 6.0 * B_y + 4.8 - zeta_db - 10.0 * math.log10(N)


def _db(x: float) -> float:
    return math.inf if x == math.inf else 10.0 * math.log10(x)


def snr_total_db(point: DesignPoint, profile: TechnologyProfile) -> float:
    point.check()
    pre = snr_pre(profile, point.N)
    sqnr = 10.0 ** (sqnr_output_db(profile, point.B_adc, point.N) / 10.0)
    return _db(1.0 / (1.0 / pre + 1.0 / sqnr))


def snr_simplified_db(point: DesignPoint, profile: TechnologyProfile) -> float:
    if profile.k3 is None or profile.k4 is None:
        raise ConfigurationError("simplified SNR needs k3 and k4; fit them with fit_snr_coefficients")
    point.check()
    return (
        6.0 * point.B_adc
        - 10.0 * math.log10(point.N)
        - 10.0 * math.log10(profile.k3 / profile.C_o)
        + profile.k4
    )


def fit_snr_coefficients(
    profile: TechnologyProfile, points: Iterable[DesignPoint]
) -> tuple[TechnologyProfile, float]:
    """Least-squares fit of the simplified SNR to the full model.

    Only the offset ``k4 - 10*log10(k3/C_o)`` is identifiable, so ``k3`` is
    pinned to ``C_o`` unless the profile already carries one.  Returns the
    updated profile and the maximum absolute fit error in dB.
    """
    points = list(points)
    if not points:
        raise ValidationError("cannot fit SNR coefficients on an empty point set")
    k3 = profile.k3 if profile.k3 is not None else profile.C_o
    full = np.array([snr_total_db(p, profile) for p in points])
    base = np.array([6.0 * p.B_adc - 10.0 * math.log10(p.N) for p in points])
    base -= 10.0 * math.log10(k3 / profile.C_o)
    # minimizing sum (base + k4 - full)^2 over k4 gives the mean residual
    k4 = float(np.mean(full - base))
    max_err = float(np.max(np.abs(base + k4 - full)))
    return profile.with_updates(k3=float(k3), k4=k4), max_err


# --------------------------------------------------------------------------- #
# Throughput, energy, area
# --------------------------------------------------------------------------- #
def cycle_time(B_adc: int, profile: TechnologyProfile) -> float:
    """t_com + t_set + t_conv for one MAC-and-convert cycle (seconds)."""
    _check_bits(B_adc)
    t_set = profile.t_set_margin * SETTLING_FACTOR * profile.tau * B_adc
    t_conv = profile.t_conv_per_bit * B_adc
    return profile.t_com + t_set + t_conv


def throughput(point: DesignPoint, profile: TechnologyProfile) -> float:
    """Operations per second (``ops_per_mac`` operations per 1b x 1b MAC)."""
    point.check()
    macs_per_cycle = point.N * point.W
    return profile.ops_per_mac * macs_per_cycle / cycle_time(point.B_adc, profile)


def adc_energy(B_adc: int, profile: TechnologyProfile) -> float:
    _check_bits(B_adc)
    return (
        profile.k1 * (B_adc + math.log2(profile.V_dd))
        + profile.k2 * 4.0**B_adc * profile.V_dd**2
    )


def energy_per_op(point: DesignPoint, profile: TechnologyProfile) -> float:
    """Average energy of one 1b x 1b MAC, ADC cost amortized over H/L."""
    point.check()
    return profile.E_compute + profile.E_control + adc_energy(point.B_adc, profile) / point.N


def area_per_bit(point: DesignPoint, profile: TechnologyProfile) -> float:
    point.check()
    return (
        profile.A_sram
        + profile.A_lc / point.L
        + profile.A_comp / point.H
        + point.B_adc * profile.A_dff / point.H
    )


def evaluate(point: DesignPoint, profile: TechnologyProfile) -> PerformanceVector:
    point.check()
    return PerformanceVector(
        snr_db=snr_total_db(point, profile),
        throughput=throughput(point, profile),
        energy_per_op=energy_per_op(point, profile),
        area_per_bit=area_per_bit(point, profile),
    )


def efficiency_tops_per_watt(perf: PerformanceVector, profile: TechnologyProfile) -> float:
    return profile.ops_per_mac / perf.energy_per_op / 1e12
