"""Monte Carlo estimate of the end-to-end SNR of one column.

Activations and weights are zero-mean Gaussians clipped at ``x_m``/``w_m``.
The Gaussian scale is solved so that the *clipped* distribution has standard
deviation exactly ``sigma_x``/``sigma_w``, which keeps the loading factors of
the closed-form model meaningful.  Each sample is one dot product of length
``N = H / L``; the error is measured against the ideal unquantized,
noise-free result.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from .errors import ValidationError
from .model import DesignPoint, quantization_steps
from .profile import TechnologyProfile

MIN_SAMPLES = 100_000
_CHUNK = 20_000


def clipped_normal_variance(scale: float, clip: float) -> float:
    """Variance of ``clip(Z * scale, -clip, clip)`` with ``Z ~ N(0, 1)``."""
    a = clip / scale
    pdf = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
    inside = 2.0 * ndtr(a) - 1.0
    tail = 2.0 * (1.0 - ndtr(a))
    return scale**2 * (inside - 2.0 * a * pdf) + clip**2 * tail


def clipped_normal_scale(sigma: float, clip: float) -> float:
    """Gaussian scale whose clipped version has standard deviation ``sigma``.

    Returns ``inf`` when ``clip == sigma`` (the limit is a +/-clip coin flip).
    """
    if clip < sigma:
        raise ValidationError("clip level must be >= sigma")
    if math.isclose(clip, sigma, rel_tol=1e-12):
        return math.inf
    target = sigma**2
    hi = sigma
    while clipped_normal_variance(hi, clip) < target:
        hi *= 2.0
        if hi > 1e6 * sigma:
            return math.inf
    return brentq(lambda s: clipped_normal_variance(s, clip) - target, sigma * 1e-3, hi, xtol=1e-14 * sigma)


def _draw(rng: np.random.Generator, shape, sigma: float, clip: float, scale: float) -> np.ndarray:
    if math.isinf(scale):
        return clip * rng.choice(np.array([-1.0, 1.0]), size=shape)
    return np.clip(rng.normal(0.0, scale, size=shape), -clip, clip)


def _quantize(v: np.ndarray, step: float, limit: float) -> np.ndarray:
    if step == 0:
        return v
    return np.clip(step * np.round(v / step), -limit, limit)


def monte_carlo_snr(
    point: DesignPoint,
    profile: TechnologyProfile,
    samples: int = 1_000_000,
    seed: int = 0,
    *,
    adc: bool = True,
) -> float:
    """Empirical SNR (dB) of the quantized, noisy dot product.

    Only ``L | H`` is required: the simulation models the signal chain, so
    it also accepts ADC resolutions the capacitor count could not realize.
    ``adc=False`` skips output quantization, which together with a
    noise-free, infinite-precision profile gives a zero-error configuration
    reported as ``math.inf``.
    """
    if point.H % point.L:
        raise ValidationError(f"L={point.L} must divide H={point.H}")
    return simulate_snr(profile, point.N, point.B_adc, samples, seed, adc=adc)


def simulate_snr(
    profile: TechnologyProfile,
    N: int,
    B_adc: int,
    samples: int = 1_000_000,
    seed: int = 0,
    *,
    adc: bool = True,
) -> float:
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < MIN_SAMPLES:
        raise ValidationError(f"samples must be an integer >= {MIN_SAMPLES}, got {samples!r}")
    if not isinstance(N, int) or N < 1:
        raise ValidationError(f"N must be a positive integer, got {N!r}")
    rng = np.random.default_rng(seed)
    sx = clipped_normal_scale(profile.sigma_x, profile.x_m)
    sw = clipped_normal_scale(profile.sigma_w, profile.w_m)
    dx, dw = quantization_steps(profile)
    bit_planes = (2.0 / 3.0) * (1.0 - 4.0 ** (-profile.B_w))
    mismatch_std = math.sqrt(bit_planes * profile.kappa**2 / profile.C_o)
    thermal_std = math.sqrt(
        bit_planes * 2.0 * profile.boltzmann * profile.temperature_K / (profile.C_o * profile.V_dd**2)
    )
    y_max = N * profile.x_m * profile.w_m
    step_y = 2.0 * y_max / 2.0**B_adc

    signal = 0.0
    error = 0.0
    done = 0
    while done < samples:
        n = min(_CHUNK, samples - done)
        x = _draw(rng, (n, N), profile.sigma_x, profile.x_m, sx)
        w = _draw(rng, (n, N), profile.sigma_w, profile.w_m, sw)
        ideal = np.einsum("ij,ij->i", x, w)
        xq = _quantize(x, dx, profile.x_m)
        wq = _quantize(w, dw, profile.w_m)
        y = np.einsum("ij,ij->i", xq, wq)
        if mismatch_std > 0:
            y += np.einsum("ij,ij->i", xq, rng.normal(0.0, mismatch_std, size=(n, N)))
        if thermal_std > 0:
            y += rng.normal(0.0, thermal_std * math.sqrt(N), size=n)
        if adc:
            code = np.floor(y / step_y) + 0.5
            y = np.clip(step_y * code, -y_max + step_y / 2, y_max - step_y / 2)
        signal += float(np.dot(ideal, ideal))
        diff = y - ideal
        error += float(np.dot(diff, diff))
        done += n
    if error == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / error)
