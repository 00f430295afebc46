"""Technology profile: every constant consumed by the performance model.

Profiles are stored as flat JSON objects whose keys are exactly the field
names of :class:`TechnologyProfile`.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import MISSING, asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import ConfigurationError, ValidationError

# Fields that must be strictly positive.
_POSITIVE = (
    "C_o", "boltzmann", "V_dd", "sigma_x", "sigma_w", "x_m", "w_m", "Ex2",
    "B_x", "B_w", "t_conv_per_bit", "A_sram",
)
# Fields allowed to reach zero (noise-free / degenerate-limit studies).
_NON_NEGATIVE = (
    "kappa", "temperature_K", "k1", "k2", "t_com", "tau", "E_compute",
    "E_control", "A_lc", "A_comp", "A_dff",
)


@dataclass(frozen=True)
class TechnologyProfile:
    """Physical and empirical constants of one technology/architecture corner.

    Voltages, capacitances, times and energies are in SI units; areas are in
    F^2 (feature-size normalized).  Input/weight statistics are normalized.
    ``k3``/``k4`` belong to the simplified SNR expression and may be left
    unset, in which case they are fitted on demand
    (:func:`acimflow.model.fit_snr_coefficients`).
    """

    C_o: float
    kappa: float
    temperature_K: float
    boltzmann: float
    V_dd: float
    sigma_x: float
    sigma_w: float
    x_m: float
    w_m: float
    Ex2: float
    B_x: float
    B_w: float
    k1: float
    k2: float
    t_com: float
    tau: float
    t_set_margin: float
    t_conv_per_bit: float
    E_compute: float
    E_control: float
    A_sram: float
    A_lc: float
    A_comp: float
    A_dff: float
    k3: float | None = None
    k4: float | None = None
    ops_per_mac: int = 1

    def __post_init__(self) -> None:
        for name in _POSITIVE:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or math.isnan(value) or value <= 0:
                raise ValidationError(f"profile field {name!r} must be > 0, got {value!r}")
        for name in _NON_NEGATIVE:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or math.isnan(value) or value < 0:
                raise ValidationError(f"profile field {name!r} must be >= 0, got {value!r}")
        if not self.t_set_margin > 1:
            raise ValidationError(f"t_set_margin must be > 1, got {self.t_set_margin!r}")
        if self.x_m < self.sigma_x:
            raise ValidationError("x_m must be >= sigma_x")
        if self.w_m < self.sigma_w:
            raise ValidationError("w_m must be >= sigma_w")
        if self.k3 is not None and not self.k3 > 0:
            raise ValidationError(f"k3 must be > 0 when set, got {self.k3!r}")
        if self.k4 is not None and not math.isfinite(self.k4):
            raise ValidationError(f"k4 must be finite when set, got {self.k4!r}")
        if self.ops_per_mac not in (1, 2):
            raise ValidationError(f"ops_per_mac must be 1 or 2, got {self.ops_per_mac!r}")

    # ------------------------------------------------------------------ #
    @property
    def zeta_x(self) -> float:
        return self.x_m / self.sigma_x

    @property
    def zeta_w(self) -> float:
        return self.w_m / self.sigma_w

    def with_updates(self, **changes: Any) -> "TechnologyProfile":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TechnologyProfile":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigurationError(f"unknown profile key {key!r}")
        required = {f.name for f in fields(cls) if f.default is MISSING}
        missing = sorted(required - set(data))
        if missing:
            raise ConfigurationError(f"profile is missing key(s): {', '.join(missing)}")
        return cls(**data)


def load_profile(path: str | Path) -> TechnologyProfile:
    """Load a profile from a JSON file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read profile {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"profile {path} must contain a JSON object")
    data.pop("_comment", None)
    return TechnologyProfile.from_dict(data)


def save_profile(profile: TechnologyProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2) + "\n", encoding="utf-8")


def default_profile() -> TechnologyProfile:
    """The shipped placeholder profile (non-authoritative constants)."""
    text = resources.files("acimflow.data").joinpath("default_profile.json").read_text(encoding="utf-8")
    data = json.loads(text)
    data.pop("_comment", None)
    return TechnologyProfile.from_dict(data)
