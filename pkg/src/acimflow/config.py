"""Run configuration for the command-line flow, read from a JSON file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import ConfigurationError, ValidationError
from .explorer import SearchBounds
from .layout import LayoutParams, load_layout_params, load_template_library
from .model import _is_pow2
from .netlist import load_cell_library
from .nsga2 import DEFAULT_SEED, GaParams
from .profile import TechnologyProfile, default_profile, load_profile

_PATHS = ("profile_path", "cell_library_path", "template_library_path", "layout_params_path")


@dataclass(frozen=True)
class RunConfig:
    """Inputs of one flow run.

    Library paths left as ``None`` select the shipped defaults.  ``bounds``
    and ``ga`` hold overrides for :class:`SearchBounds` and :class:`GaParams`
    (``array_size`` and ``seed`` live at the top level).
    """

    array_size: int = 16384
    profile_path: str | None = None
    cell_library_path: str | None = None
    template_library_path: str | None = None
    layout_params_path: str | None = None
    bounds: dict[str, Any] = field(default_factory=dict)
    ga: dict[str, Any] = field(default_factory=dict)
    filter: str = ""
    output_dir: str = "acimflow_out"
    seed: int = DEFAULT_SEED
    jobs: int = 1
    sizes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if isinstance(self.array_size, bool) or not isinstance(self.array_size, int) or not _is_pow2(self.array_size):
            raise ConfigurationError(f"array_size must be a power of two, got {self.array_size!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigurationError(f"seed must be an integer, got {self.seed!r}")
        if isinstance(self.jobs, bool) or not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigurationError(f"jobs must be a positive integer, got {self.jobs!r}")
        if not isinstance(self.filter, str):
            raise ConfigurationError("filter must be a string")
        for size in self.sizes:
            if isinstance(size, bool) or not isinstance(size, int) or not _is_pow2(size):
                raise ConfigurationError(f"sweep sizes must be powers of two, got {size!r}")
        for key in ("bounds", "ga"):
            if not isinstance(getattr(self, key), dict):
                raise ConfigurationError(f"{key} must be an object of overrides")
        if "array_size" in self.bounds or "seed" in self.ga:
            raise ConfigurationError("set array_size and seed at the top level of the config")

    @classmethod
    def from_dict(cls, data: dict[str, Any], base: Path | None = None) -> "RunConfig":
        data = {k: v for k, v in data.items() if not k.startswith("_")}
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if base is not None:
            # relative paths in a config file are taken relative to that file
            for key in _PATHS + ("output_dir",):
                if data.get(key) is not None and not Path(data[key]).is_absolute():
                    data[key] = str(base / data[key])
        if "sizes" in data:
            data["sizes"] = tuple(data["sizes"])
        return cls(**data)

    def with_overrides(self, **changes: Any) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def check_paths(self) -> None:
        for key in _PATHS:
            value = getattr(self, key)
            if value is not None and not Path(value).exists():
                raise ConfigurationError(f"{key} does not exist: {value}")

    # -- derived objects ---------------------------------------------------
    def search_bounds(self, array_size: int | None = None) -> SearchBounds:
        try:
            return SearchBounds(array_size or self.array_size, **self.bounds)
        except (TypeError, ValidationError) as exc:
            raise ConfigurationError(f"bad bounds: {exc}") from None

    def ga_params(self, seed: int | None = None) -> GaParams:
        try:
            return GaParams(seed=self.seed if seed is None else seed, **self.ga)
        except (TypeError, ValidationError) as exc:
            raise ConfigurationError(f"bad ga parameters: {exc}") from None

    def profile(self) -> TechnologyProfile:
        return default_profile() if self.profile_path is None else load_profile(self.profile_path)

    def cell_library(self):
        return load_cell_library(self.cell_library_path)

    def templates(self):
        return load_template_library(self.template_library_path)

    def layout_params(self) -> LayoutParams:
        return load_layout_params(self.layout_params_path)


def load_config(path: str | Path | None) -> RunConfig:
    """Read a config file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must contain a JSON object")
    try:
        return RunConfig.from_dict(data, path.parent)
    except TypeError as exc:
        raise ConfigurationError(f"bad config {path}: {exc}") from None
