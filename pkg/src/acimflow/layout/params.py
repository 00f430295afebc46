from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from ..errors import ConfigurationError


@dataclass(frozen=True)
class TrackRule:
    """Straight-line tracks on ``layer`` reserved for nets matching ``net``.

    A row (constant y) or column (constant x) qualifies when its coordinate
    modulo ``pitch`` is one of ``offsets``; the default allows every line.
    With ``stub_layer`` set, a pin off the line may join it through a
    straight perpendicular stub on that layer (a comb).
    """

    net: str
    layer: int
    axis: str  # "row" or "col"
    pitch: int = 1
    offsets: tuple[int, ...] = (0,)
    stub_layer: int | None = None

    def __post_init__(self) -> None:
        if self.axis not in ("row", "col"):
            raise ConfigurationError(f"track axis must be 'row' or 'col', got {self.axis!r}")
        if self.pitch < 1:
            raise ConfigurationError(f"track pitch must be >= 1, got {self.pitch}")
        object.__setattr__(self, "offsets", tuple(int(o) % self.pitch for o in self.offsets))
        re.compile(self.net)

    def matches(self, net: str) -> bool:
        return re.search(self.net, net) is not None

    def allows(self, line: int) -> bool:
        return line % self.pitch in self.offsets


@dataclass(frozen=True)
class PlacementRule:
    """How a composite cell arranges its children.

    ``stack``: children whose cell matches ``array`` are abutted bottom-up in
    netlist order; the rest form a periphery strip below, wrapped to the
    array width.  ``row``: children abut left to right, top-aligned.
    ``channel`` empty rows go between the array and the strip (stack) or
    under the blocks (row); ``"auto"`` means one per net linking the two
    sides, plus one.  ``strip_width`` caps a strip row; 0 means the array
    width and ``"single"`` keeps the whole strip in one row, so no strip
    block sits between another and the array.
    """

    cell: str
    kind: str = "stack"
    array: str = "$^"
    strip_order: str = "hpwl"
    channel: int | str = 0
    strip_width: int | str = 0

    def __post_init__(self) -> None:
        if self.kind not in ("stack", "row"):
            raise ConfigurationError(f"placement kind must be 'stack' or 'row', got {self.kind!r}")
        if self.strip_order not in ("hpwl", "netlist"):
            raise ConfigurationError(f"strip_order must be 'hpwl' or 'netlist', got {self.strip_order!r}")
        if self.channel != "auto" and not (isinstance(self.channel, int) and self.channel >= 0):
            raise ConfigurationError(f"channel must be a non-negative integer or 'auto', got {self.channel!r}")
        if self.strip_width != "single" and (
                isinstance(self.strip_width, bool) or not isinstance(self.strip_width, int) or self.strip_width < 0):
            raise ConfigurationError(f"strip_width must be a non-negative integer or 'single', got {self.strip_width!r}")


@dataclass(frozen=True)
class LayoutParams:
    layer_count: int = 3
    via_cost: int = 2
    min_spacing: int = 0
    critical_nets: tuple[str, ...] = ()
    reserved_tracks: tuple[TrackRule, ...] = ()
    placement_rules: tuple[PlacementRule, ...] = ()
    alternate_mx: tuple[str, ...] = ()
    exhaustive_strip_limit: int = 8

    def __post_init__(self) -> None:
        if self.layer_count < 1:
            raise ConfigurationError("layer_count must be >= 1")
        if int(self.via_cost) != self.via_cost or self.via_cost < 1:
            raise ConfigurationError("via_cost must be a positive integer")
        if self.min_spacing < 0:
            raise ConfigurationError("min_spacing must be >= 0")
        for pattern in self.critical_nets:
            re.compile(pattern)

    def is_critical(self, net: str) -> bool:
        return self.critical_rank(net) is not None

    def critical_rank(self, net: str) -> int | None:
        """Index of the first critical pattern matching ``net``."""
        for k, p in enumerate(self.critical_nets):
            if re.search(p, net):
                return k
        return None

    def tracks_for(self, net: str) -> list[TrackRule]:
        return [t for t in self.reserved_tracks if t.matches(net) and t.layer < self.layer_count]

    def rule_for(self, cell: str) -> PlacementRule:
        for rule in self.placement_rules:
            if re.search(rule.cell, cell):
                return rule
        return PlacementRule(cell=".*", kind="row")

    def replace(self, **changes) -> "LayoutParams":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return LayoutParams(**data)

    @classmethod
    def from_dict(cls, data: Mapping) -> "LayoutParams":
        data = {k: v for k, v in data.items() if not k.startswith("_")}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown layout parameter(s): {', '.join(sorted(unknown))}")
        try:
            if "reserved_tracks" in data:
                data["reserved_tracks"] = tuple(TrackRule(**t) for t in data["reserved_tracks"])
            if "placement_rules" in data:
                data["placement_rules"] = tuple(PlacementRule(**r) for r in data["placement_rules"])
            for key in ("critical_nets", "alternate_mx"):
                if key in data:
                    data[key] = tuple(data[key])
            return cls(**data)
        except (TypeError, re.error) as exc:
            raise ConfigurationError(f"bad layout parameters: {exc}") from None


def load_layout_params(path: str | Path | None = None) -> LayoutParams:
    if path is None:
        text = resources.files("acimflow.data").joinpath("layout_params.json").read_text()
    else:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"layout parameter file not found: {path}")
        text = path.read_text()
    try:
        return LayoutParams.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"layout parameters: {exc}") from None
