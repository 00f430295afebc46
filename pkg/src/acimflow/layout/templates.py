"""Frozen layout templates and their orientation transforms.

A template lives on an abstract routing grid.  Its pins and obstacles are
(layer, x, y) grid cells in cell-local coordinates; ``internal_geometry`` is
an opaque list of shape records carried through to the output unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..errors import LibraryError, ValidationError

ORIENTATIONS = ("R0", "MX", "MY", "R180")


def _cells(rows: Iterable) -> np.ndarray:
    return np.asarray(list(rows), dtype=np.int64).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class CellTemplate:
    name: str
    width: int
    height: int
    pins: Mapping[str, np.ndarray]  # port -> (k, 3) array of (layer, x, y)
    obstacles: np.ndarray = field(default_factory=lambda: _cells([]))
    internal_geometry: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"template {self.name}: empty bounding box")
        pins = {p: _cells(c) for p, c in self.pins.items()}
        object.__setattr__(self, "pins", pins)
        object.__setattr__(self, "obstacles", _cells(self.obstacles))
        object.__setattr__(self, "internal_geometry", tuple(self.internal_geometry))
        seen: dict[tuple[int, int, int], str] = {}
        for label, cells in [*pins.items(), ("<obstacle>", self.obstacles)]:
            for l, x, y in cells.tolist():
                if not (0 <= x < self.width and 0 <= y < self.height and l >= 0):
                    raise ValidationError(f"template {self.name}: {label} cell {(l, x, y)} outside the box")
                if (l, x, y) in seen and seen[(l, x, y)] != label:
                    raise ValidationError(
                        f"template {self.name}: cell {(l, x, y)} used by {seen[(l, x, y)]} and {label}")
                seen[(l, x, y)] = label

    @property
    def max_layer(self) -> int:
        layers = [c[:, 0].max() for c in [*self.pins.values(), self.obstacles] if len(c)]
        return int(max(layers)) if layers else 0

    def pin_list(self) -> list[tuple[str, int, int, int]]:
        """Flat (port, layer, x, y) list in port order."""
        return [(p, l, x, y) for p, cells in self.pins.items() for l, x, y in cells.tolist()]

    def same_as(self, other: "CellTemplate") -> bool:
        return (
            self.name == other.name
            and self.width == other.width
            and self.height == other.height
            and self.internal_geometry == other.internal_geometry
            and list(self.pins) == list(other.pins)
            and all(np.array_equal(self.pins[p], other.pins[p]) for p in self.pins)
            and np.array_equal(self.obstacles, other.obstacles)
        )

    # -------------------------------------------------------------- json
    def to_json(self) -> dict:
        return {
            "name": self.name,
            "width": self.width,
            "height": self.height,
            "pins": [[p, l, x, y] for p, l, x, y in self.pin_list()],
            "obstacles": self.obstacles.tolist(),
            "internal_geometry": list(self.internal_geometry),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CellTemplate":
        """Pins/obstacles may be cell lists or inclusive rectangles."""
        try:
            pins: dict[str, list] = {}
            for item in data.get("pins", []):
                if isinstance(item, Mapping):
                    pins.setdefault(item["port"], []).extend(_rect(item))
                else:
                    port, l, x, y = item
                    pins.setdefault(port, []).append((l, x, y))
            obstacles: list = []
            for item in data.get("obstacles", []):
                obstacles.extend(_rect(item) if isinstance(item, Mapping) else [tuple(item)])
            geometry = data.get("internal_geometry", [])
            if not all(isinstance(g, str) for g in geometry):
                raise ValidationError("internal_geometry must be a list of strings")
            return cls(str(data["name"]), int(data["width"]), int(data["height"]),
                       pins, _cells(obstacles), tuple(geometry))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed template {data.get('name', '?')!r}: {exc}") from None


def _rect(item: Mapping) -> list[tuple[int, int, int]]:
    x0, x1 = item["x"] if isinstance(item["x"], list) else (item["x"], item["x"])
    y0, y1 = item["y"] if isinstance(item["y"], list) else (item["y"], item["y"])
    return [(item["layer"], x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]


def orient_cells(cells: np.ndarray, width: int, height: int, orientation: str) -> np.ndarray:
    """Map cell-local (layer, x, y) rows through an orientation, box kept at origin."""
    out = np.array(cells, dtype=np.int64).reshape(-1, 3)
    if orientation in ("MY", "R180"):
        out[:, 1] = width - 1 - out[:, 1]
    if orientation in ("MX", "R180"):
        out[:, 2] = height - 1 - out[:, 2]
    if orientation not in ORIENTATIONS:
        raise ValidationError(f"unknown orientation {orientation!r}")
    return out


def place_cells(cells: np.ndarray, width: int, height: int, orientation: str, x: int, y: int) -> np.ndarray:
    out = orient_cells(cells, width, height, orientation)
    out[:, 1] += x
    out[:, 2] += y
    return out


def load_template_library(path: str | Path | None = None) -> dict[str, CellTemplate]:
    """One JSON file per template in a directory (the shipped mock when None)."""
    if path is None:
        root = resources.files("acimflow.data").joinpath("templates")
        files = sorted((f for f in root.iterdir() if f.name.endswith(".json")), key=lambda f: f.name)
    else:
        root = Path(path)
        if not root.is_dir():
            raise LibraryError(f"template library directory not found: {root}")
        files = sorted(root.glob("*.json"))
    library: dict[str, CellTemplate] = {}
    for f in files:
        try:
            tpl = CellTemplate.from_json(json.loads(f.read_text()))
        except json.JSONDecodeError as exc:
            raise LibraryError(f"{f.name}: {exc}") from None
        if tpl.name in library:
            raise LibraryError(f"template '{tpl.name}' defined twice", tpl.name)
        library[tpl.name] = tpl
    return library


def save_template(template: CellTemplate, directory: str | Path) -> Path:
    path = Path(directory) / f"{template.name}.json"
    path.write_text(json.dumps(template.to_json(), indent=1) + "\n")
    return path
