"""Template-based hierarchical placement and routing on an abstract grid."""

from .flow import (
    Layout,
    LayoutDesign,
    Violation,
    build_layout,
    check_design,
    connectivity_check,
    derive_template,
    drc_lite,
    emit_layout,
    layout_level,
    place_hierarchy,
)
from .params import LayoutParams, PlacementRule, TrackRule, load_layout_params
from .place import Placed, Placement, group_hpwl, hpwl, place_cell
from .route import Connection, GridRouter, RoutedNet, route_level, route_nets
from .templates import CellTemplate, load_template_library, orient_cells, place_cells

__all__ = [
    "CellTemplate", "Connection", "GridRouter", "Layout", "LayoutDesign", "LayoutParams",
    "Placed", "Placement", "PlacementRule", "RoutedNet", "TrackRule", "Violation",
    "build_layout", "check_design", "connectivity_check", "derive_template", "drc_lite",
    "emit_layout", "group_hpwl", "hpwl", "layout_level", "load_layout_params",
    "load_template_library", "orient_cells", "place_cell", "place_cells", "place_hierarchy",
    "route_level", "route_nets",
]
