"""P-box cdf-intervals: construction from data, arithmetic, constraint
propagation and a replenishment-planning solver built on them."""

from .arith import DomainWipeoutError, RealInterval, add, div, mul, scalar_op, sub
from .core import (
    PBoxCdfInterval,
    TripletPoint,
    construct_pbox,
    enclosure_check,
    glb,
    lub,
    make_interval,
    point_interval,
    project_cdf_range,
    top_interval,
)
from .domains import ALGEBRAS, CDF_POINT, CONVEX, PBOX
from .ecdf import parse_observations, read_observations, summary_stats, to_staircase
from .inventory import InventoryModel, build_model, generate_demands, search_min_cost
from .propagate import ConstraintStore, Kind

__version__ = "0.1.0"

__all__ = [
    "ALGEBRAS",
    "CDF_POINT",
    "CONVEX",
    "ConstraintStore",
    "DomainWipeoutError",
    "InventoryModel",
    "Kind",
    "PBOX",
    "PBoxCdfInterval",
    "RealInterval",
    "TripletPoint",
    "add",
    "build_model",
    "construct_pbox",
    "div",
    "enclosure_check",
    "generate_demands",
    "glb",
    "lub",
    "make_interval",
    "mul",
    "parse_observations",
    "point_interval",
    "project_cdf_range",
    "read_observations",
    "scalar_op",
    "search_min_cost",
    "sub",
    "summary_stats",
    "to_staircase",
    "top_interval",
]
