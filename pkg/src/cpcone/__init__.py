"""Completely positive and doubly nonnegative cones for quantum states and channels.

Submodules: linalg, solver, cones, channels, measures, serialize, fixtures, cli.
"""

from . import channels, cones, errors, fixtures, linalg, measures, serialize, solver
from .channels import ChannelRep, catalogue, classify
from .cones import IN, OUT, UNKNOWN, MembershipVerdict, check_certificate, cp_membership, is_dd, is_dnn
from .measures import MeasureResult, nnorm_1, robustness, robustness_cp_bounds, trace_distance

__version__ = "0.1.0"

__all__ = [
    "channels", "cones", "errors", "fixtures", "linalg", "measures", "serialize", "solver",
    "ChannelRep", "catalogue", "classify",
    "IN", "OUT", "UNKNOWN", "MembershipVerdict", "check_certificate", "cp_membership", "is_dd", "is_dnn",
    "MeasureResult", "nnorm_1", "robustness", "robustness_cp_bounds", "trace_distance",
]
