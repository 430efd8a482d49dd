"""Subcritical rank-1 inhomogeneous random graphs: theory and simulation."""

from .errors import RankOneError
from .model import (
    TypeSpace,
    build_space,
    c_critical,
    geometric,
    homogeneous,
    moments,
    truncate_family,
    two_type,
)
from .theory import alpha_of_c, er_log_r, r_of_c, radius_scan, solve_y

__all__ = [
    "RankOneError",
    "TypeSpace",
    "build_space",
    "c_critical",
    "geometric",
    "homogeneous",
    "moments",
    "truncate_family",
    "two_type",
    "alpha_of_c",
    "er_log_r",
    "r_of_c",
    "radius_scan",
    "solve_y",
]
