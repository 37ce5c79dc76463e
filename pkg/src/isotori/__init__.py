"""Darboux transforms of closed curves and isothermic tori built from them.

Points of R^n are handled through their lightlike lifts in Lorentz space
R^{n+1,1}; transforms come from lightlike eigenvectors of the monodromy of a
one-parameter family of flat connections, and Bianchi permutability fills
cubes of transforms whose toroidal subnets are isothermic.
"""

from .bianchi import BianchiCube, build_cube, permute
from .darboux import (
    DarbouxTransform,
    closed_darboux,
    closed_darboux_discrete,
    closed_darboux_smooth,
    cross_ratio_propagate,
    move_transform_off_plane,
    resonance_scan,
)
from .errors import ConfigError, IsotoriError
from .loops import DiscreteLoop, SmoothLoop, make_circle, make_discrete_circle
from .lorentz import inner, lift, project
from .moebius import cross_ratio, infinitesimal_cross_ratio, solve_fourth_point
from .torus import GridMap, TorusNet, default_walk_2torus, extract_torus, fullness_rank, product_grid_map
from .transport import monodromy, transport_smooth
from .verify import Tolerances, VerificationReport, check_theorem_instance

__version__ = "0.1.0"

__all__ = [
    "BianchiCube",
    "ConfigError",
    "DarbouxTransform",
    "DiscreteLoop",
    "GridMap",
    "IsotoriError",
    "SmoothLoop",
    "Tolerances",
    "TorusNet",
    "VerificationReport",
    "build_cube",
    "check_theorem_instance",
    "closed_darboux",
    "closed_darboux_discrete",
    "closed_darboux_smooth",
    "cross_ratio",
    "cross_ratio_propagate",
    "default_walk_2torus",
    "extract_torus",
    "fullness_rank",
    "infinitesimal_cross_ratio",
    "inner",
    "lift",
    "make_circle",
    "make_discrete_circle",
    "monodromy",
    "move_transform_off_plane",
    "permute",
    "product_grid_map",
    "project",
    "resonance_scan",
    "solve_fourth_point",
    "transport_smooth",
]
