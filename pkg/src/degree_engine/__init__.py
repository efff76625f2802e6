"""Brouwer degree of maps R^k -> R^k on boxes, and solvers built on it."""

from .arcs import ArcReport, pairing_check, trace_zero_set
from .config import DEFAULT_CONFIG, DegreeConfig
from .degree import (
    DegreeCertificate,
    Root,
    RootSet,
    degree,
    degree_weak,
    find_roots,
    linearization_degree,
    perturb_to_regular,
)
from .domain import BoxDomain, boundary_gap, boundary_sample, parse_box, subdivide
from .errors import *  # noqa: F401,F403
from .mapdef import (
    JacobianMatrix,
    MapDefinition,
    complex_polynomial,
    evaluate,
    identity_map,
    index,
    jacobian,
    linear_map,
    load_map_file,
    parse_map,
)
from .oracle import degree_1d, winding_number_2d, winding_trace
from .solvers import (
    BifurcationProblem,
    HomotopyDefinition,
    bifurcation_scan,
    brouwer_fixed_point,
    continuation_solve,
    nontrivial_solution,
    parse_homotopy,
    verify_homotopy_invariance,
)

__version__ = "0.1.0"
