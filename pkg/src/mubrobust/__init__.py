"""Noise robustness of sets of mutually unbiased bases.

Finite-field and Galois-ring arithmetic, MUB constructions, analytic upper and
lower bounds, a dense-block interior-point SDP solver, parent-POVM certificates
and subset scans.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetExceededError,
    InvalidInputError,
    MubError,
    NumericalError,
)
from .mub import MubSet, MeasurementSet, build_mub, construct_mub, to_measurements, verify_unbiased  # noqa: E402
from .bounds import (  # noqa: E402
    compute_lambda,
    eta_low_recursive,
    eta_up_charpoly_k4,
    eta_up_rank1,
    eta_up_simple,
)
from .sdp import SdpProblem, solve_sdp  # noqa: E402
from .jointmeas import RobustnessOptions, check_parent, parent_guess, robustness  # noqa: E402
from .analysis import scan_subsets, steering_bound  # noqa: E402

__all__ = [
    "__version__",
    "BudgetExceededError",
    "InvalidInputError",
    "MubError",
    "NumericalError",
    "MubSet",
    "MeasurementSet",
    "build_mub",
    "construct_mub",
    "to_measurements",
    "verify_unbiased",
    "compute_lambda",
    "eta_low_recursive",
    "eta_up_charpoly_k4",
    "eta_up_rank1",
    "eta_up_simple",
    "SdpProblem",
    "solve_sdp",
    "RobustnessOptions",
    "check_parent",
    "parent_guess",
    "robustness",
    "scan_subsets",
    "steering_bound",
]
