"""Exact birational maps on Schubert cells of GL(r) and Jacquet integral numerics."""

__version__ = "0.1.0"

from .biratmap import (  # noqa: E402
    domain_bounds,
    exponents,
    forward_map,
    forward_split,
    inverse_map,
    jacobian,
    k_system,
    udl_blocks,
    udl_decompose,
)
from .jacquet import (  # noqa: E402
    bessel_kernel,
    gl2_continued,
    gl2_direct,
    gl2_reference,
    gl3_change_of_variables_check,
    transformed_integrand,
)
from .ratfunc import MultiPoly, RatFunc, det, parse  # noqa: E402
from .verify import SweepConfig, verify_element, verify_sweep  # noqa: E402
from .weyl import Permutation, VarIndex, free_variables, parse_permutation  # noqa: E402

__all__ = [
    "__version__",
    "Permutation",
    "VarIndex",
    "parse_permutation",
    "free_variables",
    "MultiPoly",
    "RatFunc",
    "parse",
    "det",
    "forward_map",
    "forward_split",
    "udl_blocks",
    "udl_decompose",
    "k_system",
    "inverse_map",
    "jacobian",
    "exponents",
    "domain_bounds",
    "verify_element",
    "verify_sweep",
    "SweepConfig",
    "gl2_reference",
    "gl2_direct",
    "gl2_continued",
    "transformed_integrand",
    "bessel_kernel",
    "gl3_change_of_variables_check",
]
