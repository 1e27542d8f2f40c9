"""Sparse polynomial approximation of anisotropic holomorphic functions.

Multi-index sets, tensor Legendre expansions, known- and unknown-anisotropy
sampling operators, block basis pursuit and closed-form width bounds.
"""

from .anisotropy import (AnisotropySequence, TailRule, best_s_term_error, lp_norm,
                         make_algebraic_b, make_flat_b, make_log_b, monotone_lp_norm,
                         stechkin_bound)
from .legendre import (CoefficientVector, QuadratureRule, TestFunction, compute_coefficients,
                       gauss_legendre_rule, l2_distance, legendre_eval, order_one_test_function,
                       tensor_legendre_eval)
from .multiindex import (IndexSet, MultiIndex, anchored_majorant, hyperbolic_cross,
                         is_anchored, is_lower, monotone_majorant)
from .recovery import BPSolution, basis_pursuit_block, rnsp_error_bounds, unknown_reconstruct
from .sampling import (Measurements, SketchOperator, choose_set_known, gaussian_sketch,
                       known_reconstruct, known_sample, measurement_bound, unknown_sample)
from .widths import (WidthQuery, discrete_width_chain, gelfand_lower_bound, measure_moments,
                     stesin_width, theta_lower_bound_known, theta_lower_bound_unknown)

__version__ = "0.1.0"
