"""Exact finite-field realizations of motivic DT identities."""

from .budget import BudgetExceeded, enumeration_budget
from .cyclo import CyclotomicValue, gauss_sum, power_character_sum, twisted_sum
from .dt import (CheckReport, WeightedFunction, check_cmps, check_dimred, check_feit_fine,
                 check_preprojective, check_wallcross, check_weights, extract_dt,
                 partition_function)
from .ffield import ExtFieldElement, find_irreducible, vec_field
from .lambda_ring import (AdamsSequence, LevelOverflow, MotiveClass, ParityError,
                          TruncatedSeries, pleth_exp, pleth_log, realize, sigma_n)
from .quiver import (Potential, QuiverSpec, commuting_twisted_count, conj_classes, gl_order,
                     nc_hilb_twisted_count, parse_quiver_text, rep_space_twisted_sum,
                     sym_line_twisted_count, three_loop)

__version__ = "0.1.0"
