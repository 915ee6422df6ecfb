"""Exact symbolic summation over generic sequences.

Double sums Σ_k P(k, X, Σ_{j<=k} X_j) are rewritten into single nested sums
by telescoping in a difference ring, with parameterized-telescoping
constraints on fresh sequences when no unconditional rewrite exists.
"""

from .algebra import RatFunc
from .corpus import CorpusEntry, load_corpus, run_corpus
from .errors import PoleError, TelesumError, UnsupportedError
from .expr import Expr, normalize, parse, print_expr
from .oracle import Binding, CheckReport, check_constraint, check_identity, eval_expr, eval_sequence, falsify_nonexistence
from .reduce import (Constraint, ReductionResult, SpecializationFailure, SpecializedIdentity, interchange,
                     post_simplify, reduce_generic, specialize)
from .telescope import gosper, param_telescope, telescope_pieces

__version__ = "0.1.0"

__all__ = [
    "Binding", "CheckReport", "Constraint", "CorpusEntry", "Expr", "PoleError", "RatFunc", "ReductionResult",
    "SpecializationFailure", "SpecializedIdentity", "TelesumError", "UnsupportedError", "check_constraint",
    "check_identity", "eval_expr", "eval_sequence", "falsify_nonexistence", "gosper", "interchange",
    "load_corpus", "normalize", "param_telescope", "parse", "post_simplify", "print_expr", "reduce_generic",
    "run_corpus", "specialize", "telescope_pieces",
]
