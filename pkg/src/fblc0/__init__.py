"""Computations in free Banach lattices over sets and over c0."""

from .config import ParamConfig, load_config
from .embedding import (
    FnEvaluator,
    HEvaluator,
    UEvaluator,
    disjointness_residual,
    f,
    g,
    h,
    t_apply,
    u_apply,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    DomainError,
    EnumerationLimitError,
    FBLError,
    InadmissibleWitnessError,
    ParseError,
    PreconditionError,
    TruncationExhaustedError,
)
from .expr import (
    Abs,
    Add,
    Generator,
    Inf,
    LatticeExpr,
    Pos,
    Ref,
    Scale,
    Sup,
    check_positive_homogeneity,
    dependency_support,
    evaluate,
    parse,
    to_text,
)
from .functionals import (
    SparseFunctional,
    WitnessTuple,
    ball_sup_exact,
    ball_sup_search,
    basis,
    claim_check,
    coordinate_admissibility,
    cube,
    dual,
    parse_functional,
    scale_to_admissible,
)
from .norm import NormEstimate, dominance_upper_bound, norm_lower_bound, norm_search
from .quotient import (
    chi,
    greedy_decompose,
    phi_apply,
    phi_point,
    select_subsequence,
    subset,
    vanishing_index,
)

__version__ = "0.1.0"
