"""Infinitary combinatory reduction systems over rational terms."""

from .errors import (
    ArityError,
    FiniteChainsViolation,
    InvalidPosition,
    InvalidRule,
    NonRationalTerm,
    ParseError,
    StaleRedex,
    SubstitutionError,
    TermError,
    UnassignedMetaVariable,
    UnguardedRecursion,
    UnknownSymbol,
)
from .hypercollapsing import (
    Answer,
    HcNormalForm,
    HcReading,
    HcStatus,
    HcVerdict,
    Lasso,
    SearchBudget,
    check_nf_properties,
    classify_out_step,
    detect_hypercollapsing,
    hc_equiv,
    hc_normalize,
    join_modulo,
    join_search,
    strip_restricted,
)
from .matching import Redex, find_redexes, first_redex, is_normal_form, match_at, match_pattern
from .reduction import (
    BudgetExceeded,
    InfiniteDescendants,
    Reduction,
    Step,
    Strategy,
    apply_step,
    descendants,
    develop,
    project_over_step,
    reduce,
    residuals,
    run_script,
    step_at,
    tile,
)
from .rules import Rule, RuleSystem, analyse, find_overlap, parse_rule, parse_rules, validate_rule
from .syntax import Signature, parse_meta_term, parse_term, show
from .terms import (
    Abs,
    Distance,
    FVar,
    Fun,
    Meta,
    Mu,
    MuVar,
    Term,
    Var,
    alpha_eq,
    distance,
    has_finite_chains,
    minimize,
    mu,
    replace_at,
    subterm_at,
    truncate,
    unfold,
)
from .valuation import Substitute, Valuation, apply_valuation, substitute

__all__ = [name for name in dir() if not name.startswith("_")]
