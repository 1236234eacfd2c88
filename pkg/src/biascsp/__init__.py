"""Biased Boolean CSPs, densest-k-subhypergraph algorithms, and a gadget lab."""

from .instances import (
    CspInstance,
    Hypergraph,
    InfeasibleError,
    Labeling,
    StructuralError,
    ValueReport,
    brute_force_opt,
    relative_weight,
    value_csp,
    value_dksh,
)
from .predicates import (
    Predicate,
    PredicateProfile,
    classify_bias_dependence,
    minimal_elements,
    negation_conjugate,
    single_string_predicate,
    symmetric_decomposition,
)

__version__ = "0.1.0"
