"""Coupling Hamiltonians, cat states, and the probe-spec text format."""
from .expr import evaluate, format_expr, parse_expression
from .hamiltonians import (
    build_h0_kbody,
    build_h0_product,
    build_h0_separable,
    build_rb_hamiltonian,
    cat_state,
    pauli_commutation_table,
    pauli_string_matrix,
    permutation_matrix,
    product_coupling,
    product_state,
    rb_pauli_terms,
)
from .spec import (
    AuxTerm,
    CouplingSummary,
    ExplicitKBody,
    InitialState,
    ProbeSpec,
    ProductLocal,
    build_h0,
    build_schedule,
    coupling_operator,
    coupling_summary,
    format_probe_spec,
    initial_state,
    kbody_operator,
    load_probe_spec,
    parse_probe_spec,
)

__all__ = [
    "AuxTerm",
    "CouplingSummary",
    "ExplicitKBody",
    "InitialState",
    "ProbeSpec",
    "ProductLocal",
    "build_h0",
    "build_h0_kbody",
    "build_h0_product",
    "build_h0_separable",
    "build_rb_hamiltonian",
    "build_schedule",
    "cat_state",
    "coupling_operator",
    "coupling_summary",
    "evaluate",
    "format_expr",
    "format_probe_spec",
    "initial_state",
    "kbody_operator",
    "load_probe_spec",
    "parse_expression",
    "parse_probe_spec",
    "pauli_commutation_table",
    "pauli_string_matrix",
    "permutation_matrix",
    "product_coupling",
    "product_state",
    "rb_pauli_terms",
]
