"""Exact linear algebra over C^(2^m) and GF(2)."""
from .gf2 import (
    F2Solution,
    InfeasibleSystem,
    all_bitstrings,
    as_bits,
    bits_to_index,
    bits_to_str,
    canonical_code,
    canonical_form,
    canonical_forms,
    canonicalize_quadratic,
    f2_matvec,
    f2_solve,
    index_to_bits,
    independent_rows,
    is_canonical,
    nullspace,
    num_canonical_forms,
    quad_form_eval,
    quad_form_table,
    quad_form_tables,
    rank,
    rref,
)
from .paulis import pauli_expectations, pauli_labels, pauli_matrix
from .states import (
    ATOL,
    amplitude_state,
    basis_state,
    born_distribution,
    check_density_matrix,
    check_distribution,
    check_observable,
    check_pure_state,
    dist_metrics,
    distinguish_success_prob,
    embed_operator,
    expectation,
    fidelity_pure,
    ghz_state,
    haar_state,
    haar_states,
    haar_unitary,
    hadamard_matrix,
    helstrom,
    maximally_mixed,
    num_qubits,
    operator_norm,
    partial_trace,
    plus_state,
    positive_part_projector,
    projector,
    random_sign_observable,
    swap_operator,
    to_density,
    trace_distance,
    trace_distance_pure,
    trace_distance_schatten,
    tv_distance,
    walsh_hadamard,
)
