"""Optimal quantum Fisher information over causal-structure strategy
classes for N uses of a parameterized quantum channel."""

from .channels import (
    ChannelFamily,
    KrausRepresentation,
    depolarizing_family,
    parse_channel_spec,
    pauli_family,
    random_family,
    rotation_damping_family,
    thermalizing_family,
)
from .classes import (
    ORDERED_CLASSES,
    StrategyClass,
    is_member,
    n_choi_circuit,
    n_parallel_circuit,
    process_from_json,
    process_to_json,
    quantum_switch,
    sequential_circuit,
    strip_future,
)
from .decomposition import (
    HermitianH,
    ReferenceDecomposition,
    performance_operator,
    reference_decomposition,
    wire_labels,
)
from .hilbert import (
    LabeledOperator,
    PureVector,
    SystemLabel,
    link_product,
    partial_trace,
    partial_transpose,
    pure_link_product,
    tensor_product,
    tensor_pure,
    traceout_replace,
)
from .metrology import (
    CrosscheckReport,
    HierarchyReport,
    QfiResult,
    crosscheck,
    hierarchy_report,
    optimize_qfi,
    output_state_family,
    purify,
    qfi_direct,
    reconstruct_optimal,
)
from .sdp.ir import ConicProgram, Solution, SolverError, solve

__version__ = "0.1.0"

__all__ = [
    "ChannelFamily",
    "KrausRepresentation",
    "depolarizing_family",
    "parse_channel_spec",
    "pauli_family",
    "random_family",
    "rotation_damping_family",
    "thermalizing_family",
    "ORDERED_CLASSES",
    "StrategyClass",
    "is_member",
    "n_choi_circuit",
    "n_parallel_circuit",
    "process_from_json",
    "process_to_json",
    "quantum_switch",
    "sequential_circuit",
    "strip_future",
    "HermitianH",
    "ReferenceDecomposition",
    "performance_operator",
    "reference_decomposition",
    "wire_labels",
    "LabeledOperator",
    "PureVector",
    "SystemLabel",
    "link_product",
    "partial_trace",
    "partial_transpose",
    "pure_link_product",
    "tensor_product",
    "tensor_pure",
    "traceout_replace",
    "CrosscheckReport",
    "HierarchyReport",
    "QfiResult",
    "crosscheck",
    "hierarchy_report",
    "optimize_qfi",
    "output_state_family",
    "purify",
    "qfi_direct",
    "reconstruct_optimal",
    "ConicProgram",
    "Solution",
    "SolverError",
    "solve",
]
