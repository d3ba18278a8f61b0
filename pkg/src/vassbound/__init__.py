"""Exact asymptotic bound analysis for vector addition systems with states.

The toolkit computes, for every variable and transition of a connected
VASS, the exact exponent k of its asymptotic bound N^k in the size N of
the initial configuration, or detects that the system has at-least-
exponential complexity.  Polynomial verdicts come with independently
checkable lower-bound witness paths; exponential verdicts with a cycle
certificate.
"""

from .analyzer import (
    AnalysisResult,
    BoundsReport,
    ExtendedSystem,
    InternalInvariantError,
    LayerTree,
    analyze,
    build_extended_system,
    check_quasi_ranking,
    exponential_check,
    next_relevant_layer,
    solve_layer,
)
from .exactlp import (
    LpProblem,
    LpRow,
    LpSolution,
    lp_feasible,
    max_strict_set,
    scale_to_integer,
)
from .model import (
    IntegerMatrix,
    NotConnectedError,
    Path,
    PrePath,
    Transition,
    Valuation,
    Vass,
    VassError,
    VassSyntaxError,
    execute_path,
    flow_matrix,
    min_initial_valuation,
    parse_vass,
    scc_decompose,
    serialize_vass,
    unconnected_pair,
    update_matrix,
    validate_connected,
)
from .oracle import (
    NONTERMINATING,
    BudgetExceededError,
    longest_trace,
    max_instances,
    max_reachable,
)
from .witness import (
    CertificateError,
    ExponentialCertificate,
    MultiCycle,
    WitnessPath,
    build_witness,
    check_certificate,
    choose_k,
    covering_cycle,
    exponential_certificate,
    multicycle_from_solution,
    node_cycles,
    verify_witness,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
