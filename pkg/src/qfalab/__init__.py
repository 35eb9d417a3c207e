"""Deterministic, probabilistic, reversible and quantum finite automata:
simulation, constructions and size comparisons."""

from .automata import (
    LEFT,
    RIGHT,
    Alphabet,
    Dfa,
    MalformedAutomatonError,
    Pfa,
    Qfa,
    RunOutcome,
    StatePartition,
    UnknownSymbolError,
    ValidationReport,
    Verdict,
    check_r_restricted,
    is_rfa,
    run,
    run_dfa,
    run_pfa,
    run_qfa,
    sample_counts,
    sample_run,
    trajectory,
    validate,
)
from .constructions import (
    ConstructionError,
    FreivaldsParams,
    build_dfa_contains00,
    build_dfa_Ln,
    build_freivalds_pfa,
    build_pfa_Ln,
    build_tree_rfa,
)
from .analysis import (
    RecognitionReport,
    WordDomain,
    minimize_dfa,
    nerode_class_count,
    separation_table,
    serial_encoding_experiment,
    verify_recognition,
)

__version__ = "0.1.0"
