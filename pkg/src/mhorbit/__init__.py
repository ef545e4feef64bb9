"""Markoff-Hurwitz orbit dynamics: moves, descent, certified log-space
enumeration of orbit balls, geodesic counting, and growth-exponent fitting."""

from .variety import (
    VarietyParams,
    ExactPoint,
    DEFAULT_PARAMS,
    defect,
    apply_move,
    apply_word,
    solve_missing_coordinate,
    normalize_word,
)
from .logspace import (
    PrecisionConfig,
    LogPoint,
    Verdict,
    to_log_point,
    log_move_outgoing,
    log_move_descent,
    certified_compare,
)
from .engine import (
    OrbitSpec,
    BallQuery,
    CountResult,
    count_ball,
    enumerate_ball,
    suborbit_roots,
    run_partial,
    checkpoint_save,
    checkpoint_resume,
)
from .descent import (
    PropertyReport,
    OrbitConstants,
    DescentCertificate,
    verify_properties,
    reduce_to_root,
    estimate_epsilon,
    regularized_k_radius,
    find_fundamental_solutions,
)
from .geodesics import (
    HyperbolicStructure,
    GeodesicCount,
    length_to_coordinate,
    coordinate_to_length,
    structure_from_lengths,
    structure_from_partial,
    count_one_sided_geodesics,
)
from .analysis import (
    CountSeries,
    ExponentEstimate,
    collect_series,
    collect_series_budget,
    fit_power_law,
    bracket_check,
    BARAGAR_BRACKET,
)

__version__ = "0.1.0"
