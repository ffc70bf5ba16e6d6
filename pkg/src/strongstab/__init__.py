"""Stable suboptimal H-infinity controller synthesis for SISO dead-time plants."""

from .rational import (
    FrequencyGrid,
    PoleEvaluationError,
    Poly,
    RationalFn,
    RootConvergenceError,
    RootSet,
    blaschke,
    mirror,
    poly_from_roots,
    poly_roots,
    relative_degree,
    sup_norm_on_grid,
)
from .synthesis import (
    CertificateContradiction,
    Controller,
    DelayPlant,
    FactorizationError,
    GammaSearchError,
    InterpolationError,
    PlantValidationError,
    SynthesisContext,
    UParam,
    WeightPair,
    build_context,
    build_controller,
    build_E,
    build_F,
    gamma_opt,
    spectral_factor,
    spectral_ratio,
    verify_performance,
)
from .stability import (
    AsymptoticData,
    PeakData,
    RegionScan,
    ScanError,
    admissible_uinf,
    asymptotics,
    chain_abscissa,
    finitely_many_poles,
    fl_limit_at_infinity,
    peak_data,
    properness_criterion,
    rhp_zero_scan,
    scan_window_for,
)
from .infinite import (
    InfSearchConfig,
    InfSearchResult,
    SearchExhausted,
    l1u_stability_range,
    stabilize_infinite,
    sweep_report,
)
from .finite import (
    FiniteSearchError,
    FinSearchResult,
    NPInterpolant,
    P1P2,
    PickProblem,
    build_p1p2,
    build_U,
    certify_u_norm,
    mu_opt_search,
    np_interpolant,
    pick_matrix,
    pick_min_eig,
    pick_points,
    stabilize_finite,
)
from .config import ConfigError, Options, load_problem

__version__ = "0.1.0"
