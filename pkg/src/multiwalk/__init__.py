"""multiwalk: exact and Monte Carlo evaluation of graph exploration by
several independent random walks on finite weighted networks.

The library compares the expected number of distinct vertices covered by k
independent walkers against a single walker with the combined lifespan, for
plain, lazy, and continuous-time reversible chains, using three mutually
checking evaluators: grounded-kernel powers, a uniformized power series, and
a stationary spectral decomposition, plus an exhaustive small-graph oracle
and a reproducible counter-seeded simulator.
"""

__version__ = "0.1.0"

from .chain import (
    CONTINUOUS,
    LAZY,
    PLAIN,
    Coupling,
    FixedPoints,
    IIDProduct,
    SharedPoint,
    StartScheme,
    TransitionKernel,
    check_aperiodic,
    kernel_from_network,
    make_continuous,
    make_lazy,
    pi_star,
    point_mass,
    uniform_measure,
    with_variant,
)
from .errors import (
    AssumptionViolationError,
    BadVertexError,
    CaseViolationError,
    DegenerateFitError,
    DisconnectedError,
    EigenFailureError,
    InvalidDimensionError,
    InvalidEdgeError,
    InvalidSizeError,
    MultiwalkError,
    NegativeTimeError,
    ParityViolationError,
    ParseError,
    RetriesExhaustedError,
    SamplesNotRetainedError,
    TableTooLargeError,
    TooLargeError,
    WrongVariantError,
)
from .experiments import (
    DominanceReport,
    GapDecayCurve,
    GapDecayPoint,
    InequalityReport,
    admissible_ratio_bound,
    dominance_scan,
    gap_decay_experiment,
    lifespan_grid,
    min_gap,
    near_uniform_coupling,
    odd_case_scan,
    perturbed_measure,
    run_suite,
    suite_cases,
    suite_networks,
    survival_by_distance,
    torus_star_vs_single,
    verify_near_uniform_dependent,
    verify_near_uniform_independent,
    verify_one_vs_many,
    verify_star_vs_iid,
)
from .network import (
    Network,
    build,
    enumerate_connected_graphs,
    generate_complete,
    generate_cycle,
    generate_gnp,
    generate_path,
    generate_torus,
    read_edge_list,
    write_edge_list,
)
from .simulate import (
    EmpiricalCdf,
    RangeEstimate,
    WalkJob,
    derive_seed,
    empirical_cdf,
    estimate,
    sample_union,
)
from .survival import (
    GroundedKernel,
    SpectralDecomposition,
    brute_force_distribution,
    brute_force_oracle,
    expected_range_single,
    expected_union,
    expected_union_coupled,
    expected_union_product,
    expected_union_star,
    grounded,
    moment_inequality_check,
    spectral,
    survival_continuous,
    survival_power,
    survival_probability,
)
