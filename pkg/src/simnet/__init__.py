"""simnet: compositional certification and lockstep simulation for networks
of discrete-time switched linear subsystems.

The pipeline: verify per-node quadratic tracking certificates, extract
dissipation gains, certify the network small-gain condition, compose the
network certificate, refine abstract controllers through interface
functions, and validate the resulting trajectory error bounds on a
lockstep simulator.
"""

from .certificates import (
    DissipationReport,
    LocalCertificate,
    LocalGains,
    StructuralSolution,
    VerificationReport,
    certificates_to_json,
    check_dissipation_sampled,
    derive_gains,
    evaluate_V,
    interface_input,
    load_certificates,
    save_certificates,
    solve_structural,
    synthesize_certificate_matrix,
    verify_decay,
    verify_output_dominance,
    verify_structure,
)
from .composition import (
    ComposedCertificate,
    GainOperator,
    MuCertificate,
    SmallGainResult,
    TemplateGains,
    build_gain_operator,
    build_gain_operator_from_network,
    check_composed_dissipation,
    check_small_gain,
    compose_certificate,
    construct_mu,
    templated_gain_operator,
)
from .errors import (
    BlockPartitionError,
    CertificateError,
    CompositionError,
    ConvergenceError,
    DimensionMismatchError,
    IndefiniteMatrixError,
    SchemaError,
    SimnetError,
    StructuralInfeasibleError,
    WiringError,
)
from .linalg import (
    DEFAULT_TOL,
    SymMatrix,
    ToleranceProfile,
    operator_norm,
    principal_sqrt,
    psd_margin,
    psd_order,
    solve_linear_least_squares,
    spectral_radius,
    spectral_radius_dense,
    spectral_radius_power,
)
from .network import (
    InterconnectionGraph,
    Mode,
    NetworkSpec,
    StepResult,
    SwitchedLinearSubsystem,
    SwitchingSignal,
    assemble_internal_input,
    load_network,
    network_to_json,
    parse_network,
    save_network,
    step,
    step_with_modes,
)
from .simulate import (
    BoundConstants,
    SimulationRun,
    TrajectoryReport,
    check_trajectory_bound,
    check_V_decrease,
    export_run,
    simulate_lockstep,
)
from .swing import (
    RingExperiment,
    SwingParams,
    SwingReport,
    benchmark_report,
    closed_form_certificate,
    compose_ring,
    generate_ring_network,
    ring_gains,
    run_ring_experiment,
    templated_ring_operator,
    topology_graph,
)

__version__ = "0.1.0"
