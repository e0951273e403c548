"""Time-periodic Hamiltonian suspension of the near-boundary billiard map."""
from .config import SuspensionConfig
from .construct import (
    SmoothedHamiltonian,
    Suspension,
    circulation,
    conjugation_errors,
    drift_fit,
    half_period_agreement,
    joint_jumps,
    mollify_and_blend,
    periodicity_error,
    piecewise_hamiltonian,
    positivity_check,
    remainder_exponent,
    suspend,
    verify_main_theorem,
    write_report,
    write_verification_csv,
)
from .flow import FlowResult, flow, time_one_map
from .hamiltonian import (
    DirectHamiltonian,
    KineticHamiltonian,
    MollifiedHamiltonian,
    PiecewiseHamiltonian,
    RemainderTable,
    SuspendedHamiltonian,
    TableHamiltonian,
    build_remainder_table,
    kinetic,
    mollifier_drift,
)
from .lagrangian import (
    InterpolatingLagrangian,
    LegendreResult,
    lagrangian,
    legendre_hamiltonian,
    minimize_path,
    momentum,
    path_action,
    stiffness,
)
from .wgen import BlendWindow, WTable, generating_w, identity_residual, reconstruction_residual
