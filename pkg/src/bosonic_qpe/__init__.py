"""Numerical simulator for error detection and state preparation of
single-mode bosonic codes by adaptive ancilla phase estimation.

Rotation codes (cat, binomial) are interrogated through a dispersive
ancilla coupling, grid codes through interleaved quadrature couplings;
staged runs with coprime orders resolve absolute photon numbers.  Noise
enters either as a discrete photon-loss channel or as Lindblad evolution
of the ancilla-mode composite during the measurement cells.
"""

from .codes import (
    GkpSpec,
    RotationCodeSpec,
    binomial_plus,
    binomial_primitive,
    binomial_state,
    cat_plus,
    cat_state,
    coherent_state,
    gkp_state,
    squeezed_vacuum,
)
from .crt import CrtPlan, crt_solve, detect_photon_number, generate_fock
from .engine import (
    FeedbackRegister,
    GkpOutcome,
    QpeSchedule,
    Trajectory,
    deduce_rotation_error,
    feedback_phase,
    fejer_kernel,
    gkp_record_state,
    outcome_distribution,
    prepare_by_projection,
    rim_cell,
    run_gkp_detection,
    run_noisy_gkp_detection,
    run_noisy_trajectory,
    run_trajectory,
    theta_from_bits,
    trajectory_superoperator,
    trajectory_tree,
)
from .errors import BosonicQpeError
from .fock import QuantumState, displacement, matrix_exp, position_eigenvector, wigner
from .kernels import HAVE_COMPILED as USING_COMPILED_KERNELS
from .metrics import (
    InfidelityReport,
    deduction_infidelity,
    fidelity,
    gkp_detection_fidelity,
    reference_error_state,
    total_infidelity_noisy,
)
from .noise import (
    CHI_DEFAULT,
    G_DEFAULT,
    GAMMA1_DEFAULT,
    GAMMA2_DEFAULT,
    CompositeState,
    LindbladModel,
    LossChannel,
    apply_loss,
    default_hardware_model,
    lindblad_evolve,
)

__version__ = "0.1.0"
