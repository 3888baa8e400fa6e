"""Simulator for an optically driven three-level emitter coupled to a quantized
surface-acoustic-wave phonon mode: coherent population trapping, optically
driven sideband spin transitions, and the supporting device and fitting tools.

Internal unit convention: hbar = 1, angular frequencies in rad/us, times in
us. Configuration files and the CLI speak ordinary frequencies in MHz; values
are multiplied by 2*pi at the boundary.
"""

__version__ = "0.1.0"

from .space import (  # noqa: F401
    LEVEL_E,
    LEVEL_G1,
    LEVEL_G2,
    DensityMatrixFull,
    HilbertSpace,
    Ket,
    OperatorMatrix,
    displacement_operator,
    tensor_embed,
)
from .hamiltonian import (  # noqa: F401
    DriveParams,
    TimeDependentHamiltonian,
    build_interaction_hamiltonian,
    build_lab_hamiltonian,
    build_transformed_hamiltonian,
    detunings,
    effective_sideband_rabi,
    lamb_dicke_hamiltonian,
    polaron_transform,
    propagate,
)
from .darkstate import DarkState, dark_state, embed_fock, verify_dark  # noqa: F401
from .dynamics import (  # noqa: F401
    DensityMatrix3,
    LambdaDriveParams,
    RatesParams,
    evolve,
    fock_resolved_evolve,
    obe_derivative,
    steady_state,
)
from .spectra import (  # noqa: F401
    DiffusionModel,
    NVLevelStructure,
    SpectrumResult,
    cpt_spectrum,
    diffusion_average,
    sideband_spectrum,
)
