"""Numerical toolkit for entanglement measures, exact and stationary
opto-mechanical states, and spin-bus long-distance entanglement."""

from .qstate import (  # noqa: F401
    DensityMatrix,
    concurrence,
    concurrence_from_correlator,
    entropies,
    negativity,
    normalized_mutual_info,
    partial_trace,
    partial_transpose,
    tangle,
    thermal_state,
    werner_state,
)
from .gaussian import (  # noqa: F401
    GaussianState,
    logneg_gaussian,
    ppt_tilde_dminus,
    simon_invariant_check,
    symplectic_eigenvalues_two_mode,
    two_mode_squeezed_thermal_cov,
    wigner_gaussian,
)

__version__ = "0.1.0"
