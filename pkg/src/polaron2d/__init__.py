"""Fermi polaron energies on a periodic 2D box: lattice G function, polaron equations, stability margins."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .lattice import (  # noqa: F401
    LatticeSpec,
    count_modes,
    enumerate_modes,
    fermi_sea_energy,
    shell_count_bound,
    shell_sum,
    sum_integral_certificate,
)
from .gfunc import (  # noqa: F401
    GEvaluation,
    PhysParams,
    f_kernel,
    g_continuum,
    g_lattice,
    g_smoothed,
    g_truncated,
    inverse_coupling,
    poisson_residual,
    xi_mu,
)
from .polaron import (  # noqa: F401
    PerturbedSolution,
    PolaronSolution,
    asymptotic_polaron,
    solve_perturbed,
    solve_polaron,
    theorem_band,
    trial_state_identity,
    upper_bound_energy,
)
from .stability import (  # noqa: F401
    StabilityResult,
    alpha_M,
    beta_u,
    critical_mass,
    k_error,
    stability_margin,
)
