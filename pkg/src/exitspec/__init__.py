"""Exit-time moment invariants of Euclidean domains.

The package computes the integrals A_n of iterated torsion-like functions
(expected exit-time moments of Brownian motion started uniformly in the
domain), recovers the distinguished part of the Dirichlet spectrum from
them by Stieltjes moment inversion, and cross-checks the results against
finite-difference eigensolves, heat-content time stepping, closed forms,
and Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .analysis import (AsymptoticFit, HeatContentCurve, asymptotic_fit,
                       fit_window, heat_content_spectral,
                       heat_content_timestep, mellin_numeric,
                       mellin_small_t_bound, verify_identities, zeta,
                       zeta_tail_bound)
from .discrete_ops import (DiscreteOperator, Field, SolverError,
                           assemble_half_laplacian, inner, integrate,
                           lowest_eigenpairs, solve_poisson)
from .geometry import (Disk, DomainSpec, GeometryError, Grid, Interval,
                       Polygon, Rectangle, boundary_measure, build_grid,
                       build_radial_grid, perturb_polygon, volume)
from .moments import (MomentSequence, analytic_moments, carleman_diagnostic,
                      exit_moment_fields, laplace_transform, moment_sequence,
                      pde_moments)
from .montecarlo import (ExitSamples, McError, McEstimate, SimConfig,
                         mc_laplace, mc_moments, mc_survival,
                         simulate_exit_times)
from .spectral import (SpectralData, analytic_spectrum, essential_spectrum,
                       numeric_spectrum, property_m_report)
from .stieltjes import (AtomicMeasure, InversionError, atom_count_cap,
                        hankel_psd_check, invert_moments,
                        measure_to_spectrum, reconstruct_heat_content)

__all__ = [
    "AsymptoticFit", "AtomicMeasure", "DiscreteOperator", "Disk",
    "DomainSpec", "ExitSamples", "Field", "GeometryError", "Grid",
    "HeatContentCurve", "Interval", "InversionError", "McError",
    "McEstimate", "MomentSequence", "Polygon", "Rectangle", "SimConfig",
    "SolverError", "SpectralData", "analytic_moments", "analytic_spectrum",
    "assemble_half_laplacian", "asymptotic_fit", "atom_count_cap",
    "boundary_measure", "build_grid", "build_radial_grid",
    "carleman_diagnostic", "essential_spectrum", "exit_moment_fields",
    "fit_window", "hankel_psd_check", "heat_content_spectral",
    "heat_content_timestep", "inner", "integrate", "invert_moments",
    "laplace_transform", "lowest_eigenpairs", "mc_laplace", "mc_moments",
    "mc_survival", "measure_to_spectrum", "mellin_numeric",
    "mellin_small_t_bound", "moment_sequence", "numeric_spectrum",
    "pde_moments", "perturb_polygon", "property_m_report",
    "reconstruct_heat_content", "simulate_exit_times", "solve_poisson",
    "verify_identities", "volume", "zeta", "zeta_tail_bound",
]
