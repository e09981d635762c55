"""Complexified Hamilton flows on Kahler models.

Transport of the vertical lagrangian foliation under the ambient Hamilton
flow of a complex-valued hamiltonian, intersection with the real locus, and
numeric certification of the structural identities the construction
satisfies.
"""

from .errors import (ConfigError, DomainError, FlowDivergenceError,
                     FoliationDegeneracyError, HamflowError)
from .geometry import (AmbientPoint, KahlerPoint, ModelDescriptor,
                       SymplecticData, chart_distance, embed, involution,
                       kahler_forms, kahler_point, kahler_to_chart,
                       omega_matrix, j0_matrix, metric_matrix, project_pi0,
                       sphere_moment)
from .hamiltonians import (HolomorphicHamiltonian, PolynomialHamiltonian,
                           Term, extend, lincomb, moment_hamiltonian, term)
from .flow import (FlowState, IntegratorConfig, flow, holomorphy_defect,
                   symplecticity_defect, xi_field)
from .leaf import (FrameData, LeafSolution, NewtonConfig, f, f_with_jacobian,
                   frame_data, j_t, omega_t, phi, phi_sweep, pi_t)
from .oracles import (QuadraticSpec, Sl2Generator, oracle_mobius,
                      oracle_quadratic, real_reference, sl2_from_hamiltonian)
from .verify import (ResidualReport, compatibility_min_eig, corollary_residual,
                     generator_residual, group_defect, holomorphy_residual,
                     inverse_relation_defect, jt_square_defect,
                     pullback_residual)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
