"""Ground states, quantified Friedrichs inequalities, and the resonant
problem for the Dirichlet p-Laplacian with L^q normalization."""

from .decompose import (Decomposition, LinearFunctionalSpec, cone_classify,
                        density, inverse_triangle_check, operator_norm,
                        phi_power, project)
from .eigensolver import (Mu1Result, SolverConfig, mu_quotient,
                          shooting_oracle_1d, solve_eigenpair, solve_mu1)
from .errors import (AllCollinearError, BracketFailureError, ConfigError,
                     DegenerateBaseError, DegenerateDomainError,
                     FriedrichsLabError, InvalidResolutionError,
                     NoConvergenceError, ZeroAfterProjectionError)
from .functionals import (EigenPair, Exponents, M_l, P0_family, P1_family,
                          Q0, R_p, SPathQuadrature, dJ, deficit, deficit_J,
                          energy_E, lumped_pairing, matA_apply, matA_quad,
                          norm_grad_p, norm_lq, norm_phi1, norm_q, rayleigh)
from .grid import (DomainSpec, ElementField, Grid, GridFunction, build_grid,
                   gradient, gridfunction_from_json_dict,
                   gridfunction_to_json_dict, integrate, interval_grid,
                   load_gridfunction, rectangle_grid, sample_test_function,
                   save_gridfunction)
from .resonant import (ResonantProblem, ResonantSolution, project_forcing,
                       solve_resonant, weak_residual)
from .verify import (DeficitReport, SeparationResult, check_friedrichs,
                     check_hidden_convexity, check_improved,
                     check_Ml_equivalence, check_P1_lower_bound,
                     constants_under_rescaling, estimate_Lambda_gamma,
                     estimate_Lambda_tilde, generate_batch,
                     kernel_restricted_mu, sweep_Lambda_tilde)

__version__ = "0.1.0"
