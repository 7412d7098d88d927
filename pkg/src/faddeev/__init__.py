"""Faddeev eigenfunctions, scattering data and spectral singularities of multipoint potentials."""

from .errors import (BracketError, FaddeevError, QuadratureError, RenormalizationPole,
                     SpectralSingularity, VarietyError)
from .geometry import (ComplexMomentum, RealLimitMomentum, build_k_3d, k_to_lambda, lambda_to_k,
                       validate_pair_theta)
from .green import (GreenEvaluation, eval_G, eval_G_gamma, eval_G_plus, eval_g, eval_g_gamma, eval_g_plus,
                    oracle_g_direct, oracle_g_plus)
from .ball import cutoff_integral
from .quadrature import QuadratureSpec
from .solver import (CoefficientSolution, PotentialConfig, ScatteringData, SystemMatrix, assemble_system,
                     det_A, eval_H, eval_h, eval_psi, solve_coefficients)
from .regularization import CutoffModel, assemble_A_N, convergence_study, epsilon_of_N, solve_c_N
from .singularities import (GridSpec, ScanGrid, SingularCurveSet, extract_zero_curves, figure_preset,
                            real_singularity_alphas, refine_zero, scan_det_grid)
from .verification import (IdentityReport, check_dbar, check_det_reality, check_G_reality, check_helmholtz,
                           check_limit_relation, check_mu_asymptotic, check_point_mass)

__all__ = [name for name in dir() if not name.startswith("_")]
