"""Bifurcation toolkit for the 1D Vlasov-Newton-Fokker-Planck equation.

Library layers, bottom up:

- `special`      stable J_n / a_n / psi evaluation (log-domain quadrature)
- `dispersion`   dispersion relation, roots, coupling inversion
- `eigensystem`  mode-k operator, eigenvector, adjoint, normalization
- `manifold`     amplitude-equation coefficients c3 (three parts) and partial c5
- `asymptotics`  Dirichlet series, small-argument predictions, regime labels
- `simulator`    nonlinear Fourier-Hermite integrator and saturation fits
- `cli`          command-line front end with CSV/JSON/figure artifacts
"""

from .asymptotics import (
    PowerLawFit,
    RegimeLabel,
    classify_regime,
    dirichlet_phi,
    dirichlet_phi_odd,
    fit_power_law,
    mellin_prediction,
)
from .dispersion import (
    DispersionRoot,
    ModelParams,
    c_for_growth_rate,
    d_lambda_dispersion,
    eval_dispersion,
    eval_dispersion_vlasov,
    find_root,
)
from .eigensystem import (
    EigenSystem,
    SpectralVector,
    apply_L_k,
    adjoint_eigenvector,
    eigenvector,
    inner_product,
    resolvent_solve,
    solve_eigensystem,
)
from .manifold import (
    LandauBreakdown,
    ManifoldCoefficients,
    amplitude_balance,
    compute_H2,
    compute_U,
    compute_c3,
    compute_c5_partial,
    landau_breakdown,
    manifold_coefficients,
)
from .simulator import RunReport, SimConfig, SimState, order_parameter, run, step
from .special import JnEvaluation, PsiCoefficient, eval_jn, eval_psi, log_an

__version__ = "0.1.0"

__all__ = [
    "JnEvaluation", "PsiCoefficient", "eval_jn", "eval_psi", "log_an",
    "ModelParams", "DispersionRoot", "eval_dispersion", "eval_dispersion_vlasov",
    "d_lambda_dispersion", "find_root", "c_for_growth_rate",
    "SpectralVector", "EigenSystem", "apply_L_k", "resolvent_solve",
    "eigenvector", "adjoint_eigenvector", "inner_product", "solve_eigensystem",
    "ManifoldCoefficients", "LandauBreakdown", "compute_U", "compute_H2",
    "compute_c3", "compute_c5_partial", "manifold_coefficients",
    "landau_breakdown", "amplitude_balance",
    "PowerLawFit", "RegimeLabel", "dirichlet_phi", "dirichlet_phi_odd",
    "mellin_prediction", "fit_power_law", "classify_regime",
    "SimConfig", "SimState", "RunReport", "order_parameter", "run", "step",
]
