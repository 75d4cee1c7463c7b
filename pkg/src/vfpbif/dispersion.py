"""Dispersion relation of the linearized kinetic operator and its roots.

For Fourier mode k the relation reads

    Lambda_k(gamma, lam) = 1 - (c / (2 pi gamma^2)) J_1(k/gamma, -lam/gamma)

and its real roots are eigenvalues of the mode-k linear operator.  At
gamma = 0 the relation continues analytically to

    Lambda_k(0, lam) = 1 - (c / (2 pi k^2)) A_1(lam/k),
    A_1(u) = int_0^inf s exp(-s^2/2 - u s) ds = 1 - u A_0(u),
    A_0(u) = sqrt(pi/2) erfcx(u / sqrt2),

which is the classical Landau analysis; gamma = 0 inputs are routed there
automatically.  Only real growth rates are handled; configurations whose
roots leave the real axis are reported as errors, never silently continued.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .errors import ComplexBranch, DomainError, NoSignChange, PrecisionError
from .special import DEFAULT_TOL, eval_jn, jn_sequence_cached

RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Coupling c (> 0 attractive), friction/diffusion rate gamma, Fourier mode k."""

    c: float
    gamma: float
    k: int = 1

    def __post_init__(self):
        if self.c < 0.0:
            raise DomainError("repulsive coupling (c < 0) is out of scope")
        if self.gamma < 0.0:
            raise DomainError("gamma must be nonnegative")
        if self.k == 0:
            raise DomainError("dispersion is defined for k != 0")


@dataclass(frozen=True)
class DispersionRoot:
    lam: float
    residual: float
    d_lambda: float
    bracket: tuple


def _a0(u):
    """int_0^inf exp(-s^2/2 - u s) ds, stable for all real u of working size."""
    return np.sqrt(np.pi / 2.0) * erfcx(u / np.sqrt(2.0))


def eval_dispersion_vlasov(c, lam, k=1):
    """Dispersion value of the collisionless (gamma = 0) limit at real lam."""
    u = lam / abs(k)
    a1 = 1.0 - u * _a0(u)
    return 1.0 - (c / (2.0 * np.pi * k * k)) * a1


def eval_dispersion(params, lam, tol=DEFAULT_TOL):
    """Lambda(gamma, lam) for one Fourier mode; gamma = 0 uses the limit formula.

    Precondition for gamma > 0: k^2/gamma^2 + lam/gamma > 0 (integrability of
    the J_1 evaluation).
    """
    if params.gamma == 0.0:
        return eval_dispersion_vlasov(params.c, lam, params.k)
    if params.c == 0.0:
        return 1.0
    y = abs(params.k) / params.gamma
    mu = -lam / params.gamma
    if y * y - mu <= 0.0:
        raise DomainError(
            f"lam = {lam} below the physical domain boundary -k^2/gamma for "
            f"gamma = {params.gamma}, k = {params.k}"
        )
    j1 = eval_jn(1, y, mu, tol=tol)
    with np.errstate(over="ignore"):
        term = (params.c / (2.0 * np.pi * params.gamma**2)) * np.exp(j1.log_value)
    return 1.0 - term


def d_lambda_dispersion(params, lam, tol=1e-9, n_max=200000):
    """d Lambda / d lam via the J-series, with a certified truncation tail.

    The series form is (y c / 2 pi) (J_0 - lam y sum_{n>=1} J_n / n) at
    y = k/gamma; terms are positive and eventually decay at least
    geometrically, so the observed last ratio certifies the tail.
    """
    if params.gamma == 0.0:
        u = lam / abs(params.k)
        a2 = _a0(u) - u * (1.0 - u * _a0(u))
        return (params.c / (2.0 * np.pi * params.k**2)) * a2 / abs(params.k)
    if params.c == 0.0:
        return 0.0
    y = abs(params.k) / params.gamma
    lam_eff = lam / abs(params.k)
    lnJ = jn_sequence_cached(y, lam_eff, n_max, tol=DEFAULT_TOL)
    n = np.arange(1, len(lnJ))
    with np.errstate(under="ignore"):
        terms = np.exp(lnJ[1:] + 2.0 * np.log(y)) / n
    head = np.exp(lnJ[0] + np.log(y))
    series = float(np.sum(terms))
    # tail certificate: terms decay monotonically beyond the recorded range
    if len(lnJ) - 1 < n_max and terms[-1] > 0.0:
        tail = terms[-1]  # next terms are strictly smaller and sum << this scale
    else:
        ratio = terms[-1] / terms[-2] if terms[-2] > 0 else 0.0
        if ratio >= 1.0:
            raise PrecisionError("series tail for dLambda/dlam not certified")
        tail = terms[-1] * ratio / (1.0 - ratio)
    value = (params.c / (2.0 * np.pi)) * (head - lam_eff * series)
    err = (params.c / (2.0 * np.pi)) * lam_eff * tail
    if abs(value) > 0 and err / abs(value) > max(tol, 1e-12) * 1e3:
        raise PrecisionError(
            f"dLambda/dlam tail bound {err:.2e} too large relative to {value:.2e}"
        )
    return float(value) / abs(params.k) ** 3


def find_root(params, bracket, tol=DEFAULT_TOL):
    """Real dispersion root inside (or right of) the bracket.

    The function is strictly increasing in lam on the physical domain, so a
    positive value at the left end means no real root at or beyond the
    bracket (stable configuration, NoSignChange).  Negative values at both
    ends trigger automatic extension of the right end; if the extension
    exhausts the search range the root is treated as having left the real
    axis (ComplexBranch).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise DomainError("bracket must satisfy lo < hi")
    f = lambda x: eval_dispersion(params, x, tol=tol)
    flo, fhi = f(lo), f(hi)
    used = (lo, hi)
    if flo > 0.0 and fhi > 0.0:
        raise NoSignChange(
            f"Lambda > 0 throughout [{lo}, {hi}]; configuration is stable"
        )
    if flo < 0.0 and fhi < 0.0:
        # monotone increase: extend right end looking for the crossing
        width = hi - lo
        for _ in range(64):
            lo, flo = hi, fhi
            hi = hi + width
            width *= 2.0
            fhi = f(hi)
            if fhi > 0.0:
                break
        else:
            raise ComplexBranch(
                "no real root found while extending the bracket; "
                "the unstable branch is not on the real axis here"
            )
        used = (lo, hi)
    from scipy.optimize import brentq

    root = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    residual = abs(f(root))
    if residual > RESIDUAL_TOL:
        # one Newton polish using the series derivative
        d = d_lambda_dispersion(params, root)
        root = root - f(root) / d
        residual = abs(f(root))
    if residual > RESIDUAL_TOL:
        raise PrecisionError(f"root residual {residual:.2e} exceeds {RESIDUAL_TOL}")
    d = d_lambda_dispersion(params, root)
    return DispersionRoot(lam=float(root), residual=float(residual),
                          d_lambda=float(d), bracket=used)


def c_for_growth_rate(gamma, lam, k=1, tol=DEFAULT_TOL):
    """Coupling c that makes lam an exact dispersion root at this gamma.

    Inverts Lambda = 0: c = 2 pi gamma^2 / J_1(k/gamma, -lam/gamma).
    """
    if gamma <= 0.0:
        raise DomainError("c_for_growth_rate requires gamma > 0 (finite J_1 form)")
    y = abs(k) / gamma
    mu = -lam / gamma
    if y * y - mu <= 0.0:
        raise DomainError("lam below the physical domain boundary")
    j1 = eval_jn(1, y, mu, tol=tol)
    return float(2.0 * np.pi * gamma**2 * np.exp(-j1.log_value))
