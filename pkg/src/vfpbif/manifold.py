"""Second-order manifold coefficients and the Landau-coefficient breakdown.

Near a weakly unstable root lam the dynamics reduces to

    dA/dt = lam A + (c3_1 + c3_2 + c3_3) |A|^2 A + O(A^5),

where the three cubic parts come from the zeroth harmonic (U + U*), the
second harmonic H2, and the mean-field feedback of H2 on the conjugate
eigenvector.  The production path computes them as inner products of
coefficient vectors; an independent closed-series path (log-scaled J_n
products) must agree to 1e-6 relative or the computation is rejected.

The fifth-order piece implemented here is only the dominant contribution
(relabelled `c5_partial` throughout): the response X of the zeroth harmonic
to its own cubic feedback, (gamma n + 4 lam) X_n = U_n.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .asymptotics import classify_regime
from .dispersion import c_for_growth_rate
from .eigensystem import (
    PI4,
    SpectralVector,
    apply_adag,
    g0_normalization,
    solve_eigensystem,
    solve_shifted_tridiagonal,
)
from .errors import DegenerateInput, DenominatorNearZero, PrecisionError
from .special import jn_sequence_cached

TWO_PATH_RTOL = 1e-6


@dataclass(frozen=True)
class ManifoldCoefficients:
    U: SpectralVector
    H2: SpectralVector
    H2_0: complex
    X: SpectralVector


@dataclass(frozen=True)
class LandauBreakdown:
    c3_1: complex
    c3_2: complex
    c3_3: complex
    c3: complex
    c5_partial: complex
    regime: str
    n_max_used: int
    tail_bound: float


def compute_U(eig, N=None):
    """Zeroth-harmonic response: U_n = i G_{n-1} sqrt(n) / (gamma n + 2 lam)."""
    G = eig.G.coeffs
    if N is None:
        N = len(G) - 1
    m = min(N, len(G) - 1)
    n = np.arange(m + 1)
    U = np.zeros(N + 1, dtype=complex)
    U[1 : m + 1] = (
        1j * G[:m] * np.sqrt(n[1:]) / (eig.params.gamma * n[1:] + 2.0 * eig.lam)
    )
    return SpectralVector(U)


def compute_X(eig, U):
    """Fifth-order auxiliary: (gamma n + 4 lam) X_n = U_n."""
    u = U.coeffs
    n = np.arange(len(u))
    X = np.zeros_like(u)
    X[1:] = u[1:] / (eig.params.gamma * n[1:] + 4.0 * eig.lam)
    return SpectralVector(X)


def h2_denominator(eig, q0):
    """Self-consistency denominator 1 - (i c / 4 pi gamma) (R e_1)_0 (the
    second-harmonic dispersion factor evaluated at twice the growth rate)."""
    return 1.0 - (1j * eig.params.c / (4.0 * np.pi * eig.params.gamma)) * q0


def compute_H2(eig, N=None):
    """Second-harmonic response: two resolvent solves plus the rank-one
    self-consistency closed in one scalar division.

    Solves [B(-2 i sqrt2/gamma) + 2 lam/gamma] H = -(i/gamma) adag G
    + (i c / 4 pi gamma) H_0 e_1 and returns (H, H_0).
    """
    g = eig.params.gamma
    G = eig.G.coeffs
    if N is None:
        N = len(G) - 1
    m = min(N, len(G) - 1)
    rhs = np.zeros(N + 1, dtype=complex)
    rhs[: m + 1] = apply_adag(G[: m + 1])
    rhs *= -1j / g
    xi2 = -2.0 * np.sqrt(2.0) / g
    shift = -2.0 * eig.lam / g
    P = solve_shifted_tridiagonal(xi2, shift, rhs)
    e1 = np.zeros(N + 1, dtype=complex)
    e1[1] = 1.0
    Q = solve_shifted_tridiagonal(xi2, shift, e1)
    denom = h2_denominator(eig, Q[0])
    if abs(denom) < 1e-10:
        raise DenominatorNearZero(
            f"second-harmonic dispersion denominator {denom} vanishes"
        )
    H2_0 = P[0] / denom
    H2 = P + (1j * eig.params.c / (4.0 * np.pi * g)) * H2_0 * Q
    return SpectralVector(H2), complex(H2[0])


def h2_equation_residual(eig, H2, H2_0):
    """Residual of the defining second-harmonic equation, relative to the load."""
    g = eig.params.gamma
    H = H2.coeffs
    n = np.arange(len(H))
    lhs = (n - (-2.0 * eig.lam / g)) * H
    lhs[:-1] += 2j / g * np.sqrt(n[1:]) * H[1:]
    lhs[1:] += 2j / g * np.sqrt(n[1:]) * H[:-1]
    rhs = -1j / g * apply_adag(eig.G.coeffs[: len(H)])
    rhs[1] += (1j * eig.params.c / (4.0 * np.pi * g)) * H2_0
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))


def _adag_inner(left, right):
    """<left, adag right> = sum_n conj(left_n) sqrt(n) right_{n-1}."""
    m = min(len(left), len(right))
    n = np.arange(1, m)
    return complex(np.sum(np.conj(left[1:m]) * np.sqrt(n) * right[: m - 1]))


def c31_direct(eig, U):
    """c3_1 = -i <Gtilde, adag (U + U*)> from the coefficient vectors."""
    UpU = U.coeffs + np.conj(U.coeffs)
    return -1j * _adag_inner(eig.Gtilde.coeffs, UpU)


def c31_even_contamination(eig, U):
    """Maximum even-index contribution to the c3_1 sum (exactly zero up to
    roundoff; returned for the structural assertion)."""
    Gt = eig.Gtilde.coeffs
    UpU = U.coeffs + np.conj(U.coeffs)
    m = min(len(Gt), len(UpU))
    n = np.arange(1, m)
    terms = np.conj(Gt[1:m]) * np.sqrt(n) * UpU[: m - 1]
    even = terms[n % 2 == 0]
    scale = np.abs(terms).max() if len(terms) else 1.0
    return float(np.abs(even).max() / scale) if len(even) and scale > 0 else 0.0


def _lnJ_arrays(gamma, lam, N):
    y = 1.0 / gamma
    lnJ = jn_sequence_cached(y, lam, max(N, 4))
    return y, lnJ


def c31_series(gamma, lam, c, d_lambda, N):
    """Closed-series path for c3_1 (odd-index J_n J_{n-2} products):

        c3_1 = -(c lam / (pi dLambda)) sum_{n>=3 odd}
               n (n-1) / (gamma (n-1) + 2 lam) * y^{2n} J_{n-2} J_n / n!

    evaluated in log-scaled arithmetic; returns (value, certified tail bound).
    """
    y, lnJ = _lnJ_arrays(gamma, lam, N)
    m = len(lnJ) - 1
    n = np.arange(3, m + 1, 2)
    if len(n) == 0:
        return 0.0 + 0.0j, 0.0
    with np.errstate(under="ignore"):
        prod = np.exp(lnJ[n] + lnJ[n - 2] + 2.0 * n * np.log(y) - gammaln(n + 1.0))
    pref = n * (n - 1.0) / (gamma * (n - 1.0) + 2.0 * lam)
    series = float(np.sum(pref * prod))
    tail = float(pref[-1] * prod[-1]) if m < N else 0.0
    scale = c * lam / (np.pi * d_lambda)
    return complex(-scale * series), abs(scale) * tail


def c33_inner_series(gamma, lam, c, d_lambda, N, g0, gt1):
    """Closed-series path for <Gtilde, adag G*>:

        gt1* g0 - (c^2 gt1* g0 / 4 pi^2) lam sum_{n>=2}
            n / (gamma^{2n+1} n!) J_{n-1} J_n

    Returns (value, series_factor, tail) where series_factor is the positive
    scaled sum lam * (c / 2 pi dLambda) sum_n ... used for the divergence-law
    diagnostics.
    """
    y, lnJ = _lnJ_arrays(gamma, lam, N)
    m = len(lnJ) - 1
    n = np.arange(2, m + 1)
    if len(n) == 0:
        return complex(np.conj(gt1) * g0), 0.0, 0.0
    with np.errstate(under="ignore"):
        prod = np.exp(
            lnJ[n] + lnJ[n - 1] + (2.0 * n + 1.0) * np.log(y) - gammaln(n + 1.0)
        )
    series = float(np.sum(n * prod))
    tail = float(n[-1] * prod[-1]) if m < N else 0.0
    value = np.conj(gt1) * g0 * (1.0 - (c**2 / (4.0 * np.pi**2)) * lam * series)
    series_factor = lam * (c / (2.0 * np.pi * d_lambda)) * series
    return complex(value), float(series_factor), tail


def compute_c3(eig, mc, series_check=True):
    """Landau-coefficient breakdown from the manifold coefficients.

    Primary path: direct inner products of the coefficient vectors.
    Cross-path: the closed J-series for c3_1 and for <Gtilde, adag G*>,
    which must agree to 1e-6 relative (PrecisionError otherwise).
    """
    p = eig.params
    Gt = eig.Gtilde.coeffs
    G = eig.G.coeffs
    c31 = c31_direct(eig, mc.U)
    c32 = 1j * _adag_inner(Gt, mc.H2.coeffs)
    ip_gstar = _adag_inner(Gt, np.conj(G))
    c33 = (1j * p.c * PI4 / np.sqrt(2.0)) * mc.H2_0 * ip_gstar
    tail = 0.0
    if series_check:
        N = len(G) - 1
        c31_s, tail1 = c31_series(p.gamma, eig.lam, p.c, eig.d_lambda, N)
        g0 = g0_normalization(p.c)
        gt1 = Gt[1]
        ip_s, _, tail3 = c33_inner_series(p.gamma, eig.lam, p.c, eig.d_lambda, N,
                                          g0, gt1)
        mismatch_1 = abs(c31_s - c31)
        mismatch_3 = abs(ip_s - ip_gstar)
        if eig.converged:
            # at a converged truncation the two routes must coincide
            if mismatch_1 > TWO_PATH_RTOL * max(abs(c31), 1e-300):
                raise PrecisionError(
                    f"c3_1 paths disagree: direct {c31}, series {c31_s}"
                )
            if mismatch_3 > TWO_PATH_RTOL * max(abs(ip_gstar), 1e-300):
                raise PrecisionError(
                    f"<Gtilde, adag G*> paths disagree: "
                    f"direct {ip_gstar}, series {ip_s}"
                )
        h2_scale = abs((p.c * PI4 / np.sqrt(2.0)) * mc.H2_0)
        tail = tail1 + h2_scale * tail3
        if not eig.converged:
            # truncation-limited corner: the route disagreement measures the
            # unresolved tail and is surfaced instead of raising
            tail = max(tail, mismatch_1 + h2_scale * mismatch_3)
    c3 = c31 + c32 + c33
    c5 = compute_c5_partial(eig, mc, c3)
    label = classify_regime(p.gamma, eig.lam).regime
    return LandauBreakdown(
        c3_1=c31,
        c3_2=c32,
        c3_3=c33,
        c3=c3,
        c5_partial=c5,
        regime=label,
        n_max_used=len(G) - 1,
        tail_bound=float(tail),
    )


def compute_c5_partial(eig, mc, c3):
    """Dominant fifth-order contribution, -i <Gtilde, adag H0^(0,1)> with
    H0^(0,1) = -2 c3 (X + X*), i.e. 2 i c3 <Gtilde, adag (X + X*)>.

    The -i carries the same mean-field bookkeeping factor as the cubic terms
    (i c sqrt2 pi^(1/4) G_0 = -i) and makes the result real, as the reflection
    symmetry of the amplitude equation requires; magnitudes and the
    divergence-law diagnostics are unaffected by this phase.
    """
    XpX = mc.X.coeffs + np.conj(mc.X.coeffs)
    return 2.0j * c3 * _adag_inner(eig.Gtilde.coeffs, XpX)


def manifold_coefficients(eig, N=None):
    """U, H2 (with its zero coefficient) and X at matching truncations."""
    U = compute_U(eig, N)
    H2, H2_0 = compute_H2(eig, N)
    X = compute_X(eig, U)
    return ManifoldCoefficients(U=U, H2=H2, H2_0=H2_0, X=X)


def landau_breakdown(gamma, lam=None, c=None, N=None, series_check=True):
    """One-call driver: fix the root, build the eigensystem and manifold
    coefficients, and return the LandauBreakdown.

    Exactly one of lam (coupling inferred) or c (root located) is required.
    """
    if c is not None and c <= 0.0:
        raise DegenerateInput("coupling c must be positive for an instability")
    if lam is not None:
        c_eff = c if c is not None else c_for_growth_rate(gamma, lam)
        from .dispersion import ModelParams

        params = ModelParams(c=c_eff, gamma=gamma)
        eig = solve_eigensystem(params, lam=lam, N=N)
    else:
        if c is None:
            raise DegenerateInput("provide lam, c, or both")
        from .dispersion import ModelParams

        params = ModelParams(c=c, gamma=gamma)
        eig = solve_eigensystem(params, N=N)
    mc = manifold_coefficients(eig)
    return compute_c3(eig, mc, series_check=series_check)


def amplitude_balance(lam, c3):
    """Saturation-amplitude estimate sqrt(lam / |Re c3|) from the cubic balance."""
    r = abs(np.real(c3))
    if r == 0.0:
        raise DegenerateInput("cubic coefficient vanishes; no balance amplitude")
    return float(np.sqrt(lam / r))
