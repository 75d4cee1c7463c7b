"""Overflow-safe evaluation of the resolvent building-block integrals.

The family

    J_n(y, mu) = int_0^1 t^(y^2 - mu) exp((1-t) y^2) (1-t)^n dt/t

underlies everything downstream: the dispersion relation, the eigenvector
coefficients and the Landau-coefficient series.  For the parameter ranges of
interest y reaches 1e8 and n reaches 2e5, so nothing here ever exponentiates
a y^2-sized quantity directly: all values are carried as logarithms, and the
quadrature acts on exp(psi(s) - psi_max) with psi the exact exponent of the
integrand after the substitution t = exp(-s).

Closed-form identities used for validation (and by callers):

    y^2 J_1 - mu J_0 = 1
    n (J_n - J_{n-1}) + y^2 J_{n+1} - mu J_n = 0        (n >= 1)

The scaled combination a_n(y, lam) = y^(n+1) J_n(y, -lam*y) stays O(1) after
removing the n^(n/2) e^(-n/2) envelope, which is what `log_an` exposes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import DomainError, PrecisionError

DEFAULT_TOL = 1e-10

# quadrature integrands are cut where exp(psi - psi_max) drops below this
_TAIL_CUT = 1e-18


@dataclass(frozen=True)
class JnEvaluation:
    """A single J_n value carried in log form."""

    n: int
    y: float
    mu: float
    log_value: float
    quadrature_error: float  # estimated relative error

    @property
    def value(self):
        """exp(log_value); may overflow/underflow to inf/0 for extreme inputs."""
        with np.errstate(over="ignore", under="ignore"):
            return float(np.exp(self.log_value))


@dataclass(frozen=True)
class PsiCoefficient:
    """One coefficient of the shifted-oscillator resolvent acting on z^beta."""

    alpha: int
    beta: int
    xi: float
    lam: float
    value: complex


def _expm1_minus_s(s):
    """1 - e^-s - s = -(s^2/2 - s^3/6 + ...), evaluated without cancellation.

    The naive -expm1(-s) - s loses ~eps/s relative digits for small s, which
    matters because the result is multiplied by y^2 (up to 1e16).
    """
    if s > 0.5:
        return -np.expm1(-s) - s
    # Horner on -sum_{k>=2} (-s)^k / k!, 13 terms (rel. error < 1e-12 at s=0.5)
    acc = 0.0
    for k in range(14, 1, -1):
        acc = (1.0 - acc) * s / k
    return -acc * s


def _exponent(s, y2, mu, n):
    """psi(s) = y^2 (1 - e^-s - s) + mu s + n ln(1 - e^-s).

    Equivalent to -a s + y^2 (1 - e^-s) + n ln(1 - e^-s) with a = y^2 - mu,
    but grouped so no intermediate reaches O(y^2 s): near the saddle the first
    bracket is O(1) even at y = 1e8, keeping the absolute error of psi at the
    1e-12 level required for tol = 1e-10 quadrature.
    """
    if s <= 0.0:
        return 0.0 if n == 0 and s == 0.0 else -np.inf
    one_m = -np.expm1(-s)
    if one_m <= 0.0:
        return -np.inf
    out = y2 * _expm1_minus_s(s) + mu * s
    if n:
        out += n * np.log(one_m)
    return out


def _saddle(y2, mu, a, n):
    """Interior maximum of the exponent in w = e^-s, from the exact quadratic.

    The stationarity condition is y^2 w^2 - (y^2 + n + a) w + a = 0; the
    discriminant is expanded to (n - mu)^2 + 4 n y^2, which is exact and does
    not cancel (the naive b^2 - 4 a y^2 loses all digits for y^2 >> n).
    """
    b = y2 + n + a
    disc = (n - mu) ** 2 + 4.0 * n * y2
    w = 2.0 * a / (b + np.sqrt(disc))
    return min(w, 1.0)


def eval_jn(n, y, mu, tol=DEFAULT_TOL):
    """Evaluate ln J_n(y, mu) with certified relative error <= tol.

    Parameters
    ----------
    n : int
        Nonnegative index.
    y : float
        Positive first argument (1/gamma in the kinetic application).
    mu : float
        Second argument; integrability requires y^2 - mu > 0.
    tol : float
        Relative error target for the quadrature.

    Returns
    -------
    JnEvaluation

    Raises
    ------
    DomainError
        If n < 0, y <= 0 or y^2 - mu <= 0.
    PrecisionError
        If the adaptive quadrature cannot certify tol.
    """
    if n < 0 or int(n) != n:
        raise DomainError(f"index n must be a nonnegative integer, got {n}")
    if y <= 0.0:
        raise DomainError(f"y must be positive, got {y}")
    y = float(y)
    mu = float(mu)
    n = int(n)
    y2 = y * y
    a = y2 - mu
    if a <= 0.0:
        raise DomainError(f"need y^2 - mu > 0 for integrability, got {y2 - mu}")

    w_star = _saddle(y2, mu, a, n)
    s_star = -np.log(w_star) if w_star < 1.0 else 0.0
    psi_max = _exponent(s_star, y2, mu, n) if s_star > 0.0 else 0.0

    # curvature sets the width of the dominant window
    if s_star > 0.0:
        w0 = np.exp(-s_star)
        one_m = -np.expm1(-s_star)
        curv = y2 * w0 + (n * w0 / one_m**2 if n else 0.0)
    else:
        curv = y2
    sigma = 1.0 / np.sqrt(curv)

    # right cutoff: extend until the integrand is below the tail threshold;
    # psi is strictly concave in s so the overshoot bound below is rigorous
    s_hi = s_star + 10.0 * sigma
    while _exponent(s_hi, y2, mu, n) - psi_max > np.log(_TAIL_CUT):
        s_hi *= 2.0
        if s_hi > 1e18:  # pragma: no cover - decay rate is at least `a`
            raise PrecisionError("integrand fails to decay; inputs out of range")
    # concavity: psi(s) <= psi(s_hi) - a_eff (s - s_hi) with slope below
    slope = max(a - y2 * np.exp(-s_hi), 0.5 * a)
    tail_bound = np.exp(_exponent(s_hi, y2, mu, n) - psi_max) / slope

    knots = sorted({s_star + k * sigma for k in (-32, -8, -2, -1, 0, 1, 2, 8, 32)})
    knots = [p for p in knots if 0.0 < p < s_hi]
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, abserr = quad(
            lambda s: np.exp(_exponent(s, y2, mu, n) - psi_max),
            0.0,
            s_hi,
            points=knots,
            limit=200,
            epsabs=min(1e-16, tol * sigma * 1e-2),
            epsrel=0.1 * tol,
        )
    if val <= 0.0:
        raise PrecisionError(f"quadrature collapsed for J_{n}({y}, {mu})")
    rel_err = (abserr + tail_bound) / val
    if rel_err > tol:
        raise PrecisionError(
            f"J_{n}({y}, {mu}): relative error {rel_err:.2e} exceeds tol {tol:.1e}"
        )
    return JnEvaluation(n=n, y=y, mu=mu, log_value=psi_max + np.log(val),
                        quadrature_error=rel_err)


def log_an(n, y, lam, tol=DEFAULT_TOL):
    """ln a_n(y, lam) = (n+1) ln y + ln J_n(y, -lam*y).

    a_n e^(n/2 - (n/2) ln n) is O(1) throughout the oscillatory range; the
    asymptotic bands (sqrt(pi) limits, exponential cut-offs) are exercised by
    the test suite rather than used computationally.
    """
    ev = eval_jn(n, y, -lam * y, tol=tol)
    return (n + 1) * np.log(y) + ev.log_value


def _recurrence_horizon(y):
    """Largest n for which the upward recurrence is used.

    In the oscillatory zone n << y^2 both fundamental solutions share one
    envelope, so roundoff stays bounded relative to that envelope: per-term
    relative error grows like eps * exp(n^(3/2)/(3y)), i.e. values keep
    ~1e-8 accuracy while they are above ~1e-6 of the peak, and the error
    never matters to envelope-weighted sums.  Past n ~ 0.4 y^2 the growing
    solution takes over and the recurrence is abandoned in favour of direct
    quadrature (only ever needed for y <~ 25, where few terms remain alive).
    """
    return max(int(0.4 * y * y), 8)


def log_jn_sequence(y, lam, n_max, tol=DEFAULT_TOL):
    """ln J_n(y, -lam*y) for n = 0..n_stop (n_stop <= n_max).

    J_0 and J_1 come from quadrature; the exact three-term recurrence

        y^2 J_{n+1} = (mu - n) J_n + n J_{n-1},     mu = -lam*y

    is run upward in ratio form while it is provably accurate (below
    `_recurrence_horizon`), after which each value falls back to direct
    quadrature.  The sequence is truncated at n_max, or once the scaled
    magnitude y^(n+1) J_n / sqrt(n!) has fallen 80 e-folds below its running
    maximum (far below every tolerance used downstream).

    Returns
    -------
    lnJ : ndarray
        lnJ[n] = ln J_n(y, -lam*y), n = 0..n_stop.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    y = float(y)
    mu = -lam * y
    l0 = eval_jn(0, y, mu, tol=tol).log_value
    l1 = eval_jn(1, y, mu, tol=tol).log_value
    if n_max == 1:
        return np.array([l0, l1])

    y2 = y * y
    log_y = np.log(y)
    horizon = _recurrence_horizon(y)
    out = [l0, l1]
    ln_t_max = max(l0 + log_y, l1 + 2.0 * log_y - 0.5 * gammaln(2.0))

    def _dead(ln_j, n):
        nonlocal ln_t_max
        ln_t = ln_j + (n + 1) * log_y - 0.5 * gammaln(n + 1.0)
        if ln_t > ln_t_max:
            ln_t_max = ln_t
            return False
        return ln_t < ln_t_max - 80.0

    ratios = []
    rr = np.exp(l1 - l0)
    stop_rec = min(n_max, max(horizon, 1))
    n = 1
    ln_r_sum = 0.0
    truncated = False
    while n < stop_rec:
        rr_next = ((mu - n) + n / rr) / y2
        if rr_next <= 0.0:
            truncated = True
            break
        rr = rr_next
        ratios.append(rr)
        ln_r_sum += np.log(rr)
        n += 1
        if _dead(l1 + ln_r_sum, n):
            truncated = True
            break
    if ratios:
        out.extend(l1 + np.cumsum(np.log(ratios)))
    # quadrature continuation beyond the recurrence horizon
    if not truncated:
        while len(out) - 1 < n_max:
            m = len(out)
            ln_j = eval_jn(m, y, mu, tol=tol).log_value
            out.append(ln_j)
            if _dead(ln_j, m):
                break
    return np.asarray(out)


_SEQ_CACHE = {}


def jn_sequence_cached(y, lam, n_max, tol=DEFAULT_TOL):
    """Memoized `log_jn_sequence`; safe for concurrent use (immutable values,
    deterministic recomputation).  Callers must treat the array as read-only.
    """
    key = (float(y), float(lam), float(tol))
    hit = _SEQ_CACHE.get(key)
    if hit is not None:
        arr, complete = hit
        if complete and len(arr) - 1 <= n_max:
            return arr
        if len(arr) - 1 >= n_max:
            return arr[: n_max + 1]
    arr = log_jn_sequence(y, lam, n_max, tol=tol)
    complete = len(arr) - 1 < n_max
    if hit is None or len(arr) > len(hit[0]):
        if len(_SEQ_CACHE) > 32:
            _SEQ_CACHE.pop(next(iter(_SEQ_CACHE)))
        _SEQ_CACHE[key] = (arr, complete)
    return arr


def _log_binomial(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def eval_psi(alpha, beta, xi, lam, tol=DEFAULT_TOL):
    """Coefficient psi_alpha^beta(xi, lam) of the shifted-oscillator resolvent.

    The resolvent acts on monomials as (B(i xi) - lam)^-1 z^beta =
    sum_alpha psi_alpha^beta z^alpha with a finite polynomial expansion in
    terms of J_{k+beta1}(|xi|/sqrt2, lam).  Extracting the z^alpha coefficient
    terminates exactly (k = alpha - j - beta2 >= 0), so the sum here is finite;
    each term is assembled in (log-magnitude, phase) form and the result is
    rejected if cancellation against the largest term exceeds tol.

    Closed forms recovered exactly (tested):
        psi_0^1 = psi_1^0 = (i xi / sqrt2) J_1(|xi|/sqrt2, lam)
        psi_n^1 = (1/n!) (i xi/sqrt2)^(n-1) (-lam) J_n(|xi|/sqrt2, lam), n >= 1
    """
    if alpha < 0 or beta < 0:
        raise DomainError("alpha and beta must be nonnegative")
    alpha = int(alpha)
    beta = int(beta)
    y = abs(xi) / np.sqrt(2.0)
    if y == 0.0:
        # B(0) = H_OH is diagonal: resolvent coefficient is delta/(beta - lam)
        if beta == alpha:
            if beta - lam == 0.0:
                raise DomainError("resolvent evaluated on the spectrum (xi=0)")
            return PsiCoefficient(alpha, beta, xi, lam, 1.0 / (beta - lam))
        return PsiCoefficient(alpha, beta, xi, lam, 0.0 + 0.0j)

    sgn_xi = 1.0 if xi > 0 else -1.0
    log_mag = []
    phase = []
    jcache = {}
    for beta1 in range(beta + 1):
        beta2 = beta - beta1
        for j in range(beta1 + 1):
            k = alpha - j - beta2
            if k < 0:
                continue
            m = k + beta1
            if m not in jcache:
                jcache[m] = eval_jn(m, y, lam, tol=tol).log_value
            p = k + beta1 - j  # power of (i xi / sqrt2)
            lm = (
                jcache[m]
                + gammaln(beta + 1.0)
                - gammaln(k + 1.0)
                - gammaln(beta1 + 1.0)
                - gammaln(beta2 + 1.0)
                + _log_binomial(beta1, j)
                + p * np.log(y)
            )
            # phase: i^p * sgn(xi)^p * (-1)^j
            ph = (1j) ** (p % 4) * (sgn_xi**p) * ((-1.0) ** j)
            log_mag.append(lm)
            phase.append(ph)
    log_mag = np.asarray(log_mag)
    phase = np.asarray(phase)
    top = log_mag.max()
    scaled = np.exp(log_mag - top)
    total = np.sum(scaled * phase)
    cancel = np.finfo(float).eps * scaled.max() / max(abs(total), np.finfo(float).tiny)
    if cancel > tol:
        raise PrecisionError(
            f"psi_{alpha}^{beta}: cancellation error {cancel:.2e} exceeds tol"
        )
    with np.errstate(over="ignore"):
        value = complex(total * np.exp(top))
    return PsiCoefficient(alpha=alpha, beta=beta, xi=float(xi), lam=float(lam),
                          value=value)
