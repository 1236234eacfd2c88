"""Iterated Gaussian stability.

Gamma_rho(mu1, mu2) is the probability that two rho-correlated standard
Gaussians fall below their respective quantiles Phi^-1(mu1), Phi^-1(mu2);
the r-ary version nests right-to-left:
Gamma_rho(mu1, ..., mur) = Gamma_rho(mu1, Gamma_rho(mu2, ..., mur)).
"""

from __future__ import annotations

import math

from scipy.integrate import quad

# Acklam's rational approximation to the inverse normal CDF, |error| < 1.15e-9.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def norm_ppf(p: float) -> float:
    """Inverse standard normal CDF (rational approximation + one Halley step).

    The upper half reflects to the lower half, where the CDF keeps full
    relative precision, so the refinement step stays accurate in both tails.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must be in (0,1), got {p}")
    if p > 0.5:
        return -norm_ppf(1.0 - p)
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    else:
        q = p - 0.5
        s = q * q
        x = ((((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * q
             / (((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0))
    # Halley refinement pushes the error well below 1e-9
    e = norm_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def bivariate_orthant(a: float, b: float, rho: float, tol: float = 1e-10) -> float:
    """Pr[g1 <= a and g2 <= b] for rho-correlated standard Gaussians.

    Adaptive quadrature of phi(u) * Phi((b - rho u)/sqrt(1 - rho^2)) over
    u in (-inf, a]; exact product at rho = 0.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"correlation must be in [0,1), got {rho}")
    if rho == 0.0:
        return norm_cdf(a) * norm_cdf(b)
    denom = math.sqrt(1.0 - rho * rho)

    def integrand(u):
        return norm_pdf(u) * norm_cdf((b - rho * u) / denom)

    val, _ = quad(integrand, -math.inf, a, epsabs=tol, limit=200)
    return min(max(val, 0.0), 1.0)


def gaussian_stability(rho: float, mus) -> float:
    """Gamma_rho(mu_1, ..., mu_r), nested right-to-left.

    Arguments at 0 or 1 take their trivial limits (0 annihilates, 1 is
    the identity).
    """
    mus = list(mus)
    if not mus:
        raise ValueError("need at least one volume argument")
    for m in mus:
        if not 0.0 <= m <= 1.0:
            raise ValueError(f"volumes must be in [0,1], got {m}")
    acc = mus[-1]
    for m in reversed(mus[:-1]):
        acc = _gamma2(rho, m, acc)
    return acc


def _gamma2(rho: float, mu1: float, mu2: float) -> float:
    if mu1 == 0.0 or mu2 == 0.0:
        return 0.0
    if mu1 == 1.0:
        return mu2
    if mu2 == 1.0:
        return mu1
    return bivariate_orthant(norm_ppf(mu1), norm_ppf(mu2), rho)


def ks_rho_bound(mu: float, r: int, c_prime: float = 2.0) -> float:
    """The correlation threshold 1/(2 C' r^2 log(1/mu)) under which the
    stability bound Gamma <= 3 mu^r applies; C' is a sweep parameter."""
    return 1.0 / (2.0 * c_prime * r * r * math.log(1.0 / mu))
