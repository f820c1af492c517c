"""Stability functionals beta(u, eps), alpha(M, eps), the mass stability margin and the critical mass ratio."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BracketError, DomainError, QuadratureError

QUAD_TOL = 1e-10
BRACKETS = ((1.0, 2.0), (0.5, 5.0))


def _check_m(M):
    if not M > 0:
        raise DomainError(f"mass ratio must be positive, got {M!r}")


def epsilon_max(M: float) -> float:
    """Supremum of eps keeping numerator and denominator of beta positive for every u in [0, 1].

    Both constraints are tightest at u = 0, where M + 1 - u is largest.
    """
    _check_m(M)
    P, A = M * (M + 2.0), M + 1.0
    # numerator: 1 - (1 + A/P) sqrt(eps) > 0;  denominator: A(1 - 2s) + P(1 - s) > 0
    s = min(P / (P + A), (A + P) / (2.0 * A + P))
    return min(s * s, 1.0)


def _check_eps(eps, M):
    if not eps >= 0:
        raise DomainError(f"epsilon must be >= 0, got {eps!r}")
    if eps >= epsilon_max(M):
        raise DomainError(f"epsilon = {eps!r} is at or above the validity ceiling {epsilon_max(M):.6g} for M = {M!r}")


def _beta_ratio(u, eps, M):
    s = math.sqrt(eps)
    A = M + 1.0 - u
    P = M * (M + 2.0)
    num = A * (M + 2.0) * (1.0 - (1.0 + A / P) * s)
    den = A * (1.0 - 2.0 * s) + P * (1.0 - s)
    return num, den


def beta_u(u: float, eps: float, M: float) -> float:
    """min{1, (M+1-u)(M+2)(1 - (1 + (M+1-u)/(M(M+2))) sqrt(eps)) / ((M+1-u)(1-2 sqrt(eps)) + M(M+2)(1-sqrt(eps)))}."""
    _check_m(M)
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [0, 1], got {u!r}")
    if not eps >= 0:
        raise DomainError(f"epsilon must be >= 0, got {eps!r}")
    num, den = _beta_ratio(u, eps, M)
    if num <= 0 or den <= 0:
        raise DomainError(f"beta is undefined at epsilon = {eps!r} (numerator {num:.3g}, denominator {den:.3g})")
    return min(1.0, num / den)


def beta_u_auxiliary(u: float, eps: float, M: float) -> float:
    """Same function via min{1, sqrt(delta)(M+1-u)/M} with sqrt(delta) from the vanishing-coefficient condition."""
    s = math.sqrt(eps)
    A = M + 1.0 - u
    P = M * (M + 2.0)
    sqrt_delta = (P * (1.0 - s) - s * A) / (P * (1.0 - s) + A * (1.0 - 2.0 * s))
    return min(1.0, sqrt_delta * A / M)


def beta_kink(eps: float, M: float) -> float | None:
    """The u in (0, 1) where the second argument of beta's min crosses 1, or None."""
    f = lambda u: _beta_ratio(u, eps, M)[0] - _beta_ratio(u, eps, M)[1]
    f0, f1 = f(0.0), f(1.0)
    if (f0 > 0) == (f1 > 0):
        return None
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if (f(mid) > 0) == (f0 > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def alpha_M(M: float, eps: float = 0.0, quad_tol: float = QUAD_TOL) -> float:
    """alpha = (1/(M(1-sqrt eps)+1) + int_0^1 du / (beta(u,eps) (M(1-sqrt eps)+1-u))) / 2."""
    _check_m(M)
    _check_eps(eps, M)
    c = M * (1.0 - math.sqrt(eps))
    if not c > 0:
        raise DomainError(f"M(1 - sqrt(eps)) must be positive, got {c!r}")
    integrand = lambda u: 1.0 / (beta_u(u, eps, M) * (c + 1.0 - u))
    kink = beta_kink(eps, M)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=quad_tol, epsrel=0.0, limit=200,
                                      points=None if kink is None else [kink])
        except integrate.IntegrationWarning as w:
            raise QuadratureError(f"quadrature did not converge for M = {M!r}, eps = {eps!r}: {w}") from None
    if err > quad_tol:
        raise QuadratureError(f"quadrature error estimate {err:.3g} exceeds {quad_tol:.3g}", achieved=err)
    return 0.5 * (1.0 / (c + 1.0) + val)


@dataclass(frozen=True)
class StabilityResult:
    M: float
    eps: float
    alpha: float
    margin: float
    condition_holds: bool


def stability_margin(M: float, eps: float = 0.0, quad_tol: float = QUAD_TOL) -> StabilityResult:
    """(1 - eps^(1/3)) M/(M+1) - alpha(M, eps)/(1 - eps); nonnegative means stable."""
    a = alpha_M(M, eps, quad_tol)
    margin = (1.0 - eps ** (1.0 / 3.0)) * M / (M + 1.0) - a / (1.0 - eps)
    return StabilityResult(M=float(M), eps=float(eps), alpha=a, margin=margin, condition_holds=bool(margin >= 0))


def critical_mass(eps: float = 0.0, tol: float = 1e-8, quad_tol: float = QUAD_TOL) -> tuple[float, tuple]:
    """Root of the stability margin in M by bisection; returns (M_star, final bracket)."""
    f = lambda M: stability_margin(M, eps, quad_tol).margin
    for lo, hi in BRACKETS:
        try:
            flo, fhi = f(lo), f(hi)
        except DomainError:
            continue
        if (flo < 0) != (fhi < 0):
            break
    else:
        raise BracketError(f"stability margin has no sign change on {BRACKETS} at eps = {eps!r}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi), (lo, hi)


def k_error(eps: float, mu_tilde: float) -> float:
    """eps^(-1/2) (eps^(-1/2) + sqrt(log mu~) + eps log mu~)."""
    if not eps > 0:
        raise DomainError(f"epsilon must be positive, got {eps!r}")
    if not mu_tilde > 1:
        raise DomainError(f"mu~ must exceed 1, got {mu_tilde!r}")
    lg = math.log(mu_tilde)
    r = 1.0 / math.sqrt(eps)
    return r * (r + math.sqrt(lg) + eps * lg)
