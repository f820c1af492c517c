"""Independent reference implementations used by the tests.

Nothing here imports the package: each oracle recomputes its quantity from scratch
with plain loops, brute-force grids or generic quadrature.
"""
import math

import numpy as np
from scipy import integrate


def lattice_points(L, cutoff):
    """All (kx, ky) in (2 pi/L) Z^2 with k^2 <= cutoff, via a full square scan."""
    kappa = 2 * math.pi / L
    R = int(math.sqrt(cutoff) / kappa) + 1
    i = np.arange(-R, R + 1)
    X, Y = np.meshgrid(i, i, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    n = X * X + Y * Y
    keep = kappa**2 * n <= cutoff * (1 + 1e-12)
    return kappa * X[keep], kappa * Y[keep]


def g_brute(M, eb, mu, L, q, tau, cutoff):
    """Plain truncated sum for G(q, tau) with |k|^2 <= cutoff, no tail."""
    m = (M + 1) / M
    kx, ky = lattice_points(L, cutoff)
    k2 = kx**2 + ky**2
    first = np.sum(1.0 / (m * k2 + eb))
    out = k2 > mu * (1 + 1e-12)
    D = ((q[0] - kx[out]) ** 2 + (q[1] - ky[out]) ** 2) / M + k2[out] + tau
    return (first - np.sum(1.0 / D)) / L**2


def g_richardson(M, eb, mu, L, q, tau, cutoffs=(1e3, 1e4, 1e5)):
    """Truncated sums extrapolated assuming an error proportional to 1/cutoff."""
    v = [g_brute(M, eb, mu, L, q, tau, c) for c in cutoffs]
    c1, c2 = cutoffs[-2], cutoffs[-1]
    return (c2 * v[-1] - c1 * v[-2]) / (c2 - c1), v


def g_continuum_quad(M, eb, mu, q2, tau):
    """(2 pi)^-2 times the plane integral of 1/(m k^2 + |E_B|) - chi(k^2 > mu)/D, nested polar quadrature."""
    m = (M + 1) / M
    q = math.sqrt(q2)

    def angular(k):
        f = lambda th: 1.0 / ((q * q - 2 * q * k * math.cos(th) + k * k) / M + k * k + tau)
        return 2.0 * integrate.quad(f, 0.0, math.pi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]

    inner = integrate.quad(lambda k: 2 * math.pi * k / (m * k * k + eb), 0.0, math.sqrt(mu),
                           epsabs=1e-14, epsrel=1e-12)[0]
    kf = math.sqrt(mu)
    outer_f = lambda k: k * (2 * math.pi / (m * k * k + eb) - angular(k))
    mid = integrate.quad(outer_f, kf, 30 * kf, epsabs=1e-13, epsrel=1e-11, limit=400)[0]
    far = integrate.quad(outer_f, 30 * kf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)[0]
    return (inner + mid + far) / (4 * math.pi**2)


def beta_direct(u, eps, M):
    s = math.sqrt(eps)
    A = M + 1 - u
    P = M * (M + 2)
    return min(1.0, A * (M + 2) * (1 - (1 + A / P) * s) / (A * (1 - 2 * s) + P * (1 - s)))


def alpha_composite(M, n=10_000):
    """alpha(M, 0) by composite Gauss-Legendre on [0, 1/(M+1)] and [1/(M+1), 1] (the beta kink)."""
    kink = 1.0 / (M + 1)
    x, w = np.polynomial.legendre.leggauss(8)
    total = 0.0
    for a, b, panels in ((0.0, kink, n // 16), (kink, 1.0, n // 16)):
        edges = np.linspace(a, b, panels + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            vals = [1.0 / (beta_direct(t, 0.0, M) * (M + 1 - t)) for t in u]
            total += 0.5 * (hi - lo) * float(np.dot(w, vals))
    return 0.5 * (1.0 / (M + 1) + total)


def dense_scan_root(f, lo, hi, n=20_000, tol=1e-13, ok=None):
    """Lowest sign change of f on a uniform grid, refined by bisection.

    ``ok(x)`` rejects grid cells that straddle a discontinuity: a cell is used only if
    ``ok`` returns the same value at both ends.
    """
    xs = np.linspace(lo, hi, n)
    fs = [f(x) for x in xs]
    for a, b, fa, fb in zip(xs[:-1], xs[1:], fs[:-1], fs[1:]):
        if ok is not None and ok(a) != ok(b):
            continue
        if fa == 0:
            return a
        if (fa < 0) != (fb < 0):
            while b - a > tol:
                c = 0.5 * (a + b)
                fc = f(c)
                if (fc < 0) == (fa < 0):
                    a, fa = c, fc
                else:
                    b = c
            return 0.5 * (a + b)
    return None


_SHELLS = None


def single_mode_g0(tau, cutoffs=(10_000, 100_000)):
    """G(0, tau) for M = 2, E_B = -1, mu = 0.5, L = 2 pi (only k = 0 is filled).

    Shell counts come from a brute-force square scan; the truncated sums are
    extrapolated in the cutoff as in ``g_richardson``.
    """
    global _SHELLS
    if _SHELLS is None:
        nmax = cutoffs[-1]
        i = np.arange(-math.isqrt(nmax), math.isqrt(nmax) + 1)
        n = (i[:, None] ** 2 + i[None, :] ** 2).ravel()
        _SHELLS = np.bincount(n[n <= nmax], minlength=nmax + 1)
    vals = []
    for c in cutoffs:
        r = _SHELLS[: c + 1]
        n = np.arange(c + 1, dtype=float)
        vals.append((np.sum(r / (1.5 * n + 1.0)) - np.sum(r[1:] / (1.5 * n[1:] + tau))) / (4 * math.pi**2))
    c1, c2 = cutoffs
    return (c2 * vals[1] - c1 * vals[0]) / (c2 - c1)
