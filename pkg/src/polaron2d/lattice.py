"""Momentum lattice kappa*Z^2: enumeration, shell counts and sum-vs-integral certificates.

All shell membership decisions are made on the integer ``n = i^2 + j^2`` of a
lattice point ``k = kappa*(i, j)``, so ``k^2 = kappa^2 * n`` never has to be
compared in floating point.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import (
    ContractViolation,
    DivergenceError,
    DomainError,
    PreconditionError,
    ResourceLimitError,
)

DEFAULT_MODE_CAP = 10**8
# relative slack used to decide that a real threshold sits exactly on a shell
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Square box of side ``box``; momenta live on ``spacing * Z^2``."""

    box: float

    def __post_init__(self):
        if not (math.isfinite(self.box) and self.box > 0):
            raise DomainError(f"box side must be positive and finite, got {self.box!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.box

    @property
    def k2_unit(self) -> float:
        """kappa^2, the energy of the first nonzero shell."""
        return self.spacing**2

    @property
    def inv_area(self) -> float:
        return 1.0 / self.box**2

    def index_limit(self, energy: float) -> int:
        """Largest integer n with kappa^2 n <= energy (ties included)."""
        return shell_limit(energy / self.k2_unit)


def shell_limit(x: float) -> int:
    """Largest integer n with n <= x, treating near-integers as exact."""
    if x < 0:
        return -1
    near = round(x)
    if abs(x - near) <= TIE_RTOL * max(1.0, abs(x)):
        return int(near)
    return int(math.floor(x))


def strict_limit(x: float) -> int:
    """Largest integer n with n < x, treating near-integers as exact."""
    if x <= 0:
        return -1
    near = round(x)
    if abs(x - near) <= TIE_RTOL * max(1.0, abs(x)):
        return int(near) - 1
    return int(math.floor(x))


def isqrt_array(a) -> np.ndarray:
    """Exact floor(sqrt(a)) for a nonnegative int64 array."""
    a = np.asarray(a, dtype=np.int64)
    r = np.floor(np.sqrt(a.astype(np.float64))).astype(np.int64)
    for _ in range(2):
        r = np.where((r + 1) * (r + 1) <= a, r + 1, r)
        r = np.where(r * r > a, r - 1, r)
    return r


def count_le(nmax: int) -> int:
    """Number of integer points (i, j) with i^2 + j^2 <= nmax."""
    if nmax < 0:
        return 0
    R = math.isqrt(nmax)
    i = np.arange(-R, R + 1, dtype=np.int64)
    J = isqrt_array(nmax - i * i)
    return int(np.sum(2 * J + 1))


def sum_n_le(nmax: int) -> int:
    """Sum of i^2 + j^2 over integer points with i^2 + j^2 <= nmax."""
    if nmax < 0:
        return 0
    R = math.isqrt(nmax)
    i = np.arange(-R, R + 1, dtype=np.int64)
    J = isqrt_array(nmax - i * i)
    rows = (2 * J + 1) * i * i + J * (J + 1) * (2 * J + 1) // 3
    return int(sum(int(v) for v in rows))


def representatives(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Points (i, j) with 0 <= j <= i and i^2 + j^2 <= nmax, ordered by i then j."""
    if nmax < 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    R = math.isqrt(nmax)
    i = np.arange(R + 1, dtype=np.int64)
    jmax = np.minimum(i, isqrt_array(nmax - i * i))
    counts = jmax + 1
    ii = np.repeat(i, counts)
    starts = np.cumsum(counts) - counts
    jj = np.arange(ii.size, dtype=np.int64) - np.repeat(starts, counts)
    return ii, jj


def orbit_sizes(i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Size of the dihedral (8-fold) orbit of each representative."""
    size = np.full(i.shape, 8, dtype=np.int64)
    size[(j == 0) | (i == j)] = 4
    size[i == 0] = 1
    return size


def expand_orbits(i: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All lattice points in the orbits of the given representatives, unsorted."""
    origin = i == 0
    axis = (j == 0) & (i > 0)
    diag = (i == j) & (i > 0)
    gen = (j > 0) & (i > j)
    a, d, g = i[axis], i[diag], (i[gen], j[gen])
    zero = np.zeros(int(origin.sum()), dtype=np.int64)
    xs = [zero, a, -a, 0 * a, 0 * a, d, -d, d, -d]
    ys = [zero, 0 * a, 0 * a, a, -a, d, d, -d, -d]
    gi, gj = g
    for sx, sy, swap in [(1, 1, 0), (-1, 1, 0), (1, -1, 0), (-1, -1, 0),
                         (1, 1, 1), (-1, 1, 1), (1, -1, 1), (-1, -1, 1)]:
        if swap:
            xs.append(sx * gj)
            ys.append(sy * gi)
        else:
            xs.append(sx * gi)
            ys.append(sy * gj)
    return np.concatenate(xs), np.concatenate(ys)


def lattice_indices(nmax: int, cap: int = DEFAULT_MODE_CAP) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer points with i^2 + j^2 <= nmax sorted by (n, i, j).

    Returns ``(i, j, n)``.
    """
    total = count_le(nmax)
    if total > cap:
        raise ResourceLimitError(f"{total} lattice points exceed the mode cap {cap}")
    x, y = expand_orbits(*representatives(nmax))
    n = x * x + y * y
    order = np.lexsort((y, x, n))
    return x[order], y[order], n[order]


@lru_cache(maxsize=8)
def _cached_indices(nmax: int):
    x, y, n = lattice_indices(nmax, cap=np.iinfo(np.int64).max)
    for arr in (x, y, n):
        arr.setflags(write=False)
    return x, y, n


@lru_cache(maxsize=16)
def shell_table(nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct shells n <= nmax that contain lattice points, with multiplicities r2(n)."""
    i, j = representatives(nmax)
    n = i * i + j * j
    w = orbit_sizes(i, j)
    order = np.argsort(n, kind="stable")
    n, w = n[order], w[order]
    if n.size == 0:
        return n, w
    starts = np.flatnonzero(np.r_[True, n[1:] != n[:-1]])
    values = n[starts]
    mult = np.add.reduceat(w, starts)
    values.setflags(write=False)
    mult.setflags(write=False)
    return values, mult


def enumerate_modes(spec: LatticeSpec, cutoff: float, cap: int = DEFAULT_MODE_CAP) -> np.ndarray:
    """All k in kappa*Z^2 with k^2 <= cutoff, as an (N, 2) array ordered by k^2 then lexicographically."""
    if not cutoff >= 0:
        raise PreconditionError(f"cutoff must be >= 0, got {cutoff!r}")
    i, j, _ = lattice_indices(spec.index_limit(cutoff), cap=cap)
    return spec.spacing * np.column_stack([i, j]).astype(np.float64)


def count_modes(spec: LatticeSpec, mu: float) -> int:
    """N(mu): number of lattice momenta with k^2 <= mu (the origin always counts)."""
    if not mu > 0:
        raise PreconditionError(f"mu must be positive, got {mu!r}")
    return count_le(spec.index_limit(mu))


def fermi_sea_energy(spec: LatticeSpec, mu: float) -> float:
    """E_0(mu) = sum of k^2 over the filled Fermi sea."""
    if not mu > 0:
        raise PreconditionError(f"mu must be positive, got {mu!r}")
    return spec.k2_unit * sum_n_le(spec.index_limit(mu))


@dataclass(frozen=True)
class ShellSum:
    lower: float
    upper: float
    value: float
    mode_count: int


def shell_sum(spec: LatticeSpec, a: float, b: float, f: Callable | None = None) -> ShellSum:
    """L^-2 * sum of f(k^2) over the half-open shell a <= k^2 < b (f defaults to 1)."""
    if not (b > a >= 0):
        raise PreconditionError(f"need b > a >= 0, got a={a!r}, b={b!r}")
    lo = strict_limit(a / spec.k2_unit)
    hi = strict_limit(b / spec.k2_unit)
    count = count_le(hi) - count_le(lo)
    if f is None:
        value = count * spec.inv_area
    else:
        n, mult = shell_table(hi)
        sel = n > lo
        value = spec.inv_area * float(np.sum(mult[sel] * np.asarray(f(spec.k2_unit * n[sel]), dtype=float)))
    return ShellSum(lower=a, upper=b, value=value, mode_count=count)


# --- sum-vs-integral certificates ------------------------------------------

@dataclass(frozen=True)
class SumIntegralCertificate:
    lattice_sum: float
    integral: float
    bound: float
    holds: bool
    truncation_error: float  # rigorous bound on the unsummed lattice tail
    cutoff: float


def _vectorize(f):
    def g(s):
        s = np.asarray(s, dtype=float)
        try:
            out = np.asarray(f(s), dtype=float)
            if out.shape == s.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(f(float(x))) for x in s.ravel()]).reshape(s.shape)
    return g


def _check_monotone(f, m: float, scale: float):
    s = m + np.concatenate([[0.0], scale * np.geomspace(1e-6, 1e8, 400)])
    v = f(s)
    if not np.all(np.isfinite(v)):
        raise ContractViolation("f is not finite on the sampled range")
    tol = 1e-12 * max(1.0, float(np.max(np.abs(v))))
    if np.any(v < -tol):
        raise ContractViolation("f takes negative values")
    if np.any(np.diff(v) > tol):
        k = int(np.argmax(np.diff(v)))
        raise ContractViolation(f"f is not monotone decreasing near s={s[k]:.6g}")


def _tail_integral(func, lo: float, what: str) -> float:
    """int_lo^inf func(s) ds, raising DivergenceError if it does not settle."""
    # s = lo + w u/(1-u) keeps the decay scale of func comparable to w = max(lo, 1)
    w = max(lo, 1.0)

    def mapped(u):
        return func(lo + w * u / (1.0 - u)) * w / (1.0 - u) ** 2 if u < 1.0 else 0.0

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(mapped, 0.0, 1.0, epsabs=1e-14, epsrel=1e-11,
                                        limit=400, full_output=1)[:3]
    if not np.isfinite(val) or err > 1e-6 * abs(val) + 1e-12:
        raise DivergenceError(f"{what} does not converge (estimate {val:.3g} +- {err:.3g})")
    return val


def sum_integral_certificate(f: Callable, m: float, spec: LatticeSpec,
                             rel_truncation: float = 1e-3,
                             max_modes: int = 4_000_000) -> SumIntegralCertificate:
    """Check the sum-vs-integral estimate for a nonnegative decreasing f on [m, inf).

    ``lattice_sum`` is L^-2 sum_{k^2 >= m} f(k^2), summed exactly over shells up to a
    cutoff and completed by the continuum tail; ``truncation_error`` bounds the
    difference between that completion and the true lattice tail. ``holds`` is
    decided conservatively, i.e. with ``truncation_error`` added to the discrepancy.
    For m == 0 the bound is 2/(pi L) int f(t^2) dt + 3 f(0)/L^2, otherwise
    2/(pi L) int_{sqrt m} f(t^2) dt + (4 sqrt(m)/(pi L) + 6/L^2) f(m).
    """
    if not m >= 0:
        raise PreconditionError(f"m must be >= 0, got {m!r}")
    f = _vectorize(f)
    L = spec.box
    _check_monotone(f, m, max(m, spec.k2_unit))

    def area(s):
        return float(f(np.array([s]))[0])

    integral = _tail_integral(area, m, "int f") / (4.0 * math.pi)
    line = _tail_integral(lambda t: float(f(np.array([t * t]))[0]), math.sqrt(m), "int f(t^2) dt")
    f_m = float(f(np.array([m]))[0])
    if m == 0:
        bound = 2.0 / (math.pi * L) * line + 3.0 * f_m / L**2
    else:
        bound = 2.0 / (math.pi * L) * line + (4.0 * math.sqrt(m) / (math.pi * L) + 6.0 / L**2) * f_m

    lo = strict_limit(m / spec.k2_unit)  # shells strictly below m are excluded
    n_cut = max(2 * (lo + 1), 1024)
    while True:
        S = spec.k2_unit * (n_cut + 1)  # smallest shell energy not summed
        tail = _tail_integral(area, S, "tail of f") / (4.0 * math.pi)
        line_tail = _tail_integral(lambda t: float(f(np.array([t * t]))[0]), math.sqrt(S), "tail")
        f_S = float(f(np.array([S]))[0])
        trunc = 2.0 / (math.pi * L) * line_tail + (4.0 * math.sqrt(S) / (math.pi * L) + 6.0 / L**2) * f_S
        small = tail + trunc <= rel_truncation * bound
        if small or count_le(2 * n_cut) > max_modes:
            break
        n_cut *= 2
    n, mult = shell_table(n_cut)
    sel = n > lo
    partial = spec.inv_area * float(np.sum(mult[sel] * f(spec.k2_unit * n[sel])))
    lattice_sum = partial + tail
    holds = abs(lattice_sum - integral) + trunc <= bound
    return SumIntegralCertificate(lattice_sum=lattice_sum, integral=integral, bound=bound,
                                  holds=bool(holds), truncation_error=trunc,
                                  cutoff=spec.k2_unit * n_cut)


@dataclass(frozen=True)
class ShellCountCertificate:
    count_density: float
    reference: float
    bound: float
    holds: bool
    mode_count: int


def shell_count_bound(spec: LatticeSpec, a: float, b: float, mu: float) -> ShellCountCertificate:
    """Compare L^-2 #{a mu <= k^2 < b mu} with (b - a) mu / (4 pi).

    The admissible deviation is 2/(pi L) (sqrt(a mu) + sqrt(b mu)) + 6/L^2.
    """
    if not (b > a >= 0):
        raise PreconditionError(f"need b > a >= 0, got a={a!r}, b={b!r}")
    if not mu > 0:
        raise PreconditionError(f"mu must be positive, got {mu!r}")
    L = spec.box
    shell = shell_sum(spec, a * mu, b * mu)
    reference = (b - a) * mu / (4.0 * math.pi)
    bound = 2.0 / (math.pi * L) * (math.sqrt(a * mu) + math.sqrt(b * mu)) + 6.0 / L**2
    holds = abs(shell.value - reference) <= bound
    return ShellCountCertificate(count_density=shell.value, reference=reference, bound=bound,
                                 holds=bool(holds), mode_count=shell.mode_count)
