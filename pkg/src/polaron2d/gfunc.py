"""The function G(q, tau) on the lattice, its smoothed and truncated variants, and its continuum limit.

Units: hbar = 1 and fermion mass 1/2, so a fermion of momentum k has energy k^2.
G is dimensionless in these units.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError, ResourceLimitError
from .lattice import (
    LatticeSpec,
    _cached_indices,
    count_le,
    shell_table,
)

DEFAULT_K = 1e4
DEFAULT_MAX_MODES = 3_000_000
DEFAULT_C0 = 100.0


class UncertifiedWarning(UserWarning):
    """The closed-form continuum bound is only certified for mass ratio M > 1."""


@dataclass(frozen=True)
class PhysParams:
    """Mass ratio M, binding energy E_B < 0, Fermi energy mu and the box."""

    mass_ratio: float
    binding: float
    mu: float
    lattice: LatticeSpec
    c0: float = DEFAULT_C0

    def __post_init__(self):
        if not self.mass_ratio > 0:
            raise DomainError(f"mass ratio must be positive, got {self.mass_ratio!r}")
        if not self.binding < 0:
            raise DomainError(f"binding energy must be negative, got {self.binding!r}")
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu!r}")

    @classmethod
    def build(cls, mass_ratio, binding, mu, box, c0=DEFAULT_C0):
        return cls(float(mass_ratio), float(binding), float(mu), LatticeSpec(float(box)), c0)

    @classmethod
    def scaled(cls, mass_ratio, mu_tilde, l2eb, binding=-1.0, c0=DEFAULT_C0):
        """Parameters fixed by the dimensionless pair mu/|E_B| and L^2 |E_B|."""
        eb = abs(binding)
        return cls.build(mass_ratio, -eb, mu_tilde * eb, math.sqrt(l2eb / eb), c0)

    def with_box(self, box):
        return PhysParams(self.mass_ratio, self.binding, self.mu, LatticeSpec(float(box)), self.c0)

    @property
    def m(self) -> float:
        """(M + 1)/M."""
        return (self.mass_ratio + 1.0) / self.mass_ratio

    @property
    def eb(self) -> float:
        return -self.binding

    @property
    def mu_tilde(self) -> float:
        return self.mu / self.eb

    @property
    def log_mu_tilde(self) -> float:
        return math.log(self.mu_tilde)

    @property
    def l2eb(self) -> float:
        return self.lattice.box**2 * self.eb

    @property
    def wellcoupled(self) -> bool:
        return self.l2eb >= 1.0

    @property
    def asymptotic(self) -> bool:
        return self.mu_tilde >= self.c0

    @property
    def energy_scale(self) -> float:
        """m mu / log(mu~), or m mu when log(mu~) <= 1."""
        if self.mu_tilde > math.e:
            return self.m * self.mu / self.log_mu_tilde
        return self.m * self.mu

    @property
    def n_mu(self) -> int:
        """Index of the last filled shell: k^2 <= mu iff n <= n_mu."""
        return self.lattice.index_limit(self.mu)


@dataclass(frozen=True)
class GEvaluation:
    value: float
    cutoff_k2: float
    tail_correction: float
    tail_bound: float
    mode_count: int


def _check_tau(p: PhysParams, tau):
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(~(tau_arr > -p.mu)):
        raise DomainError(f"tau must exceed -mu = {-p.mu!r}, got {tau!r}")


def _as_q(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != 2:
        raise DomainError(f"q must be a 2-vector, got {q!r}")
    return q


# --- smoothed cutoff -------------------------------------------------------

def xi_mu(s, mu: float, mu_tilde: float):
    """Smooth step: 0 for s <= mu, 1 for s >= mu + mu/log(mu~), cosine ramp between."""
    if not mu_tilde > 1:
        raise DomainError(f"smoothed cutoff needs mu~ > 1, got {mu_tilde!r}")
    s = np.asarray(s, dtype=float)
    width = mu / math.log(mu_tilde)
    x = np.clip((s - mu) / width, 0.0, 1.0)
    out = 0.5 - 0.5 * np.cos(math.pi * x)
    return float(out) if out.ndim == 0 else out


def ramp_end(p: PhysParams) -> float:
    return p.mu + p.mu / p.log_mu_tilde


# --- analytic tail ---------------------------------------------------------

def tail_correction(p: PhysParams, q2, tau, r2):
    """Continuum integral of the G summand over |k|^2 > r2 (cutoff function equal to 1 there).

    Angular averaging of 1/D gives 1/sqrt(A^2 - b^2); the radial integral is elementary.
    """
    m, M, c = p.m, p.mass_ratio, p.eb
    q2 = np.asarray(q2, dtype=float)
    tau = np.asarray(tau, dtype=float)
    a = q2 / M + tau
    beta = 2.0 * m * a - 4.0 * q2 / M**2
    u = r2
    Q = m * m * u * u + beta * u + a * a
    sq = np.sqrt(Q)
    den = 4.0 * m * (m * u + c)
    diff = 2.0 * m * (beta * u + a * a) / (sq + m * u) + beta - 4.0 * m * c
    return np.log1p(diff / den) / (4.0 * math.pi * m)


def _tail_majorant(p: PhysParams, q2: float, tau: float):
    """Decreasing h(s) >= |symmetrized summand| for s >= mu."""
    m, M, c = p.m, p.mass_ratio, p.eb
    a = q2 / M + tau

    def h(s):
        h1 = abs(a - c) / ((m * s + c) * (m * s + a))
        if a > 0 and s < a / m:
            g = 1.0 / (4.0 * m * a)
        else:
            g = s / (m * s + a) ** 2
        return h1 + 4.0 * q2 / M**2 * g / (s + tau)
    return h


def tail_bound(p: PhysParams, q2: float, tau: float, r2: float) -> float:
    """Bound on the lattice tail beyond k^2 = r2, and on its continuum counterpart."""
    h = _tail_majorant(p, q2, tau)
    L = p.lattice.box
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        # s = r2 / t maps [r2, inf) onto (0, 1]
        area = integrate.quad(lambda t: h(r2 / t) * r2 / t**2, 0.0, 1.0, epsrel=1e-8, limit=200)[0]
        line = integrate.quad(lambda t: h(r2 / t) * math.sqrt(r2 / t) / t, 0.0, 1.0,
                              epsrel=1e-8, limit=200)[0]
    return (area / (4.0 * math.pi) + line / (math.pi * L)
            + (4.0 * math.sqrt(r2) / (math.pi * L) + 6.0 / L**2) * h(r2))


# --- lattice evaluation ----------------------------------------------------

def cutoff_index(p: PhysParams, K: float = DEFAULT_K, max_modes: int = DEFAULT_MAX_MODES,
                 required: float | None = None) -> int:
    """Shell index of the summation cutoff: k^2 <= K mu, shrunk to fit ``max_modes``."""
    spec = p.lattice
    required = p.mu if required is None else required
    n = spec.index_limit(K * p.mu)
    if count_le(n) > max_modes:
        lo, hi = 0, n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if count_le(mid) <= max_modes:
                lo = mid
            else:
                hi = mid
        n = lo
    r2 = spec.k2_unit * count_le(n) / math.pi
    if n <= p.n_mu or r2 < required:
        raise ResourceLimitError(
            f"cutoff k^2 = {spec.k2_unit * n:.6g} with {count_le(n)} modes does not reach "
            f"{required:.6g}; raise max_modes or K")
    return n


class LatticeG:
    """Shell-complete lattice sum for G at a fixed cutoff, reusable across (q, tau).

    ``weight`` is ``"sharp"`` for the step function chi_(mu, inf) or ``"smooth"``
    for the cosine ramp ``xi_mu``.
    """

    def __init__(self, p: PhysParams, nmax: int, weight: str = "sharp"):
        spec = p.lattice
        self.p = p
        self.nmax = nmax
        self.weight = weight
        x, y, n = _cached_indices(nmax)
        self.mode_count = int(n.size)
        kappa, k2u = spec.spacing, spec.k2_unit
        shells, mult = shell_table(nmax)
        self._const = float(np.sum(mult / (p.m * k2u * shells + p.eb)))
        out = n > p.n_mu
        self._kx = kappa * x[out]
        self._ky = kappa * y[out]
        self._k2 = k2u * n[out]
        if weight == "sharp":
            self._w = None
        elif weight == "smooth":
            self._w = xi_mu(self._k2, p.mu, p.mu_tilde)
        else:
            raise ValueError(f"unknown weight {weight!r}")
        self.cutoff_k2 = k2u * nmax
        # radius whose disc area matches the number of summed modes
        self.r2 = k2u * self.mode_count / math.pi

    def parts(self, q, tau: float) -> tuple[float, float]:
        """(lattice part, tail correction) of G(q, tau)."""
        p = self.p
        qx, qy = float(q[0]), float(q[1])
        D = ((qx - self._kx) ** 2 + (qy - self._ky) ** 2) / p.mass_ratio + self._k2 + tau
        inv = 1.0 / D
        if self._w is not None:
            inv *= self._w
        lattice = p.lattice.inv_area * (self._const - float(np.sum(inv)))
        tail = float(tail_correction(p, qx * qx + qy * qy, tau, self.r2))
        return lattice, tail

    def __call__(self, q, tau: float) -> float:
        lattice, tail = self.parts(q, tau)
        return lattice + tail


@lru_cache(maxsize=8)
def lattice_evaluator(p: PhysParams, nmax: int, weight: str = "sharp") -> LatticeG:
    return LatticeG(p, nmax, weight)


def _evaluate(p, q, tau, weight, K, max_modes, cutoff, tail_tol, required):
    q = _as_q(q)
    _check_tau(p, tau)
    if cutoff is None:
        nmax = cutoff_index(p, K, max_modes, required)
    else:
        nmax = p.lattice.index_limit(cutoff)
        if nmax <= p.n_mu or p.lattice.k2_unit * count_le(nmax) / math.pi < required:
            raise DomainError(f"cutoff {cutoff!r} does not clear the cutoff region ending at {required!r}")
    ev = lattice_evaluator(p, nmax, weight)
    lattice, tail = ev.parts(q, float(tau))
    bound = tail_bound(p, float(q @ q), float(tau), ev.r2)
    if tail_tol is not None and bound > tail_tol:
        raise ConvergenceError(f"tail bound {bound:.3g} exceeds tail_tol {tail_tol:.3g} at cutoff "
                               f"k^2 = {ev.cutoff_k2:.6g}")
    return GEvaluation(value=lattice + tail, cutoff_k2=ev.cutoff_k2, tail_correction=tail,
                       tail_bound=bound, mode_count=ev.mode_count)


def g_lattice(p: PhysParams, q, tau: float, *, K: float = DEFAULT_K,
              max_modes: int = DEFAULT_MAX_MODES, cutoff: float | None = None,
              tail_tol: float | None = None) -> GEvaluation:
    """G(q, tau) on the lattice: complete shells up to the cutoff plus the continuum tail.

    The cutoff is K*mu unless that needs more than ``max_modes`` lattice points, in
    which case it is lowered to fit; an explicit ``cutoff`` overrides both.
    """
    return _evaluate(p, q, tau, "sharp", K, max_modes, cutoff, tail_tol, p.mu)


def g_smoothed(p: PhysParams, q, tau: float, *, K: float = DEFAULT_K,
               max_modes: int = DEFAULT_MAX_MODES, cutoff: float | None = None,
               tail_tol: float | None = None) -> GEvaluation:
    """Like :func:`g_lattice` with the step at mu replaced by the cosine ramp ``xi_mu``."""
    if not p.mu_tilde > 1:
        raise DomainError(f"smoothed cutoff needs mu~ > 1, got {p.mu_tilde!r}")
    return _evaluate(p, q, tau, "smooth", K, max_modes, cutoff, tail_tol, ramp_end(p))


def ramp_shell_sum(p: PhysParams, q, tau: float) -> float:
    """L^-2 sum over mu < k^2 < ramp end of (1 - xi_mu(k^2)) / D; equals g_smoothed - g_lattice."""
    q = _as_q(q)
    _check_tau(p, tau)
    spec = p.lattice
    hi = spec.index_limit(ramp_end(p))
    x, y, n = _cached_indices(hi)
    sel = n > p.n_mu
    kx, ky, k2 = spec.spacing * x[sel], spec.spacing * y[sel], spec.k2_unit * n[sel]
    D = ((q[0] - kx) ** 2 + (q[1] - ky) ** 2) / p.mass_ratio + k2 + tau
    return spec.inv_area * float(np.sum((1.0 - xi_mu(k2, p.mu, p.mu_tilde)) / D))


def g_truncated(p: PhysParams, n: float, tau: float, *, mass: bool = False) -> float:
    """G^(n)(0, tau): the q = 0 sum restricted to k^2 <= n.

    With ``mass=False`` the kernel is 1/(k^2 - E_B) - chi/(k^2 + tau); with
    ``mass=True`` it is the q = 0 summand of G itself, 1/(m k^2 - E_B) - chi/(m k^2 + tau).
    """
    _check_tau(p, tau)
    if not n >= p.mu:
        raise DomainError(f"truncation n must be >= mu = {p.mu!r}, got {n!r}")
    spec = p.lattice
    shells, mult = shell_table(spec.index_limit(n))
    s = spec.k2_unit * shells
    c = p.m if mass else 1.0
    out = shells > p.n_mu
    terms = 1.0 / (c * s + p.eb)
    terms[out] -= 1.0 / (c * s[out] + tau)
    return spec.inv_area * float(np.sum(mult * terms))


def inverse_coupling(p: PhysParams, n: float) -> float:
    """g_n^-1 = sum over k^2 <= n of 1/(m k^2 - E_B)."""
    if not n >= 0:
        raise DomainError(f"n must be >= 0, got {n!r}")
    spec = p.lattice
    shells, mult = shell_table(spec.index_limit(n))
    return float(np.sum(mult / (p.m * spec.k2_unit * shells + p.eb)))


# --- continuum -------------------------------------------------------------

def f_kernel(p: PhysParams, s, tau):
    """Angular correction F(s, tau) of the continuum integral; 0 <= F <= 1 + 1/M for tau > -mu."""
    _check_tau(p, tau)
    M, m, mu = p.mass_ratio, p.m, p.mu
    s = np.asarray(s, dtype=float)
    tau = np.asarray(tau, dtype=float)
    a = s / M + tau + m * mu
    rad = 1.0 - 4.0 * s * mu / M**2 / a**2
    if np.any(rad < 0):
        raise DomainError(f"negative radicand in F (s={s!r}, tau={tau!r}, mu={mu!r})")
    # 1 - sqrt(rad) written without cancellation
    one_minus = (1.0 - rad) / (1.0 + np.sqrt(rad))
    out = a / (s / (M + 1.0) + tau + m * mu) * one_minus
    return float(out) if out.ndim == 0 else out


def g_continuum(p: PhysParams, q2, tau):
    """Thermodynamic-limit value of G(q, tau) at |q|^2 = q2 (independent of L)."""
    if p.mass_ratio <= 1:
        warnings.warn("continuum log bound is uncertified for M <= 1", UncertifiedWarning, stacklevel=2)
    q2 = np.asarray(q2, dtype=float)
    tau = np.asarray(tau, dtype=float)
    F = f_kernel(p, q2, tau)
    arg = (q2 / (p.mass_ratio + 1.0) + tau + p.m * p.mu) / p.eb
    if np.any(arg <= 0):
        raise DomainError("nonpositive log argument in the continuum formula")
    out = (np.log(arg) + np.log1p(-0.5 * np.asarray(F))) / (4.0 * math.pi * p.m)
    return float(out) if np.ndim(out) == 0 else out


def g_asymptote(p: PhysParams, q2, tau):
    """Leading logarithm (4 pi m)^-1 log((q^2/(M+1) + m mu + tau)/|E_B|)."""
    q2 = np.asarray(q2, dtype=float)
    out = np.log((q2 / (p.mass_ratio + 1.0) + p.m * p.mu + tau) / p.eb) / (4.0 * math.pi * p.m)
    return float(out) if np.ndim(out) == 0 else out


def asymptote_weight(p: PhysParams, tau):
    """(1 + mu/((mu + tau) log mu~))^3, the growth allowed in the asymptote error."""
    return (1.0 + p.mu / ((p.mu + np.asarray(tau, dtype=float)) * p.log_mu_tilde)) ** 3


@dataclass(frozen=True)
class PoissonRow:
    box: float
    g_lattice: float
    g_continuum: float
    residual: float
    scaled: float  # residual * (L^2 |E_B|)^(3/2)
    wellcoupled: bool


@dataclass(frozen=True)
class PoissonTable:
    rows: tuple

    @property
    def spread(self) -> float:
        """max/min of |scaled| over rows in the well-coupled regime."""
        vals = [abs(r.scaled) for r in self.rows if r.wellcoupled]
        if not vals or min(vals) == 0:
            return math.inf
        return max(vals) / min(vals)


def poisson_residual(p: PhysParams, q, tau: float, boxes, **kwargs) -> PoissonTable:
    """Lattice minus continuum G for each box side; rows with L^2 |E_B| < 1 are flagged."""
    q = _as_q(q)
    rows = []
    for L in boxes:
        pl = p.with_box(L)
        g = g_lattice(pl, q, tau, **kwargs).value
        gc = g_continuum(pl, float(q @ q), tau)
        res = g - gc
        rows.append(PoissonRow(box=float(L), g_lattice=g, g_continuum=gc, residual=res,
                               scaled=res * pl.l2eb**1.5, wellcoupled=pl.wellcoupled))
    return PoissonTable(rows=tuple(rows))
