"""Polaron equation, trial-state identity, perturbed polaron equation and the resulting energy bands."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, NoSolutionError, RegimeError, SingularError
from .gfunc import (
    DEFAULT_K,
    DEFAULT_MAX_MODES,
    PhysParams,
    cutoff_index,
    g_continuum,
    lattice_evaluator,
)
from .lattice import fermi_sea_energy, orbit_sizes, representatives, shell_table

KERNELS = ("lattice", "continuum", "auto")
# largest (hole representatives) x (summed modes) product for which "auto" uses the lattice kernel
AUTO_WORK = 2e7
SCAN_DECADES = (-6.0, 1.0)
SCAN_PER_DECADE = 8
MAX_BISECT = 400


def default_tol(p: PhysParams, e: float = 0.0) -> float:
    return 1e-10 * max(abs(e), p.energy_scale)


class HoleKernel:
    """G(k, tau) for every hole k with k^2 <= mu, grouped into symmetry classes with multiplicities.

    ``"lattice"`` evaluates the finite-box sum for one representative per dihedral orbit;
    ``"continuum"`` uses the closed-form thermodynamic limit, which depends on k only
    through k^2, over exact lattice hole shells.
    """

    def __init__(self, p: PhysParams, kernel: str = "auto", K: float = DEFAULT_K,
                 max_modes: int = DEFAULT_MAX_MODES):
        if kernel not in KERNELS:
            raise DomainError(f"kernel must be one of {KERNELS}, got {kernel!r}")
        self.p = p
        spec = p.lattice
        nmu = p.n_mu
        self.nmax = None
        if kernel == "auto":
            i, j = representatives(nmu)
            kernel = "continuum"
            try:
                nmax = cutoff_index(p, K, max_modes)
            except Exception:
                nmax = None
            if nmax is not None:
                ev = lattice_evaluator(p, nmax)
                if i.size * ev.mode_count <= AUTO_WORK:
                    kernel = "lattice"
        self.kernel = kernel
        if kernel == "lattice":
            i, j = representatives(nmu)
            self.qx = spec.spacing * i
            self.qy = spec.spacing * j
            self.mult = orbit_sizes(i, j).astype(float)
            self.k2 = spec.k2_unit * (i * i + j * j)
            self.nmax = cutoff_index(p, K, max_modes)
            self._ev = lattice_evaluator(p, self.nmax)
        else:
            shells, mult = shell_table(nmu)
            self.k2 = spec.k2_unit * shells
            self.mult = mult.astype(float)
            self.qx = np.sqrt(self.k2)
            self.qy = np.zeros_like(self.k2)
        self.evaluations = 0

    @property
    def hole_count(self) -> int:
        return int(self.mult.sum())

    def g_holes(self, tau) -> np.ndarray:
        """G(k, tau_k) for each hole class; ``tau`` is an array aligned with the classes."""
        self.evaluations += 1
        tau = np.asarray(tau, dtype=float)
        if self.kernel == "continuum":
            return np.asarray(g_continuum(self.p, self.k2, tau), dtype=float)
        return np.array([self._ev((x, y), t) for x, y, t in zip(self.qx, self.qy, tau)])

    def g_origin(self, tau) -> np.ndarray:
        """G(0, tau) at each entry of ``tau``."""
        self.evaluations += 1
        tau = np.asarray(tau, dtype=float)
        if self.kernel == "continuum":
            return np.asarray(g_continuum(self.p, np.zeros_like(tau), tau), dtype=float)
        return np.array([self._ev((0.0, 0.0), t) for t in tau])

    def polaron_terms(self, e: float) -> np.ndarray:
        """G(k, -k^2 - e) per hole class."""
        return self.g_holes(-self.k2 - e)


@dataclass(frozen=True)
class PolaronSolution:
    e_p: float
    residual: float
    bracket: tuple
    evaluations: int
    tol: float
    kernel: str
    hole_count: int
    inverse_sum: float  # sum over holes of |1/G_k|
    wellcoupled: bool
    asymptotic: bool
    poles: tuple = field(default=())


def _inverse_sum(hk: HoleKernel, e: float):
    g = hk.polaron_terms(e)
    if np.any(g == 0):
        raise SingularError(f"G(k, -k^2 - e) vanishes at e = {e!r}")
    inv = hk.mult / g
    return float(np.sum(inv)), float(np.sum(np.abs(inv))), g


def polaron_function(p: PhysParams, e: float, hk: HoleKernel | None = None) -> float:
    """h(e) = e + L^-2 sum over holes of 1/G(k, -k^2 - e); its zeros solve the polaron equation."""
    hk = hk or HoleKernel(p)
    s, _, _ = _inverse_sum(hk, e)
    return e + p.lattice.inv_area * s


def _bisect(fun, lo, flo, hi, fhi, tol, what):
    """Bisection on a verified sign change; returns (x, f(x), lo, hi, steps).

    Stops once |f| <= tol at a midpoint of a bracket no wider than tol, so the
    returned point is within tol/2 of a root as well as having a small residual.
    """
    steps = 0
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or steps >= MAX_BISECT:
            x, fx = (lo, flo) if abs(flo) <= abs(fhi) else (hi, fhi)
            if abs(fx) <= tol:
                return x, fx, lo, hi, steps
            raise ConvergenceError(f"{what}: bracket [{lo!r}, {hi!r}] exhausted with residual {fx!r} > tol {tol!r}")
        fm = fun(mid)
        steps += 1
        if abs(fm) <= tol and hi - lo <= tol:
            return mid, fm, lo, hi, steps
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm


def solve_polaron(p: PhysParams, tol: float | None = None, *, kernel: str = "auto",
                  K: float = DEFAULT_K, max_modes: int = DEFAULT_MAX_MODES,
                  per_decade: int = SCAN_PER_DECADE, hole_kernel: HoleKernel | None = None) -> PolaronSolution:
    """Lowest negative solution of e = -L^-2 sum_{k^2<=mu} 1/G(k, -k^2 - e).

    The root function is scanned on a logarithmic grid in |e| from the most negative
    end upward; the first sign change not caused by a pole of 1/G is refined by bisection.
    Since G(k, tau) is nondecreasing in tau, each G_k is monotone in e and a pole lies in
    an interval exactly when some G_k changes sign across it.
    """
    hk = hole_kernel or HoleKernel(p, kernel, K, max_modes)
    scale = p.energy_scale
    inv_area = p.lattice.inv_area
    tol_given = tol

    def evaluate(e):
        s, _, g = _inverse_sum(hk, e)
        return e + inv_area * s, g > 0

    lo_dec, hi_dec = SCAN_DECADES
    poles = []
    for _ in range(12):
        mags = scale * np.logspace(hi_dec, lo_dec, int(round((hi_dec - lo_dec) * per_decade)) + 1)
        grid = -mags  # increasing e
        h0, s0 = evaluate(grid[0])
        if h0 < 0 and np.all(s0):
            break
        hi_dec += 1.0
    else:
        raise NoSolutionError("root function is not negative at the most negative scan point",
                              diagnostics={"e": float(grid[0]), "h": float(h0)})

    def search(a, ha, sa, b, hb, sb, depth):
        if np.array_equal(sa, sb):
            if (ha < 0) != (hb < 0) or hb == 0:
                return a, ha, b, hb
            return None
        if depth > 60 or b - a <= 1e-15 * max(abs(a), abs(b)):
            poles.append((a, b))
            return None
        c = 0.5 * (a + b)
        hc, sc = evaluate(c)
        return search(a, ha, sa, c, hc, sc, depth + 1) or search(c, hc, sc, b, hb, sb, depth + 1)

    found = None
    a, ha, sa = grid[0], h0, s0
    history = [(float(a), float(ha))]
    for b in grid[1:]:
        hb, sb = evaluate(b)
        history.append((float(b), float(hb)))
        found = search(a, ha, sa, b, hb, sb, 0)
        if found:
            break
        a, ha, sa = b, hb, sb
    if not found:
        raise NoSolutionError("no sign change of the polaron root function on the scan grid",
                              diagnostics={"grid": history, "poles": poles})

    a, ha, b, hb = found
    fun = lambda e: evaluate(e)[0]
    if tol_given is None:
        tol = default_tol(p, a)
    e, res, lo, hi, _ = _bisect(fun, a, ha, b, hb, tol, "polaron equation")
    _, abs_sum, _ = _inverse_sum(hk, e)
    return PolaronSolution(e_p=float(e), residual=float(res), bracket=(float(lo), float(hi)),
                           evaluations=hk.evaluations, tol=float(tol), kernel=hk.kernel,
                           hole_count=hk.hole_count, inverse_sum=abs_sum,
                           wellcoupled=p.wellcoupled, asymptotic=p.asymptotic, poles=tuple(poles))


def asymptotic_polaron(p: PhysParams) -> tuple[float, float]:
    """Leading term -m mu/log(mu~) and the band scale mu/log(mu~)^2."""
    if not p.mu_tilde > 1:
        raise DomainError(f"asymptotic form needs mu~ > 1, got {p.mu_tilde!r}")
    lg = p.log_mu_tilde
    return -p.m * p.mu / lg, p.mu / lg**2


def trial_state_identity(p: PhysParams, e: float, *, kernel: str = "auto",
                         hole_kernel: HoleKernel | None = None, **kw) -> float:
    """sum_k 1/G_k * (1 + L^-2 sum_k 1/G_k / e) with G_k = G(k, -k^2 - e); zero at a polaron root."""
    if not e < 0:
        raise DomainError(f"e must be negative, got {e!r}")
    hk = hole_kernel or HoleKernel(p, kernel, **kw)
    s, _, _ = _inverse_sum(hk, e)
    return s * (1.0 + p.lattice.inv_area * s / e)


def upper_bound_energy(p: PhysParams, solution: PolaronSolution | None = None, **kw) -> float:
    """E_0(mu) + e_P, an upper bound on the interacting ground-state energy."""
    sol = solution or solve_polaron(p, **kw)
    return fermi_sea_energy(p.lattice, p.mu) + sol.e_p


@dataclass(frozen=True)
class PerturbedSolution:
    lam: float
    r: float
    gap: float  # E_0 + e_P - lambda
    residual: float
    e_p: float
    e0: float
    bracket: tuple
    kernel: str

    @property
    def gap_scaled(self) -> float:
        return self.gap / abs(self.e_p)


def solve_perturbed(p: PhysParams, r: float, tol: float | None = None, *, kernel: str = "auto",
                    polaron: PolaronSolution | None = None, K: float = DEFAULT_K,
                    max_modes: int = DEFAULT_MAX_MODES,
                    hole_kernel: HoleKernel | None = None) -> PerturbedSolution:
    """Solve E_0 - lambda = L^-2 sum_{k^2<=mu} 1/(G(0, E_0 - lambda - k^2) - r) for lambda <= E_0 + e_P.

    Works in w = E_0 - lambda >= |e_P|. The right side is decreasing in w wherever
    G(0, .) > r, so the root is unique once it is bracketed.
    """
    if not r >= 0:
        raise DomainError(f"r must be >= 0, got {r!r}")
    hk = hole_kernel or HoleKernel(p, kernel, K, max_modes)
    sol = polaron or solve_polaron(p, hole_kernel=hk)
    e0 = fermi_sea_energy(p.lattice, p.mu)
    w0 = -sol.e_p
    inv_area = p.lattice.inv_area
    k2, mult = hk.k2, hk.mult
    # G(0, w - k^2) depends on k only through k^2
    k2u, inv = np.unique(k2, return_inverse=True)
    mu_w = np.bincount(inv, weights=mult)

    def phi(w):
        den = hk.g_origin(w - k2u) - r
        if np.any(den <= 0):
            raise RegimeError(f"G(0, tau) - r <= 0 for r = {r!r} at min denominator {den.min():.6g}; "
                              f"mu~ = {p.mu_tilde:.6g} is too small for this r")
        return w - inv_area * float(np.sum(mu_w / den))

    f0 = phi(w0)
    if tol is None:
        tol = default_tol(p, w0)
    if f0 > tol:
        raise NoSolutionError(f"no solution with lambda <= E_0 + e_P: root function is {f0:.6g} > 0 there",
                              diagnostics={"w": w0, "phi": f0})
    if abs(f0) <= tol:
        w, res, lo, hi = w0, f0, w0, w0
    else:
        step = 100.0 * p.energy_scale
        hi = w0 + step
        fhi = phi(hi)
        for _ in range(60):
            if fhi > 0:
                break
            step *= 2.0
            hi = w0 + step
            fhi = phi(hi)
        else:
            raise NoSolutionError("perturbed root function never turned positive", diagnostics={"w": hi, "phi": fhi})
        w, res, lo, hi, _ = _bisect(phi, w0, f0, hi, fhi, tol, "perturbed polaron equation")
    w = max(w, w0)
    lam = e0 - w
    return PerturbedSolution(lam=float(lam), r=float(r), gap=float(w - w0), residual=float(res),
                             e_p=sol.e_p, e0=float(e0), bracket=(float(e0 - hi), float(e0 - lo)),
                             kernel=hk.kernel)


def theorem_band(p: PhysParams, e_p: float) -> tuple[float, float, bool]:
    """(E_0 + e_P, |e_P|/log mu~, regime flag): window for the ground-state energy up to a constant."""
    if not p.mu_tilde > 1:
        raise DomainError(f"band needs mu~ > 1, got {p.mu_tilde!r}")
    center = fermi_sea_energy(p.lattice, p.mu) + e_p
    return center, abs(e_p) / p.log_mu_tilde, bool(p.wellcoupled and p.asymptotic)
