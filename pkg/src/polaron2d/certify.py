"""Batteries of bound checks with fitted constants, shared by the CLI and the acceptance tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Polaron2DError
from .gfunc import PhysParams, asymptote_weight, g_asymptote, g_lattice, poisson_residual
from .lattice import LatticeSpec, count_le, shell_count_bound, sum_integral_certificate
from .polaron import HoleKernel, asymptotic_polaron, solve_perturbed, solve_polaron

LEMMA31_MU_TILDE = (1e3, 1e5)
LEMMA31_L2EB = (1.0, 100.0)
LEMMA31_Q2 = (0.0, 0.25, 1.0)        # in units of mu
LEMMA31_TAU = (-0.5, 0.0, 1.0, 10.0)  # in units of mu
LEMMA32_MU_TILDE = (1e3, 1e4, 1e5, 1e6)
LEMMA43_MU_TILDE = (1e4, 1e5, 1e6)
LEMMA43_R = (0.0, 37.0)
POISSON_BOXES = (10.0, 20.0, 40.0)
BAND_FACTOR = 3.0
POISSON_FACTOR = 10.0


@dataclass
class SuiteReport:
    suite: str
    cases: int = 0
    failed: int = 0
    fitted_constant: float = math.nan
    detail: str = ""
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and self.failed == 0


def monotone_family(rng: np.random.Generator):
    """A random nonnegative nonincreasing integrable function with a label."""
    if rng.random() < 0.5:
        a = rng.uniform(0.1, 5.0)
        pw = rng.uniform(1.2, 4.0)
        c = rng.uniform(0.1, 10.0)
        return (lambda s, a=a, pw=pw, c=c: c / (np.asarray(s) + a) ** pw), f"{c:.3g}/(s+{a:.3g})^{pw:.3g}"
    b = rng.uniform(0.05, 3.0)
    c = rng.uniform(0.1, 10.0)
    return (lambda s, b=b, c=c: c * np.exp(-b * np.asarray(s))), f"{c:.3g}exp(-{b:.3g}s)"


def suite_lemma_a1(seed: int = 0, n: int = 100) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("lemmaA1")
    worst = 0.0
    for _ in range(n):
        f, label = monotone_family(rng)
        m = 0.0 if rng.random() < 0.3 else rng.uniform(0.0, 5.0)
        L = rng.uniform(2.0, 20.0)
        cert = sum_integral_certificate(f, m, LatticeSpec(L))
        rep.cases += 1
        rep.failed += not cert.holds
        if cert.bound > 0:
            worst = max(worst, abs(cert.lattice_sum - cert.integral) / cert.bound)
        rep.rows.append((label, m, L, cert.holds))
    rep.fitted_constant = worst
    rep.detail = "max |sum - integral| / bound"
    return rep


def suite_shell31(seed: int = 0, n: int = 100, max_modes: int = 100_000) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("shell31")
    worst = 0.0
    while rep.cases < n:
        L = rng.uniform(1.0, 50.0)
        mu = rng.uniform(0.01, 50.0)
        a = rng.uniform(0.0, 3.0)
        b = a + rng.uniform(0.01, 3.0)
        spec = LatticeSpec(L)
        if count_le(spec.index_limit(b * mu)) > max_modes:
            continue
        cert = shell_count_bound(spec, a, b, mu)
        rep.cases += 1
        rep.failed += not cert.holds
        worst = max(worst, abs(cert.count_density - cert.reference) / cert.bound)
        rep.rows.append((a, b, L, mu, cert.holds))
    rep.fitted_constant = worst
    rep.detail = "max |density - reference| / bound"
    return rep


def lemma31_scan(mass_ratio: float = 2.0, mu_tildes=LEMMA31_MU_TILDE, l2ebs=LEMMA31_L2EB,
                 q2s=LEMMA31_Q2, taus=LEMMA31_TAU) -> dict:
    """Max over the (q, tau) grid of the weighted distance to the leading logarithm, per (mu~, L^2|E_B|)."""
    out = {}
    for l2eb in l2ebs:
        for mt in mu_tildes:
            p = PhysParams.scaled(mass_ratio, mt, l2eb)
            worst = 0.0
            for q2 in q2s:
                for t in taus:
                    tau = t * p.mu
                    g = g_lattice(p, [math.sqrt(q2 * p.mu), 0.0], tau).value
                    d = abs(g - g_asymptote(p, q2 * p.mu, tau)) / asymptote_weight(p, tau)
                    worst = max(worst, d)
            out[(mt, l2eb)] = worst
    return out


def suite_lemma31(**kw) -> SuiteReport:
    scan = lemma31_scan(**kw)
    rep = SuiteReport("lemma31")
    rep.cases = len(scan)
    rep.failed = sum(not math.isfinite(v) for v in scan.values())
    rep.fitted_constant = max(scan.values())
    rep.rows = [(mt, l2eb, v) for (mt, l2eb), v in scan.items()]
    mts = sorted({k[0] for k in scan})
    growth = max(scan[(mts[-1], l)] for _, l in scan) / max(scan[(mts[0], l)] for _, l in scan)
    rep.detail = f"max weighted discrepancy; growth from mu~={mts[0]:g} to {mts[-1]:g}: {growth:.4g}"
    return rep


def lemma32_scan(mass_ratio: float = 2.0, l2eb: float = 100.0, mu_tildes=LEMMA32_MU_TILDE):
    rows = []
    for mt in mu_tildes:
        p = PhysParams.scaled(mass_ratio, mt, l2eb)
        hk = HoleKernel(p, "continuum")
        sol = solve_polaron(p, hole_kernel=hk)
        lead, band = asymptotic_polaron(p)
        rows.append((p, hk, sol, abs(sol.e_p - lead) / band))
    return rows


def suite_lemma32(**kw) -> SuiteReport:
    rows = lemma32_scan(**kw)
    vals = [r[3] for r in rows]
    rep = SuiteReport("lemma32", cases=len(vals))
    spread = max(vals) / min(vals)
    rep.failed = int(not spread <= BAND_FACTOR)
    rep.fitted_constant = max(vals)
    rep.rows = [(r[0].mu_tilde, r[2].e_p, r[3]) for r in rows]
    rep.detail = f"max |e_p - leading| (log mu~)^2/mu; spread {spread:.4g} (limit {BAND_FACTOR:g})"
    return rep


def lemma43_scan(mass_ratio: float = 2.0, l2eb: float = 100.0, mu_tildes=LEMMA43_MU_TILDE, rs=LEMMA43_R):
    rows = []
    for mt in mu_tildes:
        p = PhysParams.scaled(mass_ratio, mt, l2eb)
        hk = HoleKernel(p, "continuum")
        sol = solve_polaron(p, hole_kernel=hk)
        for r in rs:
            try:
                ps = solve_perturbed(p, r, polaron=sol, hole_kernel=hk)
                scaled = ps.gap * p.log_mu_tilde / ((1.0 + r) * abs(sol.e_p))
                rows.append((mt, r, ps, scaled, ""))
            except Polaron2DError as exc:
                rows.append((mt, r, None, math.nan, f"{type(exc).__name__}: {exc}"))
    return rows


def suite_lemma43(**kw) -> SuiteReport:
    rows = lemma43_scan(**kw)
    rep = SuiteReport("lemma43", cases=len(rows))
    bad = [r for r in rows if r[2] is None or not math.isfinite(r[3])
           or not r[2].lam <= r[2].e0 + r[2].e_p]
    rep.failed = len(bad)
    ok = [r[3] for r in rows if r[2] is not None]
    rep.fitted_constant = max(ok) if ok else math.nan
    rep.rows = [(r[0], r[1], r[3], r[4]) for r in rows]
    rep.detail = "max gap log(mu~)/((1+r)|e_p|)"
    if bad:
        rep.detail += f"; first failure at mu~={bad[0][0]:g}, r={bad[0][1]:g}: {bad[0][4]}"
    return rep


def suite_poisson(boxes=POISSON_BOXES) -> SuiteReport:
    p = PhysParams.build(2.0, -1.0, 1.0, boxes[0])
    table = poisson_residual(p, [0.0, 0.0], 1.0, boxes)
    rep = SuiteReport("poisson", cases=len(table.rows))
    rep.failed = int(not table.spread < POISSON_FACTOR)
    rep.fitted_constant = max(abs(r.scaled) for r in table.rows)
    rep.rows = [(r.box, r.residual, r.scaled) for r in table.rows]
    rep.detail = f"max |residual| (L^2|E_B|)^1.5; spread {table.spread:.4g} (limit {POISSON_FACTOR:g})"
    return rep


SUITES = {
    "lemmaA1": suite_lemma_a1,
    "shell31": suite_shell31,
    "lemma31": suite_lemma31,
    "lemma32": suite_lemma32,
    "lemma43": suite_lemma43,
    "poisson": suite_poisson,
}
SEEDED = ("lemmaA1", "shell31")


def run_suite(name: str, seed: int = 0) -> SuiteReport:
    fn = SUITES[name]
    return fn(seed=seed) if name in SEEDED else fn()
