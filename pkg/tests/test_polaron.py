import math

import numpy as np
import pytest

from oracles import dense_scan_root, g_richardson, single_mode_g0 as g_origin_oracle
from polaron2d.errors import DomainError, NoSolutionError, RegimeError
from polaron2d.gfunc import PhysParams
from polaron2d.lattice import fermi_sea_energy
from polaron2d.polaron import (
    HoleKernel,
    asymptotic_polaron,
    polaron_function,
    solve_perturbed,
    solve_polaron,
    theorem_band,
    trial_state_identity,
    upper_bound_energy,
)

TWO_PI = 2 * math.pi
SINGLE = PhysParams.build(2.0, -1.0, 0.5, TWO_PI)


def test_origin_oracle_agrees_with_plain_sum():
    ref, _ = g_richardson(2.0, 1.0, 0.5, TWO_PI, (0.0, 0.0), 0.7, cutoffs=(1e4, 1e5))
    assert g_origin_oracle(0.7) == pytest.approx(ref, abs=1e-12)


@pytest.fixture(scope="module")
def single():
    return solve_polaron(SINGLE)


def test_single_mode_oracle(single):
    # one hole at k = 0: e = -(1/(4 pi^2)) / G(0, -e); G(0, .) changes sign, so straddling cells are skipped
    f = lambda e: e + 1 / (TWO_PI**2 * g_origin_oracle(-e))
    root = dense_scan_root(f, -3.0, -0.05, n=600, ok=lambda e: g_origin_oracle(-e) > 0)
    assert single.kernel == "lattice"
    assert single.e_p == pytest.approx(root, abs=1e-8)


def test_single_mode_exact(single):
    # at tau = |E_B| every excited term cancels, leaving G(0, 1) = 1/L^2 and e = E_B
    assert single.e_p == pytest.approx(-1.0, abs=1e-10)


def test_solution_certificate(single):
    lo, hi = single.bracket
    assert lo <= single.e_p <= hi
    assert abs(single.residual) <= single.tol
    hk = HoleKernel(SINGLE, "lattice")
    assert (polaron_function(SINGLE, lo, hk) < 0) != (polaron_function(SINGLE, hi, hk) < 0)


def test_lowest_root_stable_under_grid_refinement():
    p = PhysParams.scaled(2.0, 1e3, 100.0)
    hk = HoleKernel(p, "continuum")
    a = solve_polaron(p, hole_kernel=hk)
    b = solve_polaron(p, hole_kernel=hk, per_decade=16)
    assert abs(a.e_p - b.e_p) <= max(a.tol, b.tol) + 1e-12 * abs(a.e_p)


def test_lattice_and_continuum_kernels_close():
    p = PhysParams.build(2.0, -1.0, 20.0, 12.0)
    a = solve_polaron(p, kernel="lattice", K=1e3)
    b = solve_polaron(p, kernel="continuum")
    assert a.kernel == "lattice" and b.kernel == "continuum"
    assert a.e_p == pytest.approx(b.e_p, rel=0.05)


def test_asymptotic_examples():
    p = PhysParams.build(2.0, -math.exp(-2.0), 1.0, 10.0)
    lead, band = asymptotic_polaron(p)
    assert lead == pytest.approx(-0.75, rel=1e-14)
    assert band == pytest.approx(0.25, rel=1e-14)
    heavy = asymptotic_polaron(PhysParams.build(1e12, -math.exp(-2.0), 1.0, 10.0))[0]
    assert heavy == pytest.approx(-0.5, rel=1e-11)
    with pytest.raises(DomainError):
        asymptotic_polaron(PhysParams.build(2.0, -1.0, 1.0, 10.0))


def test_asymptotic_matches_solver_order():
    p = PhysParams.scaled(2.0, 1e6, 100.0)
    e = solve_polaron(p, kernel="continuum").e_p
    lead, _ = asymptotic_polaron(p)
    assert e < 0 and 0.5 < e / lead < 2


def test_trial_identity_at_root(single):
    val = trial_state_identity(SINGLE, single.e_p)
    assert abs(val) <= 10 * single.tol * single.inverse_sum / abs(single.e_p)


def test_trial_identity_slope():
    p = PhysParams.scaled(2.0, 1e4, 100.0)
    hk = HoleKernel(p, "continuum")
    e = solve_polaron(p, hole_kernel=hk).e_p
    T = lambda d: trial_state_identity(p, e * (1 + d), hole_kernel=hk)
    delta, h = 1e-4, 1e-6
    slope = (T(h) - T(-h)) / (2 * h)
    assert T(delta) == pytest.approx(delta * slope, rel=0.01)


def test_trial_identity_off_root():
    p = PhysParams.scaled(2.0, 1e4, 100.0)
    hk = HoleKernel(p, "continuum")
    lead, band = asymptotic_polaron(p)
    sol = solve_polaron(p, hole_kernel=hk)
    val = trial_state_identity(p, lead, hole_kernel=hk)
    assert val != 0
    # relative defect is of the order of the distance to the root, itself inside the band
    assert abs(val) / sol.inverse_sum <= 2 * band / abs(lead)


def test_upper_bound_single(single):
    assert upper_bound_energy(SINGLE, single) == single.e_p


def test_upper_bound_below_free_energy():
    p = PhysParams.scaled(2.0, 1e3, 100.0)
    assert upper_bound_energy(p, kernel="continuum") < fermi_sea_energy(p.lattice, p.mu)


def test_deeper_binding_lowers_energy():
    es = [solve_polaron(PhysParams.build(2.0, eb, 100.0, 10.0), kernel="continuum").e_p
          for eb in (-0.1, -1.0, -10.0)]
    assert es[0] > es[1] > es[2]


# --- perturbed equation ----------------------------------------------------

@pytest.mark.parametrize("r", [0.0, 0.01])
def test_perturbed_single_mode_oracle(single, r):
    # E_0 = 0 and one hole: -lambda = (1/(4 pi^2)) / (G(0, -lambda) - r), searched for lambda <= e_p
    f = lambda w: w - 1 / (TWO_PI**2 * (g_origin_oracle(w) - r))
    if r == 0:
        expect = -single.e_p
    else:
        expect = dense_scan_root(f, -single.e_p, 3.0, n=400)
    ps = solve_perturbed(SINGLE, r, polaron=single)
    assert ps.lam == pytest.approx(-expect, abs=1e-8)
    assert ps.lam <= ps.e0 + ps.e_p


def test_perturbed_ordering_in_r():
    p = PhysParams.scaled(2.0, 1e6, 100.0)
    hk = HoleKernel(p, "continuum")
    sol = solve_polaron(p, hole_kernel=hk)
    lams = [solve_perturbed(p, r, polaron=sol, hole_kernel=hk).lam for r in (0.0, 0.1, 0.3)]
    assert lams[0] >= lams[1] >= lams[2]


def test_perturbed_regime_error():
    p = PhysParams.scaled(2.0, 1e4, 100.0)
    with pytest.raises(RegimeError):
        solve_perturbed(p, 37.0, kernel="continuum")


def test_perturbed_rejects_negative_r():
    with pytest.raises(DomainError):
        solve_perturbed(SINGLE, -1.0)


@pytest.mark.filterwarnings("ignore::polaron2d.gfunc.UncertifiedWarning")
def test_no_solution_reported():
    # a light impurity at low density: G(0, .) exceeds the hole values, so the r = 0 root lies above E_0 + e_P
    p = PhysParams.build(0.2, -1.0, 1.0, 10.0)
    with pytest.raises(NoSolutionError) as info:
        solve_perturbed(p, 0.0, kernel="continuum")
    assert info.value.diagnostics["phi"] > 0


# --- theorem band ----------------------------------------------------------

def test_band_ratio():
    for mt in (1e3, 1e6, 1e9):
        p = PhysParams.scaled(2.0, mt, 100.0)
        _, half, _ = theorem_band(p, -1.0)
        assert half == pytest.approx(1 / math.log(mt), rel=1e-14)


def test_band_consistency():
    p = PhysParams.scaled(2.0, 1e4, 100.0)
    sol = solve_polaron(p, kernel="continuum")
    center, half, ok = theorem_band(p, sol.e_p)
    assert ok
    assert center == pytest.approx(upper_bound_energy(p, sol), rel=1e-15)
    lead, band = asymptotic_polaron(p)
    assert abs(sol.e_p - lead) <= 3 * band
    assert half == pytest.approx(abs(sol.e_p) / p.log_mu_tilde)


def test_band_box_independent():
    halves, eps = [], []
    for L in (10.0, 20.0, 40.0):
        p = PhysParams.build(2.0, -1.0, 1e4, L)
        sol = solve_polaron(p, kernel="continuum")
        halves.append(theorem_band(p, sol.e_p)[1])
        eps.append(sol.e_p)
    assert np.ptp(eps) / abs(np.mean(eps)) < 1e-3
    assert np.ptp(halves) / np.mean(halves) < 1e-3
