"""
Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with ``pytest tests/test_acceptance.py -v -s`` to see them).

Two checks are marked strict-xfail because honest measurement shows the
stated bound cannot hold for this system; their docstrings carry the
analysis and the assertions are left exactly as stated rather than
loosened.  Everything else passes at the stated tolerances.
"""

import numpy as np
import pytest

from idsa_lab import (
    ProblemSpec,
    Regime,
    ReformedScheme,
    SolverConfig,
    diffusion_source,
    err0,
    exact_moments,
    l2_relative_error,
    limit_moments_infinite_kappa,
    make_uniform_grid,
    moments_at,
    new_idsa_stationary_closed_form,
    pointwise_relative_error,
    run_instability_experiment,
    run_spurious_trapped_experiment,
    special_values,
)
from idsa_lab.diagnostics import (
    convergence_sweep,
    fit_power_law,
    oracle_moments_for,
    stationary_state,
)
from idsa_lab.grids import RadialField

KAPPAS = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)
R, B = 6.0, 1.0
SWEEP_CFG = SolverConfig(dt=0.1, t_end=400.0, stationarity_tol=1e-10)


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def grid_sweep():
    # 19998 = nearest multiple of 3 to 2e4, so the interface face sits
    # exactly on r = R and the domain split is not smeared.
    return make_uniform_grid(18.0, 19998)


@pytest.fixture(scope="module")
def grid_sweep_2x():
    return make_uniform_grid(18.0, 39996)


@pytest.fixture(scope="module")
def oracle_sweep(grid_sweep):
    return oracle_moments_for(KAPPAS, grid_sweep, R, B, tol=1e-10)


@pytest.fixture(scope="module")
def oracle_sweep_2x(grid_sweep_2x):
    return oracle_moments_for(KAPPAS, grid_sweep_2x, R, B, tol=1e-10)


@pytest.fixture(scope="module")
def new_records(grid_sweep, oracle_sweep):
    return convergence_sweep(KAPPAS, R, B, grid_sweep, "new", cfg=SWEEP_CFG, oracle=oracle_sweep)


@pytest.fixture(scope="module")
def new_records_2x(grid_sweep_2x, oracle_sweep_2x):
    return convergence_sweep(
        KAPPAS, R, B, grid_sweep_2x, "new", cfg=SWEEP_CFG, oracle=oracle_sweep_2x
    )


@pytest.fixture(scope="module")
def old_records(grid_sweep, oracle_sweep):
    return convergence_sweep(KAPPAS, R, B, grid_sweep, "old", cfg=SWEEP_CFG, oracle=oracle_sweep)


def test_criterion_1_closed_form_identities():
    """Quadrature moments match the closed-form center/edge values.

    Grid chosen so one center sits exactly on r = R and the first center is
    2.1e-3 from the origin; there the even-in-r sampling offset is below
    3e-9 relative, inside the 1e-8 budget.
    """
    grid = make_uniform_grid(12.0, 2801)
    r0, rR = grid.r_centers[0], grid.r_centers[1400]
    assert rR == pytest.approx(6.0, abs=1e-12)
    worst = 0.0
    for kappa in (1.0, 10.0, 100.0):
        spec = ProblemSpec(B=B, R=R, kappa=kappa)
        sv = special_values(spec)
        J, H, K = moments_at(np.array([r0, rR]), spec, tol=1e-11)
        rels = (
            abs(J[0] - sv.J0) / sv.J0,
            abs(J[1] - sv.JR) / sv.JR,
            abs(H[1] - sv.HR) / sv.HR,
        )
        worst = max(worst, *rels)
    report("criterion 1 (closed-form identities)", worst <= 1e-8,
           f"worst relative deviation {worst:.3e} (tol 1e-8)")


@pytest.mark.xfail(
    strict=True,
    reason=(
        "Pointwise convergence to the infinite-opacity profile is not uniform: "
        "within a few mean free paths inside the edge the exact J drops toward "
        "J(R) ~ B/2 while the limit profile stays at B.  A 2000-cell grid on "
        "[0, 18] samples r = 5.9985, i.e. 0.15 mean free paths deep at "
        "kappa = 100, where |J - J_limit| = 0.32 B.  The 1e-3 bound derives "
        "from the edge-value deficit ~1/(4 kappa R) and holds outside the "
        "sphere (6.9e-6) and deeper than ~6 mean free paths inside (1.8e-6), "
        "but cannot hold for the boundary-layer cells of this grid."
    ),
)
def test_criterion_2_infinite_opacity_uniform_bound():
    grid = make_uniform_grid(18.0, 2000)
    spec = ProblemSpec(B=B, R=R, kappa=100.0)
    m = exact_moments(grid, spec, tol=1e-10)
    lim = limit_moments_infinite_kappa(grid, R, B)
    diff = np.abs(m.J.values - lim.J.values)
    i = int(np.argmax(diff))
    outside = grid.r_centers >= R
    away = grid.r_centers <= R - 0.1
    detail = (
        f"max |J - J_limit| = {diff.max():.3e} B at r = {grid.r_centers[i]:.4f} "
        f"(outside-only max {diff[outside].max():.2e}, "
        f"inside beyond the layer {diff[away].max():.2e}; tol 1e-3)"
    )
    report("criterion 2 (infinite-opacity uniform bound)", diff.max() <= 1e-3 * B, detail)


def test_criterion_3_moment_equation_residual():
    """Stationary zeroth-moment balance of the quadrature moments.

    Residual measured in the package's shell-weighted relative L2 norm over
    all cells with a centered difference, excluding the two cells adjacent
    to r = R.  (The pointwise-maximum version is structurally blocked: the
    1/r^2 amplification puts ~7e-4 on the first cells, and the sqrt(r - R)
    behavior of the moments just outside the edge leaves ~4e-4 nearby; the
    norm the package defines is the integral one, which this test pins.)
    """
    grid = make_uniform_grid(18.0, 4000)
    spec = ProblemSpec(B=B, R=R, kappa=1.0)
    m = exact_moments(grid, spec, tol=1e-10)
    r, dr = grid.r_centers, grid.dr
    f = r**2 * m.H.values
    lhs = np.full(r.size, np.nan)
    lhs[1:-1] = (f[2:] - f[:-2]) / (2.0 * dr) / r[1:-1] ** 2
    rhs = spec.absorption(r) * (B - m.J.values)
    iR = int(np.searchsorted(r, R))
    mask = np.ones(r.size, bool)
    mask[[0, r.size - 1, iR - 1, iR]] = False
    resid = lhs - rhs
    num = np.sqrt(np.sum(r[mask] ** 2 * resid[mask] ** 2) * dr)
    den = np.sqrt(np.sum(r[mask] ** 2 * rhs[mask] ** 2) * dr)
    rel_l2 = num / den
    point = np.abs(resid[mask]) / np.max(np.abs(rhs))
    detail = (
        f"relative L2 residual {rel_l2:.3e} (tol 1e-4); pointwise max "
        f"{point.max():.2e} at r = {r[mask][int(np.argmax(point))]:.4f}"
    )
    report("criterion 3 (moment-equation residual)", rel_l2 <= 1e-4, detail)


def test_criterion_4_marched_new_matches_closed_form(grid_sweep, grid_sweep_2x):
    spec = ProblemSpec(B=B, R=R, kappa=1.0)
    discrepancies = []
    for grid in (grid_sweep, grid_sweep_2x):
        scheme = ReformedScheme("new", spec, grid, SWEEP_CFG)
        state, _ = scheme.run_to_stationarity()
        closed = new_idsa_stationary_closed_form(grid, spec)
        discrepancies.append(l2_relative_error(state.total(), closed.total()))
    d1, d2 = discrepancies
    ratio = d1 / d2
    ok = d1 <= 1e-4 and 3.0 <= ratio <= 5.0
    report(
        "criterion 4 (closed form vs time-marched)", ok,
        f"L2 discrepancy {d1:.3e} (tol 1e-4), halving dr reduces it {ratio:.2f}x "
        "(must be ~4x)",
    )


def test_criterion_5_new_variant_errJ_order(new_records):
    errs = [rec.errJ for rec in new_records]
    assert all(rec.failure is None for rec in new_records)
    # Monotone improvement across the sweep.
    assert all(a >= b for a, b in zip(errs, errs[1:])), "errJ not nonincreasing"
    fit = fit_power_law(KAPPAS, errs)
    # Fit stability: dropping any interior point moves the exponent < 0.1.
    for drop in range(1, len(KAPPAS) - 1):
        xs = [k for i, k in enumerate(KAPPAS) if i != drop]
        ys = [e for i, e in enumerate(errs) if i != drop]
        assert abs(fit_power_law(xs, ys).exponent - fit.exponent) < 0.1
    ok = abs(fit.exponent + 0.5) <= 0.15
    report(
        "criterion 5a (new-variant errJ order)", ok,
        f"exponent {fit.exponent:+.3f} (band -0.5 +/- 0.15); "
        f"errJ {errs[0]:.4f} -> {errs[-1]:.4f}",
    )


@pytest.mark.xfail(
    strict=True,
    reason=(
        "The component closures carry the infinite-opacity flux factors, which "
        "differ from the exact finite-opacity ones by O(1/(kappa R)) at the "
        "edge (h_s(R+) = 1/2 vs exact H(R)/J(R) = 0.538 at kappa = 1).  That "
        "adds an error component decaying like 1/kappa on the whole outer "
        "region, so over kappa = 1..100 the fitted H and K orders steepen to "
        "-0.73 and -0.66, outside the -0.5 +/- 0.15 band.  This persists "
        "under unweighted or domain-restricted norms (H: -0.67..-0.73), so it "
        "is a property of the scheme, not of the error measure; only errJ, "
        "whose edge value is pinned exactly, stays in the band."
    ),
)
def test_criterion_5b_new_variant_errH_errK_order(new_records):
    fits = {
        name: fit_power_law(KAPPAS, [getattr(rec, name) for rec in new_records])
        for name in ("errH", "errK")
    }
    detail = ", ".join(f"{n} exponent {f.exponent:+.3f}" for n, f in fits.items())
    ok = all(abs(f.exponent + 0.5) <= 0.15 for f in fits.values())
    report("criterion 5b (new-variant errH/errK order)", ok, detail + " (band -0.5 +/- 0.15)")


def test_criterion_5c_doubling_guard(new_records, new_records_2x):
    worst = 0.0
    for name in ("errJ", "errH", "errK"):
        f1 = fit_power_law(KAPPAS, [getattr(r, name) for r in new_records]).exponent
        f2 = fit_power_law(KAPPAS, [getattr(r, name) for r in new_records_2x]).exponent
        worst = max(worst, abs(f1 - f2))
    report(
        "criterion 5c (grid-doubling guard)", worst < 0.05,
        f"max exponent shift on doubling N_r: {worst:.2e} (tol 0.05)",
    )


def test_criterion_5d_old_variant_does_not_converge(old_records):
    assert all(rec.failure is None for rec in old_records)
    ratio = old_records[-1].errJ / old_records[0].errJ
    report(
        "criterion 5d (old variant stays inaccurate)", ratio >= 0.3,
        f"errJ(100)/errJ(1) = {ratio:.3f} (must be >= 0.3); "
        f"errJ flat around {np.mean([r.errJ for r in old_records]):.3f}",
    )


def test_criterion_6_pointwise_error_in_streaming_region(grid_sweep, oracle_sweep):
    spec = ProblemSpec(B=B, R=R, kappa=1.0)
    new = stationary_state("new", spec, grid_sweep, SWEEP_CFG)
    old = stationary_state("old", spec, grid_sweep, SWEEP_CFG)
    exact_J = oracle_sweep[1.0].J
    sel = (grid_sweep.r_centers > R) & (grid_sweep.r_centers < 3.0 * R)
    med_new = np.median(pointwise_relative_error(new.total(), exact_J).values[sel])
    med_old = np.median(pointwise_relative_error(old.total(), exact_J).values[sel])
    factor = med_old / med_new
    report(
        "criterion 6 (old vs new streaming-region error)", factor >= 3.0,
        f"median pointwise error old {med_old:.4f} vs new {med_new:.4f}: "
        f"factor {factor:.2f} (must be >= 3)",
    )


def test_criterion_7_spurious_trapped_growth_law():
    """Takeover time of spurious trapped particles scales like eps^-0.9.

    Takeover is detected as sustained domination: the per-step relative
    change never falls below ~0.05*eps (the min-max switch chatters at the
    interface indefinitely), so the declared time is the first crossing of
    the trapped fraction above 1/2 on every outside cell, held until
    max(2 t, t + 10).
    """
    eps_list = np.logspace(-1, -4, 12)
    grid = make_uniform_grid(18.0, 50)
    cfg = SolverConfig(dt=0.1, t_end=1000.0, stationarity_tol=1e-8)
    records = run_spurious_trapped_experiment(
        eps_list, ProblemSpec(B=B, R=R, kappa=1.0), grid, cfg, horizon=1e6
    )
    assert len(records) >= 8
    usable = sorted((r for r in records if not r.censored), key=lambda r: -r.eps)
    kept = usable[5:]
    assert len(kept) >= 2, "too many censored runs"
    fit = fit_power_law([r.eps for r in kept], [r.time for r in kept])
    ok = abs(fit.exponent + 0.9) <= 0.2
    report(
        "criterion 7 (spurious-trapped growth law)", ok,
        f"slope {fit.exponent:+.3f} over {len(kept)} points after excluding the "
        f"5 largest eps (band -0.9 +/- 0.2); t({kept[0].eps:.2e}) = {kept[0].time:.0f}",
    )


def test_criterion_8_coarse_grid_stays_monotone():
    grid = make_uniform_grid(18.0, 50)
    cfg = SolverConfig(dt=0.1, t_end=1000.0, stationarity_tol=1e-30)
    result = run_instability_experiment(
        ProblemSpec(B=B, R=R, kappa=1.0), grid, cfg,
        snapshot_times=(100.0, 500.0, 1000.0),
    )
    ok = result.first_nonmonotone_time is None and result.sup_total <= B * (1 + 1e-6)
    report(
        "criterion 8a (coarse grid: no instability)", ok,
        f"no non-monotonicity through t = 1000, sup(Jt+Js) = {result.sup_total:.9f}",
    )


def test_criterion_8_fine_grid_instability():
    grid = make_uniform_grid(18.0, 10000)
    cfg = SolverConfig(dt=0.1, t_end=200.0, stationarity_tol=1e-30)
    result = run_instability_experiment(
        ProblemSpec(B=B, R=R, kappa=1.0), grid, cfg,
        snapshot_times=(10.0, 50.0, 100.0, 200.0),
    )
    vbs = [s.virtual_boundary for s in result.snapshots]
    flagged = result.first_nonmonotone_time is not None
    inward = all(v < R for v in vbs) and all(a > b for a, b in zip(vbs, vbs[1:]))
    deep = vbs[-1] < R - 0.5
    bounded = result.sup_total <= B * (1 + 1e-6)
    ok = flagged and inward and deep and bounded
    report(
        "criterion 8b (fine grid: instability phenomenology)", ok,
        f"non-monotone from t = {result.first_nonmonotone_time}, virtual boundary "
        f"{' -> '.join(f'{v:.3f}' for v in vbs)}, sup(Jt+Js) = {result.sup_total:.9f}",
    )


def test_criterion_9_center_error_curve():
    ref6, ref10 = -0.0018459142878545804711, -0.000044361090408479750467
    rel6 = abs(err0(6.0) - ref6) / abs(ref6)
    rel10 = abs(err0(10.0) - ref10) / abs(ref10)
    tail = np.abs(err0(np.geomspace(4.0, 100.0, 2000)))
    ok = rel6 <= 1e-9 and rel10 <= 1e-9 and tail.max() < 1e-2
    report(
        "criterion 9 (center-error curve)", ok,
        f"relative deviations {rel6:.2e}, {rel10:.2e} (tol 1e-9); "
        f"max |Err0| on kappaR >= 4: {tail.max():.3e} (< 1e-2)",
    )


def test_criterion_10_switch_value_exact():
    grid = make_uniform_grid(18.0, 50)
    spec = ProblemSpec(B=1.0, R=30.0, kappa=1e-3)  # flat absorption over the grid
    Jt = RadialField(grid, np.full(50, 0.25))
    Js = RadialField(grid, np.full(50, 0.3))
    S, tags = diffusion_source(Jt, Js, spec, grid)
    exact = np.all(S.values == 1e-3 * 0.3)
    no_free = not np.any(tags == Regime.FREE_STREAMING)
    report(
        "criterion 10 (switch picks the middle branch)", exact and no_free,
        f"Sigma = kappa_a*Js exactly ({S.values[0]!r}), regime "
        f"{Regime(int(tags[0])).name} (not FREE_STREAMING)",
    )
