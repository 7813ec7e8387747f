"""Contract and oracle tests for simulated panels and their summaries."""

import math

import numpy as np
import pytest

from wageladder.config import SimulationConfig, load_config
from wageladder.equilibrium import CounterfactualMode, j2j_rate_pde, solve_equilibrium
from wageladder.firstpassage import BenchmarkSpec, hitting_cdf
from wageladder.montecarlo import (
    EndReason,
    density_by_age,
    density_l1,
    empirical_density,
    empirical_hazard,
    hitting_fraction,
    j2j_rate,
    never_end_fraction,
    simulate_hitting_panel,
    simulate_panel,
    variance_by_tenure,
    wage_by_mobility,
    wage_tenure_profile,
)


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def full(cfg):
    return solve_equilibrium(cfg, CounterfactualMode.FULL)


@pytest.fixture(scope="module")
def sel(cfg):
    return solve_equilibrium(cfg, CounterfactualMode.SEL)


@pytest.fixture(scope="module")
def records_panel(full):
    sc = SimulationConfig(
        n_trajectories=300, dt_sim_years=1.0 / 12.0, seed=41, max_years=25.0,
        burn_in_years=4.0,
    )
    return simulate_panel(full, sc, collect_records=True)


@pytest.fixture(scope="module")
def big_panel(full):
    sc = SimulationConfig(
        n_trajectories=20_000, dt_sim_years=1.0 / 12.0, seed=7, max_years=60.0,
        burn_in_years=16.0,
    )
    return simulate_panel(full, sc)


@pytest.fixture(scope="module")
def bench_panel():
    spec = BenchmarkSpec(d=0.2, mu=-0.012, sigma=0.10, t_ret=40.0)
    return spec, simulate_hitting_panel(spec, 30_000, 1.0 / 12.0, seed=13)


def test_spell_record_contract(records_panel):
    panel = records_panel
    records = list(panel)
    assert len(records) == panel.n_spells
    spy = panel.steps_per_year
    total_steps = 0
    saw_path = 0
    for rec in records:
        steps = int(round(rec.duration * spy))
        total_steps += steps
        assert rec.duration >= 0.0
        if rec.end_reason is not EndReason.CENSORED:
            assert steps >= 1
        assert rec.j2j_moves >= 0
        if rec.wage_path:
            saw_path += 1
            tens = [t for t, _ in rec.wage_path]
            assert all(w > 0.0 for _, w in rec.wage_path)
            assert all(b - a == pytest.approx(1.0, abs=1e-9) for a, b in zip(tens, tens[1:]))
            assert max(tens) <= rec.duration + 1e-9
    assert total_steps == panel.n_trajectories * panel.n_steps
    assert saw_path > 0
    assert sum(rec.j2j_moves for rec in records) == panel.n_moves
    assert any(rec.j2j_moves > 0 for rec in records)


def test_record_reasons_partition(records_panel):
    records = list(records_panel)
    by_reason = {r: 0 for r in EndReason}
    for rec in records:
        by_reason[rec.end_reason] += 1
    for reason in EndReason:
        assert by_reason[reason] == records_panel.count(reason)
    assert by_reason[EndReason.BOUNDARY] > 0
    assert by_reason[EndReason.DESTROYED] > 0
    # with reentry every trajectory is still employed at the horizon
    assert by_reason[EndReason.CENSORED] == records_panel.n_trajectories


def test_iteration_requires_collected_records(big_panel):
    with pytest.raises(ValueError):
        iter(big_panel)


def test_exposure_accounting_exact(big_panel):
    d = np.arange(big_panel.dur_hist.shape[0])
    steps = int((big_panel.dur_hist.sum(axis=1) * d).sum())
    assert steps == big_panel.n_trajectories * big_panel.n_steps
    rows = empirical_hazard(big_panel, [0.0, big_panel.n_steps / big_panel.steps_per_year])
    assert rows[0].exposure_years == pytest.approx(big_panel.exposure_years, rel=1e-12)


def test_empirical_density_integrates_to_one(big_panel):
    m_hat = empirical_density(big_panel)
    assert float(np.sum(m_hat) * big_panel.dz) == pytest.approx(1.0, abs=1e-12)
    assert np.all(m_hat >= 0.0)


def test_density_matches_stationary_flow(full, big_panel):
    assert density_l1(full.density.m, big_panel) < 0.05


def test_hazard_missing_bins_are_nan(big_panel):
    horizon = big_panel.n_steps / big_panel.steps_per_year
    rows = empirical_hazard(big_panel, [0.0, 1.0, horizon, horizon + 5.0])
    assert rows[0].rate > 0.0
    assert math.isnan(rows[2].rate)
    assert rows[2].exposure_years == 0.0


def test_hazard_all_censored_is_zero_with_full_exposure():
    spec = BenchmarkSpec(d=0.3, mu=0.5, sigma=1e-6, t_ret=2.0)
    panel = simulate_hitting_panel(spec, 400, 1.0 / 12.0, seed=3)
    rows = empirical_hazard(panel, [0.0, 1.0, 2.0])
    for row in rows:
        assert row.rate == 0.0
        assert row.exposure_years == pytest.approx(400.0, rel=1e-12)


def test_hazard_rejects_bad_bins(big_panel):
    with pytest.raises(ValueError):
        empirical_hazard(big_panel, [2.0, 1.0])
    with pytest.raises(ValueError):
        empirical_hazard(big_panel, [1.0])


def test_benchmark_fractions_track_closed_form(bench_panel):
    spec, panel = bench_panel
    n = panel.n_trajectories
    for t in (1.0, 5.0, 10.0, 20.0):
        frac = hitting_fraction(panel, t)
        cdf = float(hitting_cdf(t, spec))
        se = math.sqrt(cdf * (1.0 - cdf) / n)
        assert abs(frac - cdf) < 4.0 * se
    surv = never_end_fraction(panel)
    target = 1.0 - float(hitting_cdf(spec.t_ret, spec))
    se = math.sqrt(target * (1.0 - target) / n)
    assert abs(surv - target) < 4.0 * se


def test_benchmark_hazard_tracks_closed_form(bench_panel):
    spec, panel = bench_panel
    rows = empirical_hazard(panel, [0.5, 1.0, 2.0, 3.0, 5.0, 10.0])
    for row in rows:
        ts = np.linspace(row.t_lo, row.t_hi, 400)
        surv = 1.0 - np.asarray(hitting_cdf(ts, spec))
        d_cdf = float(hitting_cdf(row.t_hi, spec) - hitting_cdf(row.t_lo, spec))
        analytic = d_cdf / float(np.trapezoid(surv, ts))
        se = math.sqrt(max(row.events, 1)) / row.exposure_years
        assert abs(row.rate - analytic) < 4.0 * se + 0.02 * analytic


def test_hitting_fraction_needs_single_spell_panel(big_panel):
    with pytest.raises(ValueError):
        hitting_fraction(big_panel, 5.0)


def test_variance_by_tenure_noise_addon(big_panel):
    bins = [0, 1, 3, 7, 15, 30]
    rows_a = variance_by_tenure(big_panel, bins, sigma_u2=0.0)
    rows_b = variance_by_tenure(big_panel, bins, sigma_u2=0.0046)
    for a, b in zip(rows_a, rows_b):
        assert a.count == b.count
        assert a.var_model == b.var_model
        assert b.var_with_noise == pytest.approx(a.var_model + 0.0046, abs=1e-15)
        assert a.count >= 30 and not a.low_confidence
        assert a.var_model > 0.0


def test_variance_by_tenure_flags_sparse_bins(full):
    sc = SimulationConfig(
        n_trajectories=30, dt_sim_years=1.0 / 12.0, seed=9, max_years=20.0,
        burn_in_years=17.0,
    )
    panel = simulate_panel(full, sc)
    rows = variance_by_tenure(panel, [0, 1, 15, 19], sigma_u2=0.0)
    assert any(r.low_confidence for r in rows)


def test_variance_bins_must_be_whole_years(big_panel):
    with pytest.raises(ValueError):
        variance_by_tenure(big_panel, [0.0, 1.5, 3.0], sigma_u2=0.0)


def test_wage_tenure_profile_rises(big_panel):
    prof = wage_tenure_profile(big_panel)
    years = {y: m for y, _, m in prof}
    assert years[10] > years[0]
    counts = {y: n for y, n, _ in prof}
    assert sum(counts.values()) == int(big_panel.ten_count.sum())


def test_j2j_rate_agrees_with_stationary_flow(full, big_panel):
    mc = j2j_rate(big_panel)
    pde = j2j_rate_pde(full)
    assert mc > 0.0
    assert mc == pytest.approx(pde, rel=0.10)


def test_sel_panel_has_no_moves(sel):
    sc = SimulationConfig(
        n_trajectories=500, dt_sim_years=1.0 / 12.0, seed=21, max_years=30.0,
        burn_in_years=5.0,
    )
    panel = simulate_panel(sel, sc)
    assert panel.n_moves == 0
    assert j2j_rate(panel) == 0.0


def test_mobility_split_orders_wages(big_panel):
    curves = wage_by_mobility(big_panel)
    w = big_panel.wage_nodes

    def mean(d):
        return float(np.sum(d * w) * big_panel.dz)

    assert mean(curves["movers"]) > mean(curves["stayers"])
    for d in curves.values():
        assert float(np.sum(d) * big_panel.dz) == pytest.approx(1.0, abs=1e-12)


def test_age_groups_order_mean_surplus(big_panel):
    groups = density_by_age(big_panel)
    z = big_panel.nodes

    def mean(d):
        return float(np.sum(d * z) * big_panel.dz)

    assert mean(groups["10+"]) > mean(groups["0-3"])


def test_step_scheme_consistency_under_dt_halving(full):
    rates = {}
    h01 = {}
    for dt in (1.0 / 12.0, 1.0 / 24.0):
        sc = SimulationConfig(
            n_trajectories=4000, dt_sim_years=dt, seed=11, max_years=30.0,
            burn_in_years=10.0,
        )
        panel = simulate_panel(full, sc)
        rates[dt] = (j2j_rate(panel), math.sqrt(max(panel.n_moves, 1)) / panel.exposure_years)
        row = empirical_hazard(panel, [0.0, 1.0])[0]
        h01[dt] = (row.rate, math.sqrt(max(row.events, 1)) / row.exposure_years)
    for table in (rates, h01):
        (a, se_a), (b, se_b) = table.values()
        assert abs(a - b) < 2.0 * (se_a + se_b)


def test_dt_must_divide_the_year(full):
    sc = SimulationConfig(
        n_trajectories=10, dt_sim_years=0.07, seed=1, max_years=2.0, burn_in_years=0.0,
    )
    with pytest.raises(ValueError):
        simulate_panel(full, sc)
