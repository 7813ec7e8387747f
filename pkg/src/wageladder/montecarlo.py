"""Spell panels simulated from solved policies, and their summary statistics.

A panel walks many workers through employer spells: surplus diffuses, offers
arrive at the solved effort policy, an offer is accepted when it beats the
interpolated current value by the separation cost, and an accepted offer
relocates the worker without interrupting the spell.
Spells close at the separation boundary or on a destruction shock. Workers
re-enter at the entry point by default so the cross-section converges to the
stationary distribution; single-spell mode turns reentry off for
first-passage comparisons. Spell-level laws are time-invariant because
the policies are frozen, so duration statistics use the whole run, while
cross-section snapshots discard a burn-in. All aggregation is exact integer
or fixed-order float work on top of the kernels, so a (config, seed) pair
pins every output regardless of backend scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import SimulationConfig
from .equilibrium import EquilibriumResult
from .firstpassage import BenchmarkSpec
from .kernels import (
    REASON_BOUNDARY,
    REASON_CENSORED,
    REASON_DESTROYED,
    STEP_CAP,
    TENURE_CAP,
    RawPanel,
    run_panel,
)
from .params import derive_surplus_coeffs


class EndReason(Enum):
    BOUNDARY = "boundary"
    DESTROYED = "destroyed"
    CENSORED = "censored"


_REASON_BY_CODE = {
    REASON_BOUNDARY: EndReason.BOUNDARY,
    REASON_DESTROYED: EndReason.DESTROYED,
    REASON_CENSORED: EndReason.CENSORED,
}


@dataclass(frozen=True)
class SpellRecord:
    """One uninterrupted employment spell.

    duration is years employed (partial if censored). j2j_moves counts
    offers the worker accepted during the spell; each move relocates the
    state without restarting the clock. wage_path holds annual
    (tenure, wage) samples taken while the spell was live.
    """

    duration: float
    j2j_moves: int
    wage_path: tuple[tuple[float, float], ...]
    end_reason: EndReason

    @property
    def censored(self) -> bool:
        return self.end_reason is EndReason.CENSORED


@dataclass
class Panel:
    """Aggregated spell panel; optionally carries materialized records."""

    dt: float
    steps_per_year: int
    n_trajectories: int
    seed: int
    burn_in_years: float
    reenter: bool
    nodes: np.ndarray
    dz: float
    wage_nodes: np.ndarray
    dur_hist: np.ndarray
    ten_count: np.ndarray
    ten_sum: np.ndarray
    ten_sumsq: np.ndarray
    age_hist: np.ndarray
    mob_hist: np.ndarray
    n_moves: int
    backend: str
    records: tuple[SpellRecord, ...] | None = None

    @property
    def n_steps(self) -> int:
        return self.dur_hist.shape[0] - 1

    @property
    def n_spells(self) -> int:
        return int(self.dur_hist.sum())

    @property
    def node_hist(self) -> np.ndarray:
        return self.age_hist.sum(axis=0)

    @property
    def exposure_years(self) -> float:
        d = np.arange(self.dur_hist.shape[0], dtype=np.int64)
        return float((self.dur_hist.sum(axis=1) * d).sum()) * self.dt

    def count(self, reason: EndReason) -> int:
        code = {v: k for k, v in _REASON_BY_CODE.items()}[reason]
        return int(self.dur_hist[:, code].sum())

    def __len__(self) -> int:
        return self.n_spells

    def __iter__(self):
        if self.records is None:
            raise ValueError(
                "records were not collected; pass collect_records=True to simulate_panel"
            )
        return iter(self.records)


def _steps_per_year(dt: float) -> int:
    spy = int(round(1.0 / dt))
    if spy < 1 or abs(spy * dt - 1.0) > 1e-9:
        raise ValueError("dt must split a year into a whole number of steps")
    return spy


def _build_records(dt: float, spy: int, end_events, snap_events) -> tuple[SpellRecord, ...]:
    traj_e, dur_e, reason_e, moves_e, ord_e = end_events
    traj_s, ord_s, ten_s, wage_s = snap_events
    if traj_e.size == 0:
        return ()
    width = int(max(ord_e.max(), ord_s.max() if ord_s.size else 0)) + 1
    key_e = traj_e * width + ord_e
    key_s = traj_s * width + ord_s
    order_e = np.lexsort((ord_e, traj_e))
    order_s = np.lexsort((ten_s, ord_s, traj_s))
    key_e = key_e[order_e]
    key_s = key_s[order_s]
    ten_sorted = ten_s[order_s]
    wage_sorted = wage_s[order_s]
    lo = np.searchsorted(key_s, key_e, side="left")
    hi = np.searchsorted(key_s, key_e, side="right")
    out = []
    for j, pos in enumerate(order_e):
        path = tuple(
            (float(ten_sorted[i]) * dt, float(wage_sorted[i]))
            for i in range(lo[j], hi[j])
        )
        out.append(
            SpellRecord(
                duration=float(dur_e[pos]) * dt,
                j2j_moves=int(moves_e[pos]),
                wage_path=path,
                end_reason=_REASON_BY_CODE[int(reason_e[pos])],
            )
        )
    return tuple(out)


def simulate_panel(
    res: EquilibriumResult,
    sc: SimulationConfig,
    *,
    reenter: bool = True,
    collect_records: bool = False,
) -> Panel:
    """Walk sc.n_trajectories workers under the solved policy.

    Every entry from nonemployment starts at z0; jobs entered by accepting an
    offer start at the accepted node. With reenter=True workers re-enter
    immediately when a spell ends, giving a stationary cross-section after
    burn-in; with reenter=False each worker contributes a single spell.
    """
    p = res.params
    g = res.grid
    coeffs = derive_surplus_coeffs(p)
    spy = _steps_per_year(sc.dt_sim_years)
    dt = 1.0 / spy
    n_steps = int(round(sc.max_years * spy))
    if abs(n_steps - sc.max_years * spy) > 1e-9:
        raise ValueError("max_years must be a whole number of steps")
    if n_steps > STEP_CAP:
        raise ValueError(
            f"{sc.max_years} years at {spy} steps/year exceeds the counter budget"
        )

    lam = np.minimum(p.lambda0 * res.worker.a_opt, p.lambda_bar)
    lam = np.where(res.worker.continue_mask, lam, 0.0)
    parr = -np.expm1(-lam * dt)
    if res.offer_weights is not None and float(res.offer_weights.sum()) > 0.0:
        cdf = np.cumsum(res.offer_weights) * g.dz
        cdf = cdf / cdf[-1]
        cdf[-1] = 1.0
    else:
        parr = np.zeros_like(parr)
        cdf = np.ones(g.K)

    raw = run_panel(
        seed=sc.seed,
        n_traj=sc.n_trajectories,
        n_steps=n_steps,
        steps_per_year=spy,
        burn_year=int(math.floor(sc.burn_in_years + 1e-9)),
        z0=p.z0,
        z_star=res.z_star,
        z_min=g.z_min,
        z_max=g.z_max,
        dz=g.dz,
        mu_dt=coeffs.mu_Z * dt,
        sig_sqdt=coeffs.sigma_Z * math.sqrt(dt),
        sig2_dt=coeffs.sigma_Z**2 * dt,
        p_kill=float(-np.expm1(-p.delta * dt)),
        nodes=g.nodes,
        parr=parr,
        V=res.worker.V,
        wage=res.wage,
        offer_cdf=cdf,
        reenter=reenter,
        snapshots_on=reenter,
        collect=collect_records,
        f_wedge=p.F,
    )
    records = None
    if collect_records:
        records = _build_records(dt, spy, raw.end_events, raw.snap_events)
    return Panel(
        dt=dt,
        steps_per_year=spy,
        n_trajectories=sc.n_trajectories,
        seed=sc.seed,
        burn_in_years=sc.burn_in_years,
        reenter=reenter,
        nodes=g.nodes,
        dz=g.dz,
        wage_nodes=res.wage,
        dur_hist=raw.dur_hist,
        ten_count=raw.ten_count,
        ten_sum=raw.ten_sum,
        ten_sumsq=raw.ten_sumsq,
        age_hist=raw.age_hist,
        mob_hist=raw.mob_hist,
        n_moves=raw.n_moves,
        backend=raw.backend,
        records=records,
    )


def simulate_hitting_panel(
    spec: BenchmarkSpec, n_paths: int, dt: float, seed: int
) -> Panel:
    """Single-spell panel of the bare drifted diffusion above a flat barrier.

    No offers, no destruction shocks; spells end at the barrier or are
    censored at spec.t_ret. Used to compare simulated first-passage
    fractions against the closed forms.
    """
    spy = _steps_per_year(dt)
    n_steps = int(round(spec.t_ret * spy))
    if n_steps > STEP_CAP:
        raise ValueError(f"{spec.t_ret} years at {spy} steps/year exceeds the counter budget")
    z_max = spec.d + 10.0 * spec.sigma * math.sqrt(spec.t_ret) + 1.0
    nodes = np.array([0.0, z_max])
    raw = run_panel(
        seed=seed,
        n_traj=n_paths,
        n_steps=n_steps,
        steps_per_year=spy,
        burn_year=0,
        z0=spec.d,
        z_star=0.0,
        z_min=0.0,
        z_max=z_max,
        dz=z_max,
        mu_dt=spec.mu / spy,
        sig_sqdt=spec.sigma * math.sqrt(1.0 / spy),
        sig2_dt=spec.sigma**2 / spy,
        p_kill=0.0,
        nodes=nodes,
        parr=np.zeros(2),
        V=np.zeros(2),
        wage=np.ones(2),
        offer_cdf=np.ones(2),
        reenter=False,
        snapshots_on=False,
    )
    return Panel(
        dt=1.0 / spy,
        steps_per_year=spy,
        n_trajectories=n_paths,
        seed=seed,
        burn_in_years=0.0,
        reenter=False,
        nodes=nodes,
        dz=z_max,
        wage_nodes=np.ones(2),
        dur_hist=raw.dur_hist,
        ten_count=raw.ten_count,
        ten_sum=raw.ten_sum,
        ten_sumsq=raw.ten_sumsq,
        age_hist=raw.age_hist,
        mob_hist=raw.mob_hist,
        n_moves=raw.n_moves,
        backend=raw.backend,
    )


# ---------------------------------------------------------------------------
# summaries


def empirical_density(panel: Panel) -> np.ndarray:
    """Cross-section node histogram normalized to integrate to one."""
    h = panel.node_hist.astype(np.float64)
    total = float(h.sum()) * panel.dz
    if total <= 0.0:
        raise ValueError("panel has no cross-section snapshots")
    return h / total


def density_l1(m: np.ndarray, panel: Panel) -> float:
    """L1 distance between a density on the panel's grid and the panel's own."""
    return float(np.sum(np.abs(np.asarray(m) - empirical_density(panel))) * panel.dz)


@dataclass(frozen=True)
class HazardRow:
    t_lo: float
    t_hi: float
    events: int
    exposure_years: float
    rate: float


def empirical_hazard(
    panel: Panel,
    bin_edges_years,
    include_destruction: bool = True,
) -> list[HazardRow]:
    """Separations per person-year at risk, by tenure bin.

    Censored spells contribute exposure only. A bin with no exposure
    reports a missing rate (NaN), not zero.
    """
    if panel.n_spells == 0:
        raise ValueError("empty panel")
    edges = [float(e) for e in bin_edges_years]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin edges must be strictly increasing")
    spy = panel.steps_per_year
    steps = [int(round(e * spy)) for e in edges]
    n_rows = panel.dur_hist.shape[0]
    d = np.arange(n_rows, dtype=np.int64)
    any_reason = panel.dur_hist.sum(axis=1)
    ev_cols = [REASON_BOUNDARY] + ([REASON_DESTROYED] if include_destruction else [])
    out = []
    for lo, hi, lo_s, hi_s in zip(edges, edges[1:], steps, steps[1:]):
        overlap = np.clip(np.minimum(d, hi_s) - lo_s, 0, None)
        exposure = float((any_reason * overlap).sum()) / spy
        lo_i, hi_i = min(lo_s + 1, n_rows), min(hi_s + 1, n_rows)
        events = int(panel.dur_hist[lo_i:hi_i, ev_cols].sum())
        rate = events / exposure if exposure > 0.0 else float("nan")
        out.append(HazardRow(lo, hi, events, exposure, rate))
    return out


@dataclass(frozen=True)
class TenureVarianceRow:
    t_lo: float
    t_hi: float
    count: int
    var_model: float
    var_with_noise: float
    low_confidence: bool


def variance_by_tenure(
    panel: Panel, bin_edges_years, sigma_u2: float
) -> list[TenureVarianceRow]:
    """Cross-section Var(log w) by whole-year tenure bins.

    Reported both without and with the measurement-noise add-on. Bins with
    fewer than 30 observations are flagged rather than dropped.
    """
    edges = [int(e) for e in bin_edges_years]
    if any(float(e) != float(f) for e, f in zip(edges, bin_edges_years)):
        raise ValueError("tenure bin edges must be whole years")
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bin edges must be strictly increasing")
    out = []
    for lo, hi in zip(edges, edges[1:]):
        hi_c = min(hi, TENURE_CAP + 1)
        n = int(panel.ten_count[lo:hi_c].sum())
        if n == 0:
            out.append(
                TenureVarianceRow(lo, hi, 0, float("nan"), float("nan"), True)
            )
            continue
        s1 = float(panel.ten_sum[lo:hi_c].sum())
        s2 = float(panel.ten_sumsq[lo:hi_c].sum())
        var = max(s2 / n - (s1 / n) ** 2, 0.0)
        out.append(TenureVarianceRow(lo, hi, n, var, var + sigma_u2, n < 30))
    return out


def wage_tenure_profile(panel: Panel) -> list[tuple[int, int, float]]:
    """(tenure year, count, mean log wage) rows for years with observations."""
    out = []
    for y in range(TENURE_CAP + 1):
        n = int(panel.ten_count[y])
        if n > 0:
            out.append((y, n, float(panel.ten_sum[y]) / n))
    return out


def j2j_rate(panel: Panel) -> float:
    """Accepted moves per person-year of employment over the whole run."""
    exposure = panel.exposure_years
    if exposure <= 0.0:
        raise ValueError("panel has no exposure")
    return float(panel.n_moves) / exposure


def density_by_age(panel: Panel) -> dict[str, np.ndarray]:
    """Cross-section node densities by job age group, each normalized."""
    labels = ("0-3", "3-10", "10+")
    out = {}
    for i, label in enumerate(labels):
        h = panel.age_hist[i].astype(np.float64)
        total = float(h.sum()) * panel.dz
        out[label] = h / total if total > 0.0 else h
    return out


def wage_by_mobility(panel: Panel) -> dict[str, np.ndarray]:
    """Node densities of the 8-12y tenure window, split by mover status."""
    stay = panel.mob_hist[0].astype(np.float64)
    move = panel.mob_hist[1].astype(np.float64)
    both = stay + move
    out = {}
    for label, h in (("all", both), ("stayers", stay), ("movers", move)):
        total = float(h.sum()) * panel.dz
        out[label] = h / total if total > 0.0 else h
    return out


def hitting_fraction(panel: Panel, t_years: float) -> float:
    """Share of paths absorbed at the barrier by t_years (single-spell panels)."""
    if panel.reenter:
        raise ValueError("hitting fractions are defined for single-spell panels")
    cut = int(round(t_years * panel.steps_per_year)) + 1
    return float(panel.dur_hist[:cut, REASON_BOUNDARY].sum()) / panel.n_trajectories


def never_end_fraction(panel: Panel) -> float:
    """Share of paths still above the barrier at the horizon."""
    if panel.reenter:
        raise ValueError("survival shares are defined for single-spell panels")
    return float(panel.dur_hist[:, REASON_CENSORED].sum()) / panel.n_trajectories
