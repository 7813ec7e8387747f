"""Counterfactual experiments layered on the equilibrium solver.

Three economies sharing one destruction boundary isolate where wage spread
comes from: survival alone, reallocation through on-the-job offers, or the
equilibrium wage response. Their tenure-conditioned variances form the
decomposition table. Policy sweeps re-solve the full economy along one
lever at a time, warm-starting each point from the last converged density
so the whole path stays on one solution branch. A quadratic moment
distance scores the shipped calibration targets.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .config import ConfigError, OfferKernel, RunConfig, SimulationConfig
from .equilibrium import (
    CounterfactualMode,
    EquilibriumResult,
    NonConvergenceError,
    j2j_rate_pde,
    solve_equilibrium,
)
from .firstpassage import BenchmarkSpec, never_end_truncated
from .kolmogorov import DegenerateFlowError
from .montecarlo import (
    Panel,
    empirical_hazard,
    j2j_rate,
    simulate_panel,
    variance_by_tenure,
    wage_tenure_profile,
)
from .params import derive_surplus_coeffs


class Lever(Enum):
    FIRING_COST = "firing_cost"
    SEARCH_SUBSIDY = "search_subsidy"
    VOL_MULTIPLIER = "vol_multiplier"


_LEVER_FIELD = {
    Lever.FIRING_COST: "F",
    Lever.SEARCH_SUBSIDY: "s",
    Lever.VOL_MULTIPLIER: "chi",
}

DEFAULT_SWEEP_VALUES: dict[Lever, tuple[float, ...]] = {
    Lever.FIRING_COST: (0.0, 0.05, 0.1, 0.15, 0.2),
    Lever.SEARCH_SUBSIDY: (0.0, 0.2, 0.4, 0.6, 0.78),
    Lever.VOL_MULTIPLIER: (0.8, 0.9, 1.0, 1.1, 1.25),
}

DEFAULT_TENURE_BINS = (0, 1, 3, 7, 15, 30)

# a stopping boundary this close to the grid floor means the stopping region
# fell off the grid, not that the solve succeeded
COLLAPSE_BOUNDARY_INDEX = 2

# half-year resolution where the separation hazard peaks, coarser beyond
HAZARD_PROBE_EDGES = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0, 20.0)


@dataclass(frozen=True)
class DecompositionRow:
    t_lo: int
    t_hi: int
    var_sel: float
    var_sel_search: float
    var_full: float


@dataclass(frozen=True)
class DecompositionResult:
    rows: list[DecompositionRow]
    full: EquilibriumResult
    sel: EquilibriumResult
    sel_search: EquilibriumResult
    vu_sel: float
    vu_sel_search: float


@dataclass(frozen=True)
class SweepRow:
    value: float
    z_star: float
    var_logw: float
    j2j: float
    mean_w: float
    converged: bool


@dataclass(frozen=True)
class SweepResult:
    lever: Lever
    rows: list[SweepRow]

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)


def _match_frozen_outside(
    cfg: RunConfig,
    mode: CounterfactualMode,
    k_target: int,
    kernel_override: OfferKernel | None = None,
) -> float:
    """Frozen outside value whose stopping boundary lands on index k_target.

    The boundary index is nondecreasing in the frozen value, so bisection on
    that step function lands inside the matching interval. The configured
    frozen value is probed first; it usually already matches. Solver failure
    at a probe is read as a boundary beyond the target.
    """

    def probe(vu: float) -> int:
        try:
            r = solve_equilibrium(
                cfg, mode, vu_frozen=vu, offer_kernel_override=kernel_override
            )
        except (NonConvergenceError, DegenerateFlowError):
            return cfg.numerics.n_nodes
        return r.worker.k_star

    start = (
        cfg.vu_frozen_sel_search
        if mode is CounterfactualMode.SEL_SEARCH
        else cfg.vu_frozen_sel
    )
    k0 = probe(start)
    if k0 == k_target:
        return start
    lo = hi = start
    step = 0.05
    if k0 < k_target:
        while True:
            hi += step
            step *= 2.0
            if hi - start > 64.0:
                raise NonConvergenceError(
                    f"no frozen outside value pushes the boundary up to index {k_target}"
                )
            k = probe(hi)
            if k == k_target:
                return hi
            if k > k_target:
                break
            lo = hi
    else:
        while True:
            lo -= step
            step *= 2.0
            if start - lo > 64.0:
                raise NonConvergenceError(
                    f"no frozen outside value pulls the boundary down to index {k_target}"
                )
            k = probe(lo)
            if k == k_target:
                return lo
            if k < k_target:
                break
            hi = lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        k = probe(mid)
        if k == k_target:
            return mid
        if k < k_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-11 * max(1.0, abs(hi)):
            break
    raise NonConvergenceError(
        f"the boundary index steps past {k_target} without ever equalling it"
    )


def run_decomposition(
    cfg: RunConfig,
    sc: SimulationConfig | None = None,
    bins: tuple[int, ...] = DEFAULT_TENURE_BINS,
) -> DecompositionResult:
    """Tenure-binned Var(log w) across the three counterfactual economies.

    All three are solved on identical diffusion primitives. When boundary
    matching is on, the frozen outside values of the two restricted
    economies are tuned so every economy stops at the full economy's
    boundary node, which keeps the survival margin common. Panels share one
    seed, so the columns differ only through policies and wages. Any solver
    failure aborts the whole experiment.
    """
    sim = cfg.simulation if sc is None else sc
    full = solve_equilibrium(cfg, CounterfactualMode.FULL)
    k_target = full.worker.k_star
    if cfg.numerics.match_boundary:
        vu_sel = _match_frozen_outside(cfg, CounterfactualMode.SEL, k_target)
        vu_ss = _match_frozen_outside(
            cfg, CounterfactualMode.SEL_SEARCH, k_target, OfferKernel.POINT_MASS
        )
    else:
        vu_sel = cfg.vu_frozen_sel
        vu_ss = cfg.vu_frozen_sel_search
    sel = solve_equilibrium(cfg, CounterfactualMode.SEL, vu_frozen=vu_sel)
    sel_search = solve_equilibrium(
        cfg,
        CounterfactualMode.SEL_SEARCH,
        vu_frozen=vu_ss,
        offer_kernel_override=OfferKernel.POINT_MASS,
    )

    columns = {}
    for key, res in (("sel", sel), ("sel_search", sel_search), ("full", full)):
        panel = simulate_panel(res, sim)
        columns[key] = variance_by_tenure(panel, bins, 0.0)
    rows = [
        DecompositionRow(int(lo), int(hi), a.var_model, b.var_model, c.var_model)
        for (lo, hi), a, b, c in zip(
            zip(bins, bins[1:]), columns["sel"], columns["sel_search"], columns["full"]
        )
    ]
    return DecompositionResult(
        rows=rows,
        full=full,
        sel=sel,
        sel_search=sel_search,
        vu_sel=vu_sel,
        vu_sel_search=vu_ss,
    )


def run_policy_sweep(
    cfg: RunConfig,
    lever: Lever,
    values: tuple[float, ...] | None = None,
) -> SweepResult:
    """Full-economy scalars along one policy lever, ascending.

    Each point warm-starts from the previous converged density. A point
    that fails to converge, or whose stopping region slides off the grid,
    is recorded as a non-converged row with missing scalars and the sweep
    moves on; it also does not seed the next warm start.
    """
    vals = (
        DEFAULT_SWEEP_VALUES[lever]
        if values is None
        else tuple(float(v) for v in values)
    )
    if not vals:
        raise ConfigError("a sweep needs at least one lever value")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("sweep values must be strictly ascending")
    field = _LEVER_FIELD[lever]
    nan = float("nan")
    rows: list[SweepRow] = []
    m_warm: np.ndarray | None = None
    for v in vals:
        p_v = dataclasses.replace(cfg.params, **{field: v})
        try:
            res = solve_equilibrium(
                cfg, CounterfactualMode.FULL, m0=m_warm, params_override=p_v
            )
        except (NonConvergenceError, DegenerateFlowError):
            rows.append(SweepRow(v, nan, nan, nan, nan, False))
            continue
        if res.worker.k_star <= COLLAPSE_BOUNDARY_INDEX:
            rows.append(SweepRow(v, nan, nan, nan, nan, False))
            continue
        rows.append(
            SweepRow(v, res.z_star, res.var_logw, j2j_rate_pde(res), res.mean_wage, True)
        )
        m_warm = res.density.m
    return SweepResult(lever=lever, rows=rows)


@dataclass(frozen=True)
class CalibrationTarget:
    name: str
    target: float
    weight: float


@dataclass(frozen=True)
class CalibrationReport:
    rows: list[tuple[str, float, float, float]]  # name, model, target, weight
    distance: float


def calibration_targets_path() -> Path:
    return Path(str(resources.files("wageladder").joinpath("data/calibration_targets.csv")))


def load_calibration_targets(path: str | Path | None = None) -> list[CalibrationTarget]:
    src = Path(path) if path is not None else calibration_targets_path()
    rows: list[CalibrationTarget] = []
    with open(src, newline="") as fh:
        for rec in csv.DictReader(fh):
            try:
                rows.append(
                    CalibrationTarget(rec["moment"], float(rec["target"]), float(rec["weight"]))
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"malformed calibration target row {rec!r}") from exc
    if not rows:
        raise ConfigError(f"no calibration targets found in {src}")
    return rows


def moment_distance(model_moments, targets, weights) -> float:
    """Weighted squared gap (m - m_hat)' diag(w) (m - m_hat)."""
    m = np.asarray(model_moments, dtype=float)
    t = np.asarray(targets, dtype=float)
    w = np.asarray(weights, dtype=float)
    if m.ndim != 1 or m.shape != t.shape or m.shape != w.shape:
        raise ValueError("moments, targets, and weights must be equal-length vectors")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    d = m - t
    return float(np.sum(w * d * d))


def calibration_moments(
    res: EquilibriumResult, panel: Panel, t_ret: float = 40.0
) -> dict[str, float]:
    """Model counterparts of the shipped calibration targets.

    The survivorship moment is analytic at the solved boundary; the rest
    are panel statistics. Moments that cannot be formed (boundary at or
    above the entry point, too little data) come back as NaN rather than
    aborting the report.
    """
    coeffs = derive_surplus_coeffs(res.params)
    d = res.params.z0 - res.z_star
    if d > 0.0:
        spec = BenchmarkSpec(d=d, mu=coeffs.mu_Z, sigma=coeffs.sigma_Z, t_ret=t_ret)
        never = float(never_end_truncated(spec))
    else:
        never = float("nan")
    peaks = [
        (r.rate, 0.5 * (r.t_lo + r.t_hi))
        for r in empirical_hazard(panel, HAZARD_PROBE_EDGES)
        if np.isfinite(r.rate)
    ]
    peak_years = max(peaks)[1] if peaks else float("nan")
    prof = [(y, mean) for (y, n, mean) in wage_tenure_profile(panel) if y <= 10 and n >= 30]
    if len(prof) >= 2:
        slope = float(np.polyfit([y for y, _ in prof], [m for _, m in prof], 1)[0])
    else:
        slope = float("nan")
    return {
        "never_end_truncated": never,
        "j2j_rate": float(j2j_rate(panel)),
        "hazard_peak_years": float(peak_years),
        "logw_growth_10y": slope,
    }


def evaluate_calibration(
    res: EquilibriumResult,
    panel: Panel,
    targets: list[CalibrationTarget] | None = None,
    t_ret: float = 40.0,
) -> CalibrationReport:
    if targets is None:
        targets = load_calibration_targets()
    moments = calibration_moments(res, panel, t_ret)
    missing = [t.name for t in targets if t.name not in moments]
    if missing:
        raise ConfigError(f"no model moment for target(s): {', '.join(missing)}")
    model = [moments[t.name] for t in targets]
    dist = moment_distance(model, [t.target for t in targets], [t.weight for t in targets])
    rows = [(t.name, mv, t.target, t.weight) for t, mv in zip(targets, model)]
    return CalibrationReport(rows=rows, distance=dist)
