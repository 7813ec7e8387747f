"""Worker value problem: obstacle system with optional on-the-job search.

The worker earns a nodewise wage, faces the diffusive generator in surplus,
and may pay a convex effort cost to receive outside offers drawn from a fixed
weight vector. Quitting into unemployment yields VU - F, and the same
separation cost wedges poaching: an outside offer is worth taking only when
it beats the incumbent value by F. The solution solves the complementarity
system

    min( r V - max_a [ w - c(a) + L V + lam(a) G(V) ],  r (V - (VU - F)) ) = 0

where G is the expected gain of accepting a dominating offer. Two solvers
are provided: policy iteration with exact banded policy evaluation, and a
damped implicit time-stepping scheme whose step size is chosen so the update
map is monotone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .grid import ActionGrid, Grid, TridiagonalOperator
from .params import ModelParams, arrival_rate, search_cost


class NoBoundaryError(RuntimeError):
    """The continuation region has no interior lower edge on this grid."""


class IterationLimitError(RuntimeError):
    """An iterative solver hit its iteration cap before meeting tolerance."""


@dataclass(frozen=True)
class WorkerEnv:
    grid: Grid
    actions: ActionGrid
    op: TridiagonalOperator
    wage: np.ndarray  # (K,)
    VU: float
    F: float
    params: ModelParams
    offer_weights: np.ndarray | None = None  # nodewise density, sums to one against dz
    search_on: bool = True

    @property
    def obstacle(self) -> float:
        return self.VU - self.F

    def __post_init__(self) -> None:
        K = self.grid.K
        if self.wage.shape != (K,):
            raise ValueError("wage vector must match the grid length")
        if self.search_on and self.offer_weights is not None:
            total = float(np.sum(self.offer_weights) * self.grid.dz)
            if abs(total - 1.0) > 1e-6:
                raise ValueError(f"offer weights must integrate to 1, got {total}")


@dataclass(frozen=True)
class WorkerSolution:
    V: np.ndarray
    a_opt: np.ndarray
    continue_mask: np.ndarray
    k_star: int
    iterations: int
    residual: float
    change_trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def offer_point_mass(g: Grid, z_loc: float) -> np.ndarray:
    """Offer weights concentrating all mass on the node nearest z_loc."""
    w = np.zeros(g.K)
    w[g.index_nearest(z_loc)] = 1.0 / g.dz
    return w


def _action_tables(env: WorkerEnv) -> tuple[np.ndarray, np.ndarray]:
    lam = np.array([arrival_rate(a, env.params) for a in env.actions.values])
    cost = np.array([search_cost(a, env.params) for a in env.actions.values])
    return lam, cost


def _gain_tables(V: np.ndarray, weights: np.ndarray, dz: float):
    """Sorted-value suffix sums enabling O(log K) gain lookups.

    Returns (sorted values, suffix weight sums, suffix weighted-value sums)
    with a trailing zero so searchsorted indices can address the empty tail.
    """
    order = np.argsort(V, kind="stable")
    Vs = V[order]
    ws = weights[order] * dz
    cw = np.zeros(V.shape[0] + 1)
    cwv = np.zeros(V.shape[0] + 1)
    cw[:-1] = np.cumsum(ws[::-1])[::-1]
    cwv[:-1] = np.cumsum((ws * Vs)[::-1])[::-1]
    return Vs, cw, cwv


def _gain_prob_expect(V: np.ndarray, env: WorkerEnv):
    """G0_k = sum_j max(V_j - V_k - F, 0) w_j dz plus acceptance mass and sum.

    Returns (G0, P, S) where P_k is the accepted offer mass and S_k the
    accepted weighted value sum, so G0 = S - (V + F) P. Only offers beating
    the incumbent value by the separation cost clear the move.
    """
    K = env.grid.K
    if not env.search_on or env.offer_weights is None:
        zero = np.zeros(K)
        return zero, zero.copy(), zero.copy()
    Vs, cw, cwv = _gain_tables(V, env.offer_weights, env.grid.dz)
    thresh = V + env.F
    idx = np.searchsorted(Vs, thresh, side="right")
    P = cw[idx]
    S = cwv[idx]
    G0 = np.maximum(S - thresh * P, 0.0)
    return G0, P, S


def offer_gain(V: np.ndarray, k: int, a: float, env: WorkerEnv) -> float:
    """Arrival-weighted expected gain of search at effort a from node k."""
    G0, _, _ = _gain_prob_expect(V, env)
    return float(arrival_rate(a, env.params) * G0[k])


def _improve(V: np.ndarray, env: WorkerEnv, lam_a: np.ndarray, cost_a: np.ndarray):
    """Best action per node given current values.

    Returns (action, arrival, cost, net gain at the best action, P, S). Ties
    go to the smallest action because argmax keeps the first maximizer.
    """
    G0, P, S = _gain_prob_expect(V, env)
    if not env.search_on or env.offer_weights is None:
        K = env.grid.K
        zeros = np.zeros(K)
        return zeros, zeros.copy(), zeros.copy(), zeros.copy(), P, S
    net = G0[:, None] * lam_a[None, :] - cost_a[None, :]
    ai = np.argmax(net, axis=1)
    rows = np.arange(env.grid.K)
    return env.actions.values[ai], lam_a[ai], cost_a[ai], net[rows, ai], P, S


def _row_bands(env: WorkerEnv):
    """Generator in row-organized 5-band form (columns k-2..k+2 per row k)."""
    op = env.op
    K = op.K
    l2 = np.zeros(K)
    l1 = np.zeros(K)
    d0 = op.diag.copy()
    u1 = np.zeros(K)
    u2 = np.zeros(K)
    l1[1:] = op.lower
    u1[:-1] = op.upper
    u2[0] = op.corner_lo
    l2[-1] = op.corner_hi
    return l2, l1, d0, u1, u2


def _solve_rows_banded(l2, l1, d0, u1, u2, rhs) -> np.ndarray:
    """Solve the pentadiagonal system given row-organized bands."""
    K = d0.shape[0]
    ab = np.zeros((5, K))
    ab[0, 2:] = u2[:-2]
    ab[1, 1:] = u1[:-1]
    ab[2, :] = d0
    ab[3, :-1] = l1[1:]
    ab[4, :-2] = l2[2:]
    return solve_banded((2, 2), ab, rhs)


def complementarity_residual(V: np.ndarray, env: WorkerEnv) -> float:
    """Sup-norm of the flow-units residual of the obstacle system at V."""
    lam_a, cost_a = _action_tables(env)
    _, _, _, net_best, _, _ = _improve(V, env, lam_a, cost_a)
    flow = env.wage + env.op.apply(V) + net_best
    r = env.params.r
    res = np.minimum(r * V - flow, r * (V - env.obstacle))
    return float(np.max(np.abs(res)))


def _extract_masks(V: np.ndarray, env: WorkerEnv) -> tuple[np.ndarray, int]:
    scale = max(1.0, abs(env.obstacle))
    cont = V > env.obstacle + 1e-9 * scale
    if not cont.any():
        return cont, env.grid.K
    k_star = int(np.argmax(cont))
    if not cont[k_star:].all():
        raise RuntimeError("continuation region is not an upper interval")
    return cont, k_star


def solve_obstacle_pi(
    env: WorkerEnv,
    tol: float = 1e-10,
    max_iter: int = 500,
    V0: np.ndarray | None = None,
) -> WorkerSolution:
    """Policy iteration with exact banded policy evaluation.

    Acceptance sets and offer gains for the nonlocal term are frozen at the
    current values during each evaluation; the reported residual is computed
    fresh at the returned values. tol is in value units, so the stopping test
    is residual <= r * tol in flow units. V0 warm-starts the iteration.
    """
    r = env.params.r
    lam_a, cost_a = _action_tables(env)
    V = V0.copy() if V0 is not None else np.maximum(env.wage / r, env.obstacle)
    residuals = []
    for it in range(1, max_iter + 1):
        a, lam, cost, net_best, P, S = _improve(V, env, lam_a, cost_a)
        flow = env.wage + env.op.apply(V) + net_best
        res = float(np.max(np.abs(np.minimum(r * V - flow, r * (V - env.obstacle)))))
        residuals.append(res)
        if res <= r * tol:
            cont, k_star = _extract_masks(V, env)
            a = np.where(cont, a, 0.0)
            return WorkerSolution(
                V=V,
                a_opt=a,
                continue_mask=cont,
                k_star=k_star,
                iterations=it - 1,
                residual=res,
                change_trace=np.asarray(residuals),
            )
        # improvement step for the stop/continue choice: keep the branch the
        # residual min selects, i.e. continue where flow beats r * obstacle
        stop = flow <= r * env.obstacle
        l2, l1, d0, u1, u2 = _row_bands(env)
        l2, l1 = -l2, -l1
        d0 = r + lam * P - d0
        u1, u2 = -u1, -u2
        rhs = env.wage - cost + lam * S
        for band in (l2, l1, u1, u2):
            band[stop] = 0.0
        d0[stop] = 1.0
        rhs[stop] = env.obstacle
        V = _solve_rows_banded(l2, l1, d0, u1, u2, rhs)
    raise IterationLimitError(
        f"policy iteration did not converge in {max_iter} iterations "
        f"(last residual {residuals[-1]:.3e})"
    )


def solve_obstacle_vi(
    env: WorkerEnv,
    tol: float = 1e-9,
    max_iter: int = 200000,
    theta: float = 1.0,
    dt: float = 0.0,
    check_every: int = 25,
) -> WorkerSolution:
    """Damped implicit time stepping toward the obstacle solution.

    Each sweep applies V <- (1-theta) V + theta (V/dt + rhs)/(r + 1/dt) with
    rhs the obstacle-clipped optimal flow at the current values. With dt at
    most the reciprocal of the largest local outflow rate the update map is
    monotone, so starting from the obstacle the iterates increase toward the
    solution. dt=0 selects that step automatically. tol is in value units.
    """
    r = env.params.r
    lam_a, cost_a = _action_tables(env)
    if dt <= 0.0:
        lam_bar = float(lam_a.max()) if env.search_on and env.offer_weights is not None else 0.0
        d_max = float(np.max(np.abs(env.op.diag))) + lam_bar
        dt = 0.9 / d_max
    denom = r + 1.0 / dt
    obstacle_flow = r * env.obstacle
    V = np.full(env.grid.K, env.obstacle)
    changes = np.empty(max_iter)
    a = np.zeros(env.grid.K)
    for it in range(1, max_iter + 1):
        a, lam, cost, net_best, P, S = _improve(V, env, lam_a, cost_a)
        flow = env.wage + env.op.apply(V) + net_best
        rhs = np.maximum(flow, obstacle_flow)
        V_new = V + theta * ((V / dt + rhs) / denom - V)
        changes[it - 1] = float(np.max(np.abs(V_new - V)))
        V = V_new
        if it % check_every == 0 or changes[it - 1] == 0.0:
            res = complementarity_residual(V, env)
            if res <= r * tol:
                cont, k_star = _extract_masks(V, env)
                a = np.where(cont, a, 0.0)
                return WorkerSolution(
                    V=V,
                    a_opt=a,
                    continue_mask=cont,
                    k_star=k_star,
                    iterations=it,
                    residual=res,
                    change_trace=changes[:it].copy(),
                )
    raise IterationLimitError(
        f"time stepping did not converge in {max_iter} sweeps "
        f"(last residual {complementarity_residual(V, env):.3e})"
    )


def free_boundary(sol: WorkerSolution, g: Grid) -> float:
    """Location of the lowest continuation node.

    Raises NoBoundaryError when nothing is continued; warns when the
    continuation region covers the whole grid, since the true edge then lies
    below z_min.
    """
    if sol.k_star >= g.K:
        raise NoBoundaryError("no continuation region on this grid")
    if sol.k_star == 0:
        warnings.warn(
            "continuation region reaches the bottom node; the free boundary "
            "is below z_min",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(g.nodes[sol.k_star])


def smooth_fit_residual(sol: WorkerSolution, g: Grid) -> float:
    """One-sided slope |V[k*+1] - V[k*]| / dz at the free boundary.

    The obstacle is flat, so exact smooth pasting would make this vanish;
    on the grid it shrinks linearly with dz. All-stopped solutions return 0
    since the values are identically the obstacle.
    """
    if sol.k_star >= g.K:
        return 0.0
    if sol.k_star == g.K - 1:
        raise NoBoundaryError("free boundary sits on the top edge")
    return float(abs(sol.V[sol.k_star + 1] - sol.V[sol.k_star]) / g.dz)
