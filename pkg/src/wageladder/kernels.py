"""Counter-addressed random draws and the spell-simulation hot loops.

Every variate is a pure function of (seed, trajectory, step, slot), so a
path never depends on how work is scheduled. Trajectories are split into a
fixed number of chunks; each chunk fills its own accumulators and the chunk
partials are combined in a fixed order afterwards, which keeps results
bit-identical across thread counts. The stepping loop exists twice: a
numba-compiled chunk walker run in parallel, and a vectorized numpy twin
selected by the WAGELADDER_DISABLE_NUMBA environment variable (or used
automatically when numba is missing). Both consume the same bit stream; the
numpy twin can additionally log per-spell events for record assembly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# splitmix64: stream increment and finalizer multipliers
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_TWO_NEG53 = 2.0**-53
_TWO_PI = 2.0 * math.pi

# counter layout: ((trajectory * STEP_CAP + step) * N_SLOTS + slot)
STEP_CAP = 4096
N_SLOTS = 8
SLOT_GAUSS_A = 0
SLOT_GAUSS_B = 1
SLOT_BRIDGE = 2
SLOT_KILL = 3
SLOT_ARRIVAL = 4
SLOT_OFFER = 5

N_CHUNKS = 256

REASON_BOUNDARY = 0
REASON_DESTROYED = 1
REASON_CENSORED = 2
N_REASONS = 3

# cross-section tenure is clamped to this many whole years (last bucket open)
TENURE_CAP = 60
# job-age groups for the cross-section histograms: [0,3), [3,10), 10+
AGE_SPLIT_LO = 3
AGE_SPLIT_HI = 10
# tenure window (whole years) for the mover/stayer split
MOB_LO = 8
MOB_HI = 12


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer, plain-python reference."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def seed_base(seed: int) -> int:
    """Finalized seed; decorrelates small consecutive user seeds."""
    return mix64(seed)


def _mix64_np(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> _U30)) * _MIX_A
    x = (x ^ (x >> _U27)) * _MIX_B
    return x ^ (x >> _U31)


def stream_uniform(seed: int, traj, step, slot) -> np.ndarray:
    """Uniform(0,1) draws addressed by coordinates, vectorized over any arg.

    Never returns exactly 0 or 1, so logs of draws stay finite.
    """
    base = np.uint64(seed_base(seed))
    traj, step, slot = np.broadcast_arrays(
        np.asarray(traj, dtype=np.uint64),
        np.asarray(step, dtype=np.uint64),
        np.asarray(slot, dtype=np.uint64),
    )
    scalar = traj.ndim == 0
    counter = (
        np.atleast_1d(traj) * np.uint64(STEP_CAP) + np.atleast_1d(step)
    ) * np.uint64(N_SLOTS) + np.atleast_1d(slot)
    x = _mix64_np(base + counter * GOLDEN)
    out = ((x >> _U11).astype(np.float64) + 0.5) * _TWO_NEG53
    if scalar:
        return float(out[0])
    return out


def backend_name() -> str:
    """Which hot-loop implementation a simulation call will use."""
    flag = os.environ.get("WAGELADDER_DISABLE_NUMBA", "").strip()
    if flag not in ("", "0") or not _HAVE_NUMBA:
        return "numpy"
    return "numba"


@dataclass
class RawPanel:
    """Chunk-combined accumulators from one simulation run.

    dur_hist[d, r] counts spells that closed with duration d steps for
    reason r; censored rows carry exposure only. An accepted offer moves
    the worker within a spell, so it bumps n_moves but closes nothing.
    The tenure arrays hold annual cross-section moments of log wages by
    whole years into the spell. age_hist and mob_hist are node histograms
    of the cross-section split by tenure group and by whether the worker
    has moved during the current spell.
    """

    dur_hist: np.ndarray
    ten_count: np.ndarray
    ten_sum: np.ndarray
    ten_sumsq: np.ndarray
    age_hist: np.ndarray
    mob_hist: np.ndarray
    n_moves: int
    backend: str
    end_events: tuple | None = None
    snap_events: tuple | None = None


def _alloc(n_steps: int, K: int) -> tuple:
    return (
        np.zeros((n_steps + 1, N_REASONS), dtype=np.int64),
        np.zeros(TENURE_CAP + 1, dtype=np.int64),
        np.zeros(TENURE_CAP + 1, dtype=np.float64),
        np.zeros(TENURE_CAP + 1, dtype=np.float64),
        np.zeros((3, K), dtype=np.int64),
        np.zeros((2, K), dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# numba chunk walker

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

if _HAVE_NUMBA:
    _STEP_CAP_U = np.uint64(STEP_CAP)
    _N_SLOTS_U = np.uint64(N_SLOTS)
    _S_GA = np.uint64(SLOT_GAUSS_A)
    _S_GB = np.uint64(SLOT_GAUSS_B)
    _S_BR = np.uint64(SLOT_BRIDGE)
    _S_KI = np.uint64(SLOT_KILL)
    _S_AR = np.uint64(SLOT_ARRIVAL)
    _S_OF = np.uint64(SLOT_OFFER)

    @njit(cache=True, inline="always")
    def _u01(base, traj, step, slot):
        c = (traj * _STEP_CAP_U + step) * _N_SLOTS_U + slot
        x = base + c * GOLDEN
        x = (x ^ (x >> _U30)) * _MIX_A
        x = (x ^ (x >> _U27)) * _MIX_B
        x = x ^ (x >> _U31)
        return (np.float64(x >> _U11) + 0.5) * _TWO_NEG53

    @njit(cache=True, inline="always")
    def _lin(arr, z, z_min, inv_dz, K):
        x = (z - z_min) * inv_dz
        if x <= 0.0:
            return arr[0]
        i = int(x)
        if i >= K - 1:
            return arr[K - 1]
        f = x - i
        return arr[i] + (arr[i + 1] - arr[i]) * f

    @njit(cache=True)
    def _chunk_walk(
        base,
        t_lo,
        t_hi,
        n_steps,
        spy,
        burn_year,
        z0,
        z_star,
        z_min,
        z_max,
        inv_dz,
        K,
        mu_dt,
        sig_sqdt,
        neg2_inv,
        p_kill,
        f_wedge,
        nodes,
        parr,
        V,
        wage,
        offer_cdf,
        reenter,
        snapshots_on,
        dur_hist,
        ten_count,
        ten_sum,
        ten_sumsq,
        age_hist,
        mob_hist,
        moves,
    ):
        for i in range(t_lo, t_hi):
            ti = np.uint64(i)
            z = z0
            tenure = 0
            moved = False
            alive = True
            for t in range(n_steps):
                tu = np.uint64(t)
                if p_kill > 0.0 and _u01(base, ti, tu, _S_KI) < p_kill:
                    dur_hist[tenure + 1, REASON_DESTROYED] += 1
                    if not reenter:
                        alive = False
                    else:
                        tenure = 0
                        moved = False
                        z = z0
                else:
                    jumped = False
                    pa = _lin(parr, z, z_min, inv_dz, K)
                    if pa > 0.0 and _u01(base, ti, tu, _S_AR) < pa:
                        u = _u01(base, ti, tu, _S_OF)
                        k = np.searchsorted(offer_cdf, u, side="right")
                        if k > K - 1:
                            k = K - 1
                        if V[k] > _lin(V, z, z_min, inv_dz, K) + f_wedge:
                            # the move is within the spell: the clock runs on
                            moves[0] += 1
                            moved = True
                            z = nodes[k]
                            tenure += 1
                            jumped = True
                    if not jumped:
                        u1 = _u01(base, ti, tu, _S_GA)
                        u2 = _u01(base, ti, tu, _S_GB)
                        eps = math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)
                        zn = z + mu_dt + sig_sqdt * eps
                        hit = zn <= z_star
                        if not hit:
                            ph = math.exp((z - z_star) * (zn - z_star) * neg2_inv)
                            if _u01(base, ti, tu, _S_BR) < ph:
                                hit = True
                        if hit:
                            dur_hist[tenure + 1, REASON_BOUNDARY] += 1
                            if not reenter:
                                alive = False
                            else:
                                tenure = 0
                                moved = False
                                z = z0
                        else:
                            if zn > z_max:
                                zn = 2.0 * z_max - zn
                                if zn <= z_star:
                                    zn = z_star + 1e-12
                            z = zn
                            tenure += 1
                if not alive:
                    break
                if snapshots_on and (t + 1) % spy == 0 and (t + 1) // spy > burn_year:
                    ty = tenure // spy
                    if ty > TENURE_CAP:
                        ty = TENURE_CAP
                    lw = math.log(_lin(wage, z, z_min, inv_dz, K))
                    ten_count[ty] += 1
                    ten_sum[ty] += lw
                    ten_sumsq[ty] += lw * lw
                    kn = int((z - z_min) * inv_dz + 0.5)
                    if kn < 0:
                        kn = 0
                    elif kn > K - 1:
                        kn = K - 1
                    if ty < AGE_SPLIT_LO:
                        age_hist[0, kn] += 1
                    elif ty < AGE_SPLIT_HI:
                        age_hist[1, kn] += 1
                    else:
                        age_hist[2, kn] += 1
                    if MOB_LO <= ty < MOB_HI:
                        mob_hist[1 if moved else 0, kn] += 1
            if alive:
                dur_hist[tenure, REASON_CENSORED] += 1

    @njit(cache=True, parallel=True)
    def _run_chunks(
        base,
        bounds,
        n_steps,
        spy,
        burn_year,
        z0,
        z_star,
        z_min,
        z_max,
        inv_dz,
        K,
        mu_dt,
        sig_sqdt,
        neg2_inv,
        p_kill,
        f_wedge,
        nodes,
        parr,
        V,
        wage,
        offer_cdf,
        reenter,
        snapshots_on,
        dur3,
        cnt3,
        sum3,
        sq3,
        age3,
        mob3,
        mv3,
    ):
        for c in prange(N_CHUNKS):
            _chunk_walk(
                base,
                bounds[c],
                bounds[c + 1],
                n_steps,
                spy,
                burn_year,
                z0,
                z_star,
                z_min,
                z_max,
                inv_dz,
                K,
                mu_dt,
                sig_sqdt,
                neg2_inv,
                p_kill,
                f_wedge,
                nodes,
                parr,
                V,
                wage,
                offer_cdf,
                reenter,
                snapshots_on,
                dur3[c],
                cnt3[c],
                sum3[c],
                sq3[c],
                age3[c],
                mob3[c],
                mv3[c],
            )


def _run_numba(n_traj, n_steps, spy, burn_year, scalars, tables, reenter, snapshots_on):
    (z0, z_star, z_min, z_max, inv_dz, K, mu_dt, sig_sqdt, neg2_inv, p_kill,
     f_wedge, base) = scalars
    nodes, parr, V, wage, offer_cdf = tables
    bounds = (np.arange(N_CHUNKS + 1, dtype=np.int64) * n_traj) // N_CHUNKS
    dur3 = np.zeros((N_CHUNKS, n_steps + 1, N_REASONS), dtype=np.int64)
    cnt3 = np.zeros((N_CHUNKS, TENURE_CAP + 1), dtype=np.int64)
    sum3 = np.zeros((N_CHUNKS, TENURE_CAP + 1), dtype=np.float64)
    sq3 = np.zeros((N_CHUNKS, TENURE_CAP + 1), dtype=np.float64)
    age3 = np.zeros((N_CHUNKS, 3, K), dtype=np.int64)
    mob3 = np.zeros((N_CHUNKS, 2, K), dtype=np.int64)
    mv3 = np.zeros((N_CHUNKS, 1), dtype=np.int64)
    _run_chunks(
        np.uint64(base),
        bounds,
        n_steps,
        spy,
        burn_year,
        z0,
        z_star,
        z_min,
        z_max,
        inv_dz,
        K,
        mu_dt,
        sig_sqdt,
        neg2_inv,
        p_kill,
        f_wedge,
        nodes,
        parr,
        V,
        wage,
        offer_cdf,
        reenter,
        snapshots_on,
        dur3,
        cnt3,
        sum3,
        sq3,
        age3,
        mob3,
        mv3,
    )
    return RawPanel(
        dur_hist=dur3.sum(axis=0),
        ten_count=cnt3.sum(axis=0),
        ten_sum=sum3.sum(axis=0),
        ten_sumsq=sq3.sum(axis=0),
        age_hist=age3.sum(axis=0),
        mob_hist=mob3.sum(axis=0),
        n_moves=int(mv3.sum()),
        backend="numba",
    )


# ---------------------------------------------------------------------------
# numpy lockstep twin


def _u_np(base_u64, traj_u64, step: int, slot: int) -> np.ndarray:
    counter = (
        traj_u64 * np.uint64(STEP_CAP) + np.uint64(step)
    ) * np.uint64(N_SLOTS) + np.uint64(slot)
    x = _mix64_np(base_u64 + counter * GOLDEN)
    return ((x >> _U11).astype(np.float64) + 0.5) * _TWO_NEG53


def _run_numpy(
    n_traj, n_steps, spy, burn_year, scalars, tables, reenter, snapshots_on, collect
):
    (z0, z_star, z_min, z_max, inv_dz, K, mu_dt, sig_sqdt, neg2_inv, p_kill,
     f_wedge, base) = scalars
    nodes, parr, V, wage, offer_cdf = tables
    dur_hist, ten_count, ten_sum, ten_sumsq, age_hist, mob_hist = _alloc(n_steps, K)

    base_u = np.uint64(base)
    traj_u = np.arange(n_traj, dtype=np.uint64)
    z = np.full(n_traj, z0, dtype=np.float64)
    tenure = np.zeros(n_traj, dtype=np.int64)
    moved = np.zeros(n_traj, dtype=bool)
    alive = np.ones(n_traj, dtype=bool)
    spell_ord = np.zeros(n_traj, dtype=np.int64)
    cycle_moves = np.zeros(n_traj, dtype=np.int64)
    moves_total = 0
    end_logs: list[tuple] = []
    snap_logs: list[tuple] = []

    def _close(idx, reason: int, extra_step: int) -> None:
        # extra_step is 1 when the closing step itself belongs to the spell
        if idx.size == 0:
            return
        dur = tenure[idx] + extra_step
        np.add.at(dur_hist, (dur, reason), 1)
        if collect:
            end_logs.append(
                (
                    idx.astype(np.int64),
                    dur.copy(),
                    np.full(idx.size, reason, dtype=np.int64),
                    cycle_moves[idx].copy(),
                    spell_ord[idx].copy(),
                )
            )
        spell_ord[idx] += 1

    for t in range(n_steps):
        act = np.nonzero(alive)[0]
        if act.size == 0:
            break
        tu = traj_u[act]

        if p_kill > 0.0:
            killed = _u_np(base_u, tu, t, SLOT_KILL) < p_kill
        else:
            killed = np.zeros(act.size, dtype=bool)
        g_kill = act[killed]
        rest = act[~killed]
        tu_rest = traj_u[rest]

        g_jump = np.empty(0, dtype=np.int64)
        land = np.empty(0, dtype=np.int64)
        if rest.size:
            pa = np.interp(z[rest], nodes, parr)
            fired = np.zeros(rest.size, dtype=bool)
            pos = pa > 0.0
            if np.any(pos):
                u_arr = _u_np(base_u, tu_rest[pos], t, SLOT_ARRIVAL)
                fired[pos] = u_arr < pa[pos]
            cand = rest[fired]
            if cand.size:
                u_off = _u_np(base_u, traj_u[cand], t, SLOT_OFFER)
                k = np.searchsorted(offer_cdf, u_off, side="right")
                np.clip(k, 0, K - 1, out=k)
                acc = V[k] > np.interp(z[cand], nodes, V) + f_wedge
                g_jump = cand[acc]
                land = k[acc]
            sel = np.ones(rest.size, dtype=bool)
            sel[np.searchsorted(rest, g_jump)] = False
            g_dif = rest[sel]
        else:
            g_dif = rest

        g_hit = np.empty(0, dtype=np.int64)
        g_live = np.empty(0, dtype=np.int64)
        zn_live = np.empty(0, dtype=np.float64)
        if g_dif.size:
            tu_dif = traj_u[g_dif]
            u1 = _u_np(base_u, tu_dif, t, SLOT_GAUSS_A)
            u2 = _u_np(base_u, tu_dif, t, SLOT_GAUSS_B)
            eps = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
            zn = z[g_dif] + mu_dt + sig_sqdt * eps
            hit = zn <= z_star
            above = ~hit
            if np.any(above):
                ph = np.exp((z[g_dif][above] - z_star) * (zn[above] - z_star) * neg2_inv)
                u_b = _u_np(base_u, tu_dif[above], t, SLOT_BRIDGE)
                bridge_hit = u_b < ph
                sub = np.nonzero(above)[0]
                hit[sub[bridge_hit]] = True
            g_hit = g_dif[hit]
            g_live = g_dif[~hit]
            zn_live = zn[~hit]
            over = zn_live > z_max
            if np.any(over):
                zn_live = np.where(over, 2.0 * z_max - zn_live, zn_live)
                np.clip(zn_live, z_star + 1e-12, None, out=zn_live)

        # close ending spells, then restart or retire the trajectories
        _close(g_kill, REASON_DESTROYED, 1)
        _close(g_hit, REASON_BOUNDARY, 1)
        if g_jump.size:
            # an accepted offer relocates the worker inside the spell
            moves_total += g_jump.size
            cycle_moves[g_jump] += 1
            z[g_jump] = nodes[land]
            tenure[g_jump] += 1
            moved[g_jump] = True
        g_out = np.concatenate((g_kill, g_hit))
        if g_out.size:
            if reenter:
                z[g_out] = z0
                tenure[g_out] = 0
                moved[g_out] = False
                cycle_moves[g_out] = 0
            else:
                alive[g_out] = False
        if g_live.size:
            z[g_live] = zn_live
            tenure[g_live] += 1

        if snapshots_on and (t + 1) % spy == 0 and (t + 1) // spy > burn_year:
            obs = np.nonzero(alive)[0]
            if obs.size:
                ty = np.minimum(tenure[obs] // spy, TENURE_CAP)
                wobs = np.interp(z[obs], nodes, wage)
                lw = np.log(wobs)
                np.add.at(ten_count, ty, 1)
                np.add.at(ten_sum, ty, lw)
                np.add.at(ten_sumsq, ty, lw * lw)
                kn = np.rint((z[obs] - z_min) * inv_dz).astype(np.int64)
                np.clip(kn, 0, K - 1, out=kn)
                grp = np.where(ty < AGE_SPLIT_LO, 0, np.where(ty < AGE_SPLIT_HI, 1, 2))
                np.add.at(age_hist, (grp, kn), 1)
                win = (ty >= MOB_LO) & (ty < MOB_HI)
                if np.any(win):
                    np.add.at(
                        mob_hist, (moved[obs][win].astype(np.int64), kn[win]), 1
                    )
                if collect:
                    snap_logs.append(
                        (
                            obs.astype(np.int64),
                            spell_ord[obs].copy(),
                            tenure[obs].copy(),
                            wobs.copy(),
                        )
                    )

    tail = np.nonzero(alive)[0]
    _close(tail, REASON_CENSORED, 0)

    end_events = None
    snap_events = None
    if collect:
        if end_logs:
            end_events = tuple(
                np.concatenate([log[j] for log in end_logs]) for j in range(5)
            )
        else:
            end_events = tuple(np.empty(0, dtype=np.int64) for _ in range(5))
        if snap_logs:
            snap_events = tuple(
                np.concatenate([log[j] for log in snap_logs]) for j in range(4)
            )
        else:
            snap_events = (
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.float64),
            )
    return RawPanel(
        dur_hist=dur_hist,
        ten_count=ten_count,
        ten_sum=ten_sum,
        ten_sumsq=ten_sumsq,
        age_hist=age_hist,
        mob_hist=mob_hist,
        n_moves=moves_total,
        backend="numpy",
        end_events=end_events,
        snap_events=snap_events,
    )


def run_panel(
    *,
    seed: int,
    n_traj: int,
    n_steps: int,
    steps_per_year: int,
    burn_year: int,
    z0: float,
    z_star: float,
    z_min: float,
    z_max: float,
    dz: float,
    mu_dt: float,
    sig_sqdt: float,
    sig2_dt: float,
    p_kill: float,
    nodes: np.ndarray,
    parr: np.ndarray,
    V: np.ndarray,
    wage: np.ndarray,
    offer_cdf: np.ndarray,
    reenter: bool,
    snapshots_on: bool,
    collect: bool = False,
    f_wedge: float = 0.0,
) -> RawPanel:
    """Walk trajectories and return combined accumulators.

    collect=True forces the numpy twin so per-spell events can be logged.
    """
    if n_steps > STEP_CAP:
        raise ValueError(
            f"horizon of {n_steps} steps exceeds the counter budget of {STEP_CAP}"
        )
    K = int(nodes.shape[0])
    scalars = (
        float(z0),
        float(z_star),
        float(z_min),
        float(z_max),
        1.0 / float(dz),
        K,
        float(mu_dt),
        float(sig_sqdt),
        -2.0 / float(sig2_dt),
        float(p_kill),
        float(f_wedge),
        seed_base(seed),
    )
    tables = (
        np.ascontiguousarray(nodes, dtype=np.float64),
        np.ascontiguousarray(parr, dtype=np.float64),
        np.ascontiguousarray(V, dtype=np.float64),
        np.ascontiguousarray(wage, dtype=np.float64),
        np.ascontiguousarray(offer_cdf, dtype=np.float64),
    )
    if collect or backend_name() == "numpy":
        return _run_numpy(
            n_traj, n_steps, steps_per_year, burn_year, scalars, tables,
            reenter, snapshots_on, collect,
        )
    return _run_numba(
        n_traj, n_steps, steps_per_year, burn_year, scalars, tables,
        reenter, snapshots_on,
    )
