"""Stationary population balance on the grid in conservative flux form.

Mass diffuses with the surplus process, is killed at a nodewise rate, leaves
through an absorbing lower edge at the quit boundary, is injected by an entry
source, and is reshuffled by job-to-job moves. Interior transport uses
face fluxes

    J_{k+1/2} = mean(drift) * mean(m) - (vol2[k+1] m[k+1] - vol2[k] m[k]) / (2 dz)

with zero flux through the outer domain edges, so without kill, absorption,
entry, or moves the scheme conserves mass to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid


class DegenerateFlowError(RuntimeError):
    """The stationary system is singular or produced a non-finite density."""


@dataclass(frozen=True)
class FlowSpec:
    """Coefficients of the stationary balance.

    kill is the nodewise exit rate, entry the nodewise source density,
    j2j_out the nodewise move rate lam(a) * P(accept), and j2j_in_kernel the
    row-normalized landing density (rows index the origin node, each nonzero
    row sums to one against dz).
    """

    drift: np.ndarray
    vol2: np.ndarray
    kill: np.ndarray
    entry: np.ndarray
    j2j_out: np.ndarray | None = None
    j2j_in_kernel: np.ndarray | None = None

    def has_moves(self) -> bool:
        return self.j2j_out is not None and np.any(self.j2j_out > 0.0)


@dataclass(frozen=True)
class StationaryDensity:
    m: np.ndarray  # normalized, sum(m) * dz equals one
    grid: Grid
    k_star: int
    raw_mass: float  # population scale before normalization
    entry_total: float


def _flux_matrix(spec: FlowSpec, g: Grid) -> np.ndarray:
    """Dense matrix of the transport term -dJ/dz with no-flux outer edges."""
    K = g.K
    dz = g.dz
    A = np.zeros((K, K))
    mu_face = 0.5 * (spec.drift[:-1] + spec.drift[1:])
    # J_{k+1/2} coefficients on (m_k, m_{k+1})
    c_left = 0.5 * mu_face + spec.vol2[:-1] / (2.0 * dz)
    c_right = 0.5 * mu_face - spec.vol2[1:] / (2.0 * dz)
    rows = np.arange(K - 1)
    # row k gets -J_{k+1/2}/dz, row k+1 gets +J_{k+1/2}/dz
    A[rows, rows] -= c_left / dz
    A[rows, rows + 1] -= c_right / dz
    A[rows + 1, rows] += c_left / dz
    A[rows + 1, rows + 1] += c_right / dz
    return A


def assemble_flux_system(spec: FlowSpec, g: Grid, k_star: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense stationary system A m = rhs with held-out rows below k_star.

    Rows below k_star force m = 0; the flux into the edge k_star - 1/2 then
    acts as absorption because it references those zeroed neighbors.
    """
    K = g.K
    if spec.drift.shape != (K,) or spec.vol2.shape != (K,):
        raise ValueError("drift and vol2 must match the grid length")
    A = _flux_matrix(spec, g)
    A[np.arange(K), np.arange(K)] -= spec.kill
    if spec.has_moves():
        out = spec.j2j_out
        A[np.arange(K), np.arange(K)] -= out
        # inflow at j from origin k: out_k * kernel[k, j] * dz
        A += (spec.j2j_in_kernel * out[:, None]).T * g.dz
    rhs = -spec.entry.copy()
    if k_star > 0:
        if spec.has_moves():
            # landings below the boundary would be silently discarded by the
            # held-out rows; reject the kernel instead of leaking mass
            into_dead = spec.j2j_in_kernel[:, :k_star] * spec.j2j_out[:, None]
            if np.any(into_dead > 0.0):
                raise ValueError("j2j landing kernel puts mass below the absorbing boundary")
        A[:k_star, :] = 0.0
        A[np.arange(k_star), np.arange(k_star)] = 1.0
        rhs[:k_star] = 0.0
    return A, rhs


def solve_stationary(spec: FlowSpec, g: Grid, k_star: int = 0) -> StationaryDensity:
    """Solve for the stationary density and normalize it to unit mass.

    With no exit channel and no entry the raw system is singular up to scale;
    the last equation is then replaced by the normalization row. Otherwise the
    raw solve fixes the population scale entry / exit, recorded as raw_mass.
    """
    A, rhs = assemble_flux_system(spec, g, k_star)
    entry_total = float(np.sum(spec.entry) * g.dz)
    no_exit = k_star == 0 and not np.any(spec.kill > 0.0)
    if no_exit and entry_total > 0.0:
        raise DegenerateFlowError(
            "entry with no exit channel: no absorbing boundary and no kill rate"
        )
    closed = no_exit and entry_total == 0.0
    if closed:
        A[-1, :] = g.dz
        rhs = np.zeros(g.K)
        rhs[-1] = 1.0
    try:
        m = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFlowError(f"stationary system is singular: {exc}") from exc
    if not np.all(np.isfinite(m)):
        raise DegenerateFlowError("stationary solve produced non-finite mass")
    raw_mass = float(np.sum(m) * g.dz)
    if raw_mass <= 0.0:
        raise DegenerateFlowError(f"stationary solve produced mass {raw_mass}")
    m = np.where(np.abs(m) < 1e-14 * np.max(np.abs(m)), 0.0, m)
    if np.any(m < 0.0):
        worst = float(m.min())
        if worst < -1e-9 * float(np.max(m)):
            raise DegenerateFlowError(f"stationary density has negative mass {worst}")
        m = np.maximum(m, 0.0)
    m = m / (np.sum(m) * g.dz)
    return StationaryDensity(
        m=m, grid=g, k_star=k_star, raw_mass=raw_mass, entry_total=entry_total
    )


def separation_flux(dens: StationaryDensity, spec: FlowSpec) -> float:
    """Outflow rate of the normalized density: edge flux plus killed mass.

    The edge term is the magnitude of the face flux across k_star - 1/2; it
    vanishes for a reflecting lower edge (k_star = 0).
    """
    g = dens.grid
    m = dens.m
    k = dens.k_star
    edge = 0.0
    if k > 0:
        mu_face = 0.5 * (spec.drift[k - 1] + spec.drift[k])
        j_edge = 0.5 * mu_face * (m[k - 1] + m[k]) - (
            spec.vol2[k] * m[k] - spec.vol2[k - 1] * m[k - 1]
        ) / (2.0 * g.dz)
        edge = abs(j_edge)
    killed = float(np.sum(spec.kill * m) * g.dz)
    return edge + killed
