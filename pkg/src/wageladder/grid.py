"""Surplus grid and monotone discrete generators.

The generator is upwind in the drift (positive part with the forward
difference, negative part with the backward difference) and central in the
diffusion, which keeps every interior off-diagonal nonnegative. The two edge
rows keep only the inward upwind drift part and drop the diffusion, so no
ghost value is needed and the edge nodes gain no artificial diffusive pull
off the wall. Every row then has a nonpositive diagonal and nonnegative
off-diagonals and annihilates constants, so the operator is a proper
generator matrix and obstacle problems built on it stay solvable even when
the continuation region touches an edge. The operator type still allows an
extra corner entry per boundary row for tests that need wider stencils.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError


class EllipticityError(ValueError):
    """A volatility entry is nonpositive; the scheme requires sigma^2 > 0."""


@dataclass(frozen=True)
class Grid:
    z_min: float
    z_max: float
    K: int
    dz: float
    nodes: np.ndarray

    def index_nearest(self, z: float) -> int:
        """Index of the node closest to z, clipped to the grid."""
        k = int(round((z - self.z_min) / self.dz))
        return min(max(k, 0), self.K - 1)


@dataclass(frozen=True)
class ActionGrid:
    values: np.ndarray  # strictly increasing, values[0] = 0


def build_grid(z_min: float, z_max: float, K: int) -> Grid:
    if K < 3:
        raise ConfigError(f"grid needs at least 3 nodes, got {K}")
    if z_min >= z_max:
        raise ConfigError(f"empty grid range [{z_min}, {z_max}]")
    dz = (z_max - z_min) / (K - 1)
    nodes = z_min + dz * np.arange(K)
    nodes[-1] = z_max  # pin the endpoint against accumulation error
    nodes.flags.writeable = False
    return Grid(z_min=z_min, z_max=z_max, K=K, dz=dz, nodes=nodes)


def build_action_grid(a_max: float, n_actions: int) -> ActionGrid:
    if n_actions < 2:
        raise ConfigError(f"action grid needs at least 2 points, got {n_actions}")
    if a_max < 0.0:
        raise ConfigError(f"maximal search effort must be nonnegative, got {a_max}")
    values = np.linspace(0.0, a_max, n_actions)
    values.flags.writeable = False
    return ActionGrid(values=values)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Discrete generator: tridiagonal band plus two boundary-closure entries.

    corner_lo is the (row 0, column 2) entry and corner_hi the
    (row K-1, column K-3) entry produced by the one-sided second-derivative
    stencils. Both are zero for operators that do not touch the boundary rows.
    """

    lower: np.ndarray  # (K-1,)
    diag: np.ndarray  # (K,)
    upper: np.ndarray  # (K-1,)
    corner_lo: float
    corner_hi: float

    @property
    def K(self) -> int:
        return self.diag.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        y[0] += self.corner_lo * x[2]
        y[-1] += self.corner_hi * x[-3]
        return y

    def dense(self) -> np.ndarray:
        K = self.K
        A = np.zeros((K, K))
        A[np.arange(K), np.arange(K)] = self.diag
        A[np.arange(K - 1), np.arange(1, K)] = self.upper
        A[np.arange(1, K), np.arange(K - 1)] = self.lower
        A[0, 2] += self.corner_lo
        A[K - 1, K - 3] += self.corner_hi
        return A


def assemble_generator(drift: np.ndarray, vol2: np.ndarray, g: Grid) -> TridiagonalOperator:
    """Build the upwind generator for given nodewise drift and variance.

    Interior rows: max(drift,0) forward difference, min(drift,0) backward
    difference, central second difference. The edge rows keep only the
    inward upwind drift part and drop the diffusion term, which keeps every
    row monotone and avoids an artificial diffusive pull away from the walls.
    """
    K = g.K
    drift = np.asarray(drift, dtype=float)
    vol2 = np.asarray(vol2, dtype=float)
    if drift.shape != (K,) or vol2.shape != (K,):
        raise ValueError("drift and vol2 must match the grid length")
    if np.any(vol2 <= 0.0):
        raise EllipticityError("vol2 must be strictly positive at every node")

    dz = g.dz
    dz2 = dz * dz
    mu_plus = np.maximum(drift, 0.0)
    mu_minus = np.minimum(drift, 0.0)
    half_vol = 0.5 * vol2 / dz2

    lower = np.empty(K - 1)
    diag = np.empty(K)
    upper = np.empty(K - 1)

    # interior rows 1..K-2
    diag[1:-1] = -(mu_plus[1:-1] - mu_minus[1:-1]) / dz - 2.0 * half_vol[1:-1]
    upper[1:] = mu_plus[1:-1] / dz + half_vol[1:-1]
    lower[:-1] = -mu_minus[1:-1] / dz + half_vol[1:-1]

    # edge rows: inward upwind drift only, no diffusion
    upper[0] = mu_plus[0] / dz
    diag[0] = -upper[0]
    corner_lo = 0.0
    lower[-1] = -mu_minus[-1] / dz
    diag[-1] = -lower[-1]
    corner_hi = 0.0

    return TridiagonalOperator(
        lower=lower, diag=diag, upper=upper, corner_lo=corner_lo, corner_hi=corner_hi
    )
