"""Structural parameters and primitive functions.

Everything downstream (grids, solvers, simulator) consumes the immutable
containers defined here. All rates are annual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class InvalidParameterError(ValueError):
    """A structural parameter violates its admissibility condition."""


class WageMode(Enum):
    SHARING_EXOGENOUS = "sharing_exogenous"
    AFFINE_EQUILIBRIUM = "affine_equilibrium"


@dataclass(frozen=True)
class ModelParams:
    """All structural primitives: diffusion, search, wage, and policy blocks.

    alpha is derived (1 - gamma) so alpha + gamma = 1 holds exactly.
    delta is the exogenous match-destruction intensity; 0 disables it.
    """

    r: float = 0.25
    mu_P: float = 0.012
    mu_R: float = 0.024
    sigma_P: float = 0.08
    sigma_R: float = 0.06
    rho: float = 0.0
    z0: float = 0.23
    gamma: float = 0.73
    sigma_u2: float = 0.0046
    kappa: float = 40.0
    eta: float = 2.0
    lambda0: float = 1.0
    lambda_bar: float = 0.8
    b: float = 0.35
    lambdaU: float = 0.3
    entry_rate: float = 1.0
    beta_w: float = 0.4
    F: float = 0.0
    s: float = 0.0
    chi: float = 1.0
    delta: float = 0.15
    # reference outside level in the sharing wage; positive keeps log wages
    # bounded near the separation boundary
    R_ref: float = 0.3
    # loading on the annuitized outside value in the affine wage intercept
    wage_feedback: float = 0.5
    # unemployed search technology: cost scale relative to kappa, arrival cap
    kappa_u_scale: float = 0.4
    lambda_u_bar: float = 0.8

    def __post_init__(self) -> None:
        positive = {
            "r": self.r,
            "sigma_P": self.sigma_P,
            "sigma_R": self.sigma_R,
            "kappa": self.kappa,
            "eta": self.eta,
            "lambda0": self.lambda0,
            "entry_rate": self.entry_rate,
            "chi": self.chi,
            "kappa_u_scale": self.kappa_u_scale,
            "lambda_u_bar": self.lambda_u_bar,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise InvalidParameterError(f"{name} must be strictly positive, got {value}")
        # zero caps are legal: they express the search-switched-off nesting
        for name, value in (("lambda_bar", self.lambda_bar), ("lambdaU", self.lambdaU)):
            if value < 0.0:
                raise InvalidParameterError(f"{name} must be nonnegative, got {value}")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidParameterError(f"rho must lie in [-1, 1], got {self.rho}")
        # gamma = 1 and beta_w = 0 are legal: they flatten the wage schedule,
        # which the decomposition uses as a degeneracy check
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidParameterError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.sigma_u2 < 0.0:
            raise InvalidParameterError(f"sigma_u2 must be nonnegative, got {self.sigma_u2}")
        if not 0.0 <= self.beta_w <= 1.0:
            raise InvalidParameterError(f"beta_w must lie in [0, 1], got {self.beta_w}")
        if self.F < 0.0:
            raise InvalidParameterError(f"F must be nonnegative, got {self.F}")
        if not 0.0 <= self.s < 1.0:
            raise InvalidParameterError(f"s must lie in [0, 1), got {self.s}")
        if self.delta < 0.0:
            raise InvalidParameterError(f"delta must be nonnegative, got {self.delta}")
        # fail fast on ellipticity so later solves never see sigma_Z^2 <= 0
        if self._sigma_z2_raw() <= 0.0:
            raise InvalidParameterError(
                "degenerate surplus volatility: sigma_P^2 + sigma_R^2 "
                "- 2 rho sigma_P sigma_R must be strictly positive"
            )

    @property
    def alpha(self) -> float:
        return 1.0 - self.gamma

    def _sigma_z2_raw(self) -> float:
        return (
            self.sigma_P * self.sigma_P
            + self.sigma_R * self.sigma_R
            - 2.0 * self.rho * self.sigma_P * self.sigma_R
        )


@dataclass(frozen=True)
class SurplusCoeffs:
    """Drift and volatility of the scalar surplus diffusion."""

    mu_Z: float
    sigma_Z: float


def derive_surplus_coeffs(p: ModelParams) -> SurplusCoeffs:
    """Reduce the two correlated productivity diffusions to one surplus diffusion.

    mu_Z = mu_P - mu_R and sigma_Z = chi * sqrt(sigma_P^2 + sigma_R^2
    - 2 rho sigma_P sigma_R). Raises InvalidParameterError if the combined
    volatility degenerates.
    """
    s2 = p._sigma_z2_raw()
    if s2 <= 0.0:
        raise InvalidParameterError("sigma_Z^2 <= 0: uniform ellipticity fails")
    return SurplusCoeffs(mu_Z=p.mu_P - p.mu_R, sigma_Z=math.sqrt(s2) * p.chi)


def wage_at(z: float, VU: float, p: ModelParams, mode: WageMode) -> float:
    """Wage paid at surplus z.

    SHARING_EXOGENOUS: (1-gamma)(z + R_ref) + gamma R_ref, the fixed sharing
    rule around the reference outside level. AFFINE_EQUILIBRIUM:
    wage_feedback * r * VU + beta_w * (z + R_ref), an affine schedule whose
    intercept loads on the annuitized outside value and whose slope applies
    to surplus measured from the same reference level as the sharing rule,
    keeping wages positive on the occupied part of the grid.
    """
    if mode is WageMode.SHARING_EXOGENOUS:
        return (1.0 - p.gamma) * (z + p.R_ref) + p.gamma * p.R_ref
    return p.wage_feedback * p.r * VU + p.beta_w * (z + p.R_ref)


def search_cost(a: float, p: ModelParams) -> float:
    """Convex search cost (1-s) kappa a^(1+eta) / (1+eta); zero at a = 0."""
    if a < 0.0:
        raise InvalidParameterError(f"search effort must be nonnegative, got {a}")
    return (1.0 - p.s) * p.kappa * a ** (1.0 + p.eta) / (1.0 + p.eta)


def arrival_rate(a: float, p: ModelParams) -> float:
    """Offer arrival intensity min(lambda0 * a, lambda_bar)."""
    if a < 0.0:
        raise InvalidParameterError(f"search effort must be nonnegative, got {a}")
    return min(p.lambda0 * a, p.lambda_bar)
