"""Priors on the sampler scale and the Normal random-walk proposal."""

from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, validator
from scipy.special import betaln, log_expit, log_ndtr, logit
from scipy.stats import truncnorm

from .errors import ContractViolation

logger = logging.getLogger("sis-pmcmc.priors")

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
RHO_FAMILIES = ("beta", "logit_normal", "flat")
BETA_FAMILIES = ("normal", "truncnorm_pos", "truncnorm_neg", "flat")


def _normal_logpdf(x: float, mu: float, sigma: float) -> float:
    z = (x - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI


class PriorDistribution(BaseModel):
    """One coordinate's prior.

    ``truncnorm_pos``/``truncnorm_neg`` are N(μ, σ²) restricted to (0, ∞) / (−∞, 0).
    On ρ, ``logit_normal`` is N(μ, σ²) on logit ρ and ``beta`` is Beta(a, b) on ρ;
    both are evaluated as densities of logit ρ, the sampler coordinate.
    ``flat`` is the improper constant density.
    """
    family: Literal["normal", "truncnorm_pos", "truncnorm_neg", "beta", "logit_normal", "flat"]
    mu: float = 0.0
    sigma: float = Field(default=1.0, gt=0.0)
    a: float = Field(default=1.0, gt=0.0)
    b: float = Field(default=1.0, gt=0.0)

    class Config:
        frozen = True

    def log_density(self, x: float) -> float:
        """Log density at sampler-scale value ``x``."""
        family = self.family
        if family == "flat":
            return 0.0
        if family in ("normal", "logit_normal"):
            return _normal_logpdf(x, self.mu, self.sigma)
        if family == "truncnorm_pos":
            if x <= 0.0:
                return -math.inf
            return _normal_logpdf(x, self.mu, self.sigma) - float(log_ndtr(self.mu / self.sigma))
        if family == "truncnorm_neg":
            if x >= 0.0:
                return -math.inf
            return _normal_logpdf(x, self.mu, self.sigma) - float(log_ndtr(-self.mu / self.sigma))
        # beta: Beta(a, b) on ρ pushed to logit ρ (Jacobian ρ(1 − ρ))
        return float(self.a * log_expit(x) + self.b * log_expit(-x) - betaln(self.a, self.b))

    def sample(self, rng: np.random.Generator) -> float:
        family = self.family
        if family in ("normal", "logit_normal"):
            return float(rng.normal(self.mu, self.sigma))
        if family in ("truncnorm_pos", "truncnorm_neg"):
            bound = -self.mu / self.sigma
            lower, upper = (bound, np.inf) if family == "truncnorm_pos" else (-np.inf, bound)
            return float(truncnorm.rvs(lower, upper, loc=self.mu, scale=self.sigma, random_state=rng))
        if family == "beta":
            return float(logit(rng.beta(self.a, self.b)))
        raise ContractViolation("cannot draw from a flat prior; supply an initial value")


class PriorSpec(BaseModel):
    """Per-coordinate priors keyed by sampler coordinate name."""
    priors: Dict[str, PriorDistribution]

    @validator("priors")
    def _check_families(cls, value: Dict[str, PriorDistribution]) -> Dict[str, PriorDistribution]:
        for name, prior in value.items():
            allowed = RHO_FAMILIES if name == "rho" else BETA_FAMILIES
            if prior.family not in allowed:
                raise ValueError(f"prior family '{prior.family}' not allowed for {name}")
        if "rho" not in value:
            raise ValueError("rho needs a prior (beta or logit_normal)")
        return value

    def for_names(self, names: Iterable[str]) -> List[PriorDistribution]:
        names = list(names)
        missing = [n for n in names if n not in self.priors]
        if missing:
            raise ContractViolation(f"no prior for {missing}")
        return [self.priors[n] for n in names]

    @property
    def rho(self) -> PriorDistribution:
        return self.priors["rho"]


def log_prior(theta, priors: PriorSpec) -> float:
    """Σ log prior density on the sampler scale; −inf outside truncation support."""
    total = 0.0
    for prior, x in zip(priors.for_names(theta.names), theta.to_vector()):
        total += prior.log_density(float(x))
        if total == -math.inf:
            break
    return total


def sample_prior(priors: PriorSpec, template, rng: np.random.Generator):
    """Draw θ from the prior with the structure of ``template``."""
    vec = np.array([p.sample(rng) for p in priors.for_names(template.names)])
    return template.with_vector(vec)


class ProposalKernel(BaseModel):
    """Independent Normal random walk; ρ moves on the logit scale."""
    step_sizes: Dict[str, float]
    joint: bool = True

    @validator("step_sizes")
    def _non_negative(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, step in value.items():
            if step < 0.0:
                raise ValueError(f"step size for {name} must be >= 0")
        return value

    def vector(self, names: List[str]) -> np.ndarray:
        missing = [n for n in names if n not in self.step_sizes]
        if missing:
            raise ContractViolation(f"no step size for {missing}")
        return np.array([self.step_sizes[n] for n in names], dtype=float)

    def scaled(self, factor: float) -> "ProposalKernel":
        return ProposalKernel(
            step_sizes={k: v * factor for k, v in self.step_sizes.items()},
            joint=self.joint,
        )

    def restricted(self, names: Iterable[str]) -> "ProposalKernel":
        """Zero step for every coordinate not in ``names``."""
        keep = set(names)
        return ProposalKernel(
            step_sizes={k: (v if k in keep else 0.0) for k, v in self.step_sizes.items()},
            joint=self.joint,
        )


def propose(theta, kernel: ProposalKernel, rng: np.random.Generator, coordinate: Optional[int] = None):
    """θ* = θ + Normal increments on the sampler scale.

    With ``coordinate`` set, only that coordinate moves (one-at-a-time mode).
    Proposals outside a truncated prior's support are returned as-is and
    rejected through the prior.
    """
    vec = theta.to_vector()
    steps = kernel.vector(theta.names)
    if coordinate is None:
        vec = vec + steps * rng.standard_normal(vec.size)
    else:
        vec[coordinate] += steps[coordinate] * rng.standard_normal()
    return theta.with_vector(vec)
