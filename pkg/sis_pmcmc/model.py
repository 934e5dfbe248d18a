"""Agent-based SIS hidden Markov model: states, covariate-linked rates,
transition kernel and the binomial under-reporting emission."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.special import expit, gammaln, logit, xlog1py, xlogy

from .errors import ContractViolation
from .network import Network

logger = logging.getLogger("sis-pmcmc.model")

SUSCEPTIBLE = 0
INFECTED = 1


@dataclass(frozen=True)
class AgentStateVector:
    """X_t: one binary state per agent at time ``time_index``."""
    states: np.ndarray
    time_index: int = 0

    def __post_init__(self) -> None:
        states = np.asarray(self.states)
        if states.ndim != 1:
            raise ContractViolation("agent states must be a 1-d vector")
        if states.size and not np.isin(states, (SUSCEPTIBLE, INFECTED)).all():
            raise ContractViolation("agent states must be 0 (susceptible) or 1 (infected)")
        if self.time_index < 0:
            raise ContractViolation("time_index must be >= 0")
        object.__setattr__(self, "states", states.astype(np.uint8, copy=False))

    @property
    def n_agents(self) -> int:
        return int(self.states.size)

    @property
    def infected_count(self) -> int:
        return int(self.states.sum(dtype=np.int64))


def parameter_names(dim: int, free_recovery: bool) -> List[str]:
    """Sampler coordinate names, e.g. beta_a0, beta_a1, beta_l0, beta_l1, rho."""
    names = [f"beta_a{i}" for i in range(dim)] + [f"beta_l{i}" for i in range(dim)]
    if free_recovery:
        names += [f"beta_g{i}" for i in range(dim)]
    return names + ["rho"]


class ParameterSet(BaseModel):
    """θ = (β_α0, β_λ, β_γ, ρ), or (β_α0, β_λ, ρ) with a fixed recovery rate."""
    beta_alpha: Tuple[float, ...]
    beta_lambda: Tuple[float, ...]
    beta_gamma: Optional[Tuple[float, ...]] = None
    rho: float = Field(gt=0.0, lt=1.0)
    gamma_fixed: Optional[float] = Field(default=None, gt=0.0, lt=1.0)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_shape(self) -> "ParameterSet":
        if (self.beta_gamma is None) == (self.gamma_fixed is None):
            raise ValueError("exactly one of beta_gamma / gamma_fixed must be given")
        dims = {len(self.beta_alpha), len(self.beta_lambda)}
        if self.beta_gamma is not None:
            dims.add(len(self.beta_gamma))
        if len(dims) != 1 or 0 in dims:
            raise ValueError(f"beta vectors must share one positive dimension, got {sorted(dims)}")
        return self

    @property
    def dim(self) -> int:
        return len(self.beta_alpha)

    @property
    def free_recovery(self) -> bool:
        return self.beta_gamma is not None

    @property
    def names(self) -> List[str]:
        return parameter_names(self.dim, self.free_recovery)

    def to_vector(self) -> np.ndarray:
        """Sampler scale: betas unchanged, ρ as logit(ρ)."""
        parts = list(self.beta_alpha) + list(self.beta_lambda) + list(self.beta_gamma or ())
        return np.array(parts + [float(logit(self.rho))])

    def natural_vector(self) -> np.ndarray:
        vec = self.to_vector()
        vec[-1] = self.rho
        return vec

    def with_vector(self, vec: np.ndarray) -> "ParameterSet":
        """Same structure (dimension, fixed γ) with sampler-scale coordinates ``vec``."""
        d = self.dim
        vec = np.asarray(vec, dtype=float)
        expected = len(self.names)
        if vec.size != expected:
            raise ContractViolation(f"expected {expected} coordinates, got {vec.size}")
        rho = float(expit(vec[-1]))
        # logit が極端な値だと expit が 0/1 に丸まる
        rho = min(max(rho, np.finfo(float).tiny), 1.0 - np.finfo(float).eps)
        return ParameterSet(
            beta_alpha=tuple(vec[:d].tolist()),
            beta_lambda=tuple(vec[d:2 * d].tolist()),
            beta_gamma=tuple(vec[2 * d:3 * d].tolist()) if self.free_recovery else None,
            rho=rho,
            gamma_fixed=self.gamma_fixed,
        )

    def with_natural_vector(self, vec: np.ndarray) -> "ParameterSet":
        vec = np.array(vec, dtype=float)
        vec[-1] = logit(vec[-1])
        return self.with_vector(vec)

    def with_rho(self, rho: float) -> "ParameterSet":
        return self.model_copy(update={"rho": float(rho)})


@dataclass(frozen=True)
class AgentRates:
    """Per-agent initial infection, infection and recovery probabilities."""
    alpha0: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        sizes = {np.size(self.alpha0), np.size(self.lam), np.size(self.gamma)}
        if len(sizes) != 1:
            raise ContractViolation("rate vectors must have one entry per agent")
        for name in ("alpha0", "lam", "gamma"):
            values = np.asarray(getattr(self, name), dtype=float)
            if np.any((values < 0.0) | (values > 1.0)):
                raise ContractViolation(f"{name} must lie in [0, 1]")
            object.__setattr__(self, name, values)

    @property
    def n_agents(self) -> int:
        return int(self.alpha0.size)


@dataclass(eq=False)
class AgentPopulation:
    """Covariate rows z^n, optional named groupings, and a per-θ rate cache."""
    covariates: np.ndarray
    groups: Dict[str, np.ndarray] = field(default_factory=dict)
    _rate_cache: Optional[Tuple[ParameterSet, AgentRates]] = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.covariates = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        for name, labels in self.groups.items():
            if len(labels) != self.n_agents:
                raise ContractViolation(f"group '{name}' has {len(labels)} labels for {self.n_agents} agents")
            self.groups[name] = np.asarray(labels)

    @property
    def n_agents(self) -> int:
        return int(self.covariates.shape[0])

    @property
    def dim(self) -> int:
        return int(self.covariates.shape[1])

    def rates(self, theta: ParameterSet) -> AgentRates:
        # θ の同一性で判定。予測スレッドから同時に呼ばれるので (θ, rates) を一度に差し替える
        cached = self._rate_cache
        if cached is None or cached[0] is not theta:
            cached = (theta, compute_agent_rates(theta, self))
            self._rate_cache = cached
        return cached[1]


def logistic_link(beta, z) -> np.ndarray | float:
    """(1 + exp(-β·z))^-1 for one covariate row or an (N, d) matrix."""
    beta = np.asarray(beta, dtype=float)
    z = np.asarray(z, dtype=float)
    if beta.ndim != 1 or z.shape[-1] != beta.size:
        raise ContractViolation(f"dimension mismatch: beta has {beta.size}, z has {z.shape[-1]}")
    value = expit(z @ beta)
    return float(value) if np.ndim(value) == 0 else value


def compute_agent_rates(theta: ParameterSet, pop: AgentPopulation) -> AgentRates:
    if pop.dim != theta.dim:
        raise ContractViolation(f"covariate dimension {pop.dim} does not match parameter dimension {theta.dim}")
    z = pop.covariates
    alpha0 = logistic_link(theta.beta_alpha, z)
    lam = logistic_link(theta.beta_lambda, z)
    if theta.beta_gamma is not None:
        gamma = logistic_link(theta.beta_gamma, z)
    else:
        gamma = np.full(pop.n_agents, float(theta.gamma_fixed))
    return AgentRates(alpha0=np.atleast_1d(alpha0), lam=np.atleast_1d(lam), gamma=np.atleast_1d(gamma))


def transition_probabilities(states: np.ndarray, rates: AgentRates, net: Network) -> np.ndarray:
    """ξ for every agent of a (P, N) ensemble (or a single N-vector).

    Susceptible: λ^n · (infected neighbours) / D(n), 0 for isolated agents.
    Infected: 1 − γ^n.
    """
    counts = net.infected_neighbor_counts(states)
    degrees = net.degrees
    fraction = np.divide(counts, degrees, out=np.zeros(counts.shape), where=degrees > 0)
    return np.where(states == INFECTED, 1.0 - rates.gamma, rates.lam * fraction)


def transition_probability(agent_index: int, current: AgentStateVector, rates: AgentRates, net: Network) -> float:
    if not 0 <= agent_index < current.n_agents:
        raise ContractViolation(f"agent index {agent_index} out of range")
    if current.states[agent_index] == INFECTED:
        return float(1.0 - rates.gamma[agent_index])
    degree = net.degrees[agent_index]
    if degree == 0:
        return 0.0
    infected = int(current.states[net.neighbors(agent_index)].sum())
    return float(rates.lam[agent_index] * infected / degree)


def propagate(states: np.ndarray, rates: AgentRates, net: Network, uniforms: np.ndarray) -> np.ndarray:
    """Bernoulli(ξ) step driven by pre-drawn uniforms of the same shape."""
    xi = transition_probabilities(states, rates, net)
    return (uniforms < xi).astype(np.uint8)


def step_agents(current: AgentStateVector, rates: AgentRates, net: Network, rng: np.random.Generator) -> AgentStateVector:
    if current.n_agents != rates.n_agents or current.n_agents != net.n_agents:
        raise ContractViolation("state, rates and network sizes differ")
    nxt = propagate(current.states, rates, net, rng.random(current.n_agents))
    return AgentStateVector(nxt, current.time_index + 1)


def initial_ensemble(rates: AgentRates, uniforms: np.ndarray) -> np.ndarray:
    return (uniforms < rates.alpha0).astype(np.uint8)


def sample_initial_state(rates: AgentRates, rng: np.random.Generator) -> AgentStateVector:
    return AgentStateVector(initial_ensemble(rates, rng.random(rates.n_agents)), 0)


def binomial_logpmf(y, n, rho: float) -> np.ndarray:
    """log Binomial(y; n, ρ) via log-gamma; −inf outside 0 <= y <= n."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        value = (
            gammaln(n + 1.0) - gammaln(y + 1.0) - gammaln(n - y + 1.0)
            + xlogy(y, rho) + xlog1py(n - y, -rho)
        )
    return np.where((y >= 0) & (y <= n), value, -np.inf)


def observation_logpmf(y: int, state: AgentStateVector, rho: float) -> float:
    if y < 0:
        raise ContractViolation("observed count must be >= 0")
    if not 0.0 <= rho <= 1.0:
        raise ContractViolation("rho must lie in [0, 1]")
    return float(binomial_logpmf(y, state.infected_count, rho))


def sample_observation(infected, rho: float, rng: np.random.Generator):
    return rng.binomial(infected, rho)


def reproduction_number(rates: AgentRates) -> np.ndarray:
    """R^n = λ^n / γ^n."""
    if np.any(rates.gamma <= 0.0):
        raise ContractViolation("reproduction number needs gamma > 0 for every agent")
    return rates.lam / rates.gamma


def _bernoulli_loglik(outcomes: np.ndarray, prob: np.ndarray) -> float:
    return float(np.sum(xlogy(outcomes, prob) + xlog1py(1 - outcomes.astype(float), -prob)))


def transition_loglik(theta: ParameterSet, pop: AgentPopulation, net: Network, trajectory: np.ndarray) -> float:
    """log p_θ(x_0) + Σ_t log p_θ(x_t | x_{t-1})."""
    rates = pop.rates(theta)
    trajectory = np.asarray(trajectory, dtype=np.uint8)
    value = _bernoulli_loglik(trajectory[0], rates.alpha0)
    if trajectory.shape[0] > 1:
        xi = transition_probabilities(trajectory[:-1], rates, net)
        value += _bernoulli_loglik(trajectory[1:], xi)
    return value


def complete_data_loglik(
    theta: ParameterSet,
    pop: AgentPopulation,
    net: Network,
    trajectory: np.ndarray,
    observations: np.ndarray,
) -> float:
    """log p_θ(x_{0:T}, y_{0:T})."""
    trajectory = np.asarray(trajectory, dtype=np.uint8)
    observations = np.asarray(observations)
    if trajectory.shape[0] != observations.size:
        raise ContractViolation("trajectory and observations cover different time spans")
    emission = float(np.sum(binomial_logpmf(observations, trajectory.sum(axis=1), theta.rho)))
    return emission + transition_loglik(theta, pop, net, trajectory)


def parameter_template(dim: int, gamma_fixed: Optional[float]) -> ParameterSet:
    """A ParameterSet with the right structure; values are placeholders."""
    zeros = tuple(0.0 for _ in range(dim))
    return ParameterSet(
        beta_alpha=zeros,
        beta_lambda=zeros,
        beta_gamma=zeros if gamma_fixed is None else None,
        rho=0.5,
        gamma_fixed=gamma_fixed,
    )
