"""Bootstrap particle filter, conditional SMC and an exact forward oracle."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .errors import ContractViolation
from .model import (
    AgentPopulation,
    AgentStateVector,
    ParameterSet,
    binomial_logpmf,
    initial_ensemble,
    propagate,
    transition_probabilities,
)
from .network import Network
from .rng import stream

logger = logging.getLogger("sis-pmcmc.smc")

Resampling = Literal["multinomial", "systematic"]
EXACT_MAX_AGENTS = 12


class NormalizedWeights(NamedTuple):
    weights: np.ndarray
    log_mean_weight: float
    degenerate: bool


@dataclass(frozen=True)
class ParticleEnsemble:
    """Particles at one time step with their weights and ancestors."""
    particles: np.ndarray
    log_weights: np.ndarray
    normalized_weights: np.ndarray
    ancestors: np.ndarray


@dataclass
class FilterResult:
    log_marginal_likelihood: float
    filtered_infected_mean: np.ndarray
    sampled_trajectory: Optional[np.ndarray]
    # ancestors[t - 1, p]: index at t - 1 of particle p at t
    ancestors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    final: Optional[ParticleEnsemble] = None

    @property
    def degenerate(self) -> bool:
        return self.log_marginal_likelihood == -math.inf

    def trajectory_states(self) -> List[AgentStateVector]:
        if self.sampled_trajectory is None:
            return []
        return [AgentStateVector(x, t) for t, x in enumerate(self.sampled_trajectory)]


def normalize_weights(log_weights: np.ndarray) -> NormalizedWeights:
    """Max-shifted normalisation; ``log_mean_weight`` = logsumexp − log P."""
    log_weights = np.asarray(log_weights, dtype=float)
    if log_weights.size < 1:
        raise ContractViolation("need at least one weight")
    top = np.max(log_weights)
    if top == -np.inf or np.isnan(top):
        return NormalizedWeights(np.full(log_weights.size, np.nan), -math.inf, True)
    shifted = np.exp(log_weights - top)
    total = shifted.sum()
    log_mean = float(logsumexp(log_weights) - math.log(log_weights.size))
    return NormalizedWeights(shifted / total, log_mean, False)


def _check_weights(weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0 or not np.all(np.isfinite(weights)) or np.any(weights < 0) or weights.sum() <= 0:
        raise ContractViolation("cannot resample from degenerate weights")
    return weights


def multinomial_resample(normalized_weights: np.ndarray, n_out: int, rng: np.random.Generator) -> np.ndarray:
    weights = _check_weights(normalized_weights)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(n_out), side="right")
    return np.minimum(idx, weights.size - 1).astype(np.int64)


def systematic_resample(normalized_weights: np.ndarray, n_out: int, rng: np.random.Generator) -> np.ndarray:
    weights = _check_weights(normalized_weights)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    positions = (rng.random() + np.arange(n_out)) / max(n_out, 1)
    idx = np.searchsorted(cdf, positions, side="right")
    return np.minimum(idx, weights.size - 1).astype(np.int64)


_RESAMPLERS = {
    "multinomial": multinomial_resample,
    "systematic": systematic_resample,
}


def _trace_back(history: np.ndarray, ancestors: np.ndarray, k: int) -> np.ndarray:
    n_times = history.shape[0]
    trajectory = np.empty(history.shape[::2], dtype=np.uint8)
    for t in range(n_times - 1, -1, -1):
        trajectory[t] = history[t, k]
        if t > 0:
            k = ancestors[t - 1, k]
    return trajectory


def _run_filter(
    theta: ParameterSet,
    pop: AgentPopulation,
    net: Network,
    observations: np.ndarray,
    n_particles: int,
    seed: int,
    key: Tuple[int, ...],
    reference: Optional[np.ndarray],
    resampling: Resampling,
) -> FilterResult:
    observations = np.asarray(observations, dtype=np.int64)
    n_times = observations.size
    if n_times < 1:
        raise ContractViolation("need at least one observation")
    if pop.n_agents != net.n_agents:
        raise ContractViolation("population and network sizes differ")
    resample = _RESAMPLERS[resampling]
    rates = pop.rates(theta)
    n_agents = pop.n_agents
    # 参照軌道は最後の粒子 (index P-1) に固定
    pinned = reference is not None
    n_free = n_particles - 1 if pinned else n_particles

    history = np.empty((n_times, n_particles, n_agents), dtype=np.uint8)
    ancestors = np.empty((max(n_times - 1, 0), n_particles), dtype=np.int64)
    infected_mean = np.full(n_times, np.nan)
    log_likelihood = 0.0

    rng = stream(seed, *key, 0)
    particles = initial_ensemble(rates, rng.random((n_particles, n_agents)))
    if pinned:
        particles[-1] = reference[0]
    history[0] = particles

    log_w = np.empty(n_particles)
    norm = None
    for t in range(n_times):
        if t > 0:
            rng = stream(seed, *key, t)
            anc = np.empty(n_particles, dtype=np.int64)
            anc[:n_free] = resample(norm.weights, n_free, rng)
            if pinned:
                anc[-1] = n_particles - 1
            uniforms = rng.random((n_particles, n_agents))
            particles = propagate(history[t - 1][anc], rates, net, uniforms)
            if pinned:
                particles[-1] = reference[t]
            ancestors[t - 1] = anc
            history[t] = particles

        infected = particles.sum(axis=1, dtype=np.int64)
        log_w = binomial_logpmf(observations[t], infected, theta.rho)
        norm = normalize_weights(log_w)
        if norm.degenerate:
            logger.debug("all particles have zero weight", extra={"t": t, "y": int(observations[t])})
            return FilterResult(-math.inf, infected_mean, None, ancestors[:t])
        log_likelihood += norm.log_mean_weight
        infected_mean[t] = float(norm.weights @ infected)

    final_rng = stream(seed, *key, n_times)
    k = int(multinomial_resample(norm.weights, 1, final_rng)[0])
    trajectory = _trace_back(history, ancestors, k)
    final = ParticleEnsemble(
        particles=history[-1],
        log_weights=log_w,
        normalized_weights=norm.weights,
        ancestors=ancestors[-1] if n_times > 1 else np.arange(n_particles),
    )
    return FilterResult(log_likelihood, infected_mean, trajectory, ancestors, final)


def bootstrap_filter(
    theta: ParameterSet,
    pop: AgentPopulation,
    net: Network,
    observations: np.ndarray,
    n_particles: int,
    seed: int,
    key: Tuple[int, ...] = (),
    resampling: Resampling = "multinomial",
) -> FilterResult:
    """Bootstrap particle filter: propose from the transition prior, weight by
    the binomial emission, resample every step.

    ``log_marginal_likelihood`` is Σ_t log mean_p w_t^(p), −inf as soon as every
    particle is incompatible with an observation.
    """
    if n_particles < 2:
        raise ContractViolation(f"bootstrap filter needs >= 2 particles, got {n_particles}")
    return _run_filter(theta, pop, net, observations, n_particles, seed, key, None, resampling)


def conditional_smc(
    theta: ParameterSet,
    pop: AgentPopulation,
    net: Network,
    observations: np.ndarray,
    reference_trajectory: np.ndarray,
    n_particles: int,
    seed: int,
    key: Tuple[int, ...] = (),
    resampling: Resampling = "multinomial",
) -> Tuple[FilterResult, np.ndarray]:
    """Conditional SMC with particle P-1 pinned to ``reference_trajectory``.

    Returns the filter result and the new reference, drawn from the final
    weights and traced through the ancestors.
    """
    reference = np.asarray(reference_trajectory, dtype=np.uint8)
    observations = np.asarray(observations)
    if reference.ndim != 2 or reference.shape != (observations.size, pop.n_agents):
        raise ContractViolation(
            f"reference trajectory shape {reference.shape} != ({observations.size}, {pop.n_agents})"
        )
    if n_particles < 1:
        raise ContractViolation("conditional SMC needs >= 1 particle")
    result = _run_filter(theta, pop, net, observations, n_particles, seed, key, reference, resampling)
    if result.sampled_trajectory is None:
        # 参照粒子の重みが 0 になるのは ρ が y と矛盾する場合のみ
        return result, reference.copy()
    return result, result.sampled_trajectory


def _enumerate_states(n_agents: int) -> np.ndarray:
    codes = np.arange(2 ** n_agents)
    shifts = np.arange(n_agents - 1, -1, -1)
    return ((codes[:, None] >> shifts) & 1).astype(np.uint8)


def _product_bernoulli(prob: np.ndarray) -> np.ndarray:
    """Row k, column s: Π_n prob[k, n]^s_n (1 − prob[k, n])^(1 − s_n), agent 0 most significant."""
    n_rows, n_agents = prob.shape
    table = np.ones((n_rows, 1))
    for n in range(n_agents):
        pair = np.stack([1.0 - prob[:, n], prob[:, n]], axis=1)
        table = (table[:, :, None] * pair[:, None, :]).reshape(n_rows, -1)
    return table


def exact_loglik_forward(
    theta: ParameterSet,
    pop: AgentPopulation,
    net: Network,
    observations: np.ndarray,
) -> float:
    """Exact log p_θ(y_{0:T}) by the forward recursion over all 2^N configurations."""
    n_agents = pop.n_agents
    if n_agents > EXACT_MAX_AGENTS:
        raise ContractViolation(f"exact forward recursion limited to N <= {EXACT_MAX_AGENTS}, got {n_agents}")
    observations = np.asarray(observations, dtype=np.int64)
    rates = pop.rates(theta)
    states = _enumerate_states(n_agents)
    infected = states.sum(axis=1)

    transition = _product_bernoulli(transition_probabilities(states, rates, net))
    alpha = _product_bernoulli(rates.alpha0[None, :])[0]
    log_likelihood = 0.0
    for t, y in enumerate(observations):
        if t > 0:
            alpha = alpha @ transition
        alpha = alpha * np.exp(binomial_logpmf(y, infected, theta.rho))
        total = alpha.sum()
        if total <= 0.0:
            return -math.inf
        log_likelihood += math.log(total)
        alpha /= total
    return log_likelihood
