"""Particle Gibbs: conditional SMC for the hidden path, then θ | path."""

from __future__ import annotations

import logging
import math
from typing import Optional, Tuple

import numpy as np

from ..chain import ChainRecorder, PosteriorChain
from ..errors import ContractViolation
from ..model import AgentPopulation, ParameterSet, binomial_logpmf, parameter_template, transition_loglik
from ..network import Network
from ..priors import PriorSpec, ProposalKernel, log_prior, propose, sample_prior
from ..rng import stream
from ..smc import Resampling, bootstrap_filter, conditional_smc
from .pmmh import accept_move

logger = logging.getLogger("sis-pmcmc.samplers.particle_gibbs")

MAX_INIT_ATTEMPTS = 100
INIT_SEARCH_PARTICLES = 100


def update_rho_conjugate(
    trajectory: np.ndarray,
    observations: np.ndarray,
    beta_prior: Tuple[float, float],
    rng: np.random.Generator,
) -> float:
    """Draw ρ ~ Beta(a + Σ y_t, b + Σ (I_t − y_t)) given the hidden path."""
    infected = np.asarray(trajectory, dtype=np.int64).sum(axis=1)
    observations = np.asarray(observations, dtype=np.int64)
    if infected.shape != observations.shape:
        raise ContractViolation(f"trajectory covers {infected.size} steps, observations {observations.size}")
    if np.any(observations > infected):
        t = int(np.argmax(observations > infected))
        raise ContractViolation(f"y_{t}={observations[t]} exceeds infected count {infected[t]}")
    a, b = beta_prior
    rho = float(rng.beta(a + observations.sum(), b + (infected - observations).sum()))
    # Beta の端点は ParameterSet が受け付けない
    return min(max(rho, np.finfo(float).tiny), 1.0 - np.finfo(float).eps)


def emission_loglik(rho: float, trajectory: np.ndarray, observations: np.ndarray) -> float:
    infected = np.asarray(trajectory, dtype=np.int64).sum(axis=1)
    return float(np.sum(binomial_logpmf(np.asarray(observations, dtype=np.int64), infected, rho)))


def _initial_reference(
    theta: ParameterSet,
    priors: PriorSpec,
    pop: AgentPopulation,
    net: Network,
    data: np.ndarray,
    P: int,
    seed: int,
    resampling: Resampling,
    rng: np.random.Generator,
    drawn_from_prior: bool,
) -> Tuple[ParameterSet, np.ndarray]:
    for attempt in range(MAX_INIT_ATTEMPTS):
        n_search = max(P, INIT_SEARCH_PARTICLES)
        result = bootstrap_filter(theta, pop, net, data, n_search, seed, key=(2, attempt), resampling=resampling)
        if result.sampled_trajectory is not None:
            return theta, result.sampled_trajectory
        # 与えられた初期値は固定したまま別ストリームで再試行
        if drawn_from_prior:
            theta = sample_prior(priors, theta, rng)
    raise ContractViolation("could not find a hidden path compatible with the observations for the initial parameters")


def _update_rho_mh(
    theta: ParameterSet,
    priors: PriorSpec,
    step: float,
    reference: np.ndarray,
    data: np.ndarray,
    rng: np.random.Generator,
) -> ParameterSet:
    """Random-walk MH on logit ρ given the path, for non-Beta ρ priors."""
    x = theta.to_vector()[-1]
    x_new = x + step * rng.standard_normal()
    proposal = theta.with_vector(np.append(theta.to_vector()[:-1], x_new))
    log_ratio = (
        emission_loglik(proposal.rho, reference, data) + priors.rho.log_density(x_new)
        - emission_loglik(theta.rho, reference, data) - priors.rho.log_density(x)
    )
    return proposal if accept_move(rng, log_ratio) else theta


def particle_gibbs(
    data: np.ndarray,
    pop: AgentPopulation,
    net: Network,
    priors: PriorSpec,
    kernel: ProposalKernel,
    P: int,
    M: int,
    burn_in: int,
    seed: int,
    init: Optional[ParameterSet] = None,
    *,
    gamma_fixed: Optional[float] = None,
    thin: int = 10,
    resampling: Resampling = "multinomial",
    log_every: int = 1000,
) -> PosteriorChain:
    """Alternate conditional SMC, a ρ update and an MH step on the betas.

    ρ is drawn from its Beta full conditional when its prior is Beta, and by
    random-walk MH on logit ρ otherwise. The betas take one random-walk MH
    step targeting the complete-data transition likelihood times the prior.
    ``accepted`` in the chain records the beta step.
    """
    if M < 1:
        raise ContractViolation(f"M must be >= 1, got {M}")
    if P < 1:
        raise ContractViolation(f"particle Gibbs needs >= 1 particle, got {P}")
    data = np.asarray(data, dtype=np.int64)
    rng = stream(seed, 1)

    template = init or parameter_template(pop.dim, gamma_fixed)
    current = init if init is not None else sample_prior(priors, template, rng)
    if log_prior(current, priors) == -math.inf:
        raise ContractViolation("initial parameters lie outside the prior support")
    current, reference = _initial_reference(
        current, priors, pop, net, data, P, seed, resampling, rng, drawn_from_prior=init is None
    )

    names = current.names
    beta_names = [n for n in names if n != "rho"]
    beta_kernel = kernel.restricted(beta_names)
    rho_step = kernel.step_sizes.get("rho", 0.0)
    conjugate = priors.rho.family == "beta"

    recorder = ChainRecorder(current, burn_in, thin, "pg")
    window_accepts = 0
    total = burn_in + M
    for m in range(1, total + 1):
        result, reference = conditional_smc(
            current, pop, net, data, reference, P, seed, key=(0, m), resampling=resampling
        )

        if conjugate:
            current = current.with_rho(update_rho_conjugate(reference, data, (priors.rho.a, priors.rho.b), rng))
        elif rho_step > 0.0:
            current = _update_rho_mh(current, priors, rho_step, reference, data, rng)

        coordinate = None if kernel.joint else (m - 1) % len(beta_names)
        proposal = propose(current, beta_kernel, rng, coordinate)
        proposal_lp = log_prior(proposal, priors)
        accepted = False
        if proposal_lp > -math.inf:
            log_ratio = (
                transition_loglik(proposal, pop, net, reference) + proposal_lp
                - transition_loglik(current, pop, net, reference) - log_prior(current, priors)
            )
            if accept_move(rng, log_ratio):
                current = proposal
                accepted = True
        window_accepts += accepted
        recorder.record(m, current, result.log_marginal_likelihood, accepted, reference)

        if m % log_every == 0:
            logger.info(
                "particle gibbs progress",
                extra={"iteration": m, "total": total, "window_acceptance": window_accepts / log_every},
            )
            window_accepts = 0

    chain = recorder.chain()
    logger.info(
        "particle gibbs finished",
        extra={"draws": len(chain), "acceptance_rate": chain.acceptance_rate, "particles": P},
    )
    return chain
