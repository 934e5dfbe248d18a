"""Particle marginal Metropolis-Hastings."""

from __future__ import annotations

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np

from ..chain import ChainRecorder, PosteriorChain
from ..errors import ContractViolation
from ..model import AgentPopulation, ParameterSet, parameter_template
from ..network import Network
from ..priors import PriorSpec, ProposalKernel, log_prior, propose, sample_prior
from ..rng import stream
from ..smc import FilterResult, Resampling, bootstrap_filter

logger = logging.getLogger("sis-pmcmc.samplers.pmmh")

LikelihoodEstimator = Callable[[ParameterSet, Tuple[int, ...]], FilterResult]


class ParticleLikelihood:
    """Default PMMH estimator: a fresh bootstrap filter per call, keyed by iteration."""

    def __init__(
        self,
        pop: AgentPopulation,
        net: Network,
        observations: np.ndarray,
        n_particles: int,
        seed: int,
        resampling: Resampling = "multinomial",
    ):
        self.pop = pop
        self.net = net
        self.observations = np.asarray(observations, dtype=np.int64)
        self.n_particles = n_particles
        self.seed = seed
        self.resampling = resampling

    def __call__(self, theta: ParameterSet, key: Tuple[int, ...]) -> FilterResult:
        return bootstrap_filter(
            theta, self.pop, self.net, self.observations, self.n_particles,
            self.seed, key=(0, *key), resampling=self.resampling,
        )


def accept_move(rng: np.random.Generator, log_ratio: float) -> bool:
    """Accept with probability 1 ∧ exp(log_ratio); one uniform per call."""
    u = rng.random()
    if math.isnan(log_ratio):
        return False
    return u < math.exp(min(0.0, log_ratio))


def pmmh(
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
    likelihood: Optional[LikelihoodEstimator] = None,
    log_every: int = 1000,
) -> PosteriorChain:
    """Run burn_in + M PMMH iterations and keep the last M.

    θ, the sampled trajectory and the likelihood estimate are accepted or
    rejected together. The random-walk proposal is symmetric, so the
    acceptance ratio is the ratio of estimated likelihood times prior.
    Proposals with −inf prior are rejected without running the filter.

    If the starting point has a zero likelihood estimate, the first proposal
    with a finite estimate is accepted outright (log ratio 0, prior ratio
    ignored); the prior still applies to every move after that.
    """
    if M < 1:
        raise ContractViolation(f"M must be >= 1, got {M}")
    if P < 2:
        raise ContractViolation(f"PMMH needs >= 2 particles, got {P}")
    estimator = likelihood or ParticleLikelihood(pop, net, data, P, seed, resampling)
    rng = stream(seed, 1)

    template = init or parameter_template(pop.dim, gamma_fixed)
    current = init if init is not None else sample_prior(priors, template, rng)
    current_lp = log_prior(current, priors)
    if current_lp == -math.inf:
        raise ContractViolation("initial parameters lie outside the prior support")
    estimate = estimator(current, (0,))
    current_ll = estimate.log_marginal_likelihood
    current_traj = estimate.sampled_trajectory
    if current_ll == -math.inf:
        logger.warning("initial parameters give zero estimated likelihood; first finite proposal will be accepted")

    n_coords = len(current.names)
    recorder = ChainRecorder(current, burn_in, thin, "pmmh")
    window_accepts = 0
    total = burn_in + M
    for m in range(1, total + 1):
        coordinate = None if kernel.joint else (m - 1) % n_coords
        proposal = propose(current, kernel, rng, coordinate)
        proposal_lp = log_prior(proposal, priors)
        accepted = False
        if proposal_lp > -math.inf:
            estimate = estimator(proposal, (m,))
            proposal_ll = estimate.log_marginal_likelihood
            if proposal_ll > -math.inf:
                if current_ll == -math.inf:
                    log_ratio = 0.0
                else:
                    log_ratio = (proposal_ll + proposal_lp) - (current_ll + current_lp)
                if accept_move(rng, log_ratio):
                    current, current_lp, current_ll = proposal, proposal_lp, proposal_ll
                    current_traj = estimate.sampled_trajectory
                    accepted = True
        window_accepts += accepted
        recorder.record(m, current, current_ll, accepted, current_traj)

        if m % log_every == 0:
            logger.info(
                "pmmh progress",
                extra={
                    "iteration": m,
                    "total": total,
                    "window_acceptance": window_accepts / log_every,
                    "loglik": current_ll,
                },
            )
            window_accepts = 0

    chain = recorder.chain()
    logger.info(
        "pmmh finished",
        extra={"draws": len(chain), "acceptance_rate": chain.acceptance_rate, "particles": P},
    )
    return chain
