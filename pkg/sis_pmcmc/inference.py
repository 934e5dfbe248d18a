from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from pydantic import ValidationError

from .chain import PosteriorChain
from .config import RunConfig
from .errors import ConfigError
from .model import ParameterSet
from .presets import ModelSetup
from .priors import PriorSpec, ProposalKernel
from .samplers import particle_gibbs, pmmh, tune_proposal

logger = logging.getLogger("sis-pmcmc.inference")


# Sampler registry
SAMPLERS = {
    "pmmh": pmmh,
    "pg": particle_gibbs,
}


def prior_spec(config: RunConfig, names: list[str], default: Optional[PriorSpec] = None) -> PriorSpec:
    """Priors from the config; an empty block falls back to ``default`` (built-in settings)."""
    if not config.priors and default is not None:
        return default
    try:
        priors = PriorSpec(priors=config.priors)
    except ValidationError as exc:
        raise ConfigError(f"invalid priors: {exc.errors()[0]['msg']}") from exc
    missing = [n for n in names if n not in priors.priors]
    if missing:
        raise ConfigError(f"config has no prior for {missing}")
    return priors


def run_inference(
    config: RunConfig,
    setup: ModelSetup,
    observations: np.ndarray,
    init: Optional[ParameterSet] = None,
) -> PosteriorChain:
    """Fit θ to ``observations`` with the sampler named in ``config.sampler``."""
    sampler = config.sampler
    name = sampler.algorithm
    if name not in SAMPLERS:
        raise ConfigError(f"Sampler '{name}' not implemented")

    observations = np.asarray(observations, dtype=np.int64)
    if observations.size != config.model.time_steps + 1:
        logger.warning(
            f"Observation series has {observations.size} points, model.time_steps={config.model.time_steps}; using the series length"
        )

    names = setup.template.names
    priors = prior_spec(config, names, setup.priors)
    kernel: ProposalKernel = sampler.kernel_for(names)
    if setup.kernel is not None and not {"step_size", "step_sizes"} & sampler.model_fields_set:
        kernel = setup.kernel.model_copy(update={"joint": sampler.joint})
    common = dict(
        gamma_fixed=setup.gamma_fixed,
        thin=sampler.thin,
        resampling=sampler.resampling,
        log_every=sampler.log_every,
    )

    if sampler.tune:
        def run_pilot(candidate: ProposalKernel, length: int, round_index: int) -> PosteriorChain:
            return SAMPLERS[name](
                observations, setup.population, setup.network, priors, candidate,
                sampler.particles, length, 0, sampler.seed + 7919 * round_index, init, **common,
            )

        tuned = tune_proposal(run_pilot, kernel, pilot_length=sampler.pilot_length)
        kernel = tuned.kernel
        logger.info(
            "Proposal tuned",
            extra={"acceptance_rate": tuned.acceptance_rate, "rounds": tuned.rounds, "converged": tuned.converged},
        )

    logger.info(
        f"Using sampler '{name}' with {sampler.particles} particles",
        extra={
            "sampler": name,
            "iterations": sampler.iterations,
            "burn_in": sampler.burn_in,
            "seed": sampler.seed,
            "parameters": names,
        },
    )
    return SAMPLERS[name](
        observations, setup.population, setup.network, priors, kernel,
        sampler.particles, sampler.iterations, sampler.burn_in, sampler.seed, init, **common,
    )
