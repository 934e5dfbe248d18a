"""Populations and networks named by a run config, including the cruise-ship outbreak setting."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy.special import logit

from .config import ModelBlock
from .errors import ConfigError, DataLoadError
from .model import AgentPopulation, ParameterSet, parameter_template
from .network import Network, block_network, fully_connected, grid8_network, load_edge_list
from .priors import PriorDistribution, PriorSpec, ProposalKernel
from .rng import stream
from .simulate import binary_covariates, standard_normal_covariates

logger = logging.getLogger("sis-pmcmc.presets")

# Diamond Princess, departure Jan 20 = day 0, Feb 19 = day 30.
# Age and crew membership are assigned independently (only the marginals are
# published) from this seed.
DIAMOND_SEED = 20200121
DIAMOND_AGENTS = 3711
DIAMOND_ELDERLY = 2165
DIAMOND_CREW = 1045
DIAMOND_GAMMA = 1.0 / 13.5
DIAMOND_OBSERVED_GROUP_TOTALS = {"younger": 154, "elderly": 465}
DIAMOND_STEP_SIZE = 0.1


@dataclass
class ModelSetup:
    """Population and network for a run; built-in settings also carry their priors and kernel."""
    population: AgentPopulation
    network: Network
    gamma_fixed: Optional[float]
    priors: Optional[PriorSpec] = None
    kernel: Optional[ProposalKernel] = None

    @property
    def template(self) -> ParameterSet:
        return parameter_template(self.population.dim, self.gamma_fixed)


def diamond_population(seed: int = DIAMOND_SEED) -> AgentPopulation:
    """3711 agents, z = (1, elderly); groups ``age`` and ``role``."""
    elderly = np.zeros(DIAMOND_AGENTS, dtype=bool)
    elderly[stream(seed, 0).permutation(DIAMOND_AGENTS)[:DIAMOND_ELDERLY]] = True
    crew = np.zeros(DIAMOND_AGENTS, dtype=bool)
    crew[stream(seed, 1).permutation(DIAMOND_AGENTS)[:DIAMOND_CREW]] = True
    covariates = np.column_stack([np.ones(DIAMOND_AGENTS), elderly.astype(float)])
    return AgentPopulation(
        covariates=covariates,
        groups={
            "age": np.where(elderly, "elderly", "younger"),
            "role": np.where(crew, "crew", "passenger"),
        },
    )


def diamond_priors() -> PriorSpec:
    diffuse = PriorDistribution(family="normal", mu=0.0, sigma=3.0)
    return PriorSpec(priors={
        "beta_a0": diffuse,
        "beta_a1": diffuse,
        "beta_l0": diffuse,
        "beta_l1": PriorDistribution(family="truncnorm_pos", mu=0.0, sigma=3.0),
        "rho": PriorDistribution(family="logit_normal", mu=float(logit(0.8)), sigma=1.0),
    })


def diamond_princess_preset(seed: int = DIAMOND_SEED) -> ModelSetup:
    population = diamond_population(seed)
    network = block_network(population.groups["role"])
    names = parameter_template(population.dim, DIAMOND_GAMMA).names
    return ModelSetup(
        population=population,
        network=network,
        gamma_fixed=DIAMOND_GAMMA,
        priors=diamond_priors(),
        kernel=ProposalKernel(step_sizes={name: DIAMOND_STEP_SIZE for name in names}),
    )


def _covariates_from_file(path: str, n_agents: int) -> np.ndarray:
    if not os.path.exists(path):
        raise DataLoadError(path, "covariate file not found")
    frame = pd.read_csv(path, comment="#")
    non_numeric = [c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])]
    if non_numeric:
        raise DataLoadError(path, f"non-numeric covariate columns {non_numeric}")
    if len(frame) != n_agents:
        raise DataLoadError(path, f"{len(frame)} covariate rows for {n_agents} agents")
    return frame.to_numpy(dtype=float)


def _build_population(model: ModelBlock) -> AgentPopulation:
    rng = stream(model.population_seed, 0)
    n = model.n_agents
    if model.covariates == "standard_normal":
        return AgentPopulation(standard_normal_covariates(n, rng))
    if model.covariates == "binary":
        z = binary_covariates(n, rng, model.binary_p)
        return AgentPopulation(z, groups={"z": np.where(z[:, 1] > 0, "z=1", "z=0")})
    return AgentPopulation(_covariates_from_file(model.covariate_file, n))


def _build_network(model: ModelBlock, population: AgentPopulation) -> Network:
    n = population.n_agents
    if model.network == "fully_connected":
        return fully_connected(n)
    if model.network == "block":
        sizes = model.block_sizes or []
        if sum(sizes) != n:
            raise ConfigError(f"block_sizes sum to {sum(sizes)}, expected {n}")
        labels = np.repeat(np.arange(len(sizes)), sizes)
        population.groups.setdefault("block", np.char.add("block", labels.astype(str)))
        return block_network(labels)
    if model.network == "grid8":
        return grid8_network(model.grid_rows, model.grid_cols, model.grid_wrap, n_agents=n)
    if model.network == "edge_list":
        return load_edge_list(model.edge_list_file, n)
    if "role" not in population.groups:
        raise ConfigError("network='diamond' requires covariates='diamond'")
    return block_network(population.groups["role"])


def _diamond_setup(model: ModelBlock) -> ModelSetup:
    # プリセット既定値に、設定ファイルで明示した項目だけを上書き
    setup = diamond_princess_preset(model.population_seed)
    if model.network != "diamond":
        setup.network = _build_network(model, setup.population)
    if "gamma_fixed" in model.model_fields_set:
        setup.gamma_fixed = model.gamma_fixed
        setup.kernel = ProposalKernel(step_sizes={name: DIAMOND_STEP_SIZE for name in setup.template.names})
    return setup


def build_model(model: ModelBlock) -> ModelSetup:
    """Population and network described by a model block."""
    if model.covariates == "diamond" and model.n_agents != DIAMOND_AGENTS:
        raise ConfigError(f"the diamond population has {DIAMOND_AGENTS} agents, config says {model.n_agents}")
    if model.covariates == "diamond":
        setup = _diamond_setup(model)
    else:
        population = _build_population(model)
        setup = ModelSetup(population, _build_network(model, population), model.gamma_fixed)
    population, network = setup.population, setup.network
    logger.info(
        "built model",
        extra={
            "n_agents": population.n_agents,
            "covariates": model.covariates,
            "network": network.kind,
            "groups": sorted(population.groups),
        },
    )
    return setup


def group_totals(population: AgentPopulation) -> Dict[str, Dict[str, int]]:
    """Agent counts per label for every named grouping."""
    return {
        name: {str(k): int(v) for k, v in zip(*np.unique(labels, return_counts=True))}
        for name, labels in population.groups.items()
    }
