"""Posterior summaries and posterior-predictive trajectory bands."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from .chain import PosteriorChain
from .errors import ContractViolation
from .model import AgentPopulation, sample_observation
from .network import Network
from .rng import stream
from .simulate import simulate_abm

logger = logging.getLogger("sis-pmcmc.summary")

MAX_COVARIATE_GROUPS = 16
QUANTILES = (0.025, 0.5, 0.975)


def covariate_groups(pop: AgentPopulation) -> List[Tuple[str, np.ndarray]]:
    """Distinct covariate rows with a readable label; empty for continuous covariates.

    A row is labelled by a named grouping when that grouping is constant on
    the row's agents and separates the rows (e.g. younger / elderly).
    """
    rows, inverse = np.unique(pop.covariates, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    if rows.shape[0] > MAX_COVARIATE_GROUPS:
        return []
    for labels in pop.groups.values():
        names = []
        for k in range(rows.shape[0]):
            values = np.unique(labels[inverse == k])
            if values.size != 1:
                break
            names.append(str(values[0]))
        if len(names) == rows.shape[0] and len(set(names)) == len(names):
            return list(zip(names, rows))
    return [("z=(" + ",".join(f"{v:g}" for v in row) + ")", row) for row in rows]


def _interval(values: np.ndarray) -> Dict[str, float]:
    return {
        "mean": float(np.mean(values)),
        "q025": float(np.quantile(values, 0.025)),
        "q975": float(np.quantile(values, 0.975)),
    }


def posterior_summary(chain: PosteriorChain, pop: Optional[AgentPopulation] = None) -> pd.DataFrame:
    """Mean and 95% interval per parameter on the natural scale.

    With ``pop`` given, group infection/recovery probabilities and
    R = λ/γ are computed per draw and then summarised.
    """
    if len(chain) == 0:
        raise ContractViolation("cannot summarise an empty chain")
    rows = [{"parameter": name, **_interval(chain.draws[:, j])} for j, name in enumerate(chain.parameter_names)]

    if pop is not None:
        d = chain.template.dim
        beta_lambda = chain.draws[:, d:2 * d]
        beta_gamma = chain.draws[:, 2 * d:3 * d] if chain.template.free_recovery else None
        for label, z in covariate_groups(pop):
            lam = expit(beta_lambda @ z)
            gamma = expit(beta_gamma @ z) if beta_gamma is not None else np.full(len(chain), chain.template.gamma_fixed)
            rows.append({"parameter": f"lambda[{label}]", **_interval(lam)})
            if beta_gamma is not None:
                rows.append({"parameter": f"gamma[{label}]", **_interval(gamma)})
            rows.append({"parameter": f"R[{label}]", **_interval(lam / gamma)})

    return pd.DataFrame(rows, columns=["parameter", "mean", "q025", "q975"])


def _group_masks(pop: AgentPopulation) -> List[Tuple[str, np.ndarray]]:
    masks = [("all", np.ones(pop.n_agents, dtype=bool))]
    for labels in pop.groups.values():
        for label in np.unique(labels):
            masks.append((str(label), labels == label))
    return masks


def predict_trajectories(
    chain: PosteriorChain,
    pop: AgentPopulation,
    net: Network,
    T: int,
    draws: int,
    seed: int,
    workers: int = 1,
) -> pd.DataFrame:
    """Forward-simulate from posterior draws and band the results per day.

    Series per group: ``actual`` (I_t), ``reported`` (y_t; groups other than
    ``all`` are thinned by ρ separately) and ``cumulative`` (agents infected
    at least once by day t). Columns: day, group, series, q025, q50, q975.
    """
    if len(chain) == 0:
        raise ContractViolation("cannot predict from an empty chain")
    if draws < 1:
        raise ContractViolation(f"draws must be >= 1, got {draws}")
    picks = stream(seed, 0).integers(0, len(chain), size=draws)
    masks = _group_masks(pop)

    def one_draw(j: int) -> np.ndarray:
        theta = chain.theta(int(picks[j]))
        sim = simulate_abm(theta, pop, net, T, seed, key=(1, j))
        ever = np.maximum.accumulate(sim.hidden_states, axis=0)
        thin_rng = stream(seed, 2, j)
        out = np.empty((len(masks), 3, T + 1), dtype=np.int64)
        for g, (name, mask) in enumerate(masks):
            actual = sim.hidden_states[:, mask].sum(axis=1, dtype=np.int64)
            out[g, 0] = sim.observations if name == "all" else sample_observation(actual, theta.rho, thin_rng)
            out[g, 1] = actual
            out[g, 2] = ever[:, mask].sum(axis=1, dtype=np.int64)
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_draw, range(draws)))
    else:
        results = [one_draw(j) for j in range(draws)]
    stacked = np.stack(results)
    bands = np.quantile(stacked, QUANTILES, axis=0)

    records = []
    for g, (name, _) in enumerate(masks):
        for s, series in enumerate(("reported", "actual", "cumulative")):
            for t in range(T + 1):
                records.append((t, name, series, *bands[:, g, s, t]))
    logger.info(f"Predicted {draws} trajectories over {T} days for {len(masks)} group(s)")
    return pd.DataFrame(records, columns=["day", "group", "series", "q025", "q50", "q975"])
