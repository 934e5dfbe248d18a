"""Synthetic data from the agent-based SIS model and the compartmental baseline."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .errors import ContractViolation, DataLoadError
from .model import AgentPopulation, ParameterSet, initial_ensemble, propagate, sample_observation
from .network import Network
from .rng import stream

logger = logging.getLogger("sis-pmcmc.simulate")


@dataclass(frozen=True)
class SimulationOutput:
    hidden_states: np.ndarray
    observations: np.ndarray
    true_prevalence: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if not np.array_equal(self.true_prevalence, self.hidden_states.sum(axis=1)):
            raise ContractViolation("true prevalence must equal the infected count of each hidden state")
        if np.any(self.observations < 0) or np.any(self.observations > self.true_prevalence):
            raise ContractViolation("observations must satisfy 0 <= y_t <= I_t")

    @property
    def time_steps(self) -> int:
        return int(self.observations.size - 1)


@dataclass(frozen=True)
class CompartmentTrajectory:
    S: np.ndarray
    I: np.ndarray

    @property
    def population(self) -> float:
        return float(self.S[0] + self.I[0])


def standard_normal_covariates(n_agents: int, rng: np.random.Generator) -> np.ndarray:
    """z^n = (1, z_2) with z_2 ~ N(0, 1)."""
    return np.column_stack([np.ones(n_agents), rng.standard_normal(n_agents)])


def binary_covariates(n_agents: int, rng: np.random.Generator, p: float = 0.4) -> np.ndarray:
    """z^n = (1, z_2) with z_2 ~ Bernoulli(p)."""
    return np.column_stack([np.ones(n_agents), (rng.random(n_agents) < p).astype(float)])


def simulate_abm(
    theta: ParameterSet,
    pop: AgentPopulation,
    net: Network,
    T: int,
    seed: int,
    key: Tuple[int, ...] = (),
) -> SimulationOutput:
    """Draw X_0, iterate the transition kernel T times and thin each I_t by ρ."""
    if T < 1:
        raise ContractViolation(f"T must be >= 1, got {T}")
    if pop.n_agents != net.n_agents:
        raise ContractViolation("population and network sizes differ")
    rates = pop.rates(theta)
    n_agents = pop.n_agents
    states = np.empty((T + 1, n_agents), dtype=np.uint8)
    states[0] = initial_ensemble(rates, stream(seed, *key, 0, 0).random(n_agents))
    for t in range(1, T + 1):
        uniforms = stream(seed, *key, 0, t).random(n_agents)
        states[t] = propagate(states[t - 1], rates, net, uniforms)

    prevalence = states.sum(axis=1, dtype=np.int64)
    observations = sample_observation(prevalence, theta.rho, stream(seed, *key, 1)).astype(np.int64)
    logger.debug(
        "simulated ABM",
        extra={"n_agents": n_agents, "T": T, "seed": seed, "final_prevalence": int(prevalence[-1])},
    )
    return SimulationOutput(states, observations, prevalence, seed)


def classical_sis(S0: float, I0: float, lam: float, gamma: float, T: int) -> CompartmentTrajectory:
    """Discrete-time compartmental SIS recursion with S_t + I_t = N."""
    N = S0 + I0
    if N <= 0 or S0 < 0 or I0 < 0:
        raise ContractViolation("S0, I0 must be non-negative with S0 + I0 > 0")
    if lam < 0 or gamma < 0:
        raise ContractViolation("lambda and gamma must be >= 0")
    S = np.empty(T + 1)
    I = np.empty(T + 1)
    S[0], I[0] = S0, I0
    for t in range(T):
        flow = lam * (S[t] / N) * I[t] - gamma * I[t]
        I[t + 1] = I[t] + flow
        S[t + 1] = N - I[t + 1]
    return CompartmentTrajectory(S=S, I=I)


def write_simulation(output: SimulationOutput, path: str, states_path: Optional[str] = None) -> None:
    """CSV ``t,y,I_true``; optionally the (T+1) x N hidden-state matrix."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    frame = pd.DataFrame({
        "t": np.arange(output.observations.size),
        "y": output.observations,
        "I_true": output.true_prevalence,
    })
    frame.to_csv(path, index=False)
    if states_path:
        os.makedirs(os.path.dirname(states_path) or ".", exist_ok=True)
        matrix = pd.DataFrame(output.hidden_states, columns=[f"agent_{n}" for n in range(output.hidden_states.shape[1])])
        matrix.insert(0, "t", np.arange(output.hidden_states.shape[0]))
        matrix.to_csv(states_path, index=False)
    logger.info(f"Wrote simulation to {path}")


def load_simulation_counts(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """Read back (y, I_true) from a simulation CSV."""
    if not os.path.exists(path):
        raise DataLoadError(path, "simulation file not found")
    frame = pd.read_csv(path)
    missing = {"t", "y", "I_true"} - set(frame.columns)
    if missing:
        raise DataLoadError(path, f"missing columns {sorted(missing)}")
    return frame["y"].to_numpy(dtype=np.int64), frame["I_true"].to_numpy(dtype=np.int64)
