"""Posterior chain storage and its CSV form."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from .errors import ContractViolation, DataLoadError
from .model import ParameterSet

logger = logging.getLogger("sis-pmcmc.chain")


@dataclass
class PosteriorChain:
    """Stored draws after burn-in.

    ``draws`` holds θ on the natural scale (ρ, not logit ρ), one row per stored
    iteration. ``trajectories`` maps an iteration number to the hidden path
    kept for it (thinned).
    """
    parameter_names: List[str]
    template: ParameterSet
    iterations: np.ndarray
    draws: np.ndarray
    loglik: np.ndarray
    accepted: np.ndarray
    trajectories: Dict[int, np.ndarray] = field(default_factory=dict)
    algorithm: str = "pmmh"

    def __post_init__(self) -> None:
        n = self.draws.shape[0]
        if self.draws.ndim != 2 or self.draws.shape[1] != len(self.parameter_names):
            raise ContractViolation("draws must be an (M, n_parameters) matrix")
        if not (self.iterations.size == self.loglik.size == self.accepted.size == n):
            raise ContractViolation("chain columns have different lengths")

    def __len__(self) -> int:
        return int(self.draws.shape[0])

    @property
    def acceptance_rate(self) -> float:
        if len(self) == 0:
            return float("nan")
        return float(np.count_nonzero(self.accepted) / len(self))

    def theta(self, i: int) -> ParameterSet:
        return self.template.with_natural_vector(self.draws[i])

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, self.parameter_names.index(name)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.draws, columns=self.parameter_names)
        frame.insert(0, "iter", self.iterations)
        frame["loglik"] = self.loglik
        frame["accepted"] = self.accepted.astype(int)
        return frame

    def write_csv(self, path: str) -> None:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(
            f"Wrote chain to {path}",
            extra={"draws": len(self), "acceptance_rate": self.acceptance_rate},
        )


def read_chain_csv(path: str, template: ParameterSet) -> PosteriorChain:
    """Load a chain written by :meth:`PosteriorChain.write_csv`; ``template`` fixes the structure."""
    if not os.path.exists(path):
        raise DataLoadError(path, "chain file not found")
    frame = pd.read_csv(path)
    names = template.names
    missing = [c for c in ["iter", *names, "loglik", "accepted"] if c not in frame.columns]
    if missing:
        raise DataLoadError(path, f"missing columns {missing}")
    return PosteriorChain(
        parameter_names=names,
        template=template,
        iterations=frame["iter"].to_numpy(dtype=np.int64),
        draws=frame[names].to_numpy(dtype=float),
        loglik=frame["loglik"].to_numpy(dtype=float),
        accepted=frame["accepted"].to_numpy(dtype=bool),
    )


class ChainRecorder:
    """Accumulates post-burn-in iterations into a PosteriorChain."""

    def __init__(self, template: ParameterSet, burn_in: int, thin: int, algorithm: str):
        self.template = template
        self.burn_in = burn_in
        self.thin = max(1, thin)
        self.algorithm = algorithm
        self._iterations: List[int] = []
        self._draws: List[np.ndarray] = []
        self._loglik: List[float] = []
        self._accepted: List[bool] = []
        self._trajectories: Dict[int, np.ndarray] = {}

    def record(self, iteration: int, theta: ParameterSet, loglik: float, accepted: bool, trajectory: Optional[np.ndarray]) -> None:
        if iteration <= self.burn_in:
            return
        stored = len(self._iterations)
        self._iterations.append(iteration)
        self._draws.append(theta.natural_vector())
        self._loglik.append(loglik)
        self._accepted.append(accepted)
        if trajectory is not None and stored % self.thin == 0:
            self._trajectories[iteration] = trajectory

    def chain(self) -> PosteriorChain:
        names = self.template.names
        draws = np.vstack(self._draws) if self._draws else np.zeros((0, len(names)))
        return PosteriorChain(
            parameter_names=names,
            template=self.template,
            iterations=np.asarray(self._iterations, dtype=np.int64),
            draws=draws,
            loglik=np.asarray(self._loglik, dtype=float),
            accepted=np.asarray(self._accepted, dtype=bool),
            trajectories=self._trajectories,
            algorithm=self.algorithm,
        )
