from __future__ import annotations

import json
import logging
import os
from functools import lru_cache
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator, validator
from pydantic_settings import BaseSettings

from .errors import ConfigError
from .model import ParameterSet
from .priors import PriorDistribution, ProposalKernel

logger = logging.getLogger("sis-pmcmc.config")

# リポジトリ直下の config/presets (カレントディレクトリに依存しない)
DEFAULT_PRESETS_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config", "presets")


class ThetaBlock(BaseModel):
    """Data-generating parameter values (natural scale)."""
    beta_alpha: List[float]
    beta_lambda: List[float]
    beta_gamma: Optional[List[float]] = None
    rho: float = Field(gt=0.0, lt=1.0)

    def to_parameter_set(self, gamma_fixed: Optional[float]) -> ParameterSet:
        return ParameterSet(
            beta_alpha=tuple(self.beta_alpha),
            beta_lambda=tuple(self.beta_lambda),
            beta_gamma=tuple(self.beta_gamma) if self.beta_gamma is not None else None,
            rho=self.rho,
            gamma_fixed=None if self.beta_gamma is not None else gamma_fixed,
        )


class ModelBlock(BaseModel):
    n_agents: int = Field(default=100, ge=1)
    time_steps: int = Field(default=30, ge=1)
    covariates: Literal["standard_normal", "binary", "file", "diamond"] = "standard_normal"
    binary_p: float = Field(default=0.4, ge=0.0, le=1.0)
    covariate_file: Optional[str] = None
    network: Literal["fully_connected", "block", "grid8", "edge_list", "diamond"] = "fully_connected"
    block_sizes: Optional[List[int]] = None
    grid_rows: Optional[int] = None
    grid_cols: Optional[int] = None
    grid_wrap: bool = True
    edge_list_file: Optional[str] = None
    # β_γ を推定する場合は None
    gamma_fixed: Optional[float] = Field(default=0.1, gt=0.0, lt=1.0)
    population_seed: int = 2023
    truth: Optional[ThetaBlock] = None

    @model_validator(mode="after")
    def _check_sources(self) -> "ModelBlock":
        if self.covariates == "file" and not self.covariate_file:
            raise ValueError("covariates='file' requires covariate_file")
        if self.network == "edge_list" and not self.edge_list_file:
            raise ValueError("network='edge_list' requires edge_list_file")
        if self.network == "block" and not self.block_sizes:
            raise ValueError("network='block' requires block_sizes")
        if self.network == "grid8" and (self.grid_rows is None or self.grid_cols is None):
            raise ValueError("network='grid8' requires grid_rows and grid_cols")
        if self.truth is not None and (self.truth.beta_gamma is None) == (self.gamma_fixed is None):
            raise ValueError("exactly one of truth.beta_gamma / gamma_fixed must be set")
        return self


class SamplerBlock(BaseModel):
    algorithm: Literal["pmmh", "pg"] = "pmmh"
    particles: int = Field(default=100, ge=2)
    iterations: int = Field(default=10_000, ge=1)
    burn_in: int = Field(default=10_000, ge=0)
    thin: int = Field(default=10, ge=1)
    step_size: float = Field(default=0.1, ge=0.0)
    step_sizes: Dict[str, float] = Field(default_factory=dict)
    joint: bool = True
    seed: int = 1
    resampling: Literal["multinomial", "systematic"] = "multinomial"
    tune: bool = False
    pilot_length: int = Field(default=500, ge=500)
    log_every: int = Field(default=1000, ge=1)

    @validator("step_sizes")
    def _non_negative_steps(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, step in value.items():
            if step < 0:
                raise ValueError(f"step size for {name} must be >= 0")
        return value

    def kernel_for(self, names: List[str]) -> ProposalKernel:
        return ProposalKernel(
            step_sizes={name: self.step_sizes.get(name, self.step_size) for name in names},
            joint=self.joint,
        )


class IOBlock(BaseModel):
    data: Optional[str] = None
    interpolate: bool = True
    response: Literal["cumulative", "prevalence"] = "cumulative"
    output_dir: str = "output"
    chain_file: str = "chain.csv"
    summary_file: str = "summary.csv"
    prediction_file: str = "prediction.csv"
    simulation_file: str = "simulation.csv"
    hidden_states_file: Optional[str] = "hidden_states.csv"
    prediction_draws: int = Field(default=200, ge=1)

    def output_path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)


class RunConfig(BaseModel):
    """Complete description of one simulate/fit/predict run."""
    name: str = "run"
    model: ModelBlock = Field(default_factory=ModelBlock)
    priors: Dict[str, PriorDistribution] = Field(default_factory=dict)
    sampler: SamplerBlock = Field(default_factory=SamplerBlock)
    io: IOBlock = Field(default_factory=IOBlock)

    @model_validator(mode="after")
    def _check_rho_prior(self) -> "RunConfig":
        rho_prior = self.priors.get("rho")
        if rho_prior is not None and rho_prior.family not in ("beta", "logit_normal", "flat"):
            raise ValueError(f"rho prior must be beta or logit_normal, got {rho_prior.family}")
        return self


class Settings(BaseSettings):
    num_threads: Optional[int] = Field(
        default=None,
        ge=1,
        description="numba thread count. Can be overridden by SIS_PMCMC_NUM_THREADS environment variable."
    )
    log_level: str = "INFO"
    presets_dir: str = Field(
        default=DEFAULT_PRESETS_DIR,
        description="Directory searched by --preset. Can be overridden by SIS_PMCMC_PRESETS_DIR environment variable."
    )
    prediction_workers: int = Field(default=1, ge=1)

    class Config:
        env_prefix = "SIS_PMCMC_"
        env_file = ".env"

    def preset_path(self, name: str) -> str:
        return os.path.join(self.presets_dir, f"{name}.json")


def load_run_config(path: str, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> RunConfig:
    """Load a RunConfig JSON file and apply per-block overrides (e.g. from CLI flags)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc

    for block, values in (overrides or {}).items():
        cleaned = {k: v for k, v in values.items() if v is not None}
        if cleaned:
            raw.setdefault(block, {}).update(cleaned)

    try:
        config = RunConfig(**raw)
    except ValidationError as exc:
        # 詳細はDEBUGログ、ユーザーには要約のみ
        logger.debug(f"RunConfig validation failed: {exc}")
        raise ConfigError(f"invalid config {path}: {exc.error_count()} error(s): {exc.errors()[0]['msg']}") from exc

    logger.info(f"Loaded run config '{config.name}' from {path}")
    return config


@lru_cache()
def get_settings() -> Settings:
    return Settings()
