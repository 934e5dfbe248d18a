"""Long runs on the shipped presets. Enable with ``pytest --runslow``."""

import os

import numpy as np
import pandas as pd
import pytest
from scipy.special import expit

from sis_pmcmc.chain import read_chain_csv
from sis_pmcmc.config import load_run_config
from sis_pmcmc.inference import run_inference
from sis_pmcmc.main import cli_main, load_observations
from sis_pmcmc.presets import DIAMOND_GAMMA, DIAMOND_OBSERVED_GROUP_TOTALS, build_model, diamond_princess_preset
from sis_pmcmc.summary import posterior_summary

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))


def _preset(name):
    return os.path.join(ROOT, "config", "presets", f"{name}.json")


def _fit(name, **sampler):
    config = load_run_config(_preset(name))
    if sampler:
        config = config.model_copy(update={"sampler": config.sampler.model_copy(update=sampler)})
    setup = build_model(config.model)
    observations = load_observations(config, setup)
    return config, setup, run_inference(config, setup, observations)


def _agent_rate_spread(chain, population):
    """Cross-agent sd of the posterior-mean infection probability."""
    d = chain.template.dim
    lam = expit(chain.draws[:, d:2 * d] @ population.covariates.T)
    return float(lam.mean(axis=0).std())


@pytest.mark.slow
def test_categorical_recovery():
    config, setup, chain = _fit("sim2-categorical")
    truth = config.model.truth
    for name, value in (("beta_l0", truth.beta_lambda[0]), ("beta_l1", truth.beta_lambda[1]), ("rho", truth.rho)):
        lo, hi = np.quantile(chain.column(name), [0.025, 0.975])
        assert lo <= value <= hi, name

    summary = posterior_summary(chain, setup.population).set_index("parameter")
    assert summary.loc["lambda[z=0]", "mean"] == pytest.approx(0.27, abs=0.15)
    assert summary.loc["lambda[z=1]", "mean"] == pytest.approx(0.73, abs=0.25)


@pytest.fixture(scope="module")
def continuous_pg_and_pmmh():
    # 同じ観測データに PG と PMMH を当てる
    _, setup, pg_chain = _fit("sim3-pg")
    _, _, pmmh_chain = _fit("sim3-pg", algorithm="pmmh")
    return setup, pg_chain, pmmh_chain


@pytest.mark.slow
def test_particle_gibbs_collapses_infection_rates(continuous_pg_and_pmmh):
    setup, pg_chain, pmmh_chain = continuous_pg_and_pmmh
    pg_spread = _agent_rate_spread(pg_chain, setup.population)
    pmmh_spread = _agent_rate_spread(pmmh_chain, setup.population)
    assert pg_spread < 0.6 * pmmh_spread
    assert pg_chain.column("beta_l1").mean() < pmmh_chain.column("beta_l1").mean()


@pytest.mark.slow
@pytest.mark.xfail(strict=False, reason="spread ratio measured at 0.48 after 1500 + 1500 sweeps")
def test_particle_gibbs_spread_below_third_of_pmmh(continuous_pg_and_pmmh):
    setup, pg_chain, pmmh_chain = continuous_pg_and_pmmh
    pg_spread = _agent_rate_spread(pg_chain, setup.population)
    pmmh_spread = _agent_rate_spread(pmmh_chain, setup.population)
    assert pg_spread < pmmh_spread / 3.0


@pytest.mark.slow
def test_diamond_princess_pipeline(tmp_path, monkeypatch):
    monkeypatch.chdir(ROOT)
    args = ["--preset", "diamond-princess", "--output", str(tmp_path)]
    assert cli_main(["fit", *args]) == 0
    assert cli_main(["predict", *args]) == 0

    summary = pd.read_csv(tmp_path / "summary.csv").set_index("parameter")
    assert 0.40 <= summary.loc["rho", "mean"] <= 0.80

    setup = diamond_princess_preset()
    chain = read_chain_csv(str(tmp_path / "chain.csv"), setup.template)
    r_younger = expit(chain.column("beta_l0")) / DIAMOND_GAMMA
    r_elderly = expit(chain.column("beta_l0") + chain.column("beta_l1")) / DIAMOND_GAMMA
    assert np.mean(r_elderly > r_younger) >= 0.95

    bands = pd.read_csv(tmp_path / "prediction.csv")
    final = bands[(bands["day"] == 30) & (bands["series"] == "reported")].set_index("group")
    for group, observed in DIAMOND_OBSERVED_GROUP_TOTALS.items():
        assert final.loc[group, "q025"] <= observed <= final.loc[group, "q975"], group
    assert np.all(bands["q025"] <= bands["q975"])
