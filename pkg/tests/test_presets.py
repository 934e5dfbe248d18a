import json
import math
import os

import numpy as np
import pytest

from sis_pmcmc.config import ModelBlock, load_run_config
from sis_pmcmc.errors import ConfigError
from sis_pmcmc.inference import prior_spec
from sis_pmcmc.presets import (
    DIAMOND_AGENTS,
    DIAMOND_GAMMA,
    DIAMOND_STEP_SIZE,
    build_model,
    diamond_priors,
    diamond_princess_preset,
    group_totals,
)

PRESETS_DIR = os.path.join(os.path.dirname(__file__), "..", "config", "presets")


@pytest.fixture(scope="module")
def diamond():
    return diamond_princess_preset()


class TestDiamondPrincess:
    def test_group_sizes(self, diamond):
        totals = group_totals(diamond.population)
        assert totals["age"] == {"elderly": 2165, "younger": 1546}
        assert totals["role"] == {"crew": 1045, "passenger": 2666}

    def test_covariates(self, diamond):
        z = diamond.population.covariates
        assert z.shape == (DIAMOND_AGENTS, 2)
        assert np.all(z[:, 0] == 1.0)
        np.testing.assert_array_equal(z[:, 1] == 1.0, diamond.population.groups["age"] == "elderly")

    def test_fixed_recovery(self, diamond):
        assert diamond.gamma_fixed == pytest.approx(1 / 13.5)
        assert diamond.template.names == ["beta_a0", "beta_a1", "beta_l0", "beta_l1", "rho"]

    def test_network_splits_crew_and_passengers(self, diamond):
        net = diamond.network
        assert net.n_components() == 2
        crew = diamond.population.groups["role"] == "crew"
        np.testing.assert_array_equal(net.degrees[crew], 1044)
        np.testing.assert_array_equal(net.degrees[~crew], 2665)

    def test_priors_and_kernel(self, diamond):
        priors = diamond.priors.priors
        assert priors["beta_l1"].family == "truncnorm_pos"
        assert priors["rho"].family == "logit_normal"
        assert priors["rho"].mu == pytest.approx(math.log(4.0))
        assert set(diamond.kernel.step_sizes.values()) == {0.1}

    def test_same_seed_same_population(self, diamond):
        again = diamond_princess_preset()
        np.testing.assert_array_equal(again.population.groups["role"], diamond.population.groups["role"])


class TestBuildModel:
    def test_diamond_requires_full_size(self):
        with pytest.raises(ConfigError):
            build_model(ModelBlock(n_agents=100, covariates="diamond", network="diamond", gamma_fixed=DIAMOND_GAMMA))

    def test_diamond_network_needs_diamond_population(self):
        with pytest.raises(ConfigError):
            build_model(ModelBlock(n_agents=10, network="diamond"))

    def test_block_sizes_must_cover_population(self):
        with pytest.raises(ConfigError):
            build_model(ModelBlock(n_agents=10, network="block", block_sizes=[4, 4]))

    def test_block_labels(self):
        setup = build_model(ModelBlock(n_agents=10, network="block", block_sizes=[4, 6]))
        assert group_totals(setup.population)["block"] == {"block0": 4, "block1": 6}
        assert setup.network.n_components() == 2

    def test_binary_covariates(self):
        setup = build_model(ModelBlock(n_agents=200, covariates="binary", binary_p=0.4, population_seed=5))
        z = setup.population.covariates
        assert set(np.unique(z[:, 1])) <= {0.0, 1.0}
        assert sum(group_totals(setup.population)["z"].values()) == 200

    def test_grid(self):
        setup = build_model(ModelBlock(n_agents=16, network="grid8", grid_rows=4, grid_cols=4))
        assert np.all(setup.network.degrees == 8)

    def test_covariate_file(self, tmp_path):
        path = tmp_path / "z.csv"
        path.write_text("intercept,age\n1,0.5\n1,-0.2\n1,1.0\n", encoding="utf-8")
        setup = build_model(ModelBlock(n_agents=3, covariates="file", covariate_file=str(path)))
        assert setup.population.dim == 2

    def test_population_seed_reproducible(self):
        a = build_model(ModelBlock(n_agents=20, population_seed=11))
        b = build_model(ModelBlock(n_agents=20, population_seed=11))
        np.testing.assert_array_equal(a.population.covariates, b.population.covariates)

    def test_diamond_config_takes_preset_defaults(self):
        config = load_run_config(os.path.join(PRESETS_DIR, "diamond-princess.json"))
        setup = build_model(config.model)
        assert setup.gamma_fixed == DIAMOND_GAMMA
        assert setup.priors == diamond_priors()
        assert setup.kernel.step_sizes == {name: DIAMOND_STEP_SIZE for name in setup.template.names}
        names = setup.template.names
        assert prior_spec(config, names, setup.priors) is setup.priors

    def test_diamond_explicit_recovery_overrides_preset(self):
        setup = build_model(ModelBlock(n_agents=DIAMOND_AGENTS, covariates="diamond", network="diamond", gamma_fixed=None))
        assert setup.gamma_fixed is None
        assert "beta_g0" in setup.template.names
        assert set(setup.kernel.step_sizes) == set(setup.template.names)

    def test_explicit_priors_win_over_preset(self, tmp_path):
        raw = {
            "model": {"n_agents": DIAMOND_AGENTS, "covariates": "diamond", "network": "diamond"},
            "priors": {"rho": {"family": "beta", "a": 2.0, "b": 2.0}},
        }
        path = tmp_path / "run.json"
        path.write_text(json.dumps(raw), encoding="utf-8")
        config = load_run_config(str(path))
        setup = build_model(config.model)
        with pytest.raises(ConfigError):
            prior_spec(config, setup.template.names, setup.priors)
