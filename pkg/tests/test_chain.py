import numpy as np
import pytest

from sis_pmcmc.chain import ChainRecorder, read_chain_csv
from sis_pmcmc.errors import DataLoadError


class TestChainRecorder:
    def test_burn_in_and_thinning(self, fixed_gamma_theta):
        recorder = ChainRecorder(fixed_gamma_theta, burn_in=2, thin=3, algorithm="pmmh")
        path = np.zeros((5, 2), dtype=np.uint8)
        for m in range(1, 11):
            recorder.record(m, fixed_gamma_theta, -float(m), m % 2 == 0, path)
        chain = recorder.chain()
        assert len(chain) == 8
        np.testing.assert_array_equal(chain.iterations, np.arange(3, 11))
        assert sorted(chain.trajectories) == [3, 6, 9]
        assert chain.acceptance_rate == pytest.approx(0.5)

    def test_empty(self, fixed_gamma_theta):
        chain = ChainRecorder(fixed_gamma_theta, burn_in=5, thin=1, algorithm="pg").chain()
        assert len(chain) == 0
        assert np.isnan(chain.acceptance_rate)


class TestChainCsv:
    def test_header_and_reload(self, fixed_gamma_theta, tmp_path):
        recorder = ChainRecorder(fixed_gamma_theta, burn_in=0, thin=1, algorithm="pmmh")
        other = fixed_gamma_theta.with_rho(0.3)
        recorder.record(1, fixed_gamma_theta, -12.5, True, None)
        recorder.record(2, other, -11.25, True, None)
        chain = recorder.chain()
        path = tmp_path / "out" / "chain.csv"
        chain.write_csv(str(path))

        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == "iter,beta_a0,beta_a1,beta_l0,beta_l1,rho,loglik,accepted"
        loaded = read_chain_csv(str(path), fixed_gamma_theta)
        np.testing.assert_array_equal(loaded.draws, chain.draws)
        np.testing.assert_array_equal(loaded.loglik, [-12.5, -11.25])
        assert loaded.theta(1).rho == pytest.approx(0.3)

    def test_missing_columns(self, fixed_gamma_theta, tmp_path):
        path = tmp_path / "chain.csv"
        path.write_text("iter,beta_a0\n1,0.0\n", encoding="utf-8")
        with pytest.raises(DataLoadError):
            read_chain_csv(str(path), fixed_gamma_theta)
