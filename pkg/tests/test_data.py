import os

import numpy as np
import pytest

from sis_pmcmc.data import CaseSeries, cumulative_to_prevalence, load_case_series
from sis_pmcmc.errors import ContractViolation, DataLoadError

ROOT = os.path.join(os.path.dirname(__file__), "..")


def _write(tmp_path, text, name="cases.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadCaseSeries:
    def test_complete_series(self, tmp_path):
        series = load_case_series(_write(tmp_path, "day,count\n0,0\n1,3\n2,5\n"))
        np.testing.assert_array_equal(series.days, [0, 1, 2])
        np.testing.assert_array_equal(series.counts, [0, 3, 5])
        assert not series.interpolated_mask.any()
        assert series.time_steps == 2

    def test_single_gap_midpoint(self, tmp_path):
        series = load_case_series(_write(tmp_path, "0,0\n2,10\n"))
        np.testing.assert_array_equal(series.counts, [0, 5, 10])
        np.testing.assert_array_equal(series.interpolated_mask, [False, True, False])

    def test_two_day_gap_rounds(self, tmp_path):
        series = load_case_series(_write(tmp_path, "0,1\n3,10\n"))
        np.testing.assert_array_equal(series.counts, [1, 4, 7, 10])

    @pytest.mark.parametrize("text, middle", [("0,0\n2,1\n", 1), ("0,1\n2,2\n", 2), ("0,2\n2,3\n", 3)])
    def test_half_counts_round_up(self, tmp_path, text, middle):
        assert load_case_series(_write(tmp_path, text)).counts[1] == middle

    def test_comments_and_blank_lines(self, tmp_path):
        text = "# source: daily reports\n\nday,count\n0,0  # first day\n1,2\n"
        series = load_case_series(_write(tmp_path, text))
        np.testing.assert_array_equal(series.counts, [0, 2])

    def test_gap_without_interpolation(self, tmp_path):
        with pytest.raises(DataLoadError):
            load_case_series(_write(tmp_path, "0,0\n2,10\n"), interpolate=False)

    @pytest.mark.parametrize(
        "text, line",
        [
            ("day,count\n0,0\n1,-4\n", 3),
            ("0,0\n0,1\n", 2),
            ("0,0\n1,x\n", 2),
            ("0,0\n1,2,3\n", 2),
            ("0,0\n1,2.5\n", 2),
        ],
    )
    def test_errors_name_the_line(self, tmp_path, text, line):
        with pytest.raises(DataLoadError) as exc:
            load_case_series(_write(tmp_path, text))
        assert exc.value.line == line
        assert f":{line}:" in str(exc.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataLoadError):
            load_case_series(str(tmp_path / "absent.csv"))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataLoadError):
            load_case_series(_write(tmp_path, "day,count\n"))

    def test_shipped_diamond_series(self):
        series = load_case_series(os.path.join(ROOT, "data", "diamond_princess_cases.csv"))
        assert len(series) == 31
        assert series.days[0] == 0 and series.days[-1] == 30
        assert series.counts[-1] == 619
        assert np.all(np.diff(series.counts) >= 0)
        assert series.interpolated_mask[22] and series.interpolated_mask[25]


class TestCaseSeries:
    def test_rejects_gaps(self):
        with pytest.raises(ContractViolation):
            CaseSeries(np.array([0, 2]), np.array([1, 2]), np.zeros(2, dtype=bool))


class TestPrevalence:
    def test_recovery_decay(self):
        np.testing.assert_array_equal(cumulative_to_prevalence(np.array([0, 10, 10]), 0.5), [0, 10, 5])

    def test_half_active_rounds_up(self):
        # 5 * 0.5 = 2.5 -> 3, 3 * 0.5 = 1.5 -> 2
        np.testing.assert_array_equal(cumulative_to_prevalence(np.array([5, 5, 5]), 0.5), [5, 3, 2])

    def test_no_new_cases(self):
        np.testing.assert_array_equal(cumulative_to_prevalence(np.zeros(4, dtype=int), 0.1), np.zeros(4))

    def test_decreasing_cumulative(self):
        with pytest.raises(ContractViolation):
            cumulative_to_prevalence(np.array([3, 2]), 0.1)

    def test_bad_gamma(self):
        with pytest.raises(ContractViolation):
            cumulative_to_prevalence(np.array([0, 1]), 1.0)
