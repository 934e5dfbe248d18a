"""Observed case series: `day,count` CSV ingestion and gap filling."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DataLoadError

logger = logging.getLogger("sis-pmcmc.data")


@dataclass(frozen=True)
class CaseSeries:
    """One nonnegative integer count per day 0..T, no gaps."""
    days: np.ndarray
    counts: np.ndarray
    interpolated_mask: np.ndarray

    def __post_init__(self) -> None:
        if not (self.days.size == self.counts.size == self.interpolated_mask.size):
            raise ContractViolation("days, counts and mask must have equal length")
        if self.days.size and np.any(np.diff(self.days) != 1):
            raise ContractViolation("case series must have one count per day")
        if np.any(self.counts < 0):
            raise ContractViolation("case counts must be nonnegative")

    def __len__(self) -> int:
        return int(self.counts.size)

    @property
    def time_steps(self) -> int:
        return len(self) - 1


def _parse_int(token: str, what: str, path: str, line: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise DataLoadError(path, f"cannot parse {what} '{token}'", line) from None
    if not value.is_integer():
        raise DataLoadError(path, f"{what} must be an integer, got '{token}'", line)
    return int(value)


def load_case_series(path: str, interpolate: bool = True) -> CaseSeries:
    """Read a `day,count` CSV; blank lines and `#` comments are skipped.

    Missing interior days are filled by linear interpolation rounded to the
    nearest integer (halves round up) and flagged in ``interpolated_mask``. With
    ``interpolate=False`` a gap is an error.
    """
    if not os.path.exists(path):
        raise DataLoadError(path, "file not found")

    days, counts = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = [token.strip() for token in line.split(",")]
            if len(fields) != 2:
                raise DataLoadError(path, f"expected 2 columns, got {len(fields)}", line_no)
            if not days and fields[0].lower() == "day":
                continue
            day = _parse_int(fields[0], "day", path, line_no)
            count = _parse_int(fields[1], "count", path, line_no)
            if days and day <= days[-1]:
                raise DataLoadError(path, f"days must be strictly increasing ({day} after {days[-1]})", line_no)
            if count < 0:
                raise DataLoadError(path, f"negative count {count}", line_no)
            days.append(day)
            counts.append(count)

    if not days:
        raise DataLoadError(path, "no data rows")
    days_arr = np.asarray(days, dtype=np.int64)
    counts_arr = np.asarray(counts, dtype=np.int64)
    full_days = np.arange(days_arr[0], days_arr[-1] + 1)
    if full_days.size != days_arr.size and not interpolate:
        raise DataLoadError(path, f"{full_days.size - days_arr.size} missing day(s) and interpolation is off")

    # .5 は切り上げ
    filled = np.floor(np.interp(full_days, days_arr, counts_arr) + 0.5).astype(np.int64)
    mask = ~np.isin(full_days, days_arr)
    if mask.any():
        logger.info(f"Interpolated {int(mask.sum())} missing day(s) in {path}")
    return CaseSeries(days=full_days, counts=filled, interpolated_mask=mask)


def cumulative_to_prevalence(cumulative: np.ndarray, gamma: float) -> np.ndarray:
    """Active cases from a cumulative series under a fixed recovery probability.

    active_t = round(active_{t-1} (1 - γ)) + new_t, halves rounded up, new_t = C_t - C_{t-1}.
    """
    cumulative = np.asarray(cumulative, dtype=np.int64)
    if not 0.0 < gamma < 1.0:
        raise ContractViolation(f"recovery probability must be in (0, 1), got {gamma}")
    if np.any(np.diff(cumulative) < 0):
        raise ContractViolation("cumulative series must be nondecreasing")
    new_cases = np.diff(cumulative, prepend=0)
    active = np.empty_like(cumulative)
    previous = 0
    for t, new in enumerate(new_cases):
        previous = math.floor(previous * (1.0 - gamma) + 0.5) + int(new)
        active[t] = previous
    return active
