"""Pilot-run scaling of the random-walk step sizes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

from ..chain import PosteriorChain
from ..errors import ContractViolation
from ..priors import ProposalKernel

logger = logging.getLogger("sis-pmcmc.samplers.tuning")

# (kernel, pilot_length, round) -> chain of the pilot run
PilotRunner = Callable[[ProposalKernel, int, int], PosteriorChain]

MIN_PILOT_LENGTH = 500


@dataclass
class TuningResult:
    kernel: ProposalKernel
    acceptance_rate: float
    rounds: int
    converged: bool
    history: List[Tuple[float, float]] = field(default_factory=list)


def _distance(rate: float, band: Tuple[float, float]) -> float:
    low, high = band
    if rate < low:
        return low - rate
    if rate > high:
        return rate - high
    return 0.0


def tune_proposal(
    run_pilot: PilotRunner,
    kernel: ProposalKernel,
    pilot_length: int = MIN_PILOT_LENGTH,
    band: Tuple[float, float] = (0.15, 0.20),
    max_rounds: int = 10,
    factor: float = 2.0,
) -> TuningResult:
    """Run pilots, halving steps when acceptance is below ``band`` and doubling above.

    Stops at the first pilot inside the band. After ``max_rounds`` without
    success the kernel whose acceptance came closest is returned with
    ``converged=False``.
    """
    if pilot_length < MIN_PILOT_LENGTH:
        raise ContractViolation(f"pilot runs need >= {MIN_PILOT_LENGTH} iterations, got {pilot_length}")
    if not 0.0 <= band[0] < band[1] <= 1.0:
        raise ContractViolation(f"invalid acceptance band {band}")

    scale = 1.0
    history: List[Tuple[float, float]] = []
    best: Tuple[float, ProposalKernel, float] | None = None
    current = kernel
    for round_index in range(1, max_rounds + 1):
        rate = run_pilot(current, pilot_length, round_index).acceptance_rate
        history.append((scale, rate))
        logger.info(f"Pilot round {round_index}: acceptance {rate:.3f} at scale {scale:g}")
        distance = _distance(rate, band)
        if best is None or distance < best[0]:
            best = (distance, current, rate)
        if distance == 0.0:
            return TuningResult(current, rate, round_index, True, history)
        step = 1.0 / factor if rate < band[0] else factor
        scale *= step
        current = current.scaled(step)

    _, best_kernel, best_rate = best
    logger.warning(
        "Proposal tuning did not reach the target band",
        extra={"band": band, "best_acceptance": best_rate, "rounds": max_rounds},
    )
    return TuningResult(best_kernel, best_rate, max_rounds, False, history)
