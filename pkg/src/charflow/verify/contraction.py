"""Measured contraction of the Picard iteration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from charflow.errors import InsufficientIterations
from charflow.solver.goursat import IterationTrace

LOGGER = logging.getLogger(__name__)

MIN_ITERATIONS = 3
TAIL_START = 2
EXACT_NORM = 1e-14


@dataclass(slots=True)
class ContractionReport:
    norms: List[float]
    ratios: List[float] = field(default_factory=list)
    rate: Optional[float] = None
    monotone_tail: bool = True
    max_tail_ratio: Optional[float] = None
    immediate: bool = False

    @property
    def flagged(self) -> bool:
        if self.immediate:
            return False
        return (not self.monotone_tail) or (self.max_tail_ratio is not None and self.max_tail_ratio >= 1.0)

    def as_dict(self) -> Dict[str, object]:
        return {
            "norms": list(self.norms),
            "ratios": list(self.ratios),
            "rate": self.rate,
            "monotone_tail": self.monotone_tail,
            "max_tail_ratio": self.max_tail_ratio,
            "immediate": self.immediate,
            "flagged": self.flagged,
        }


def contraction_report(trace: IterationTrace) -> ContractionReport:
    """Successive-norm ratios, a least-squares geometric rate and a tail check.

    The tail starts at the second iteration: ``norms[1] > norms[2] > ...``.
    """

    norms = [float(value) for value in trace.combined]
    if norms and trace.converged and (len(norms) <= 2 or min(norms) <= EXACT_NORM):
        LOGGER.info("Picard iteration converged immediately (%d iterations)", len(norms))
        return ContractionReport(norms=norms, immediate=True)
    if len(norms) < MIN_ITERATIONS:
        raise InsufficientIterations(len(norms), MIN_ITERATIONS)

    ratios = [b / a if a > 0.0 else math.nan for a, b in zip(norms[:-1], norms[1:])]
    tail = [ratio for ratio in ratios[TAIL_START - 1 :] if math.isfinite(ratio)]
    report = ContractionReport(
        norms=norms,
        ratios=ratios,
        rate=geometric_rate(norms),
        monotone_tail=all(ratio < 1.0 for ratio in tail),
        max_tail_ratio=max(tail) if tail else None,
    )
    if report.flagged:
        LOGGER.warning(
            "Picard norms are not contracting (max tail ratio %s)",
            "n/a" if report.max_tail_ratio is None else f"{report.max_tail_ratio:.3f}",
        )
    return report


def geometric_rate(norms: Sequence[float]) -> Optional[float]:
    """``exp`` of the least-squares slope of ``log(norm)`` against iteration."""
    values = np.asarray(norms, dtype=float)
    positions = np.nonzero(values > 0.0)[0]
    if positions.size < 2:
        return None
    slope, _ = np.polyfit(positions.astype(float), np.log(values[positions]), 1)
    return float(np.exp(slope))


__all__ = ["ContractionReport", "contraction_report", "geometric_rate", "MIN_ITERATIONS"]
