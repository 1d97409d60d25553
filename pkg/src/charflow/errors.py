"""Exception types raised by the charflow solvers and runners."""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple


class CharflowError(Exception):
    """Base class for every charflow-specific failure."""

    segment: Optional[int] = None

    def tag_segment(self, index: int) -> "CharflowError":
        """Record the strip segment in which the failure happened."""
        self.segment = index
        self.add_note(f"strip segment {index}")
        return self


class DomainError(CharflowError, ValueError):
    """An argument lies outside the admissible equation-of-state domain."""


class RangeError(CharflowError, ValueError):
    """A sum of invariants left the range covered by the equation of state."""

    def __init__(
        self,
        message: str,
        *,
        chi_dagger: Optional[float] = None,
        location: Optional[Tuple[float, ...]] = None,
    ) -> None:
        super().__init__(message)
        self.chi_dagger = chi_dagger
        self.location = location

    def at(
        self, location: Tuple[float, ...], labels: Sequence[str] = ("u", "v")
    ) -> "RangeError":
        """Return a copy of the error pinned to ``location``."""
        located = RangeError(
            f"{self.args[0]} at {_format_location(location, labels)}",
            chi_dagger=self.chi_dagger,
            location=location,
        )
        located.segment = self.segment
        return located


class NonPositiveRadius(CharflowError, ArithmeticError):
    """The radius along a characteristic reached zero or below."""

    def __init__(self, message: str, *, location: Optional[Tuple[float, ...]] = None) -> None:
        super().__init__(message)
        self.location = location


class EpsilonGuardHit(CharflowError):
    """The C- characteristic was truncated because r dropped to the guard."""

    def __init__(self, u_bar: float, r_guard: float) -> None:
        super().__init__(f"radius reached guard {r_guard:g} at u={u_bar:.6g}; data truncated")
        self.u_bar = u_bar
        self.r_guard = r_guard


class NoConvergence(CharflowError, RuntimeError):
    """Picard iteration hit its iteration cap."""

    def __init__(
        self,
        max_iter: int,
        last_norms: Dict[str, float],
        trace: Optional[object] = None,
        grid: Optional[object] = None,
    ) -> None:
        worst = max(last_norms.values()) if last_norms else float("nan")
        super().__init__(f"no convergence after {max_iter} iterations (last norm {worst:.3e})")
        self.max_iter = max_iter
        self.last_norms = dict(last_norms)
        self.trace = trace
        self.grid = grid


class InvalidL(CharflowError, ValueError):
    """The bootstrap constant ``l`` must exceed one."""


class EmptyDomain(CharflowError, ValueError):
    """No grid node survived the hodograph validity test."""


class InsufficientIterations(CharflowError, ValueError):
    """Too few recorded iterations to estimate a contraction rate."""

    def __init__(self, recorded: int, required: int = 3) -> None:
        super().__init__(f"need at least {required} recorded iterations, got {recorded}")
        self.recorded = recorded
        self.required = required


class ScenarioError(CharflowError, ValueError):
    """A scenario file is missing, malformed or inconsistent."""

    def __init__(self, message: str, *, problems: Sequence[str] = ()) -> None:
        detail = message if not problems else f"{message}: " + "; ".join(problems)
        super().__init__(detail)
        self.problems: List[str] = list(problems)


def _format_location(location: Tuple[float, ...], labels: Sequence[str]) -> str:
    return ", ".join(f"{label}={value:.6g}" for label, value in zip(labels, location))


__all__ = [
    "CharflowError",
    "DomainError",
    "RangeError",
    "NonPositiveRadius",
    "EpsilonGuardHit",
    "NoConvergence",
    "InvalidL",
    "EmptyDomain",
    "InsufficientIterations",
    "ScenarioError",
]
