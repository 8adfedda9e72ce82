"""Dempster-Shafer algebra over two-element frames of discernment.

A :class:`BinaryMass` distributes unit probability mass over the three
non-empty subsets of a two-outcome frame: the first singleton, the second
singleton, and the full frame (ignorance). The same type serves both frames
used in this package: {similar, dissimilar} for substitutability evidence and
{positive, negative} for phase predictions; the frame semantics live at the
call site.

All values are immutable and all operations are pure functions, so they are
safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable

from .errors import GammaOutOfRange, TotalConflict

SUM_TOL = 1e-9
CONFLICT_LIMIT = 1.0 - 1e-12


@dataclass(frozen=True)
class BinaryMass:
    """Mass assignment (m_first, m_second, m_both) with components summing to 1."""

    m_first: float
    m_second: float
    m_both: float

    def __post_init__(self) -> None:
        for name, value in (
            ("m_first", self.m_first),
            ("m_second", self.m_second),
            ("m_both", self.m_both),
        ):
            if not value >= 0.0:
                raise ValueError(f"{name} must be non-negative, got {value!r}")
        total = self.m_first + self.m_second + self.m_both
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"mass components must sum to 1, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.m_first, self.m_second, self.m_both)


def vacuous() -> BinaryMass:
    """Total-uncertainty mass: all weight on the full frame."""
    return BinaryMass(0.0, 0.0, 1.0)


def conflict(x: BinaryMass, y: BinaryMass) -> float:
    """Mass assigned to contradictory singleton pairs during combination."""
    return x.m_first * y.m_second + x.m_second * y.m_first


def combine(x: BinaryMass, y: BinaryMass) -> BinaryMass:
    """Normalized Dempster combination of two mass functions.

    Raises TotalConflict when the inputs are (numerically) fully
    contradictory, which cannot happen while either keeps m_both > 0.
    """
    k = conflict(x, y)
    if k >= CONFLICT_LIMIT:
        raise TotalConflict(f"conflict {k!r} leaves no mass to renormalize")
    # cross terms grouped so argument order cannot change the rounding;
    # normalizing by the computed sum (exactly 1 - k in real arithmetic)
    # keeps results on the simplex even under repeated combination
    first = x.m_first * y.m_first + (x.m_first * y.m_both + x.m_both * y.m_first)
    second = x.m_second * y.m_second + (x.m_second * y.m_both + x.m_both * y.m_second)
    both = x.m_both * y.m_both
    total = first + second + both
    return BinaryMass(first / total, second / total, both / total)


def combine_all(ms: Iterable[BinaryMass]) -> BinaryMass:
    """Left fold of `combine` starting from the vacuous mass."""
    return reduce(combine, ms, vacuous())


def discount(m: BinaryMass, gamma: float) -> BinaryMass:
    """Scale committed mass by reliability gamma, moving the rest to the frame."""
    if not 0.0 <= gamma <= 1.0:
        raise GammaOutOfRange(f"gamma must lie in [0, 1], got {gamma!r}")
    return BinaryMass(
        gamma * m.m_first,
        gamma * m.m_second,
        1.0 - gamma + gamma * m.m_both,
    )


def pignistic(m: BinaryMass) -> float:
    """Point probability of the first outcome: split ignorance mass evenly."""
    return m.m_first + m.m_both / 2.0
