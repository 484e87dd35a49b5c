from typing import Iterable, List, Optional, Set

from dataclasses import dataclass, field
import logging

logger = logging.getLogger(__name__)


def overlap_coefficient(x: Iterable[int], y: Iterable[int]) -> Optional[float]:
    """``|X & Y| / min(|X|, |Y|)``, or ``None`` when either set is empty."""
    x, y = set(int(i) for i in x), set(int(i) for i in y)
    if not x or not y:
        return None
    return len(x & y) / min(len(x), len(y))


@dataclass
class OverlapTracker:
    """Persistence of dormancy in one layer against a historical set.

    ``union`` grows with every observed dormant set; ``first`` is the first
    non-empty set seen. Each ``observe`` compares the current set against the
    history before the union absorbs it.
    """

    layer: int
    union: Set[int] = field(default_factory=set)
    first: Optional[Set[int]] = None
    union_series: List[Optional[float]] = field(default_factory=list)
    first_series: List[Optional[float]] = field(default_factory=list)

    def observe(self, dormant: Iterable[int]):

        current = set(int(i) for i in dormant)
        vs_union = overlap_coefficient(current, self.union)
        vs_first = overlap_coefficient(current, self.first or set())
        if vs_union is None:
            logger.debug(f"Overlap undefined for layer {self.layer} (empty set)")

        self.union_series.append(vs_union)
        self.first_series.append(vs_first)
        self.union |= current
        if self.first is None and current:
            self.first = current
        return vs_union, vs_first
