"""Chain network model: hosts 0..N on a single line, loops as segment intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

Segment = tuple[int, int]


@dataclass(frozen=True)
class Network:
    """A one-dimensional chain of ``size_n + 1`` hosts.

    ``segment_length_m`` is the physical wire length between neighbouring
    hosts; only the timing model looks at it.
    """

    size_n: int
    segment_length_m: float = 1000.0

    def __post_init__(self):
        if isinstance(self.size_n, bool) or not isinstance(self.size_n, int):
            raise TypeError("network size must be an int")
        if self.size_n < 1:
            raise ValueError(f"network size must be >= 1, got {self.size_n}")
        if not self.segment_length_m > 0:
            raise ValueError("segment length must be positive")

    @property
    def hosts(self) -> range:
        return range(self.size_n + 1)

    def contains(self, loop: "Loop") -> bool:
        return loop.right <= self.size_n

    def all_pairs(self) -> list["Loop"]:
        n = self.size_n
        return [Loop(i, j) for i in range(n + 1) for j in range(i + 1, n + 1)]


class _LoopFields(NamedTuple):
    left: int
    right: int


class Loop(_LoopFields):
    """A KLJN loop between hosts ``left`` and ``right`` (``left < right``)."""

    __slots__ = ()

    def __new__(cls, left: int, right: int):
        if not (0 <= left < right):
            raise ValueError(f"invalid loop ({left}, {right})")
        return super().__new__(cls, left, right)

    @classmethod
    def _unchecked(cls, left: int, right: int) -> "Loop":
        # for bulk construction by callers that guarantee 0 <= left < right
        return tuple.__new__(cls, (left, right))

    @property
    def distance(self) -> int:
        return self.right - self.left

    def as_tuple(self) -> tuple[int, int]:
        return (self.left, self.right)


def segments(loop: Loop) -> set[Segment]:
    return {(i, i + 1) for i in range(loop.left, loop.right)}


def loops_overlap(a: Loop, b: Loop) -> bool:
    """True iff the loops share a wire segment.

    Touching at a host is fine: that host uses its left unit for one loop
    and its right unit for the other.
    """
    return max(a.left, b.left) < min(a.right, b.right)


def shared_segments(a: Loop, b: Loop) -> set[Segment]:
    return segments(a) & segments(b)


def pairwise_disjoint(loops: Iterable[Loop]) -> bool:
    ordered = sorted(loops)
    return all(p.right <= q.left for p, q in zip(ordered, ordered[1:]))
