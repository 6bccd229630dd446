"""Classical (local hidden variable) bound by enumerating strategy counts.

A deterministic party picks outcomes ``(a_0, a_1)`` from ``(+,+), (+,-),
(-,+), (-,-)``. Permutation invariance means only how many parties use each
strategy matters, so the search runs over ``O(n^3)`` count tuples.
"""
from __future__ import annotations

from dataclasses import dataclass

from diwed import kernels
from diwed.core import CorrelatorVector, InvalidInputError, PibiCoefficients


@dataclass(frozen=True)
class StrategyCounts:
    n1: int
    n2: int
    n3: int
    n4: int

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3, self.n4) < 0:
            raise InvalidInputError("strategy counts must be nonnegative")

    @property
    def n(self) -> int:
        return self.n1 + self.n2 + self.n3 + self.n4

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4)


def correlators_from_counts(counts: StrategyCounts) -> CorrelatorVector:
    n1, n2, n3, n4 = counts.as_tuple()
    n = counts.n
    s0 = n1 + n2 - n3 - n4
    s1 = n1 - n2 + n3 - n4
    same_party = n1 - n2 - n3 + n4
    return CorrelatorVector(s0, s1, s0 * s0 - n, s0 * s1 - same_party, s1 * s1 - n, n)


def classical_bound(coeffs: PibiCoefficients, n: int) -> tuple[float, StrategyCounts]:
    """Return ``(beta_C, minimizing counts)``."""
    if n < 1:
        raise InvalidInputError("need at least one party")
    value, counts = kernels.count_minimum(*coeffs.as_array(), int(n))
    return float(value), StrategyCounts(*counts)
