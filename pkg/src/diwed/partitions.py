"""Integer partitions and the candidate partitions searched for each ``(n, k)``.

Only block sizes matter (the Bell expression is permutation invariant), and
only *coarsest* partitions need to be searched: if two blocks could be merged
without exceeding ``k``, every state that is a product over the finer
partition is also a product over the merged one.
"""
from __future__ import annotations

import math

from diwed.core import InvalidInputError, Partition

EXHAUSTIVE_MAX_N = 15


def integer_partitions(n: int, max_part: int | None = None):
    """Yield partitions of ``n`` as nonincreasing tuples with parts ``<= max_part``."""
    if max_part is None:
        max_part = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, max_part), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first,) + rest


def is_coarsest(sizes, k: int) -> bool:
    """No two blocks can be merged without exceeding ``k``."""
    sizes = sorted(sizes)
    return len(sizes) < 2 or sizes[0] + sizes[1] > k


def equal_split(total: int, parts: int) -> tuple[int, ...]:
    q, r = divmod(total, parts)
    return tuple([q + 1] * r + [q] * (parts - r))


def balanced_partitions(n: int, k: int, extra_blocks: int = 2, merges: int = 3) -> list[Partition]:
    """Near-balanced candidates.

    Always includes as many blocks of ``k`` as possible plus the remainder,
    the most even splits into a few block counts, and variants where the
    remainder is merged with one or more full blocks and re-split evenly so no
    tiny block is left over.
    """
    _check(n, k)
    if n <= k:
        return [Partition((n,), k)]
    q, r = divmod(n, k)
    cands = {tuple([k] * q + ([r] if r else []))}
    m0 = math.ceil(n / k)
    for m in range(m0, m0 + extra_blocks + 1):
        if m <= n:
            cands.add(equal_split(n, m))
    for j in range(1, min(q, merges) + 1):
        rest = n - (q - j) * k
        for parts in (j, j + 1):
            split = equal_split(rest, parts)
            if split[0] <= k:
                cands.add(tuple(sorted([k] * (q - j) + list(split), reverse=True)))
    keep = [c for c in cands if max(c) <= k and is_coarsest(c, k)]
    return [Partition(c, k) for c in sorted(keep, reverse=True)]


def coarsest_partitions(n: int, k: int) -> list[Partition]:
    """Every coarsest partition of ``n`` with blocks of at most ``k``."""
    _check(n, k)
    if n > EXHAUSTIVE_MAX_N:
        raise InvalidInputError(f"exhaustive partition search is limited to n <= {EXHAUSTIVE_MAX_N}")
    return [Partition(p, k) for p in integer_partitions(n, k) if is_coarsest(p, k)]


def candidate_partitions(n: int, k: int, policy="balanced") -> list[Partition]:
    """Resolve a partition policy: ``"balanced"``, ``"exhaustive"`` or an explicit list."""
    if policy == "balanced":
        return balanced_partitions(n, k)
    if policy == "exhaustive":
        return coarsest_partitions(n, k)
    out = []
    for p in policy:
        part = p if isinstance(p, Partition) else Partition(tuple(p), k)
        if part.n != n or part.sizes[0] > k:
            raise InvalidInputError(f"partition {part.label()} is not a partition of {n} into blocks <= {k}")
        out.append(Partition(part.sizes, k))
    return out


def _check(n, k):
    if n < 1 or k < 1 or k > n:
        raise InvalidInputError(f"need 1 <= k <= n, got n={n}, k={k}")
