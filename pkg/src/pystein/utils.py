"""
Utility functions for pystein.

Permutations are tuples ``g`` of length n with ``g[j]`` the image of slot ``j``.
"""

import itertools
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

Permutation = Tuple[int, ...]


def is_permutation(g: Sequence[int]) -> bool:
    """Check that g is a permutation of 0..len(g)-1."""
    return sorted(g) == list(range(len(g)))


def compose(g: Sequence[int], h: Sequence[int]) -> Permutation:
    """Return gh, the permutation applying h first and then g."""
    return tuple(g[h[j]] for j in range(len(h)))


def inverse(g: Sequence[int]) -> Permutation:
    result = [0] * len(g)
    for j, image in enumerate(g):
        result[image] = j
    return tuple(result)


def all_permutations(n: int) -> Iterator[Permutation]:
    """All permutations of n slots in lexicographic order."""
    return itertools.permutations(range(n))


def random_permutation(n: int, rng: np.random.Generator) -> Permutation:
    return tuple(int(x) for x in rng.permutation(n))


def transpositions(n: int) -> List[Permutation]:
    """Adjacent transpositions, which generate the symmetric group."""
    result = []
    for i in range(n - 1):
        g = list(range(n))
        g[i], g[i + 1] = g[i + 1], g[i]
        result.append(tuple(g))
    return result


def index_of_matrix(
    candidates: Sequence[np.ndarray], target: np.ndarray, atol: float = 1e-8
) -> Optional[int]:
    """Index of the candidate equal to target up to a global phase, or None."""
    dim = target.shape[0]
    for i, c in enumerate(candidates):
        if abs(abs(np.trace(c.conj().T @ target)) - dim) <= atol * dim:
            return i
    return None


def group_closure_failures(
    unitaries: Sequence[np.ndarray], atol: float = 1e-8
) -> List[Tuple[int, int]]:
    """Pairs (a, b) whose product U_a U_b is missing from the list."""
    failures = []
    for a, ua in enumerate(unitaries):
        for b, ub in enumerate(unitaries):
            if index_of_matrix(unitaries, ua @ ub, atol) is None:
                failures.append((a, b))
    return failures
