"""Collision counting and the boundary-phase ledger.

Permutations are 0-based tuples in one-line notation: ``pi[i]`` is the
position whose characteristic value has rank ``i``, so that
``c[pi[0]] <= c[pi[1]] <= ...``. A collision is an inversion ``(k, l)``,
``k < l``, ``pi[k] > pi[l]``.

Phases are carried as integer coefficient vectors ``n`` with
``phase = sum_k n[k] * phi^(k+1)`` so path comparisons are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import ModelParams, Spin, reduce_angle

Permutation = tuple[int, ...]


def identity(n: int) -> Permutation:
    return tuple(range(n))


def inverse(pi: Sequence[int]) -> Permutation:
    inv = [0] * len(pi)
    for i, p in enumerate(pi):
        inv[p] = i
    return tuple(inv)


def check_permutation(pi: Sequence[int]) -> Permutation:
    pi = tuple(int(p) for p in pi)
    if sorted(pi) != list(range(len(pi))):
        raise ValueError(f"not a permutation of 0..{len(pi) - 1}: {pi}")
    return pi


def from_images(images: Sequence[int]) -> Permutation:
    """Build from 1-based images ``(pi(1), ..., pi(N))``."""
    return check_permutation([i - 1 for i in images])


def collisions(pi: Sequence[int]) -> int:
    """Inversion count."""
    pi = tuple(pi)
    return sum(1 for k in range(len(pi)) for l in range(k + 1, len(pi)) if pi[k] > pi[l])


def sort_permutation(c: Sequence[float]) -> Permutation:
    """Stable sorting permutation; ties keep their order, minimising collisions."""
    return tuple(int(i) for i in np.argsort(np.asarray(c, dtype=float), kind="stable"))


def transposition(n: int, k: int) -> Permutation:
    """0-based adjacent transposition of positions ``k`` and ``k + 1``."""
    p = list(range(n))
    p[k], p[k + 1] = p[k + 1], p[k]
    return tuple(p)


def compose(a: Sequence[int], b: Sequence[int]) -> Permutation:
    """``(a o b)(i) = a[b[i]]``."""
    return tuple(a[i] for i in b)


def permute_spin(s: Sequence[int], pi: Sequence[int]) -> Spin:
    """``(s[pi[0]], ..., s[pi[N-1]])``."""
    return tuple(s[p] for p in pi)


@lru_cache(maxsize=None)
def phase_coefficients(s: Spin, pi: Permutation) -> tuple[tuple[int, ...], Spin]:
    """Bubble-order decomposition of ``pi`` into collision-reducing steps.

    Works on the rank vector ``r = pi^-1``: each adjacent swap of an inverted
    pair at positions ``(k, k+1)`` contributes ``s_k * phi^(k+1)`` with the spin
    tuple as permuted by the swaps already performed. Returns the coefficient
    vector and the final spin, which equals ``permute_spin(s, pi)``.
    """
    n = len(pi)
    ranks = list(inverse(pi))
    spin = list(s)
    coeff = [0] * (n - 1)
    swapped = True
    while swapped:
        swapped = False
        for k in range(n - 1):
            if ranks[k] > ranks[k + 1]:
                coeff[k] += spin[k]
                ranks[k], ranks[k + 1] = ranks[k + 1], ranks[k]
                spin[k], spin[k + 1] = spin[k + 1], spin[k]
                swapped = True
    return tuple(coeff), tuple(spin)


def all_decomposition_coefficients(s: Spin, pi: Permutation) -> set[tuple[int, ...]]:
    """Coefficient vectors reached by every maximal collision-reducing order."""
    n = len(pi)

    @lru_cache(maxsize=None)
    def walk(ranks: tuple[int, ...], spin: Spin) -> frozenset:
        moves = [k for k in range(n - 1) if ranks[k] > ranks[k + 1]]
        if not moves:
            return frozenset({(0,) * (n - 1)})
        out = set()
        for k in moves:
            r = list(ranks)
            sp = list(spin)
            r[k], r[k + 1] = r[k + 1], r[k]
            sp[k], sp[k + 1] = sp[k + 1], sp[k]
            for tail in walk(tuple(r), tuple(sp)):
                c = list(tail)
                c[k] += spin[k]
                out.add(tuple(c))
        return frozenset(out)

    return set(walk(inverse(pi), tuple(s)))


def spin_potential(u: Sequence[int]) -> tuple[int, ...]:
    """Coefficients of ``V(u) = sum over + entries at position p of phi^(1) + ... + phi^(p)``.

    Moving a ``+`` one step to the right across position ``k`` raises ``V`` by
    ``phi^(k+1)``, so on admissible pairs the ledger phase is
    ``V(permute_spin(s, pi)) - V(s)``.
    """
    n = len(u)
    coeff = [0] * (n - 1)
    for p, v in enumerate(u):
        if v > 0:
            for j in range(p):
                coeff[j] += 1
    return tuple(coeff)


@dataclass(frozen=True)
class PhaseResult:
    phase: float
    permutation: Permutation
    coefficients: tuple[int, ...]


def phase(s: Sequence[int], pi: Sequence[int], params: ModelParams) -> PhaseResult:
    """Phase ``phi^pi_s`` reduced to (-pi, pi]; ``pi`` is 0-based."""
    s = tuple(int(v) for v in s)
    pi = check_permutation(pi)
    if len(s) != len(pi) or len(s) != params.n_particles:
        raise ValueError("spin, permutation and model sizes differ")
    coeff, _ = phase_coefficients(s, pi)
    value = float(np.dot(coeff, params.phase_array)) if coeff else 0.0
    return PhaseResult(reduce_angle(value), pi, coeff)


def admissible_collision_signs(s: Sequence[int], times: Sequence[float], a: int, b: int) -> bool:
    """Sign pattern required of a collision ``(a, b)`` at an ordered space-like point."""
    return (s[a] == 1 and s[b] == -1 and times[a] > 0 and times[b] > 0) or (
        s[a] == -1 and s[b] == 1 and times[a] < 0 and times[b] < 0
    )
