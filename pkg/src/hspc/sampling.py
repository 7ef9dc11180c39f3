"""Fourier sampling for a known group and the classical reference algorithms.

Covers the non-variational pipeline: batched circuit sampling, recovering the
hidden subgroup from samples (congruence scan and kernel intersection), the
square-root collision baseline, and generator recovery from a compressed
database's characteristic function by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import GroupStructure, Subgroup, _find_generator, subgroup_generated
from .sim import Oracle, QueryCounter, exact_circuit_params, hsp_circuit_sample

__all__ = [
    "SampleBatch",
    "fourier_sample_batch",
    "solve_congruences",
    "kernel_intersection",
    "classical_collision_baseline",
    "recover_generator_by_bisection",
]


@dataclass(frozen=True)
class SampleBatch:
    """Outcomes of repeated Fourier-sampling shots against one group."""

    group: GroupStructure
    samples: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(int(j) for j in self.samples))
        if any(not 0 <= j < self.group.size for j in self.samples):
            raise ValueError("sample out of range for this group")


def fourier_sample_batch(
    oracle: Oracle, group: GroupStructure, k: int, rng
) -> SampleBatch:
    """K independent shots of the exact-parameter circuit for `group`."""
    if oracle.n != group.n:
        raise ValueError("oracle and group sizes differ")
    if k < 1:
        raise ValueError("need at least one sample")
    qft, perm = exact_circuit_params(group)
    samples = tuple(hsp_circuit_sample(oracle, qft, perm, rng) for _ in range(k))
    return SampleBatch(group, samples)


def _congruence_holds(group: GroupStructure, js: np.ndarray, s) -> np.ndarray:
    big_m = group.char_modulus
    ok = np.ones(np.shape(s) or (), dtype=bool)
    for j in js:
        ok &= np.asarray(group.char_exponent(np.int64(j), s)) % big_m == 0
    return ok


def solve_congruences(group: GroupStructure, batch: SampleBatch) -> int:
    """Tau-minimal nonzero solution of chi_j(s) = 1 over all sampled j.

    Exhaustive scan over the 2^n candidates; returns 0 only when the trivial
    solution is the unique one.
    """
    if not batch.samples:
        raise ValueError("empty sample batch")
    js = np.unique(np.asarray(batch.samples, dtype=np.int64))
    cands = np.arange(group.size, dtype=np.int64)
    ok = _congruence_holds(group, js, cands)
    nonzero = np.flatnonzero(ok[1:])
    return int(nonzero[0]) + 1 if nonzero.size else 0


def kernel_intersection(group: GroupStructure, batch: SampleBatch) -> Subgroup:
    """Intersection of the character kernels of every sampled j."""
    if not batch.samples:
        raise ValueError("empty sample batch")
    js = np.unique(np.asarray(batch.samples, dtype=np.int64))
    cands = np.arange(group.size, dtype=np.int64)
    ok = _congruence_holds(group, js, cands)
    elems = tuple(int(x) for x in cands[ok])
    return Subgroup(group, elems, generator=_find_generator(group, set(elems)))


def classical_collision_baseline(
    oracle: Oracle, group: GroupStructure, rng
) -> tuple[int, QueryCounter]:
    """Birthday-collision search: the canonical sqrt(|G|/|H|) strategy.

    Queries uniformly random distinct indices until two values collide and
    returns (a^-1 * b, query counter).  An injective oracle exhausts the index
    set and reports the trivial generator with count 2^n.
    """
    counter = QueryCounter()
    probed = oracle.counting(counter)
    order = rng.permutation(group.size)
    seen: dict[int, int] = {}
    for idx in order:
        idx = int(idx)
        value = probed.value(idx)
        if value in seen:
            a = seen[value]
            return group.op(group.inverse_element(a), idx), counter
        seen[value] = idx
    return 0, counter


def recover_generator_by_bisection(char_fn, group: GroupStructure) -> tuple[int, int]:
    """Largest occupied index by bisection, plus one step; returns (s, queries).

    Assumes the occupied indices form a tau-prefix (true for the canonical
    cyclic groups this recovery is stated for).  Index 0 is always occupied,
    so an all-free characteristic function is rejected.
    """
    queries = 0

    def probe(i: int) -> int:
        nonlocal queries
        queries += 1
        return int(char_fn(i))

    if probe(0) != 0:
        raise ValueError("index 0 must be occupied")
    lo, hi = 0, group.size - 1  # invariant: c(lo) = 0
    if probe(hi) == 0:
        largest = hi
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if probe(mid) == 0:
                lo = mid
            else:
                hi = mid
        largest = lo
    return group.op(largest, 1), queries
