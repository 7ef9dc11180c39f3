"""Finite Abelian groups on n-bit strings.

A group structure is an ordered list of block sizes (m_1, ..., m_q) summing
to n, together with a bit-permutation.  Elements are the integers
0 .. 2^n - 1, identified with length-n bit strings MSB-first.  The group
operation permutes the digits, adds each block modulo 2^{m_k}, and
un-permutes, so the all-zeros string is always the identity.

Circuit parameter vectors (the phase-switch triangle and the swap-network
switches) decode to group structures here; the inverse encodings are used to
drive circuits at exact parameter settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GroupType",
    "BitPermutation",
    "GroupStructure",
    "Subgroup",
    "tau",
    "tau_inv",
    "subgroup_generated",
    "cosets",
    "mod_h",
    "mod_h_table",
    "orthogonal_group",
    "decode_group_from_params",
    "encode_qft_pattern",
    "encode_perm_pattern",
    "perm_from_swap_pattern",
    "group_dft_matrix",
    "qft_param_count",
    "theta_index",
    "adjacent_indices",
    "parse_group_descriptor",
    "format_group_descriptor",
]


def tau(bits: str) -> int:
    """Index of a bit string, MSB first: tau('110') == 6."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bits!r}")
    return int(bits, 2)


def tau_inv(index: int, n: int) -> str:
    """Length-n bit string of an index; inverse of :func:`tau`."""
    if not 0 <= index < (1 << n):
        raise ValueError(f"index {index} out of range for {n} bits")
    return format(index, f"0{n}b")


def qft_param_count(n: int) -> int:
    return n * (n - 1) // 2


def theta_index(k: int, j: int, n: int) -> int:
    """Flat position of the switch theta_{k,j} (0-based wires, k < j).

    Layout is row-major by control row k: (0,1), (0,2), ..., (0,n-1),
    (1,2), ...  This ordering is also the serialized ordering.
    """
    if not 0 <= k < j < n:
        raise ValueError(f"bad switch index ({k},{j}) for n={n}")
    return k * n - k * (k + 1) // 2 + (j - k - 1)


def adjacent_indices(n: int) -> list[int]:
    """Flat positions of the nearest-neighbour switches theta_{k,k+1}."""
    return [theta_index(k, k + 1, n) for k in range(n - 1)]


@dataclass(frozen=True)
class GroupType:
    """Ordered block sizes (m_1, ..., m_q); the group Z_{2^m1} x ... x Z_{2^mq}."""

    partition: tuple[int, ...]

    def __post_init__(self):
        part = tuple(int(m) for m in self.partition)
        object.__setattr__(self, "partition", part)
        if not part or any(m < 1 for m in part):
            raise ValueError(f"invalid partition {part}")

    @property
    def n(self) -> int:
        return sum(self.partition)

    @property
    def num_blocks(self) -> int:
        return len(self.partition)

    @cached_property
    def block_starts(self) -> tuple[int, ...]:
        starts, acc = [], 0
        for m in self.partition:
            starts.append(acc)
            acc += m
        return tuple(starts)

    def __str__(self) -> str:
        return "x".join(f"Z{1 << m}" for m in self.partition)


@dataclass(frozen=True)
class BitPermutation:
    """Digit rearrangement: output digit k is input digit mapping[k] (0-based)."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(p) for p in self.mapping)
        object.__setattr__(self, "mapping", mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise ValueError(f"not a permutation: {mapping}")

    @classmethod
    def identity(cls, n: int) -> "BitPermutation":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.mapping)

    @property
    def is_identity(self) -> bool:
        return self.mapping == tuple(range(self.n))

    def inverse(self) -> "BitPermutation":
        inv = [0] * self.n
        for k, p in enumerate(self.mapping):
            inv[p] = k
        return BitPermutation(tuple(inv))

    def apply_string(self, bits: str) -> str:
        return "".join(bits[p] for p in self.mapping)

    def apply_index(self, x, n: int | None = None):
        """Permute the digits of an index (int or integer ndarray)."""
        n = self.n if n is None else n
        out = x - x  # zero of matching type/shape
        for k, p in enumerate(self.mapping):
            out = out | (((x >> (n - 1 - p)) & 1) << (n - 1 - k))
        return out


@dataclass(frozen=True)
class GroupStructure:
    """A group type plus the bit-permutation fixing how blocks are read."""

    group_type: GroupType
    perm: BitPermutation

    def __post_init__(self):
        if self.perm.n != self.group_type.n:
            raise ValueError("permutation length does not match partition")

    @classmethod
    def canonical(cls, *partition: int) -> "GroupStructure":
        gt = GroupType(tuple(partition))
        return cls(gt, BitPermutation.identity(gt.n))

    @property
    def n(self) -> int:
        return self.group_type.n

    @property
    def size(self) -> int:
        return 1 << self.n

    def block_values(self, x):
        """Per-block integer values of x, read through the permutation."""
        px = self.perm.apply_index(x) if not self.perm.is_identity else x
        n = self.n
        vals = []
        for start, m in zip(self.group_type.block_starts, self.group_type.partition):
            shift = n - start - m
            vals.append((px >> shift) & ((1 << m) - 1))
        return vals

    def _assemble(self, block_vals):
        n = self.n
        px = block_vals[0] - block_vals[0]
        for v, start, m in zip(
            block_vals, self.group_type.block_starts, self.group_type.partition
        ):
            px = px | (v << (n - start - m))
        if self.perm.is_identity:
            return px
        return self.perm.inverse().apply_index(px)

    def element_from_blocks(self, block_vals) -> int:
        """Element whose permuted-string blocks take the given values."""
        vals = [int(v) % (1 << m) for v, m in zip(block_vals, self.group_type.partition)]
        return int(self._assemble(vals))

    def op(self, a, b):
        """Group operation; works on ints and on integer ndarrays."""
        if np.isscalar(a) and np.isscalar(b):
            for x in (a, b):
                if not 0 <= int(x) < self.size:
                    raise ValueError(f"element {x} is not a {self.n}-bit string")
        va = self.block_values(a)
        vb = self.block_values(b)
        added = [
            (x + y) & ((1 << m) - 1)
            for x, y, m in zip(va, vb, self.group_type.partition)
        ]
        out = self._assemble(added)
        return int(out) if np.isscalar(a) and np.isscalar(b) else out

    def inverse_element(self, a):
        va = self.block_values(a)
        neg = [(-x) & ((1 << m) - 1) for x, m in zip(va, self.group_type.partition)]
        out = self._assemble(neg)
        return int(out) if np.isscalar(a) else out

    @cached_property
    def op_table(self) -> np.ndarray:
        """Dense 2^n x 2^n Cayley table (n <= 12 or so)."""
        xs = np.arange(self.size, dtype=np.int64)
        return self.op(xs[:, None], xs[None, :])

    @cached_property
    def char_modulus(self) -> int:
        return 1 << max(self.group_type.partition)

    def char_exponent(self, j, i):
        """Integer r with chi_j(i) = exp(2*pi*1j * r / char_modulus)."""
        big_m = self.char_modulus
        vj = self.block_values(j)
        vi = self.block_values(i)
        r = None
        for x, y, m in zip(vj, vi, self.group_type.partition):
            term = x * y * (big_m >> m)
            r = term if r is None else r + term
        return r % big_m

    def character(self, j: int, i: int) -> complex:
        return np.exp(2j * np.pi * self.char_exponent(j, i) / self.char_modulus)

    def __str__(self) -> str:
        return format_group_descriptor(self)


@dataclass(frozen=True)
class Subgroup:
    """A subgroup given by its sorted element set.

    ``generator`` is the single generator when the subgroup was built as a
    cyclic closure (and None for subgroups that arise as kernels or
    orthogonal groups and happen not to be cyclic).
    """

    parent: GroupStructure
    elements: tuple[int, ...]
    generator: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(sorted(int(e) for e in self.elements)))

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, x: int) -> bool:
        return int(x) in set(self.elements)


def subgroup_generated(group: GroupStructure, s: int) -> Subgroup:
    """Cyclic closure {0, s, s*s, ...} of a single generator."""
    elems = [0]
    x = int(s)
    while x != 0:
        elems.append(x)
        x = group.op(x, s)
    return Subgroup(group, tuple(elems), generator=int(s))


def _find_generator(group: GroupStructure, elements: set[int]) -> int | None:
    for s in sorted(elements):
        if s == 0:
            continue
        if set(subgroup_generated(group, s).elements) == elements:
            return s
    return 0 if elements == {0} else None


def cosets(group: GroupStructure, sub: Subgroup) -> list[int]:
    """Tau-minimal representative of every coset, in increasing tau order."""
    _check_subgroup(group, sub)
    seen = np.zeros(group.size, dtype=bool)
    reps = []
    helems = np.asarray(sub.elements, dtype=np.int64)
    for x in range(group.size):
        if seen[x]:
            continue
        reps.append(x)
        seen[group.op(np.int64(x), helems)] = True
    return reps


def _check_subgroup(group: GroupStructure, sub: Subgroup) -> None:
    elems = set(sub.elements)
    if 0 not in elems or group.size % len(elems):
        raise ValueError("not a subgroup of this group")
    hs = np.asarray(sub.elements, dtype=np.int64)
    products = group.op(hs[:, None], hs[None, :])
    if not set(np.unique(products)) <= elems:
        raise ValueError("element set not closed under the group operation")


def mod_h(group: GroupStructure, sub: Subgroup, i: int) -> int:
    """Tau-minimal element of the coset i*H; idempotent."""
    helems = np.asarray(sub.elements, dtype=np.int64)
    return int(group.op(np.int64(i), helems).min())


def mod_h_table(group: GroupStructure, sub: Subgroup) -> np.ndarray:
    """mod_h for every index at once."""
    xs = np.arange(group.size, dtype=np.int64)
    helems = np.asarray(sub.elements, dtype=np.int64)
    return group.op(xs[:, None], helems[None, :]).min(axis=1)


def orthogonal_group(group: GroupStructure, sub: Subgroup) -> Subgroup:
    """H-perp: all j whose character is trivial on every element of H."""
    big_m = group.char_modulus
    js = np.arange(group.size, dtype=np.int64)
    hs = np.asarray(sub.elements, dtype=np.int64)
    ok = np.ones(group.size, dtype=bool)
    for h in hs:
        ok &= np.asarray(group.char_exponent(js, np.int64(h))) % big_m == 0
    elems = tuple(int(j) for j in js[ok])
    return Subgroup(group, elems, generator=_find_generator(group, set(elems)))


# --- circuit-parameter encodings -------------------------------------------


def decode_group_from_params(theta_qft, theta_swap) -> tuple[GroupType, BitPermutation] | None:
    """Group structure encoded by binary circuit switches, or None if invalid.

    The phase triangle is valid iff it is exactly the pattern of some ordered
    partition: row k carries ones up to its block boundary and zeros beyond.
    The swap vector always decodes (every binary setting of the bubble
    network is some bit-permutation).
    """
    theta_qft = np.asarray(theta_qft, dtype=np.int64)
    theta_swap = np.asarray(theta_swap, dtype=np.int64)
    if set(np.unique(theta_qft)) - {0, 1} or set(np.unique(theta_swap)) - {0, 1}:
        raise ValueError("parameters must be binary")
    n = _order_from_param_len(theta_qft.size)
    if theta_swap.size != qft_param_count(n):
        raise ValueError("swap vector length mismatch")
    partition = _partition_from_adjacent(theta_qft, n)
    if not np.array_equal(theta_qft, encode_qft_pattern(partition, n)):
        return None
    return GroupType(partition), perm_from_swap_pattern(theta_swap)


def _order_from_param_len(length: int) -> int:
    n = round((1 + math.isqrt(1 + 8 * length)) / 2)
    if qft_param_count(n) != length:
        raise ValueError(f"length {length} is not n(n-1)/2 for integer n")
    return n


def _partition_from_adjacent(theta_qft, n: int) -> tuple[int, ...]:
    blocks, size = [], 1
    for k in range(n - 1):
        if theta_qft[theta_index(k, k + 1, n)]:
            size += 1
        else:
            blocks.append(size)
            size = 1
    blocks.append(size)
    return tuple(blocks)


def encode_qft_pattern(partition, n: int | None = None) -> np.ndarray:
    """Binary phase-switch triangle implementing the given ordered partition."""
    gt = GroupType(tuple(partition))
    n = gt.n if n is None else n
    if gt.n != n:
        raise ValueError("partition does not sum to n")
    theta = np.zeros(qft_param_count(n), dtype=np.int64)
    for start, m in zip(gt.block_starts, gt.partition):
        end = start + m  # exclusive block boundary
        for k in range(start, end - 1):
            for j in range(k + 1, end):
                theta[theta_index(k, j, n)] = 1
    return theta


def _swap_groups(n: int) -> list[int]:
    """Sizes of the swap-network passes in application order: n-1, ..., 1."""
    return list(range(n - 1, 0, -1))


def perm_from_swap_pattern(lam) -> BitPermutation:
    """Bit-permutation realized by the nearest-neighbour swap network.

    The flat vector holds the passes in application order (the pass of size
    n-1 first); within a pass, the swap on wires (0,1) is applied first.
    """
    lam = np.asarray(lam, dtype=np.int64)
    n = _order_from_param_len(lam.size)
    wires = list(range(n))  # wires[k] = index of the input digit currently on wire k
    pos = 0
    for size in _swap_groups(n):
        for t in range(size):
            if lam[pos + t]:
                wires[t], wires[t + 1] = wires[t + 1], wires[t]
        pos += size
    return BitPermutation(tuple(wires))


def encode_perm_pattern(perm: BitPermutation) -> np.ndarray:
    """Binary swap-network switches realizing a given bit-permutation."""
    n = perm.n
    lam = np.zeros(qft_param_count(n), dtype=np.int64)
    # Build pass by pass: pass of size k fixes the digit that must end on
    # wire k by bubbling it up from its current position.
    current = list(range(n))
    pos = 0
    for size in _swap_groups(n):
        target_wire = size  # this pass finalizes wire `size`
        want = perm.mapping[target_wire]
        at = current.index(want)
        for t in range(at, target_wire):
            lam[pos + t] = 1
            current[t], current[t + 1] = current[t + 1], current[t]
        pos += size
    if tuple(current) != perm.mapping:
        raise AssertionError("swap-network encoding failed")
    return lam


def group_dft_matrix(group: GroupStructure) -> np.ndarray:
    """Discrete Fourier transform of the group, straight from its characters.

    Entry (j, i) is chi_j(i) / sqrt(|G|).  Serves as the independent
    reference for the circuit construction.
    """
    size = group.size
    js = np.arange(size, dtype=np.int64)
    r = np.asarray(group.char_exponent(js[:, None], js[None, :]))
    return np.exp(2j * np.pi * r / group.char_modulus) / math.sqrt(size)


# --- text descriptors -------------------------------------------------------


def parse_group_descriptor(text: str) -> GroupStructure:
    """Parse 'Z8', 'Z4xZ2', 'Z2xZ2xZ2@perm=2,0,1' into a group structure."""
    body, _, perm_part = text.partition("@")
    blocks = []
    for token in body.strip().split("x"):
        token = token.strip()
        if not token.upper().startswith("Z"):
            raise ValueError(f"bad group factor {token!r}")
        value = int(token[1:])
        m = value.bit_length() - 1
        if value < 2 or (1 << m) != value:
            raise ValueError(f"factor {token!r} is not a power of two >= 2")
        blocks.append(m)
    gt = GroupType(tuple(blocks))
    if perm_part:
        key, _, rest = perm_part.partition("=")
        if key.strip() != "perm":
            raise ValueError(f"unknown descriptor suffix {perm_part!r}")
        mapping = tuple(int(v) for v in rest.split(","))
        perm = BitPermutation(mapping)
    else:
        perm = BitPermutation.identity(gt.n)
    return GroupStructure(gt, perm)


def format_group_descriptor(group: GroupStructure) -> str:
    text = str(group.group_type)
    if not group.perm.is_identity:
        text += "@perm=" + ",".join(str(p) for p in group.perm.mapping)
    return text
