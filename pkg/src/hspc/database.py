"""Sequence generation with a planted hidden subgroup, and the database model.

A database is the stored sequence plus a free/occupied mask ("logical
deletion"): compression marks every non-representative index free, and
queries stay correct through the query function no matter what is written
into freed slots afterwards.

File formats (all little-endian):
  oracle table   n u8 | m u8 | 2^n values, ceil(m/8) bytes each
  database       oracle table bytes | free mask, 2^n bits packed MSB-first
Both also have JSON forms for hand-written fixtures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoencoder import decode as decode_message
from .groups import GroupStructure, Subgroup, cosets, mod_h_table
from .message import CompressedMessage
from .sim import Oracle

__all__ = [
    "Database",
    "HspDataSpec",
    "CapacityError",
    "VerificationError",
    "generate_hsp_sequence",
    "sequence_from_values",
    "characteristic_function",
    "compress_database",
    "query_db",
    "query_table",
    "compression_ratio",
    "write_oracle",
    "read_oracle",
    "oracle_to_json",
    "oracle_from_json",
    "write_database",
    "read_database",
]


class CapacityError(ValueError):
    pass


class VerificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HspDataSpec:
    """A planted (group, hidden subgroup, value width) instance."""

    group: GroupStructure
    hidden: Subgroup
    value_bits: int
    seed: int = 0

    def __post_init__(self):
        if self.hidden.parent.group_type != self.group.group_type or (
            self.hidden.parent.perm != self.group.perm
        ):
            raise ValueError("hidden subgroup does not belong to the group")


@dataclass
class Database:
    """Stored values plus the free/occupied mask; index 0 is never free."""

    values: np.ndarray
    free_mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        self.free_mask = np.asarray(self.free_mask, dtype=bool)
        if self.values.shape != self.free_mask.shape:
            raise ValueError("values and mask lengths differ")
        if self.free_mask.size and self.free_mask[0]:
            raise ValueError("index 0 must stay occupied")

    @classmethod
    def from_sequence(cls, values) -> "Database":
        values = np.asarray(values, dtype=np.int64)
        return cls(values, np.zeros(values.size, dtype=bool))

    @property
    def size(self) -> int:
        return self.values.size

    def copy(self) -> "Database":
        return Database(self.values.copy(), self.free_mask.copy())


def sequence_from_values(group: GroupStructure, hidden: Subgroup, rep_values) -> np.ndarray:
    """Sequence taking the given value on each coset, reps in tau order."""
    reps = cosets(group, hidden)
    rep_values = list(rep_values)
    if len(rep_values) != len(reps):
        raise ValueError(f"need exactly {len(reps)} coset values")
    lookup = dict(zip(reps, rep_values))
    table = mod_h_table(group, hidden)
    return np.array([lookup[int(r)] for r in table], dtype=np.int64)


def generate_hsp_sequence(spec: HspDataSpec, rng=None) -> np.ndarray:
    """Random sequence hiding exactly `spec.hidden`: distinct value per coset.

    Distinctness gives the only-if direction; values are drawn without
    replacement from the m-bit range.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n_cosets = spec.group.size // spec.hidden.order
    space = 1 << spec.value_bits
    if space < n_cosets:
        raise CapacityError(
            f"2^{spec.value_bits} values cannot be distinct on {n_cosets} cosets"
        )
    if space <= 1 << 22:
        values = rng.choice(space, size=n_cosets, replace=False)
    else:
        chosen: set[int] = set()
        while len(chosen) < n_cosets:
            chosen.update(int(v) for v in rng.integers(0, space, size=n_cosets))
        values = np.array(sorted(chosen)[:n_cosets])
        rng.shuffle(values)
    return sequence_from_values(spec.group, spec.hidden, values)


def characteristic_function(group: GroupStructure, hidden: Subgroup) -> np.ndarray:
    """c(i) = 1 iff index i is a duplicate (not its coset's tau-minimum)."""
    table = mod_h_table(group, hidden)
    return (table != np.arange(group.size)).astype(np.uint8)


def compress_database(db: Database, msg: CompressedMessage) -> Database:
    """Mark every non-representative slot free, after verifying the message."""
    if db.size != 1 << msg.n:
        raise VerificationError("database length does not match the message")
    if not np.array_equal(decode_message(msg), db.values):
        raise VerificationError("message does not reproduce the database contents")
    mask = characteristic_function(msg.group, msg.subgroup).astype(bool)
    return Database(db.values.copy(), mask)


def query_table(msg: CompressedMessage) -> np.ndarray:
    """The query function as a table: index -> occupied representative."""
    return mod_h_table(msg.group, msg.subgroup)


def query_db(db: Database, msg: CompressedMessage, i: int) -> int:
    """Original value at i, read through the representative slot."""
    if not 0 <= i < db.size:
        raise IndexError(f"index {i} out of range")
    return int(db.values[query_table(msg)[i]])


def compression_ratio(n: int, m: int, subgroup_size: int) -> float:
    """Compressed bits over raw bits: n^2/(2^n m) + 1/|H|."""
    if min(n, m, subgroup_size) < 1 or (1 << n) % subgroup_size:
        raise ValueError("subgroup size must divide 2^n")
    return n * n / ((1 << n) * m) + 1.0 / subgroup_size


# --- file formats ------------------------------------------------------------


def _value_width(m: int) -> int:
    return (m + 7) // 8


def write_oracle(path, oracle: Oracle) -> None:
    Path(path).write_bytes(_oracle_bytes(oracle))


def _oracle_bytes(oracle: Oracle) -> bytes:
    width = _value_width(oracle.m)
    body = b"".join(int(v).to_bytes(width, "little") for v in oracle.table)
    return bytes([oracle.n, oracle.m]) + body


def read_oracle(path) -> Oracle:
    raw = Path(path).read_bytes()
    oracle, used = _oracle_from_bytes(raw)
    if used != len(raw):
        raise ValueError("trailing bytes after oracle table")
    return oracle


def _oracle_from_bytes(raw: bytes) -> tuple[Oracle, int]:
    if len(raw) < 2:
        raise ValueError("truncated oracle file")
    n, m = raw[0], raw[1]
    width = _value_width(m)
    count = 1 << n
    need = 2 + count * width
    if len(raw) < need:
        raise ValueError("truncated oracle table")
    table = [
        int.from_bytes(raw[2 + k * width : 2 + (k + 1) * width], "little")
        for k in range(count)
    ]
    return Oracle(n, m, np.array(table)), need


def oracle_to_json(oracle: Oracle) -> dict:
    return {"n": oracle.n, "m": oracle.m, "values": [int(v) for v in oracle.table]}


def oracle_from_json(data: dict) -> Oracle:
    return Oracle(int(data["n"]), int(data["m"]), np.array(data["values"]))


def write_database(path, db: Database, m: int) -> None:
    n = int(db.size - 1).bit_length()
    oracle = Oracle(n, m, db.values)
    mask_bits = np.packbits(db.free_mask.astype(np.uint8))
    Path(path).write_bytes(_oracle_bytes(oracle) + mask_bits.tobytes())


def read_database(path) -> tuple[Database, int]:
    """Returns (database, value bit width)."""
    raw = Path(path).read_bytes()
    oracle, used = _oracle_from_bytes(raw)
    count = 1 << oracle.n
    mask_bytes = (count + 7) // 8
    if len(raw) != used + mask_bytes:
        raise ValueError("database file has wrong mask section length")
    mask = np.unpackbits(np.frombuffer(raw[used:], dtype=np.uint8))[:count].astype(bool)
    return Database(np.asarray(oracle.table), mask), oracle.m
