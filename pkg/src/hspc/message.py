"""The compressed record: group switches, subgroup generator, coset values.

Binary layout (all little-endian, bit sections packed MSB-first into one
contiguous stream):

    magic "HSPC" | version u8 | n u8 | m u8 | count u32 |
    theta_qft (n(n-1)/2 bits) | theta_perm (n(n-1)/2 bits) |
    generator (n bits) | values (count * m bits) | final pad to a byte

Representatives are not stored: they are the tau-minimal coset minima of the
subgroup encoded by (theta, generator), recomputed at decode time, so the
payload stays within n^2 + |G/H|*m bits.  The JSON mirror keeps the explicit
(representative, value) pairs for debugging.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .groups import (
    GroupStructure,
    Subgroup,
    cosets,
    decode_group_from_params,
    qft_param_count,
    subgroup_generated,
    tau_inv,
)

__all__ = ["CompressedMessage", "MessageFormatError", "HEADER_BITS"]

MAGIC = b"HSPC"
VERSION = 1
HEADER_BITS = (4 + 1 + 1 + 1 + 4) * 8  # magic, version, n, m, count


class MessageFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CompressedMessage:
    """sigma_classical: everything the decoder needs to rebuild the sequence."""

    n: int
    m: int
    theta_qft: tuple[int, ...]
    theta_perm: tuple[int, ...]
    generator: int
    coset_values: tuple[tuple[int, int], ...]
    converged: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta_qft", tuple(int(b) for b in self.theta_qft))
        object.__setattr__(self, "theta_perm", tuple(int(b) for b in self.theta_perm))
        object.__setattr__(
            self, "coset_values", tuple((int(c), int(v)) for c, v in self.coset_values)
        )
        expected = qft_param_count(self.n)
        if len(self.theta_qft) != expected or len(self.theta_perm) != expected:
            raise MessageFormatError("switch vector lengths do not match n")
        decoded = decode_group_from_params(self.theta_qft, self.theta_perm)
        if decoded is None:
            raise MessageFormatError("theta_qft is not a valid block pattern")
        if not 0 <= self.generator < (1 << self.n):
            raise MessageFormatError("generator out of range")
        group = GroupStructure(*decoded)
        reps = cosets(group, subgroup_generated(group, self.generator))
        if [c for c, _ in self.coset_values] != reps:
            raise MessageFormatError(
                "coset values must list the tau-minimal representatives in order"
            )
        for _, v in self.coset_values:
            if not 0 <= v < (1 << self.m):
                raise MessageFormatError("coset value out of range")

    @cached_property
    def group(self) -> GroupStructure:
        return GroupStructure(*decode_group_from_params(self.theta_qft, self.theta_perm))

    @cached_property
    def subgroup(self) -> Subgroup:
        return subgroup_generated(self.group, self.generator)

    @property
    def payload_bits(self) -> int:
        return 2 * qft_param_count(self.n) + self.n + len(self.coset_values) * self.m

    def to_bytes(self) -> bytes:
        bits: list[int] = []

        def put(value: int, width: int) -> None:
            bits.extend((value >> (width - 1 - t)) & 1 for t in range(width))

        for b in self.theta_qft:
            bits.append(b)
        for b in self.theta_perm:
            bits.append(b)
        put(self.generator, self.n)
        for _, v in self.coset_values:
            put(v, self.m)
        packed = np.packbits(np.array(bits, dtype=np.uint8)).tobytes() if bits else b""
        head = (
            MAGIC
            + bytes([VERSION, self.n, self.m])
            + len(self.coset_values).to_bytes(4, "little")
        )
        return head + packed

    @classmethod
    def from_bytes(cls, raw: bytes) -> "CompressedMessage":
        if raw[:4] != MAGIC:
            raise MessageFormatError("bad magic")
        if raw[4] != VERSION:
            raise MessageFormatError(f"unsupported version {raw[4]}")
        n, m = raw[5], raw[6]
        count = int.from_bytes(raw[7:11], "little")
        bits = np.unpackbits(np.frombuffer(raw[11:], dtype=np.uint8))
        tri = qft_param_count(n)
        need = 2 * tri + n + count * m
        if bits.size < need:
            raise MessageFormatError("truncated payload")
        pos = 0

        def take(width: int) -> int:
            nonlocal pos
            value = 0
            for _ in range(width):
                value = (value << 1) | int(bits[pos])
                pos += 1
            return value

        theta_qft = tuple(int(b) for b in bits[:tri])
        pos = tri
        theta_perm = tuple(int(b) for b in bits[pos : pos + tri])
        pos += tri
        generator = take(n)
        values = [take(m) for _ in range(count)]
        decoded = decode_group_from_params(theta_qft, theta_perm)
        if decoded is None:
            raise MessageFormatError("theta_qft is not a valid block pattern")
        group = GroupStructure(*decoded)
        reps = cosets(group, subgroup_generated(group, generator))
        if len(reps) != count:
            raise MessageFormatError("count does not match the encoded subgroup")
        return cls(
            n=n,
            m=m,
            theta_qft=theta_qft,
            theta_perm=theta_perm,
            generator=generator,
            coset_values=tuple(zip(reps, values)),
        )

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "group": str(self.group),
            "theta_qft": list(self.theta_qft),
            "theta_perm": list(self.theta_perm),
            "generator": tau_inv(self.generator, self.n),
            "coset_values": [
                {"representative": tau_inv(c, self.n), "value": v}
                for c, v in self.coset_values
            ],
            "converged": self.converged,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CompressedMessage":
        return cls(
            n=data["n"],
            m=data["m"],
            theta_qft=tuple(data["theta_qft"]),
            theta_perm=tuple(data["theta_perm"]),
            generator=int(data["generator"], 2),
            coset_values=tuple(
                (int(e["representative"], 2), e["value"]) for e in data["coset_values"]
            ),
            converged=data.get("converged", True),
        )
