"""Hidden-subgroup symmetry discovery and lossless sequence compression.

Simulated Fourier-sampling circuits find the subgroup a sequence hides; the
compressed record keeps one value per coset plus the group description, and
the database layer turns that into logical deletion with correct queries.
"""

from .groups import (
    BitPermutation,
    GroupStructure,
    GroupType,
    Subgroup,
    cosets,
    decode_group_from_params,
    mod_h,
    orthogonal_group,
    parse_group_descriptor,
    subgroup_generated,
    tau,
    tau_inv,
)
from .message import CompressedMessage
from .sim import Oracle, PermParams, QftParams, StateVector

__all__ = [
    "BitPermutation",
    "GroupStructure",
    "GroupType",
    "Subgroup",
    "CompressedMessage",
    "Oracle",
    "PermParams",
    "QftParams",
    "StateVector",
    "cosets",
    "decode_group_from_params",
    "mod_h",
    "orthogonal_group",
    "parse_group_descriptor",
    "subgroup_generated",
    "tau",
    "tau_inv",
]
