"""Dense statevector simulation of the parametrized Fourier circuits.

Qubit 0 is the most significant bit of the basis label, matching the MSB-first
index convention of :mod:`hspc.groups`.  All gates act in place on a numpy
complex array; fractional gates are principal matrix powers, so every real
switch value in [0, 1] yields a unitary.

The two-register circuit (value register measured right after the oracle)
is simulated in its measured-register-collapsed form: the value outcome is
drawn from its exact Born distribution read off the oracle table, and the
index register evolves alone afterwards.  This is exactly equivalent to the
joint simulation and keeps the index-register work at 2^n amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .groups import (
    BitPermutation,
    GroupStructure,
    adjacent_indices,
    encode_perm_pattern,
    encode_qft_pattern,
    qft_param_count,
    theta_index,
    _swap_groups,
)

__all__ = [
    "StateVector",
    "Oracle",
    "QftParams",
    "PermParams",
    "QueryCounter",
    "SimulationSizeError",
    "apply_hadamard",
    "apply_controlled_phase_pow",
    "apply_swap_pow",
    "apply_oracle",
    "apply_qft_theta",
    "apply_w_theta",
    "measure_register",
    "qft_theta_matrix",
    "w_theta_matrix",
    "hsp_circuit_sample",
    "exact_output_distribution",
    "exact_circuit_params",
    "DENSE_QUBIT_LIMIT",
]

DENSE_QUBIT_LIMIT = 24


class SimulationSizeError(RuntimeError):
    pass


@dataclass
class QueryCounter:
    """Monotone oracle-invocation tally."""

    count: int = 0

    def add(self, k: int = 1) -> None:
        self.count += k


@dataclass
class Oracle:
    """Black-box f: n-bit indices to m-bit values, given as a table."""

    n: int
    m: int
    table: np.ndarray
    counter: QueryCounter | None = None

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.shape != (1 << self.n,):
            raise ValueError(f"table must have 2^{self.n} entries")
        if table.min() < 0 or table.max() >= (1 << self.m):
            raise ValueError(f"table values must fit in {self.m} bits")
        self.table = table

    def value(self, i: int) -> int:
        """Classical query; counts one invocation."""
        if self.counter is not None:
            self.counter.add()
        return int(self.table[i])

    def counting(self, counter: QueryCounter) -> "Oracle":
        return Oracle(self.n, self.m, self.table, counter)


@dataclass(frozen=True)
class QftParams:
    """Phase switches (length n(n-1)/2) and swap-stage switches (length n-1)."""

    gamma: np.ndarray
    swap_gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        swap = np.asarray(self.swap_gamma, dtype=float)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "swap_gamma", swap)
        n = _order_from_len(gamma.size)
        if swap.size != max(n - 1, 0):
            raise ValueError("swap_gamma must have length n-1")
        for v in (gamma, swap):
            if v.size and (v.min() < -1e-12 or v.max() > 1 + 1e-12):
                raise ValueError("switch values must lie in [0, 1]")

    @property
    def n(self) -> int:
        return _order_from_len(self.gamma.size)

    @classmethod
    def from_gamma(cls, gamma) -> "QftParams":
        """Tie the swap stage to the nearest-neighbour phase switches."""
        gamma = np.asarray(gamma, dtype=float)
        n = _order_from_len(gamma.size)
        swap = gamma[adjacent_indices(n)] if n > 1 else np.zeros(0)
        return cls(gamma, swap)

    @classmethod
    def exact_for(cls, partition) -> "QftParams":
        return cls.from_gamma(encode_qft_pattern(partition).astype(float))


@dataclass(frozen=True)
class PermParams:
    """Swap-network switches, passes stored in application order (n-1 first)."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        object.__setattr__(self, "lam", lam)
        _order_from_len(lam.size)
        if lam.size and (lam.min() < -1e-12 or lam.max() > 1 + 1e-12):
            raise ValueError("switch values must lie in [0, 1]")

    @property
    def n(self) -> int:
        return _order_from_len(self.lam.size)

    @classmethod
    def identity(cls, n: int) -> "PermParams":
        return cls(np.zeros(qft_param_count(n)))

    @classmethod
    def exact_for(cls, perm: BitPermutation) -> "PermParams":
        return cls(encode_perm_pattern(perm).astype(float))


def _order_from_len(length: int) -> int:
    n = round((1 + math.isqrt(1 + 8 * length)) / 2)
    if qft_param_count(n) != length:
        raise ValueError(f"length {length} is not n(n-1)/2 for integer n")
    return n


def exact_circuit_params(group: GroupStructure) -> tuple[QftParams, PermParams]:
    """Binary parameter pair whose circuit is the Fourier transform of `group`."""
    return QftParams.exact_for(group.group_type.partition), PermParams.exact_for(group.perm)


class StateVector:
    """Complex amplitudes over num_qubits wires; qubit 0 is the MSB."""

    __slots__ = ("num_qubits", "amps")

    def __init__(self, num_qubits: int, amps: np.ndarray | None = None):
        if num_qubits > DENSE_QUBIT_LIMIT:
            raise SimulationSizeError(
                f"{num_qubits} qubits exceeds the dense limit {DENSE_QUBIT_LIMIT}"
            )
        self.num_qubits = num_qubits
        if amps is None:
            amps = np.zeros(1 << num_qubits, dtype=complex)
            amps[0] = 1.0
        else:
            amps = np.asarray(amps, dtype=complex)
            if amps.shape != (1 << num_qubits,):
                raise ValueError("amplitude length must be 2^num_qubits")
        self.amps = amps

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=complex)
        n = int(amps.size - 1).bit_length()
        return cls(n, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def _check_qubit(self, *qs: int) -> None:
        for q in qs:
            if not 0 <= q < self.num_qubits:
                raise IndexError(f"qubit {q} out of range")


def _pair_views(amps: np.ndarray, n: int, q: int):
    """Slices of the q=0 and q=1 subspaces, batch-friendly."""
    shaped = amps.reshape((1 << q, 2, -1))
    return shaped[:, 0, :], shaped[:, 1, :]


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    state._check_qubit(qubit)
    _hadamard_raw(state.amps, state.num_qubits, qubit)
    return state


def _hadamard_raw(amps: np.ndarray, n: int, q: int) -> None:
    a0, a1 = _pair_views(amps, n, q)
    s = (a0 + a1) * math.sqrt(0.5)
    d = (a0 - a1) * math.sqrt(0.5)
    a0[...] = s
    a1[...] = d


def apply_controlled_phase_pow(
    state: StateVector, control: int, target: int, k: int, gamma: float
) -> StateVector:
    """Multiply the |11> component of (control, target) by exp(2*pi*i*gamma/2^k)."""
    state._check_qubit(control, target)
    if control == target:
        raise ValueError("control and target must differ")
    if not 0.0 <= gamma <= 1.0 + 1e-12:
        raise ValueError(f"gamma={gamma} outside [0, 1]")
    if k < 2:
        raise ValueError("rotation order k must be >= 2")
    _cphase_raw(state.amps, state.num_qubits, control, target, 2 * np.pi * gamma / (1 << k))
    return state


def _cphase_raw(amps: np.ndarray, n: int, control: int, target: int, angle: float) -> None:
    if angle == 0.0:
        return
    hi, lo = (control, target) if control < target else (target, control)
    shaped = amps.reshape((1 << hi, 2, 1 << (lo - hi - 1), 2, -1))
    shaped[:, 1, :, 1, :] *= np.exp(1j * angle)


def apply_swap_pow(state: StateVector, q1: int, q2: int, lam: float) -> StateVector:
    """Principal power of SWAP: phase e^{i*pi*lam} on the antisymmetric pair."""
    state._check_qubit(q1, q2)
    if q1 == q2:
        raise ValueError("swap qubits must differ")
    if not 0.0 <= lam <= 1.0 + 1e-12:
        raise ValueError(f"lam={lam} outside [0, 1]")
    _swap_pow_raw(state.amps, state.num_qubits, q1, q2, np.exp(1j * np.pi * lam))
    return state


def _swap_pow_raw(amps: np.ndarray, n: int, q1: int, q2: int, phase: complex) -> None:
    if phase == 1.0:
        return
    hi, lo = sorted((q1, q2))
    shaped = amps.reshape((1 << hi, 2, 1 << (lo - hi - 1), 2, -1))
    a01 = shaped[:, 0, :, 1, :]
    a10 = shaped[:, 1, :, 0, :]
    sym = 0.5 * (a01 + a10)
    anti = 0.5 * (a01 - a10)
    a01[...] = sym + phase * anti
    a10[...] = sym - phase * anti


def apply_oracle(oracle: Oracle, state: StateVector) -> StateVector:
    """|i>|y> -> |i>|y xor f(i)>; register 1 is the top n qubits."""
    if state.num_qubits != oracle.n + oracle.m:
        raise ValueError("state must have n+m qubits for this oracle")
    if oracle.counter is not None:
        oracle.counter.add()
    size_m = 1 << oracle.m
    xs = np.arange(state.amps.size, dtype=np.int64)
    src = (xs & ~(size_m - 1)) | ((xs ^ oracle.table[xs >> oracle.m]) & (size_m - 1))
    state.amps = state.amps[src]
    return state


def measure_register(state: StateVector, qubits, rng) -> tuple[tuple[int, ...], StateVector]:
    """Born-rule sample of the listed qubits; returns (bits, collapsed state)."""
    qubits = list(qubits)
    if not qubits:
        raise ValueError("must measure at least one qubit")
    if len(set(qubits)) != len(qubits):
        raise ValueError("duplicate qubits in measurement")
    state._check_qubit(*qubits)
    n = state.num_qubits
    shaped = state.probabilities().reshape([2] * n)
    other = tuple(q for q in range(n) if q not in qubits)
    marg = shaped.sum(axis=other) if other else shaped
    marg = np.transpose(marg, [sorted(qubits).index(q) for q in qubits]).reshape(-1)
    total = marg.sum()
    outcome = int(rng.choice(marg.size, p=marg / total))
    bits = tuple((outcome >> (len(qubits) - 1 - t)) & 1 for t in range(len(qubits)))
    mask = np.ones([2] * n, dtype=bool)
    for q, b in zip(qubits, bits):
        idx = [slice(None)] * n
        idx[q] = 1 - b
        mask[tuple(idx)] = False
    collapsed = np.where(mask.reshape(-1), state.amps, 0.0)
    collapsed /= np.linalg.norm(collapsed)
    return bits, StateVector(n, collapsed)


# --- parametrized circuit blocks -------------------------------------------


def _qft_theta_raw(amps: np.ndarray, n_total: int, params: QftParams, wires) -> None:
    n = len(wires)
    gamma, swap = params.gamma, params.swap_gamma
    for k in range(n):
        _hadamard_raw(amps, n_total, wires[k])
        for j in range(k + 1, n):
            gkj = gamma[theta_index(k, j, n)]
            if gkj:
                _cphase_raw(
                    amps, n_total, wires[j], wires[k],
                    2 * np.pi * gkj / (1 << (j - k + 1)),
                )
    # Final stage: within-block qubit reversal.  Triangular cascade whose
    # exponent for the swap crossing adjacency t while inserting wire b is the
    # product of the nearest-neighbour switches spanning [t, b); at any valid
    # binary setting this is exactly the reversal of each block.
    for b in range(1, n):
        exponent = 1.0
        for t in range(b - 1, -1, -1):
            exponent *= swap[t]
            if exponent:
                _swap_pow_raw(
                    amps, n_total, wires[t], wires[t + 1], np.exp(1j * np.pi * exponent)
                )


def _w_theta_raw(
    amps: np.ndarray, n_total: int, params: PermParams, wires, dagger: bool
) -> None:
    n = len(wires)
    ops: list[tuple[int, float]] = []
    pos = 0
    for size in _swap_groups(n):
        for t in range(size):
            ops.append((t, params.lam[pos + t]))
        pos += size
    if dagger:
        ops.reverse()
    sign = -1.0 if dagger else 1.0
    for t, lam in ops:
        if lam:
            _swap_pow_raw(amps, n_total, wires[t], wires[t + 1], np.exp(sign * 1j * np.pi * lam))


def apply_qft_theta(state: StateVector, params: QftParams, wires=None) -> StateVector:
    wires = list(range(params.n)) if wires is None else list(wires)
    if len(wires) != params.n:
        raise ValueError("wire count must match parameter shape")
    state._check_qubit(*wires)
    _qft_theta_raw(state.amps, state.num_qubits, params, wires)
    return state


def apply_w_theta(
    state: StateVector, params: PermParams, wires=None, dagger: bool = False
) -> StateVector:
    wires = list(range(params.n)) if wires is None else list(wires)
    if len(wires) != params.n:
        raise ValueError("wire count must match parameter shape")
    state._check_qubit(*wires)
    _w_theta_raw(state.amps, state.num_qubits, params, wires, dagger)
    return state


def qft_theta_matrix(params: QftParams, n: int | None = None) -> np.ndarray:
    n = params.n if n is None else n
    size = 1 << n
    mat = np.eye(size, dtype=complex)
    _qft_theta_raw(mat, n, params, list(range(n)))
    return mat


def w_theta_matrix(params: PermParams, n: int | None = None, dagger: bool = False) -> np.ndarray:
    n = params.n if n is None else n
    size = 1 << n
    mat = np.eye(size, dtype=complex)
    _w_theta_raw(mat, n, params, list(range(n)), dagger)
    return mat


# --- the HSP sampling circuit ------------------------------------------------


def _value_partition(oracle: Oracle) -> tuple[np.ndarray, list[np.ndarray]]:
    """Distinct oracle values and the index preimage of each."""
    values, inverse = np.unique(oracle.table, return_inverse=True)
    preimages = [np.flatnonzero(inverse == t) for t in range(values.size)]
    return values, preimages


def _register_state_after_value_measurement(oracle: Oracle, rng) -> np.ndarray:
    """Index-register state after H^n, U_f and measuring the value register.

    The joint state before measurement is 2^{-n/2} sum_i |i>|f(i)>, so the
    value outcome has probability |f^{-1}(v)| / 2^n and the collapsed index
    register is the uniform superposition over the preimage.
    """
    values, preimages = _value_partition(oracle)
    probs = np.array([p.size for p in preimages], dtype=float) / (1 << oracle.n)
    pick = int(rng.choice(values.size, p=probs))
    amps = np.zeros(1 << oracle.n, dtype=complex)
    amps[preimages[pick]] = 1.0 / math.sqrt(preimages[pick].size)
    return amps


def hsp_circuit_sample(oracle: Oracle, qft: QftParams, perm: PermParams, rng) -> int:
    """One shot of the sampling circuit; returns the index-register outcome.

    Circuit order: H on every index wire, the oracle (one query), value
    register measured, then W, QFT_theta, W-dagger on the index register and
    a computational-basis measurement.
    """
    if qft.n != oracle.n or perm.n != oracle.n:
        raise ValueError("parameter shapes must match oracle.n")
    if oracle.counter is not None:
        oracle.counter.add()
    amps = _register_state_after_value_measurement(oracle, rng)
    n = oracle.n
    _w_theta_raw(amps, n, perm, list(range(n)), dagger=False)
    _qft_theta_raw(amps, n, qft, list(range(n)))
    _w_theta_raw(amps, n, perm, list(range(n)), dagger=True)
    probs = np.abs(amps) ** 2
    return int(rng.choice(probs.size, p=probs / probs.sum()))


def exact_output_distribution(oracle: Oracle, qft: QftParams, perm: PermParams) -> np.ndarray:
    """Exact Born distribution of the index register, value register traced out."""
    if qft.n != oracle.n or perm.n != oracle.n:
        raise ValueError("parameter shapes must match oracle.n")
    if oracle.n + oracle.m > DENSE_QUBIT_LIMIT:
        raise SimulationSizeError(
            f"{oracle.n + oracle.m} qubits exceeds the dense limit {DENSE_QUBIT_LIMIT}"
        )
    n = oracle.n
    _, preimages = _value_partition(oracle)
    size = 1 << n
    cols = np.zeros((size, len(preimages)), dtype=complex)
    weights = np.empty(len(preimages))
    for t, pre in enumerate(preimages):
        cols[pre, t] = 1.0 / math.sqrt(pre.size)
        weights[t] = pre.size / size
    flat = cols.reshape(-1)
    wires = list(range(n))
    _w_theta_raw(flat, n, perm, wires, dagger=False)
    _qft_theta_raw(flat, n, qft, wires)
    _w_theta_raw(flat, n, perm, wires, dagger=True)
    cols = flat.reshape(size, len(preimages))
    return (np.abs(cols) ** 2 * weights).sum(axis=1)
