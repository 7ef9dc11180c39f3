"""Compression of quantum states invariant under a group translation.

States fixed by |x> -> |x*h0> live in the span of the coset states of
H = <h0>; that span has one basis vector per coset, so an invariant n-qubit
state compresses to log2(|G|/|H|) qubits.  The channel pair here is the
basis-change projection onto that span and its embedding back.

The learning side mirrors the sequence autoencoder: Fourier-sample the
states, read the subgroup off the samples, score candidate structures by
round-trip infidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import reduce

import numpy as np

from .autoencoder import (
    GeneratorSwitches,
    RealParams,
    TrainConfig,
    _PretrainProblem,
    _pretrain_descend,
    _nudged_nonzero,
    finite_diff_gradient,
    nearest_valid_pattern,
    rounded_generator,
    sample_binary_config,
    squash,
    unsquash,
)
from .groups import (
    GroupStructure,
    Subgroup,
    cosets,
    decode_group_from_params,
    qft_param_count,
    subgroup_generated,
)
from .sampling import SampleBatch, solve_congruences
from .sim import PermParams, QftParams, _qft_theta_raw, _w_theta_raw

__all__ = [
    "CosetBasis",
    "DensityOp",
    "coset_state",
    "translation_op",
    "random_invariant_state",
    "encode_state",
    "decode_state",
    "learn_h0_zn",
    "infidelity_cost",
    "variational_state_train",
    "StateTrainResult",
    "invariant_state_source",
]


@dataclass(frozen=True)
class DensityOp:
    """Hermitian, unit-trace, PSD matrix (within tolerance)."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density operator must be square")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, tol: float = 1e-9) -> "DensityOp":
        mat = self.matrix
        if np.abs(mat - mat.conj().T).max() > tol:
            raise ValueError("not Hermitian")
        if abs(np.trace(mat).real - 1.0) > tol or abs(np.trace(mat).imag) > tol:
            raise ValueError("trace is not 1")
        if np.linalg.eigvalsh(mat).min() < -tol:
            raise ValueError("not positive semidefinite")
        return self

    @classmethod
    def pure(cls, vector) -> "DensityOp":
        v = np.asarray(vector, dtype=complex)
        return cls(np.outer(v, v.conj()))


def coset_state(group: GroupStructure, hidden: Subgroup, rep: int) -> np.ndarray:
    """Uniform superposition over the coset rep*H."""
    helems = np.asarray(hidden.elements, dtype=np.int64)
    vec = np.zeros(group.size, dtype=complex)
    vec[group.op(np.int64(rep), helems)] = 1.0 / math.sqrt(hidden.order)
    return vec


@dataclass(frozen=True)
class CosetBasis:
    """Orthonormal coset-state basis of the translation-invariant subspace."""

    group: GroupStructure
    hidden: Subgroup
    vectors: np.ndarray  # (2^n, |G|/|H|), one column per representative

    @classmethod
    def build(cls, group: GroupStructure, hidden: Subgroup) -> "CosetBasis":
        reps = cosets(group, hidden)
        mat = np.stack([coset_state(group, hidden, c) for c in reps], axis=1)
        return cls(group, hidden, mat)

    @property
    def num_cosets(self) -> int:
        return self.vectors.shape[1]


def translation_op(group: GroupStructure, h0: int) -> np.ndarray:
    """Permutation unitary |x> -> |x * h0>."""
    xs = np.arange(group.size, dtype=np.int64)
    targets = group.op(xs, np.int64(h0))
    mat = np.zeros((group.size, group.size))
    mat[targets, xs] = 1.0
    return mat


def random_invariant_state(basis: CosetBasis, rng) -> np.ndarray:
    """Haar-uniform combination of the coset states."""
    dim = basis.num_cosets
    coeff = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    coeff /= np.linalg.norm(coeff)
    return basis.vectors @ coeff


def encode_state(rho: DensityOp, basis: CosetBasis) -> DensityOp:
    """Matrix elements of rho in the coset basis; dimension |G|/|H|."""
    if rho.dim != basis.group.size:
        raise ValueError("state dimension does not match the group")
    b = basis.vectors
    return DensityOp(b.conj().T @ rho.matrix @ b)


def decode_state(rho_small: DensityOp, basis: CosetBasis) -> DensityOp:
    """Embed a compressed operator back into the full space."""
    if rho_small.dim != basis.num_cosets:
        raise ValueError("compressed dimension does not match the basis")
    b = basis.vectors
    return DensityOp(b @ rho_small.matrix @ b.conj().T)


def invariant_state_source(group: GroupStructure, hidden: Subgroup, seed: int):
    """Deterministic-seeded generator of fresh invariant states.

    The returned callable takes an rng and emits one state per call; the
    basis is built once.
    """
    basis = CosetBasis.build(group, hidden)

    def source(rng) -> np.ndarray:
        return random_invariant_state(basis, rng)

    return source


# --- learning ----------------------------------------------------------------


def _qft_zn_sample(state: np.ndarray, n: int, rng) -> int:
    amps = state.astype(complex, copy=True)
    _qft_theta_raw(amps, n, QftParams.exact_for((n,)), list(range(n)))
    probs = np.abs(amps) ** 2
    return int(rng.choice(probs.size, p=probs / probs.sum()))


def learn_h0_zn(state_source, n: int, k: int, rng) -> int:
    """Translation step of a Z_{2^n}-invariant source from Fourier samples.

    Samples land on multiples of 2^n / h0; the gcd of the nonzero outcomes
    therefore pins the subgroup and h0 = 2^n / gcd.  All-zero samples carry
    no information and return the 2^n marker.
    """
    outcomes = [_qft_zn_sample(state_source(rng), n, rng) for _ in range(k)]
    g = reduce(math.gcd, (j for j in outcomes if j), 0)
    if g == 0:
        return 1 << n
    return (1 << n) // g


def _state_circuit_dist(state: np.ndarray, n: int, qft: QftParams, perm: PermParams) -> np.ndarray:
    amps = state.astype(complex, copy=True)
    wires = list(range(n))
    _w_theta_raw(amps, n, perm, wires, dagger=False)
    _qft_theta_raw(amps, n, qft, wires)
    _w_theta_raw(amps, n, perm, wires, dagger=True)
    return np.abs(amps) ** 2


def _structure_for_theta(
    dist: np.ndarray, theta_qft, theta_perm, raw_switches: np.ndarray, config: TrainConfig
) -> tuple[GroupStructure, Subgroup, np.ndarray]:
    group = GroupStructure(*decode_group_from_params(theta_qft, theta_perm))
    problem = _PretrainProblem(dist, group)
    raw_out, _ = _pretrain_descend(problem, raw_switches, config)
    s = rounded_generator(GeneratorSwitches(squash(raw_out)), group)
    if s == 0:
        support = tuple(int(j) for j in problem.support)
        s = solve_congruences(group, SampleBatch(group, support))
        if s == 0:
            s = _nudged_nonzero(squash(raw_out), group)
    return group, subgroup_generated(group, s), raw_out


def _round_trip_infidelity(states: list[np.ndarray], group: GroupStructure, hidden: Subgroup) -> float:
    basis = CosetBasis.build(group, hidden)
    total = 0.0
    for psi in states:
        rho = DensityOp.pure(psi)
        back = decode_state(encode_state(rho, basis), basis).matrix
        total += 1.0 - float(np.real(psi.conj() @ back @ psi))
    return max(total / len(states), 0.0)


def infidelity_cost(
    states: list[np.ndarray],
    params: RealParams,
    switches: GeneratorSwitches,
    rng,
    config: TrainConfig | None = None,
) -> float:
    """Average round-trip infidelity under a sampled binary structure."""
    if not states:
        raise ValueError("need at least one state")
    config = config or TrainConfig()
    n = params.n
    dist = np.zeros(1 << n)
    qft, perm = QftParams.from_gamma(params.gamma_qft), PermParams(params.gamma_perm)
    for psi in states:
        dist += _state_circuit_dist(psi, n, qft, perm)
    dist /= dist.sum()
    theta_qft, theta_perm = sample_binary_config(params, rng, config.resample_limit)
    group, hidden, _ = _structure_for_theta(
        dist, theta_qft, theta_perm, unsquash(switches.values), config
    )
    return _round_trip_infidelity(states, group, hidden)


@dataclass
class StateTrainResult:
    params: RealParams
    group: GroupStructure
    hidden: Subgroup
    history: list[tuple[int, float, float]]
    converged: bool
    final_infidelity: float


def variational_state_train(
    state_source, n: int, config: TrainConfig, rng=None, state_copies: int = 8
) -> StateTrainResult:
    """Search for the invariance structure of a state source.

    Same loop as the sequence trainer with the reconstruction cost replaced
    by round-trip infidelity on a fresh batch of copies per iteration
    (`state_copies` is the per-iteration copy budget).
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    tri = qft_param_count(n)
    vec = unsquash(rng.uniform(size=tri))
    raw_s = unsquash(rng.uniform(size=n))
    zeros = np.zeros(tri)
    history: list[tuple[int, float, float]] = []
    best: tuple[float, GroupStructure, Subgroup, np.ndarray] | None = None
    iterations = 0

    for it in range(config.max_iters):
        iterations = it + 1
        states = [state_source(rng) for _ in range(state_copies)]
        iter_seed = int(rng.integers(0, 2**63 - 1))
        params = RealParams(squash(vec), zeros)
        qft, perm = QftParams.from_gamma(params.gamma_qft), PermParams(zeros)
        dist = np.zeros(1 << n)
        for psi in states:
            dist += _state_circuit_dist(psi, n, qft, perm)
        dist /= dist.sum()
        theta_star = nearest_valid_pattern(params.gamma_qft)
        perm_star = np.zeros(tri, dtype=np.int64)
        group, hidden, raw_s = _structure_for_theta(dist, theta_star, perm_star, raw_s, config)
        commit = _round_trip_infidelity(states, group, hidden)
        if best is None or commit < best[0]:
            best = (commit, group, hidden, vec.copy())
        if commit <= 1e-12:
            history.append((it, commit, 0.0))
            break

        def cost_at(v: np.ndarray) -> float:
            child = np.random.default_rng(iter_seed)
            return infidelity_cost(
                states, RealParams(squash(v), zeros), GeneratorSwitches(squash(raw_s)),
                child, config,
            )

        base = cost_at(vec)
        grad = finite_diff_gradient(cost_at, vec, config.fd_step)
        grad_norm = float(np.linalg.norm(grad))
        history.append((it, base, grad_norm))
        if grad_norm < config.grad_tol:
            vec = unsquash(rng.uniform(size=tri))
            raw_s = unsquash(rng.uniform(size=n))
            continue
        step = config.beta * grad
        norm = float(np.linalg.norm(step))
        if norm > 0.5 * math.pi:
            step *= 0.5 * math.pi / norm
        vec = vec - step

    assert best is not None
    final_inf, group, hidden, vec = best
    history.append((iterations, final_inf, 0.0))
    return StateTrainResult(
        params=RealParams(squash(vec), zeros),
        group=group,
        hidden=hidden,
        history=history,
        converged=final_inf <= 1e-9,
        final_infidelity=final_inf,
    )
