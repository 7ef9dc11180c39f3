"""Variational search for the hidden-subgroup structure of a sequence.

Binary circuit switches are relaxed to Bernoulli probabilities; generator
switches are relaxed to real values per bit.  Raw optimizer variables live in
R and are squashed through sin^2 before use, so gradients are taken with
respect to unconstrained parameters while every consumed value stays in
[0, 1].  The outer loop is plain finite-difference gradient descent on the
Monte-Carlo reconstruction cost; an inner pretraining loop drives the
generator switches against the congruence residuals of the current output
distribution, with a penalty pulling each switch to an integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .groups import (
    GroupStructure,
    GroupType,
    adjacent_indices,
    cosets,
    decode_group_from_params,
    encode_perm_pattern,
    encode_qft_pattern,
    qft_param_count,
    subgroup_generated,
)
from .message import CompressedMessage
from .sampling import SampleBatch, solve_congruences
from .sim import (
    DENSE_QUBIT_LIMIT,
    Oracle,
    PermParams,
    QftParams,
    exact_output_distribution,
    hsp_circuit_sample,
)

__all__ = [
    "RealParams",
    "GeneratorSwitches",
    "TrainConfig",
    "TrainResult",
    "squash",
    "unsquash",
    "sample_binary_config",
    "nearest_valid_pattern",
    "continuous_generator",
    "rounded_generator",
    "pretrain_cost",
    "encode",
    "decode",
    "reconstruction_cost",
    "expected_cost",
    "finite_diff_gradient",
    "train",
]

_SUPPORT_TOL = 1e-12


def squash(raw):
    """Map unconstrained optimizer values into [0, 1]."""
    return np.sin(np.asarray(raw, dtype=float)) ** 2


def unsquash(value):
    """A raw preimage of a [0, 1] value under sin^2 (principal branch)."""
    return np.arcsin(np.sqrt(np.asarray(value, dtype=float)))


@dataclass(frozen=True)
class RealParams:
    """Relaxed circuit switches, already squashed into [0, 1]."""

    gamma_qft: np.ndarray
    gamma_perm: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.gamma_qft, dtype=float)
        p = np.asarray(self.gamma_perm, dtype=float)
        object.__setattr__(self, "gamma_qft", q)
        object.__setattr__(self, "gamma_perm", p)
        if q.shape != p.shape:
            raise ValueError("switch vectors must have equal length")
        for v in (q, p):
            if v.size and (v.min() < 0 or v.max() > 1):
                raise ValueError("relaxed switches must lie in [0, 1]")

    @property
    def n(self) -> int:
        tri = self.gamma_qft.size
        n = round((1 + math.isqrt(1 + 8 * tri)) / 2)
        return n

    @classmethod
    def exact_for(cls, group: GroupStructure) -> "RealParams":
        return cls(
            encode_qft_pattern(group.group_type.partition).astype(float),
            encode_perm_pattern(group.perm).astype(float),
        )


@dataclass(frozen=True)
class GeneratorSwitches:
    """Per-bit generator switches in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.size and (v.min() < 0 or v.max() > 1):
            raise ValueError("generator switches must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class TrainConfig:
    beta: float = 0.1
    fd_step: float = 0.05
    mc_samples: int = 50
    max_iters: int = 500
    grad_tol: float = 1e-3
    resample_limit: int = 1000
    seed: int = 0
    optimize_perm: bool = False
    pretrain_max_iters: int = 150
    dist_shots: int = 0  # 0: auto (4n) when beyond the dense limit
    dense_limit: int = DENSE_QUBIT_LIMIT

    def __post_init__(self):
        if min(self.beta, self.fd_step) <= 0 or self.grad_tol <= 0:
            raise ValueError("rates, steps and tolerances must be positive")
        if min(self.mc_samples, self.max_iters, self.resample_limit) < 1:
            raise ValueError("counts must be at least 1")


@dataclass
class TrainResult:
    params: RealParams
    switches: GeneratorSwitches
    message: CompressedMessage
    history: list[tuple[int, float, float]]
    converged: bool
    final_cost: float


# --- binary configuration sampling ------------------------------------------


@lru_cache(maxsize=None)
def _pattern_indices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row/column wire index of each flat triangle slot, plus adjacent slots."""
    ks = np.array([k for k in range(n) for _ in range(k + 1, n)], dtype=np.int64)
    js = np.array([j for k in range(n) for j in range(k + 1, n)], dtype=np.int64)
    return ks, js, np.array(adjacent_indices(n), dtype=np.int64)


def _valid_pattern_rows(cands: np.ndarray, n: int) -> np.ndarray:
    """Boolean mask of rows that are exact block patterns of some partition."""
    ks, js, adj = _pattern_indices(n)
    block_id = np.zeros((cands.shape[0], n), dtype=np.int64)
    if n > 1:
        block_id[:, 1:] = np.cumsum(1 - cands[:, adj], axis=1)
    expected = block_id[:, ks] == block_id[:, js]
    return (cands == expected).all(axis=1)


def sample_binary_config(
    params: RealParams, rng, resample_limit: int = 1000
) -> tuple[np.ndarray, np.ndarray]:
    """Bernoulli draw of the binary switches, resampled until the phase
    triangle is a valid block pattern; falls back to the nearest valid
    pattern when the limit is exhausted.  Draws are batched for speed but
    scanned in order, so the accepted draw is the same as attempt-by-attempt
    rejection sampling."""
    tri = params.gamma_qft.size
    n = params.n
    theta_qft = None
    drawn = 0
    while drawn < resample_limit:
        take = min(64, resample_limit - drawn)
        cands = rng.random((take, tri)) < params.gamma_qft
        hits = np.flatnonzero(_valid_pattern_rows(cands, n))
        if hits.size:
            theta_qft = cands[hits[0]].astype(np.int64)
            break
        drawn += take
    if theta_qft is None:
        theta_qft = nearest_valid_pattern(params.gamma_qft)
    theta_perm = (rng.random(tri) < params.gamma_perm).astype(np.int64)
    return theta_qft, theta_perm


def nearest_valid_pattern(gamma_qft) -> np.ndarray:
    """Valid block pattern from rounding the nearest-neighbour switches."""
    gamma_qft = np.asarray(gamma_qft, dtype=float)
    tri = gamma_qft.size
    n = round((1 + math.isqrt(1 + 8 * tri)) / 2)
    partition, size = [], 1
    for idx in adjacent_indices(n):
        if gamma_qft[idx] >= 0.5:
            size += 1
        else:
            partition.append(size)
            size = 1
    partition.append(size)
    return encode_qft_pattern(tuple(partition), n)


# --- generator switches ------------------------------------------------------


def continuous_generator(switches: GeneratorSwitches, group_type: GroupType) -> list[float]:
    """Per-block real value of the generator string, MSB-first within blocks."""
    if switches.n != group_type.n:
        raise ValueError("switch count must equal n")
    vals = []
    for start, m in zip(group_type.block_starts, group_type.partition):
        block = switches.values[start : start + m]
        vals.append(float(block @ (2.0 ** np.arange(m - 1, -1, -1))))
    return vals


def rounded_generator(switches: GeneratorSwitches, group: GroupStructure) -> int:
    """Nearest integer per block, assembled into a group element."""
    vals = continuous_generator(switches, group.group_type)
    ints = [int(math.floor(v + 0.5)) % (1 << m) for v, m in zip(vals, group.group_type.partition)]
    return group.element_from_blocks(ints)


class _PretrainProblem:
    """Vectorized congruence-residual cost for one (distribution, group) pair."""

    def __init__(self, dist: np.ndarray, group: GroupStructure):
        self.group = group
        support = np.flatnonzero(dist > _SUPPORT_TOL)
        self.support = support
        self.probs = dist[support] / dist[support].sum()
        big_m = group.char_modulus
        self.big_m = big_m
        part = group.group_type.partition
        jblocks = np.stack(
            [np.asarray(v) for v in group.block_values(support.astype(np.int64))], axis=-1
        ).reshape(support.size, len(part))
        weights = np.array([big_m >> m for m in part], dtype=float)
        self.coeff = jblocks * weights  # (support, q)
        # S -> per-block continuous value
        n = group.n
        basis = np.zeros((len(part), n))
        for t, (start, m) in enumerate(zip(group.group_type.block_starts, part)):
            basis[t, start : start + m] = 2.0 ** np.arange(m - 1, -1, -1)
        self.block_basis = basis

    def residual_term(self, switch_values: np.ndarray) -> float:
        s_blocks = self.block_basis @ switch_values
        r = (self.coeff @ s_blocks) % self.big_m
        folded = np.minimum(r, self.big_m - r) / self.big_m
        return float(self.probs @ folded)

    def cost(self, switch_values: np.ndarray) -> float:
        penalty = float(np.sum(np.sin(np.pi * switch_values) ** 2))
        return self.residual_term(switch_values) + penalty

    def cost_batch(self, switch_columns: np.ndarray) -> np.ndarray:
        """Costs of many switch vectors at once; columns are candidates."""
        s_blocks = self.block_basis @ switch_columns
        r = (self.coeff @ s_blocks) % self.big_m
        folded = np.minimum(r, self.big_m - r) / self.big_m
        penalty = np.sum(np.sin(np.pi * switch_columns) ** 2, axis=0)
        return self.probs @ folded + penalty


def pretrain_cost(dist, switches: GeneratorSwitches, group: GroupStructure) -> float:
    """Congruence residual of the continuous generator plus integrality penalty.

    The residual of a sample j is the distance of sum_t j_t * s_t * (M/2^{m_t})
    from the nearest multiple of M, normalized to [0, 1/2]; it vanishes exactly
    when the congruence holds.
    """
    dist = np.asarray(dist, dtype=float)
    if not dist.size or dist.sum() <= 0:
        raise ValueError("empty distribution")
    if dist.size != group.size:
        raise ValueError("distribution length must be 2^n")
    return _PretrainProblem(dist, group).cost(switches.values)


def _pretrain_descend(
    problem: _PretrainProblem, raw: np.ndarray, config: TrainConfig
) -> tuple[np.ndarray, bool]:
    raw = raw.copy()
    n = raw.size
    h = config.fd_step
    for _ in range(config.pretrain_max_iters):
        # All central-difference probes evaluated in one batched call.
        probes = np.repeat(raw[:, None], 2 * n, axis=1)
        probes[np.arange(n), np.arange(n)] += h
        probes[np.arange(n), n + np.arange(n)] -= h
        costs = problem.cost_batch(squash(probes))
        grad = (costs[:n] - costs[n:]) / (2 * h)
        if float(np.linalg.norm(grad)) < config.grad_tol:
            return raw, True
        raw = raw - config.beta * grad
    return raw, False


# --- encoder / decoder -------------------------------------------------------


def _relaxed_circuit(params: RealParams) -> tuple[QftParams, PermParams]:
    return QftParams.from_gamma(params.gamma_qft), PermParams(params.gamma_perm)


def _output_distribution(oracle: Oracle, params: RealParams, config: TrainConfig, rng) -> np.ndarray:
    qft, perm = _relaxed_circuit(params)
    if oracle.n + oracle.m <= config.dense_limit:
        return exact_output_distribution(oracle, qft, perm)
    shots = config.dist_shots or 4 * oracle.n
    dist = np.zeros(1 << oracle.n)
    for _ in range(shots):
        dist[hsp_circuit_sample(oracle, qft, perm, rng)] += 1
    return dist / shots


def _nudged_nonzero(switch_values: np.ndarray, group: GroupStructure) -> int:
    """Smallest-commitment nonzero generator: set the strongest switch bit."""
    bit = int(np.argmax(switch_values))
    ints = [0] * group.group_type.num_blocks
    for t, (start, m) in enumerate(
        zip(group.group_type.block_starts, group.group_type.partition)
    ):
        if start <= bit < start + m:
            ints[t] = 1 << (m - 1 - (bit - start))
    return group.element_from_blocks(ints)


def _pack_message(
    oracle: Oracle,
    theta_qft: np.ndarray,
    theta_perm: np.ndarray,
    group: GroupStructure,
    s: int,
    pre_ok: bool,
) -> CompressedMessage:
    sub = subgroup_generated(group, s)
    reps = cosets(group, sub)
    values = tuple((c, oracle.value(c)) for c in reps)
    return CompressedMessage(
        n=oracle.n,
        m=oracle.m,
        theta_qft=tuple(int(b) for b in theta_qft),
        theta_perm=tuple(int(b) for b in theta_perm),
        generator=s,
        coset_values=values,
        converged=pre_ok,
    )


def _message_for_theta(
    oracle: Oracle,
    dist: np.ndarray,
    theta_qft: np.ndarray,
    theta_perm: np.ndarray,
    raw_switches: np.ndarray,
    config: TrainConfig,
) -> tuple[CompressedMessage, np.ndarray]:
    decoded = decode_group_from_params(theta_qft, theta_perm)
    group = GroupStructure(*decoded)
    problem = _PretrainProblem(dist, group)
    raw_out, pre_ok = _pretrain_descend(problem, raw_switches, config)
    s = rounded_generator(GeneratorSwitches(squash(raw_out)), group)
    if s == 0:
        # The encoder must commit to a nontrivial generator: prefer the
        # tau-minimal nonzero congruence solution, else the strongest switch.
        support = tuple(int(j) for j in problem.support)
        s = solve_congruences(group, SampleBatch(group, support))
        if s == 0:
            s = _nudged_nonzero(squash(raw_out), group)
    return _pack_message(oracle, theta_qft, theta_perm, group, s, pre_ok), raw_out


def _theta_distribution(
    oracle: Oracle, theta_qft: np.ndarray, theta_perm: np.ndarray, config: TrainConfig
) -> np.ndarray:
    qft = QftParams.from_gamma(theta_qft.astype(float))
    perm = PermParams(theta_perm.astype(float))
    if oracle.n + oracle.m <= config.dense_limit:
        return exact_output_distribution(oracle, qft, perm)
    shots = config.dist_shots or 4 * oracle.n
    rng = np.random.default_rng(config.seed)
    dist = np.zeros(1 << oracle.n)
    for _ in range(shots):
        dist[hsp_circuit_sample(oracle, qft, perm, rng)] += 1
    return dist / shots


def _commit_candidate(
    oracle: Oracle,
    theta_qft: np.ndarray,
    theta_perm: np.ndarray,
    raw_switches: np.ndarray,
    config: TrainConfig,
) -> tuple[float, CompressedMessage]:
    """Deterministic evaluation of one binary configuration.

    Runs the candidate's own circuit for its output distribution, builds the
    message from the pretrained switches, and falls back to the congruence
    solution over the support when that message does not reconstruct.
    """
    dist = _theta_distribution(oracle, theta_qft, theta_perm, config)
    msg, _ = _message_for_theta(oracle, dist, theta_qft, theta_perm, raw_switches, config)
    cost = reconstruction_cost(oracle.table, decode(msg))
    if cost > 0.0:
        group = msg.group
        support = tuple(int(j) for j in np.flatnonzero(dist > _SUPPORT_TOL))
        alt = solve_congruences(group, SampleBatch(group, support))
        if alt not in (0, msg.generator):
            alt_msg = _pack_message(oracle, theta_qft, theta_perm, group, alt, msg.converged)
            alt_cost = reconstruction_cost(oracle.table, decode(alt_msg))
            if alt_cost < cost:
                return alt_cost, alt_msg
    return cost, msg


def encode(
    oracle: Oracle,
    params: RealParams,
    switches: GeneratorSwitches,
    config: TrainConfig,
    rng,
    fixed_theta: tuple[np.ndarray, np.ndarray] | None = None,
) -> CompressedMessage:
    """One encoder pass: sample switches, pretrain the generator, pack values.

    Oracle value queries are exactly one per coset representative.  When the
    pretrained switches round to the zero string, the tau-minimal nonzero
    solution of the sampled congruences is substituted, so a trivial
    generator is only emitted when the congruences force it.
    """
    dist = _output_distribution(oracle, params, config, rng)
    if fixed_theta is None:
        theta_qft, theta_perm = sample_binary_config(params, rng, config.resample_limit)
    else:
        theta_qft, theta_perm = (np.asarray(t, dtype=np.int64) for t in fixed_theta)
    msg, _ = _message_for_theta(
        oracle, dist, theta_qft, theta_perm, unsquash(switches.values), config
    )
    return msg


def decode(msg: CompressedMessage) -> np.ndarray:
    """Rebuild the full sequence: position tau(c*h) holds the value at c."""
    group = msg.group
    sub = msg.subgroup
    out = np.zeros(group.size, dtype=np.int64)
    filled = np.zeros(group.size, dtype=bool)
    helems = np.asarray(sub.elements, dtype=np.int64)
    for c, v in msg.coset_values:
        slots = group.op(np.int64(c), helems)
        if filled[slots].any():
            raise ValueError("malformed message: overlapping cosets")
        out[slots] = v
        filled[slots] = True
    if not filled.all():
        raise ValueError("malformed message: positions left unwritten")
    return out


def reconstruction_cost(original, reconstructed) -> float:
    """Squared Euclidean distance between sequences."""
    a = np.asarray(original, dtype=np.int64)
    b = np.asarray(reconstructed, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("sequences must have equal length")
    return float(np.sum((a - b) ** 2))


def _expected_cost_detail(
    oracle: Oracle,
    params: RealParams,
    switches: GeneratorSwitches,
    config: TrainConfig,
    rng,
) -> tuple[float, dict[bytes, tuple[float, np.ndarray, np.ndarray]]]:
    dist = _output_distribution(oracle, params, config, rng)
    raw_switches = unsquash(switches.values)
    seeds = rng.integers(0, 2**63 - 1, size=config.mc_samples)
    cache: dict[bytes, tuple[float, np.ndarray, np.ndarray]] = {}
    total = 0.0
    for seed in seeds:
        child = np.random.default_rng(int(seed))
        theta_qft, theta_perm = sample_binary_config(params, child, config.resample_limit)
        key = theta_qft.tobytes() + theta_perm.tobytes()
        if key not in cache:
            msg, _ = _message_for_theta(
                oracle, dist, theta_qft, theta_perm, raw_switches, config
            )
            cost = reconstruction_cost(oracle.table, decode(msg))
            cache[key] = (cost, theta_qft, theta_perm)
        total += cache[key][0]
    return total / config.mc_samples, cache


def expected_cost(
    oracle: Oracle,
    params: RealParams,
    switches: GeneratorSwitches,
    config: TrainConfig,
    rng,
) -> float:
    """Monte-Carlo estimate of the reconstruction cost over switch draws.

    The relaxed output distribution is computed once; sampled binary
    configurations repeat, so per-configuration results are cached within
    the call (the estimate is unchanged, evaluation is just cheaper).
    """
    return _expected_cost_detail(oracle, params, switches, config, rng)[0]


def finite_diff_gradient(cost_fn, x, h: float, bounds: tuple[float, float] | None = None):
    """Central differences per coordinate; probes clipped into bounds if given."""
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        hi, lo = x.copy(), x.copy()
        hi[i] += h
        lo[i] -= h
        if bounds is not None:
            hi[i] = min(hi[i], bounds[1])
            lo[i] = max(lo[i], bounds[0])
        denom = hi[i] - lo[i]
        if denom == 0:
            grad[i] = 0.0
            continue
        grad[i] = (cost_fn(hi) - cost_fn(lo)) / denom
    return grad


# --- the training loop -------------------------------------------------------


def train(oracle: Oracle, config: TrainConfig, rng=None) -> TrainResult:
    """Gradient descent on the expected reconstruction cost.

    Every iteration also evaluates the deterministic commit: the valid binary
    pattern nearest the trained switches (plus every pattern sampled in the
    Monte-Carlo estimate) with the pretrained generator rounded to integers.
    Training stops as soon as a commit reconstructs exactly; plateaus at
    positive cost restart from a fresh seeded draw instead of stalling on the
    saturated sin^2 landscape.  The last history row is the committed cost,
    which is where the nearest-integer drop shows up.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n = oracle.n
    tri = qft_param_count(n)
    raw_qft = unsquash(rng.uniform(size=tri))
    raw_perm = unsquash(rng.uniform(size=tri)) if config.optimize_perm else np.zeros(tri)
    raw_s = unsquash(rng.uniform(size=n))

    def params_of(vec: np.ndarray) -> RealParams:
        if config.optimize_perm:
            return RealParams(squash(vec[:tri]), squash(vec[tri:]))
        return RealParams(squash(vec), np.zeros(tri))

    vec = np.concatenate([raw_qft, raw_perm]) if config.optimize_perm else raw_qft
    history: list[tuple[int, float, float]] = []
    best: tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None
    iterations = 0

    for it in range(config.max_iters):
        iterations = it + 1
        iter_seed = int(rng.integers(0, 2**63 - 1))
        params = params_of(vec)
        switches = GeneratorSwitches(squash(raw_s))

        base, detail = _expected_cost_detail(
            oracle, params, switches, config, np.random.default_rng(iter_seed)
        )
        # Deterministic commit candidates: nearest pattern plus everything
        # the estimate sampled, each scored by its own circuit.
        dist = _output_distribution(oracle, params, config, np.random.default_rng(iter_seed))
        theta_star = nearest_valid_pattern(params.gamma_qft)
        perm_star = (params.gamma_perm >= 0.5).astype(np.int64)
        raw_s, _ = _pretrain_descend(
            _PretrainProblem(dist, GroupStructure(*decode_group_from_params(theta_star, perm_star))),
            raw_s,
            config,
        )
        candidates = {theta_star.tobytes() + perm_star.tobytes(): (theta_star, perm_star)}
        for cost, tq, tp in detail.values():
            candidates.setdefault(tq.tobytes() + tp.tobytes(), (tq, tp))
        commit_cost, commit_theta = math.inf, (theta_star, perm_star)
        for tq, tp in candidates.values():
            cost, _ = _commit_candidate(oracle, tq, tp, raw_s, config)
            if cost < commit_cost:
                commit_cost, commit_theta = cost, (tq, tp)
        if best is None or commit_cost < best[0]:
            best = (commit_cost, vec.copy(), raw_s.copy(), *commit_theta)

        if commit_cost == 0.0:
            history.append((it, base, 0.0))
            break

        def cost_at(v: np.ndarray) -> float:
            # Common random numbers across the base point and all probes.
            return expected_cost(
                oracle, params_of(v), switches, config, np.random.default_rng(iter_seed)
            )

        grad = finite_diff_gradient(cost_at, vec, config.fd_step)
        grad_norm = float(np.linalg.norm(grad))
        history.append((it, base, grad_norm))
        if grad_norm < config.grad_tol:
            # Flat at positive cost: the sin^2 squashing saturates near
            # binary settings, so restart from a fresh seeded draw.
            vec = unsquash(rng.uniform(size=vec.size))
            raw_s = unsquash(rng.uniform(size=n))
            continue
        step = config.beta * grad
        norm = float(np.linalg.norm(step))
        if norm > 0.5 * math.pi:
            step *= 0.5 * math.pi / norm
        vec = vec - step

    assert best is not None
    _, vec, raw_s, theta_best, perm_best = best
    params = params_of(vec)
    switches = GeneratorSwitches(squash(raw_s))
    final_cost, message = _commit_candidate(oracle, theta_best, perm_best, raw_s, config)
    history.append((iterations, final_cost, 0.0))
    converged = final_cost == 0.0
    if not converged:
        message = replace(message, converged=False)
    return TrainResult(
        params=params,
        switches=switches,
        message=message,
        history=history,
        converged=converged,
        final_cost=final_cost,
    )
