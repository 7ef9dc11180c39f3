import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from hspc import groups as gr
from hspc import sim

from conftest import canonical_groups, compositions, cyclic_subgroups, hiding_oracle


def basis_state(n, index):
    state = sim.StateVector(n)
    state.amps[:] = 0
    state.amps[index] = 1.0
    return state


class TestGates:
    def test_hadamard(self):
        st = sim.StateVector(1)
        sim.apply_hadamard(st, 0)
        assert np.allclose(st.amps, [1 / math.sqrt(2), 1 / math.sqrt(2)])
        sim.apply_hadamard(st, 0)
        assert np.allclose(st.amps, [1, 0])
        st3 = sim.StateVector(3)
        for q in range(3):
            sim.apply_hadamard(st3, q)
        assert np.allclose(st3.amps, np.full(8, 1 / math.sqrt(8)))
        with pytest.raises(IndexError):
            sim.apply_hadamard(st3, 3)

    def test_controlled_phase_pow(self):
        st = basis_state(2, 3)
        sim.apply_controlled_phase_pow(st, 0, 1, 2, 0.0)
        assert np.allclose(st.amps[3], 1.0)
        sim.apply_controlled_phase_pow(st, 0, 1, 2, 1.0)
        assert np.allclose(st.amps[3], 1j)
        st = basis_state(2, 3)
        sim.apply_controlled_phase_pow(st, 0, 1, 2, 0.5)
        assert np.allclose(st.amps[3], np.exp(1j * np.pi / 4))
        # only the |11> component moves
        st = basis_state(2, 1)
        sim.apply_controlled_phase_pow(st, 0, 1, 3, 0.7)
        assert np.allclose(st.amps[1], 1.0)
        with pytest.raises(ValueError):
            sim.apply_controlled_phase_pow(st, 0, 1, 2, 1.5)
        with pytest.raises(ValueError):
            sim.apply_controlled_phase_pow(st, 1, 1, 2, 0.5)

    def test_swap_pow(self):
        st = basis_state(2, 1)  # |01>
        sim.apply_swap_pow(st, 0, 1, 0.0)
        assert np.allclose(st.amps[1], 1.0)
        sim.apply_swap_pow(st, 0, 1, 1.0)
        assert np.allclose(st.amps[2], 1.0) and abs(st.amps[1]) < 1e-12
        st = basis_state(2, 1)
        sim.apply_swap_pow(st, 0, 1, 0.5)
        assert np.allclose(st.amps[1], 0.5 * (1 + 1j))
        assert np.allclose(st.amps[2], 0.5 * (1 - 1j))
        with pytest.raises(ValueError):
            sim.apply_swap_pow(st, 0, 1, -0.2)

    @given(hst.floats(0, 1), hst.floats(0, 1))
    @settings(max_examples=30, deadline=None)
    def test_fractional_gates_unitary(self, gamma, lam):
        rng = np.random.default_rng(1)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        st = sim.StateVector(3, amps.copy())
        sim.apply_controlled_phase_pow(st, 0, 2, 2, gamma)
        sim.apply_swap_pow(st, 1, 2, lam)
        assert abs(st.norm() - 1.0) < 1e-9


class TestQftCircuit:
    def test_z8_matrix(self):
        mat = sim.qft_theta_matrix(sim.QftParams.exact_for((3,)))
        jk = np.arange(8)
        want = np.exp(2j * np.pi * np.outer(jk, jk) / 8) / math.sqrt(8)
        assert np.abs(mat - want).max() < 1e-9

    def test_all_zero_is_hadamards(self):
        mat = sim.qft_theta_matrix(sim.QftParams.exact_for((1, 1, 1)))
        h1 = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        want = np.kron(np.kron(h1, h1), h1)
        assert np.abs(mat - want).max() < 1e-9

    def test_z4xz2_is_tensor_product(self):
        mat = sim.qft_theta_matrix(sim.QftParams.exact_for((2, 1)))
        jk4 = np.arange(4)
        dft4 = np.exp(2j * np.pi * np.outer(jk4, jk4) / 4) / 2
        jk2 = np.arange(2)
        dft2 = np.exp(2j * np.pi * np.outer(jk2, jk2) / 2) / math.sqrt(2)
        assert np.abs(mat - np.kron(dft4, dft2)).max() < 1e-9

    @pytest.mark.parametrize("n", range(1, 5))
    def test_every_valid_pattern_matches_group_dft(self, n):
        for part in compositions(n):
            group = gr.GroupStructure.canonical(*part)
            mat = sim.qft_theta_matrix(sim.QftParams.exact_for(part))
            assert np.abs(mat - gr.group_dft_matrix(group)).max() < 1e-9

    def test_unitarity_random_real(self):
        rng = np.random.default_rng(2)
        for n in range(2, 6):
            tri = gr.qft_param_count(n)
            for _ in range(20):
                qp = sim.QftParams(rng.uniform(size=tri), rng.uniform(size=n - 1))
                mat = sim.qft_theta_matrix(qp)
                assert np.abs(mat.conj().T @ mat - np.eye(1 << n)).max() < 1e-9


class TestWCircuit:
    def test_zero_is_identity(self):
        mat = sim.w_theta_matrix(sim.PermParams.identity(4))
        assert np.abs(mat - np.eye(16)).max() < 1e-12

    def test_paper_permutation(self):
        lam = np.zeros(6)
        lam[:3] = [0, 1, 1]
        lam[3:5] = [1, 1]
        lam[5] = 1
        mat = sim.w_theta_matrix(sim.PermParams(lam))
        perm = gr.perm_from_swap_pattern(lam.astype(int))
        want = np.zeros((16, 16))
        for i in range(16):
            want[perm.apply_index(i, 4), i] = 1
        assert np.abs(mat - want).max() < 1e-9

    def test_random_binary_is_permutation_matrix(self):
        rng = np.random.default_rng(3)
        for n in (3, 4, 5):
            for _ in range(5):
                lam = rng.integers(0, 2, size=gr.qft_param_count(n)).astype(float)
                mat = sim.w_theta_matrix(sim.PermParams(lam))
                assert np.abs(np.abs(mat).sum(axis=0) - 1).max() < 1e-9
                assert np.abs(np.abs(mat).sum(axis=1) - 1).max() < 1e-9
                assert np.abs(np.abs(mat) ** 2 - np.abs(mat)).max() < 1e-9

    def test_dagger(self):
        rng = np.random.default_rng(4)
        lam = rng.uniform(size=6)
        mat = sim.w_theta_matrix(sim.PermParams(lam))
        dag = sim.w_theta_matrix(sim.PermParams(lam), dagger=True)
        assert np.abs(dag - mat.conj().T).max() < 1e-12


class TestOracle:
    def test_identity_for_constant_zero(self):
        oracle = sim.Oracle(2, 2, [0, 0, 0, 0])
        rng = np.random.default_rng(0)
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        amps /= np.linalg.norm(amps)
        st = sim.StateVector(4, amps.copy())
        sim.apply_oracle(oracle, st)
        assert np.allclose(st.amps, amps)

    def test_basis_action_and_involution(self):
        oracle = sim.Oracle(2, 2, [1, 3, 0, 2])
        for i in range(4):
            st = basis_state(4, i << 2)
            sim.apply_oracle(oracle, st)
            assert abs(st.amps[(i << 2) | oracle.table[i]] - 1) < 1e-12
            sim.apply_oracle(oracle, st)
            assert abs(st.amps[i << 2] - 1) < 1e-12

    def test_size_mismatch(self):
        oracle = sim.Oracle(2, 2, [0, 1, 2, 3])
        with pytest.raises(ValueError):
            sim.apply_oracle(oracle, sim.StateVector(3))

    def test_counting(self):
        counter = sim.QueryCounter()
        oracle = sim.Oracle(2, 2, [0, 1, 2, 3], counter)
        oracle.value(2)
        sim.apply_oracle(oracle, sim.StateVector(4))
        assert counter.count == 2


class TestMeasurement:
    def test_all_zero_state(self):
        st = sim.StateVector(3)
        bits, post = sim.measure_register(st, [0, 1, 2], np.random.default_rng(0))
        assert bits == (0, 0, 0)
        assert abs(post.norm() - 1) < 1e-12

    def test_uniform_statistics(self):
        rng = np.random.default_rng(5)
        st = sim.StateVector(3)
        for q in range(3):
            sim.apply_hadamard(st, q)
        counts = np.zeros(8)
        for _ in range(10_000):
            bits, _ = sim.measure_register(st.copy(), [0, 1, 2], rng)
            counts[bits[0] * 4 + bits[1] * 2 + bits[2]] += 1
        freqs = counts / 10_000
        assert np.abs(freqs - 0.125).max() < 0.02

    def test_collapse_and_norm(self):
        rng = np.random.default_rng(6)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        st = sim.StateVector(3, amps)
        bits, post = sim.measure_register(st, [1], rng)
        assert abs(post.norm() - 1) < 1e-9
        shaped = post.amps.reshape(2, 2, 2)
        assert np.abs(shaped[:, 1 - bits[0], :]).max() < 1e-12

    def test_empty_register_rejected(self):
        with pytest.raises(ValueError):
            sim.measure_register(sim.StateVector(2), [], np.random.default_rng(0))


def joint_distribution(oracle, qft, perm):
    """Register-1 distribution from the fully deferred joint simulation."""
    n, m = oracle.n, oracle.m
    st = sim.StateVector(n + m)
    for q in range(n):
        sim.apply_hadamard(st, q)
    sim.apply_oracle(oracle, st)
    wires = list(range(n))
    sim.apply_w_theta(st, perm, wires)
    sim.apply_qft_theta(st, qft, wires)
    sim.apply_w_theta(st, perm, wires, dagger=True)
    probs = st.probabilities().reshape(1 << n, 1 << m)
    return probs.sum(axis=1)


class TestHspCircuit:
    def test_simon_exact_samples_in_hperp(self):
        group = gr.GroupStructure.canonical(1, 1, 1)
        oracle = sim.Oracle(3, 2, [0, 0, 1, 1, 2, 2, 3, 3])
        qft, perm = sim.exact_circuit_params(group)
        rng = np.random.default_rng(7)
        s = gr.tau("001")
        for _ in range(200):
            j = sim.hsp_circuit_sample(oracle, qft, perm, rng)
            assert bin(j & s).count("1") % 2 == 0

    def test_constant_oracle_gamma_zero(self):
        oracle = sim.Oracle(3, 1, [0] * 8)
        qft = sim.QftParams.exact_for((1, 1, 1))
        perm = sim.PermParams.identity(3)
        dist = sim.exact_output_distribution(oracle, qft, perm)
        assert dist[0] > 1 - 1e-9

    def test_period_two_z8(self):
        group = gr.GroupStructure.canonical(3)
        hidden = gr.subgroup_generated(group, 2)  # period-2 pattern a b a b ...
        oracle = hiding_oracle(group, hidden)
        qft, perm = sim.exact_circuit_params(group)
        rng = np.random.default_rng(8)
        seen = {sim.hsp_circuit_sample(oracle, qft, perm, rng) for _ in range(100)}
        assert seen <= {0, 4}
        assert seen == set(gr.orthogonal_group(group, hidden).elements)

    def test_exact_distribution_matches_sampling(self):
        group = gr.GroupStructure.canonical(2, 1)
        hidden = gr.subgroup_generated(group, 5)
        oracle = hiding_oracle(group, hidden)
        qft, perm = sim.exact_circuit_params(group)
        dist = sim.exact_output_distribution(oracle, qft, perm)
        assert abs(dist.sum() - 1) < 1e-9
        rng = np.random.default_rng(9)
        counts = np.zeros(8)
        for _ in range(10_000):
            counts[sim.hsp_circuit_sample(oracle, qft, perm, rng)] += 1
        tv = 0.5 * np.abs(counts / 10_000 - dist).sum()
        assert tv <= 0.05

    def test_exact_distribution_uniform_on_hperp(self):
        for n in (2, 3):
            for group in canonical_groups(n):
                for hidden in cyclic_subgroups(group):
                    oracle = hiding_oracle(group, hidden)
                    qft, perm = sim.exact_circuit_params(group)
                    dist = sim.exact_output_distribution(oracle, qft, perm)
                    perp = gr.orthogonal_group(group, hidden)
                    want = np.zeros(group.size)
                    want[list(perp.elements)] = 1 / perp.order
                    assert np.abs(dist - want).max() < 1e-9

    def test_deferred_measurement_equivalence(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            n = 3
            group = gr.GroupStructure.canonical(2, 1)
            hidden = gr.subgroup_generated(group, int(rng.integers(0, 8)))
            oracle = hiding_oracle(group, hidden)
            tri = gr.qft_param_count(n)
            qft = sim.QftParams(rng.uniform(size=tri), rng.uniform(size=n - 1))
            perm = sim.PermParams(rng.uniform(size=tri))
            expected = sim.exact_output_distribution(oracle, qft, perm)
            joint = joint_distribution(oracle, qft, perm)
            assert np.abs(expected - joint).max() < 1e-9

    def test_deferred_measurement_sampling(self):
        group = gr.GroupStructure.canonical(1, 1, 1)
        oracle = sim.Oracle(3, 2, [0, 0, 1, 1, 2, 2, 3, 3])
        qft, perm = sim.exact_circuit_params(group)
        joint = joint_distribution(oracle, qft, perm)
        rng = np.random.default_rng(11)
        counts = np.zeros(8)
        shots = 10_000
        for _ in range(shots):
            counts[sim.hsp_circuit_sample(oracle, qft, perm, rng)] += 1
        tv = 0.5 * np.abs(counts / shots - joint).sum()
        assert tv <= 0.05

    def test_composed_circuit_unitarity(self):
        rng = np.random.default_rng(12)
        for n in range(2, 6):
            tri = gr.qft_param_count(n)
            for _ in range(10):
                qft = sim.QftParams(rng.uniform(size=tri), rng.uniform(size=n - 1))
                perm = sim.PermParams(rng.uniform(size=tri))
                mat = (
                    sim.w_theta_matrix(perm, dagger=True)
                    @ sim.qft_theta_matrix(qft)
                    @ sim.w_theta_matrix(perm)
                )
                assert np.abs(mat.conj().T @ mat - np.eye(1 << n)).max() < 1e-9

    def test_size_limit(self):
        with pytest.raises(sim.SimulationSizeError):
            sim.StateVector(25)
        big = sim.Oracle(20, 8, np.zeros(1 << 20, dtype=int))
        with pytest.raises(sim.SimulationSizeError):
            sim.exact_output_distribution(
                big, sim.QftParams.exact_for((20,)), sim.PermParams.identity(20)
            )
