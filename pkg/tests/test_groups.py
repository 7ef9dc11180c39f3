import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from hspc import groups as gr

from conftest import canonical_groups, compositions, cyclic_subgroups


class TestTau:
    def test_paper_values(self):
        assert gr.tau("110") == 6
        assert gr.tau("010") == 2
        assert gr.tau("0000") == 0

    def test_inverse_by_division(self):
        # independent binary expansion
        def expand(i, n):
            digits = []
            for _ in range(n):
                digits.append(i % 2)
                i //= 2
            return "".join(str(d) for d in reversed(digits))

        assert gr.tau_inv(5, 3) == expand(5, 3) == "101"
        for i in range(16):
            assert gr.tau_inv(i, 4) == expand(i, 4)

    @given(hst.integers(1, 10), hst.data())
    def test_round_trip(self, n, data):
        i = data.draw(hst.integers(0, (1 << n) - 1))
        assert gr.tau(gr.tau_inv(i, n)) == i

    def test_range_errors(self):
        with pytest.raises(ValueError):
            gr.tau_inv(8, 3)
        with pytest.raises(ValueError):
            gr.tau("10x")


class TestGroupOp:
    def test_paper_examples(self):
        z2c = gr.GroupStructure.canonical(1, 1, 1)
        z8 = gr.GroupStructure.canonical(3)
        z4z2 = gr.GroupStructure.canonical(2, 1)
        assert z2c.op(gr.tau("011"), gr.tau("101")) == gr.tau("110")
        assert z8.op(gr.tau("010"), gr.tau("011")) == gr.tau("101")
        # Append[ab + xy mod 4, c xor z] evaluated directly
        assert z4z2.op(gr.tau("011"), gr.tau("101")) == gr.tau("110")

    def test_length_mismatch(self):
        z8 = gr.GroupStructure.canonical(3)
        with pytest.raises((ValueError, IndexError)):
            z8.op(9, 1)
        with pytest.raises(ValueError):
            gr.GroupStructure(gr.GroupType((2,)), gr.BitPermutation((0, 1, 2)))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_axioms_exhaustive(self, n):
        """Associativity, identity, inverses, commutativity from the table."""
        for group in canonical_groups(n):
            table = group.op_table.astype(np.int32)
            size = group.size
            assert np.array_equal(table[0], np.arange(size))  # identity
            assert np.array_equal(table, table.T)  # commutative
            assert all((table[x] == 0).any() for x in range(size))  # inverses
            # (a*b)*c over all triples as one gather on each side
            assert np.array_equal(table[table], table[:, table])

    def test_permuted_axioms(self):
        rng = np.random.default_rng(0)
        for n in (3, 4, 5):
            for _ in range(4):
                part = compositions(n)[rng.integers(len(compositions(n)))]
                perm = gr.BitPermutation(tuple(rng.permutation(n)))
                group = gr.GroupStructure(gr.GroupType(part), perm)
                table = group.op_table
                assert np.array_equal(table[0], np.arange(group.size))
                assert np.array_equal(table, table.T)

    @pytest.mark.parametrize("n", range(2, 6))
    def test_conjugation_identity(self, n):
        """Permuted op is the canonical op conjugated by the digit map."""
        rng = np.random.default_rng(n)
        xs = np.arange(1 << n, dtype=np.int64)
        for part in compositions(n):
            for _ in range(3):
                perm = gr.BitPermutation(tuple(rng.permutation(n)))
                permuted = gr.GroupStructure(gr.GroupType(part), perm)
                canon = gr.GroupStructure.canonical(*part)
                a, b = np.meshgrid(xs, xs, indexing="ij")
                lhs = permuted.op(a, b)
                rhs = perm.inverse().apply_index(canon.op(perm.apply_index(a), perm.apply_index(b)))
                assert np.array_equal(lhs, rhs)


class TestSubgroupsAndCosets:
    def test_generated_examples(self):
        z8 = gr.GroupStructure.canonical(3)
        assert gr.subgroup_generated(z8, gr.tau("100")).elements == (0, 4)
        assert gr.subgroup_generated(z8, gr.tau("010")).elements == (0, 2, 4, 6)
        anyg = gr.GroupStructure.canonical(2, 2)
        assert gr.subgroup_generated(anyg, 0).elements == (0,)

    def test_cosets_examples(self):
        z8 = gr.GroupStructure.canonical(3)
        h = gr.subgroup_generated(z8, 4)
        assert gr.cosets(z8, h) == [0, 1, 2, 3]
        full = gr.subgroup_generated(z8, 1)
        assert gr.cosets(z8, full) == [0]
        trivial = gr.subgroup_generated(z8, 0)
        assert gr.cosets(z8, trivial) == list(range(8))

    def test_coset_counting(self):
        for n in range(1, 6):
            for group in canonical_groups(n):
                for sub in cyclic_subgroups(group):
                    reps = gr.cosets(group, sub)
                    assert len(reps) * sub.order == group.size

    def test_not_a_subgroup_rejected(self):
        z8 = gr.GroupStructure.canonical(3)
        bad = gr.Subgroup(z8, (0, 1))  # {0,1} not closed under +1 mod 8
        with pytest.raises(ValueError):
            gr.cosets(z8, bad)

    def test_mod_h(self):
        z2c = gr.GroupStructure.canonical(1, 1, 1)
        h = gr.subgroup_generated(z2c, 1)
        assert gr.mod_h(z2c, h, gr.tau("011")) == gr.tau("010")
        z8 = gr.GroupStructure.canonical(3)
        h8 = gr.subgroup_generated(z8, 4)
        assert gr.mod_h(z8, h8, gr.tau("101")) == gr.tau("001")
        assert gr.mod_h(z8, h8, 0) == 0
        for i in range(8):
            m = gr.mod_h(z8, h8, i)
            assert gr.mod_h(z8, h8, m) == m


def _orthogonal_brute(group, sub):
    """Numeric character evaluation, independent of the integer-exponent path."""
    out = []
    for j in range(group.size):
        ok = True
        for h in sub.elements:
            chi = 1.0 + 0j
            vj = group.block_values(j)
            vh = group.block_values(h)
            for x, y, m in zip(vj, vh, group.group_type.partition):
                chi *= np.exp(2j * np.pi * x * y / (1 << m))
            if abs(chi - 1) > 1e-9:
                ok = False
                break
        if ok:
            out.append(j)
    return tuple(out)


class TestOrthogonalGroup:
    def test_examples(self):
        z8 = gr.GroupStructure.canonical(3)
        h = gr.subgroup_generated(z8, 4)
        assert gr.orthogonal_group(z8, h).elements == (0, 2, 4, 6)
        trivial = gr.subgroup_generated(z8, 0)
        assert gr.orthogonal_group(z8, trivial).elements == tuple(range(8))
        z22 = gr.GroupStructure.canonical(1, 1)
        h2 = gr.subgroup_generated(z22, 3)
        assert gr.orthogonal_group(z22, h2).elements == (0, 3)

    @pytest.mark.parametrize("n", range(1, 5))
    def test_against_numeric_characters(self, n):
        for group in canonical_groups(n):
            for sub in cyclic_subgroups(group):
                perp = gr.orthogonal_group(group, sub)
                assert perp.elements == _orthogonal_brute(group, sub)
                assert perp.order * sub.order == group.size

    @pytest.mark.parametrize("n", range(1, 7))
    def test_involution(self, n):
        for group in canonical_groups(n):
            for sub in cyclic_subgroups(group):
                perp = gr.orthogonal_group(group, sub)
                back = gr.orthogonal_group(group, perp)
                assert back.elements == sub.elements


class TestParamCodec:
    def test_paper_patterns(self):
        d = gr.decode_group_from_params([1, 1, 1], [0, 0, 0])
        assert d is not None and d[0].partition == (3,)
        d = gr.decode_group_from_params([0, 0, 0], [0, 0, 0])
        assert d is not None and d[0].partition == (1, 1, 1)

    def test_invalid_pattern(self):
        # Row-major layout: slot 1 is the (wire 0, wire 2) long-range switch;
        # switching it on without the nearest-neighbour one breaks the block
        # pattern.
        assert gr.decode_group_from_params([0, 1, 0], [0, 0, 0]) is None
        assert gr.decode_group_from_params([1, 1, 0], [0, 0, 0]) is None
        # Whereas slot 2 alone is the valid Z2 x Z4 pattern.
        d = gr.decode_group_from_params([0, 0, 1], [0, 0, 0])
        assert d is not None and d[0].partition == (1, 2)

    @pytest.mark.parametrize("n", range(2, 7))
    def test_reencode_round_trip(self, n):
        for part in compositions(n):
            theta = gr.encode_qft_pattern(part)
            decoded = gr.decode_group_from_params(theta, np.zeros_like(theta))
            assert decoded is not None and decoded[0].partition == part
            assert np.array_equal(gr.encode_qft_pattern(decoded[0].partition), theta)

    def test_swap_pattern_paper_example(self):
        lam = np.zeros(6, dtype=int)
        lam[:3] = [0, 1, 1]  # pass of size 3, applied first
        lam[3:5] = [1, 1]
        lam[5] = 1
        perm = gr.perm_from_swap_pattern(lam)
        assert perm.mapping == (3, 2, 0, 1)  # |i1 i2 i3 i4> -> |i4 i3 i1 i2>

    @pytest.mark.parametrize("n", range(2, 6))
    def test_perm_encode_round_trip(self, n):
        for mapping in itertools.permutations(range(n)):
            perm = gr.BitPermutation(mapping)
            lam = gr.encode_perm_pattern(perm)
            assert gr.perm_from_swap_pattern(lam).mapping == mapping

    @given(hst.integers(2, 6), hst.data())
    @settings(max_examples=40, deadline=None)
    def test_any_binary_swap_vector_decodes(self, n, data):
        lam = data.draw(
            hst.lists(
                hst.integers(0, 1),
                min_size=gr.qft_param_count(n),
                max_size=gr.qft_param_count(n),
            )
        )
        perm = gr.perm_from_swap_pattern(np.array(lam))
        assert sorted(perm.mapping) == list(range(n))


class TestDescriptors:
    def test_parse_and_format(self):
        g = gr.parse_group_descriptor("Z8")
        assert g.group_type.partition == (3,) and g.perm.is_identity
        g = gr.parse_group_descriptor("Z4xZ2")
        assert g.group_type.partition == (2, 1)
        g = gr.parse_group_descriptor("Z2xZ2xZ2@perm=2,0,1")
        assert g.perm.mapping == (2, 0, 1)
        assert gr.format_group_descriptor(g) == "Z2xZ2xZ2@perm=2,0,1"

    def test_bad_descriptors(self):
        for text in ("Z6", "Q8", "Z4x", "Z4@perm=0", "Z4xZ2@flip=1,0,2"):
            with pytest.raises(ValueError):
                gr.parse_group_descriptor(text)
