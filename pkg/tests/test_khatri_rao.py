import itertools
from math import prod

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmttkrp.errors import DimensionError
from dmttkrp.khatri_rao import (
    HadamardCounter,
    KrpState,
    RowStream,
    hadamard_count,
    krp,
    krp_naive,
    krp_row,
    krp_rows,
    krp_small,
    reuse_count_bound,
    row_partition,
)
from dmttkrp.oracle import krp_kron_oracle


def carry_count(radices, start=0, stop=None):
    """Hadamard products done by the reuse algorithm on rows [start, stop), by walking the index sequence."""
    Z = len(radices)
    seq = list(itertools.product(*map(range, radices)))
    stop = len(seq) if stop is None else stop
    count = Z - 2
    for j in range(start, stop):
        count += 1
        if j + 1 < stop:
            p = min(z for z in range(Z) if seq[j][z] != seq[j + 1][z])
            if p < Z - 1:
                count += Z - 2 - max(0, p - 1)
    return count


def random_inputs(radices, C, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((J, C)) for J in radices]


class TestKrpRow:
    def test_all_ones(self):
        U = [np.ones((2, 3))] * 3
        np.testing.assert_array_equal(krp_row(KrpState(U)), np.ones(3))

    def test_scalar_rows(self):
        U = [np.array([[2.0]]), np.array([[3.0]]), np.array([[5.0]])]
        assert krp_row(KrpState(U)).tolist() == [30.0]

    def test_selected_rows(self):
        U0 = np.array([[1.0, 2.0], [9.0, 9.0]])
        U1 = np.array([[9.0, 9.0], [3.0, 4.0]])
        U2 = np.array([[5.0, 6.0], [9.0, 9.0]])
        # Row (0, 1, 0) has flat index 0*4 + 1*2 + 0 = 2.
        state = KrpState([U0, U1, U2], start_row=2)
        assert krp_row(state).tolist() == [15.0, 48.0]

    def test_needs_three_inputs(self):
        with pytest.raises(ValueError):
            KrpState([np.ones((2, 1))] * 2)

    @given(st.lists(st.integers(1, 4), min_size=3, max_size=5))
    def test_partials_invariant(self, radices):
        U = random_inputs(radices, 3)
        state = KrpState(U)
        for j in range(prod(radices)):
            d = state.mi.digits
            expect = U[0][d[0]] * U[1][d[1]]
            np.testing.assert_array_equal(state.partials[0], expect)
            for z in range(1, len(U) - 2):
                expect = expect * U[z + 1][d[z + 1]]
                np.testing.assert_array_equal(state.partials[z], expect)
            if j + 1 < prod(radices):
                state.advance()


class TestKrp:
    def test_two_columns_vectors(self):
        A = np.array([[1.0], [2.0]])
        B = np.array([[3.0], [4.0]])
        expected = [[3.0], [4.0], [6.0], [8.0]]
        assert krp_kron_oracle([A, B]).tolist() == expected
        assert krp([A, B]).tolist() == expected
        assert krp_naive([A, B]).tolist() == expected
        assert krp_small([A, B]).tolist() == expected

    def test_single_input_is_copy(self):
        A = np.arange(6.0).reshape(3, 2)
        for fn in (krp, krp_naive, krp_small):
            K = fn([A])
            np.testing.assert_array_equal(K, A)
            assert not np.shares_memory(K, A)

    def test_all_ones(self):
        K = krp([np.ones((2, 2))] * 3)
        assert K.shape == (8, 2) and np.all(K == 1)

    def test_small_single_rows(self):
        A = np.array([[2.0, 3.0]])
        B = np.array([[5.0, 7.0]])
        assert krp_small([A, B]).tolist() == [[10.0, 21.0]]

    def test_small_rejects_three(self):
        with pytest.raises(ValueError):
            krp_small([np.ones((1, 1))] * 3)

    def test_errors(self):
        with pytest.raises(ValueError):
            krp([])
        with pytest.raises(DimensionError):
            krp([np.ones((2, 2)), np.ones((2, 3))])

    def test_single_column_is_kronecker(self):
        vs = [np.array([1.0, 2.0]), np.array([3.0, -1.0, 0.5]), np.array([2.0, 7.0])]
        expect = np.kron(np.kron(vs[0], vs[1]), vs[2])
        np.testing.assert_array_equal(krp([v[:, None] for v in vs])[:, 0], expect)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(1, 5), min_size=1, max_size=5), st.sampled_from([1, 4]))
    def test_oracle_equivalence_bitwise(self, radices, C):
        U = random_inputs(radices, C)
        ref = krp_kron_oracle(U)
        np.testing.assert_array_equal(krp(U), ref)
        np.testing.assert_array_equal(krp_naive(U), ref)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(1, 6), min_size=1, max_size=5))
    def test_thread_invariance(self, radices):
        U = random_inputs(radices, 3)
        K1 = krp(U, 1)
        for T in (2, 3, 7):
            np.testing.assert_array_equal(krp(U, T), K1)
            np.testing.assert_array_equal(krp_naive(U, T), K1)

    def test_row_ranges(self):
        U = random_inputs((3, 4, 2, 3), 2)
        K = krp(U)
        for s, e in [(0, 5), (5, 17), (17, 72), (71, 72), (10, 10)]:
            np.testing.assert_array_equal(krp_rows(U, s, e), K[s:e])

    def test_row_stream(self):
        for radices in [(5,), (3, 4), (2, 3, 2, 2)]:
            U = random_inputs(radices, 2)
            K = krp(U)
            stream = RowStream(U, 3)
            for j in range(3, K.shape[0]):
                np.testing.assert_array_equal(stream.next(), K[j])


class TestHadamardCount:
    def test_two_inputs(self):
        assert hadamard_count([np.ones((2, 1)), np.ones((3, 1))]) == 6

    def test_three_inputs(self):
        U = [np.ones((2, 2))] * 3
        assert carry_count((2, 2, 2)) == 12
        assert hadamard_count(U) == 12 <= reuse_count_bound((2, 2, 2)) == 13

    def test_four_inputs(self):
        U = [np.ones((2, 2))] * 4
        assert carry_count((2, 2, 2, 2)) == 28
        assert hadamard_count(U) == 28 <= 16 + 8 * 2 + 2

    @given(st.lists(st.integers(1, 5), min_size=3, max_size=5))
    def test_matches_carry_walk(self, radices):
        U = random_inputs(radices, 1)
        count = hadamard_count(U)
        assert count == carry_count(radices)
        assert prod(radices) <= count <= reuse_count_bound(radices)

    @given(st.lists(st.integers(1, 5), min_size=2, max_size=4), st.integers(2, 5))
    def test_reuse_beats_naive(self, head, last):
        radices = head + [last]
        U = random_inputs(radices, 1)
        assert hadamard_count(U, "naive") == prod(radices) * (len(radices) - 1)
        if len(radices) >= 3:
            assert hadamard_count(U) < hadamard_count(U, "naive")

    @pytest.mark.parametrize("radices, T", [((3, 3, 3), 3), ((2, 3, 4), 5), ((2, 2, 3, 2), 4)])
    def test_counter_sums_threads(self, radices, T):
        U = random_inputs(radices, 1)
        c = HadamardCounter()
        krp(U, T, c)
        # Every worker seeds its own partials, so the count is a sum over row blocks.
        blocks = row_partition(prod(radices), T)
        assert c.count == sum(carry_count(radices, s, e) for s, e in blocks)


def test_row_partition():
    assert row_partition(10, 3) == [(0, 4), (4, 7), (7, 10)]
    assert row_partition(2, 4) == [(0, 1), (1, 2), (2, 2), (2, 2)]
