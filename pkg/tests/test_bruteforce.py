import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinglass.bruteforce import (
    GraySearch,
    SearchConfig,
    chunk_range,
    compose_state,
    delta_energy,
    fix_variables,
    flip_index,
    gray_code,
    ground_search_gray,
    select_k_lowest,
    spectrum_search,
    split_delta,
)
from spinglass.errors import SizingError
from spinglass.model import (
    QuboInstance,
    enumerate_spectrum_naive,
    ising_to_qubo,
    qubo_energy,
    random_ising,
    random_qubo,
)

from conftest import bits_word, relclose


class TestChunks:
    @pytest.mark.parametrize("N,M,j,expected", [(8, 5, 1, (32, 63)), (8, 5, 7, (224, 255)), (6, 6, 0, (0, 63))])
    def test_ranges(self, N, M, j, expected):
        assert chunk_range(N, M, j) == expected

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            chunk_range(8, 5, 8)


class TestSelect:
    def test_small(self):
        e, s = select_k_lowest([3, -5, -1, 7], np.arange(4, dtype=np.uint64), 2)
        assert e.tolist() == [-5, -1] and s.tolist() == [1, 2]

    def test_full_sort(self):
        e, _ = select_k_lowest([3, -5, -1, 7], np.arange(4, dtype=np.uint64), 4)
        assert e.tolist() == [-5, -1, 3, 7]

    @pytest.mark.parametrize("seed", range(20))
    def test_against_sort(self, seed):
        rng = np.random.default_rng(seed)
        e = rng.integers(-50, 50, 10**5).astype(float)
        s = rng.permutation(10**5).astype(np.uint64)
        k = int(rng.integers(1, 2000))
        ge, gs = select_k_lowest(e, s, k)
        order = np.lexsort((s, e))[:k]
        assert np.array_equal(ge, e[order]) and np.array_equal(gs, s[order])


class TestSpectrumSearch:
    def test_worked_example(self, three_spin):
        spec = spectrum_search(three_spin, SearchConfig(M=2, k=5))
        assert spec.energies.tolist() == [-5, -5, -5, -1, 3]
        assert spec.states.tolist() == [1, 2, 6, 0, 3]

    def test_single_variable(self):
        spec = spectrum_search(QuboInstance(1, {0: 5.0}), SearchConfig(k=2))
        assert spec.entries == [(0.0, 0), (5.0, 1)]

    @pytest.mark.parametrize("workers", [1, 3])
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_naive(self, seed, workers):
        inst = random_ising(12, seed=seed)
        got = spectrum_search(inst, SearchConfig(M=5, k=50, workers=workers))
        assert got == enumerate_spectrum_naive(inst, 50)

    def test_k_larger_than_chunk(self):
        inst = random_qubo(8, seed=4)
        assert spectrum_search(inst, SearchConfig(M=3, k=40)) == enumerate_spectrum_naive(inst, 40)

    def test_memory_cap(self):
        with pytest.raises(SizingError) as info:
            spectrum_search(random_qubo(20, seed=0), SearchConfig(M=20, memory_cap=1 << 10))
        assert info.value.report["cap_bytes"] == 1 << 10

    @pytest.mark.parametrize("cfg", [SearchConfig(M=0), SearchConfig(k=0), SearchConfig(M=9)])
    def test_bad_config(self, cfg):
        with pytest.raises(ValueError):
            spectrum_search(random_qubo(8, seed=0), cfg)

    def test_too_many_variables(self):
        with pytest.raises(ValueError):
            spectrum_search(QuboInstance(65), SearchConfig())


class TestGrayCode:
    @pytest.mark.parametrize("i,g", [(0, 0), (3, 2), (7, 4)])
    def test_code(self, i, g):
        assert gray_code(i) == g

    @pytest.mark.parametrize("i,k", [(0, 1), (3, 3)])
    def test_flip(self, i, k):
        assert flip_index(i) == k

    def test_flip_sequence(self):
        assert [flip_index(i) for i in range(7)] == [1, 2, 1, 3, 1, 2, 1]

    @settings(max_examples=200)
    @given(st.integers(0, 2**40))
    def test_flip_is_differing_bit(self, i):
        diff = gray_code(i) ^ gray_code(i + 1)
        assert diff == 1 << (flip_index(i) - 1)


class TestDeltas:
    def test_worked_examples(self, three_spin_qubo):
        assert delta_energy(three_spin_qubo, 0, 1) == -4
        assert delta_energy(three_spin_qubo, bits_word((0, 1, 0)), 3) == 0
        assert delta_energy(QuboInstance(3), 5, 2) == 0

    def test_split_worked_example(self, three_spin_qubo):
        q = bits_word((0, 1, 1))
        assert split_delta(three_spin_qubo, q, 1, 1) == (8, 0)
        assert delta_energy(three_spin_qubo, q, 1) == 8

    def test_no_cross_edges(self):
        inst = QuboInstance(4, {0: 1, 3: 2}, {(0, 1): 3, (2, 3): -1})
        for w in range(16):
            for k in (1, 2):
                assert split_delta(inst, w, k, 2)[1] == 0

    def test_suffix_bit_rejected(self, three_spin_qubo):
        with pytest.raises(ValueError):
            split_delta(three_spin_qubo, 0, 3, 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_delta_is_energy_difference(self, seed):
        inst = random_qubo(9, seed=seed)
        rng = np.random.default_rng(seed)
        for _ in range(100):
            w, k = int(rng.integers(0, 512)), int(rng.integers(1, 10))
            flipped = w ^ (1 << (k - 1))
            assert relclose(delta_energy(inst, w, k), qubo_energy(inst, flipped) - qubo_energy(inst, w), 1e-12)


class TestGraySearch:
    def test_worked_example(self, three_spin_qubo):
        assert ground_search_gray(three_spin_qubo) == (1, -4.0)

    def test_single_variable(self):
        assert ground_search_gray(QuboInstance(1, {0: 5.0})) == (0, 0.0)

    def test_ising_energy_reported(self, three_spin):
        word, e = ground_search_gray(three_spin)
        assert e == -5.0 and word == 1

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_spectrum_search(self, seed):
        inst = random_qubo(14, seed=seed)
        assert ground_search_gray(inst, SearchConfig(M=4, workers=2)) == spectrum_search(inst).ground[::-1]

    @pytest.mark.parametrize("l", [1, 2, 3])
    def test_fixed_split(self, l):
        inst = random_ising(14, seed=l)
        assert ground_search_gray(inst, SearchConfig(M=4, l=l)) == ground_search_gray(inst, SearchConfig(M=4))

    def test_incremental_matches_recompute(self):
        inst = random_qubo(16, seed=9)
        with GraySearch(inst, SearchConfig(M=3, resync_interval=0)) as gs:
            gs.advance()
            st_ = gs.state
            exact = np.array([qubo_energy(inst, int(w)) for w in st_.current_states])
            assert np.allclose(st_.current_energies, exact, rtol=1e-9, atol=1e-9)

    def test_resumable(self):
        inst = random_qubo(12, seed=2)
        with GraySearch(inst, SearchConfig(M=3)) as gs:
            while not gs.done:
                gs.advance(37)
            assert gs.result() == ground_search_gray(inst, SearchConfig(M=3))


class TestFixVariables:
    def test_worked_example(self, three_spin_qubo):
        sub = fix_variables(three_spin_qubo, {2: 1})
        assert sub.b == {0: -4.0, 1: -12.0}
        assert sub.a == {(0, 1): 12.0}
        assert sub.offset == 8.0

    def test_empty_assignment(self, three_spin_qubo):
        assert fix_variables(three_spin_qubo, {}) == three_spin_qubo

    def test_energy_preserved(self):
        inst = random_qubo(8, seed=1)
        fixed = {1: 1, 5: 0, 6: 1}
        sub = fix_variables(inst, fixed)
        for w in range(1 << sub.n):
            assert qubo_energy(sub, w) == qubo_energy(inst, compose_state(w, fixed, 8))

    def test_split_minimum(self):
        inst = random_qubo(14, seed=7)
        best = min(
            spectrum_search(fix_variables(inst, {12: a, 13: b})).ground[0] for a in (0, 1) for b in (0, 1)
        )
        assert best == spectrum_search(inst).ground[0]

    def test_ising_conversion_ground(self, three_spin):
        assert spectrum_search(ising_to_qubo(three_spin)).ground == (-5.0, 1)
