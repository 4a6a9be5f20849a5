import math

import numpy as np
import pytest

from spinglass.heuristics import (
    BetaLadder,
    default_annealing_ladder,
    metropolis_sample,
    parallel_tempering,
    simulated_annealing,
    swap_probability,
    time_to_solution,
)
from spinglass.model import IsingInstance, enumerate_spectrum_naive, ising_energies, random_ising


class TestLadder:
    def test_geometric(self):
        lad = BetaLadder.geometric(0.1, 10.0, 3)
        assert lad.betas == pytest.approx((0.1, 1.0, 10.0))

    @pytest.mark.parametrize("betas", [(), (1.0, 1.0), (0.0, 1.0), (2.0, 1.0)])
    def test_invalid(self, betas):
        with pytest.raises(ValueError):
            BetaLadder(betas)

    def test_interpolation_endpoints(self):
        lad = default_annealing_ladder()
        assert lad.at_fraction(0) == lad.betas[0] and lad.at_fraction(1) == lad.betas[-1]


class TestAnnealing:
    def test_decoupled_spins(self):
        inst = IsingInstance(2, {0: 1.0, 1: -1.0})
        res = simulated_annealing(inst, 1, BetaLadder((20.0,)), restarts=4, seed=0)
        assert res.best_state == 0b10 and res.best_energy == -2.0

    def test_deterministic(self):
        inst = random_ising(10, seed=1)
        a = simulated_annealing(inst, 50, default_annealing_ladder(), 8, seed=42)
        b = simulated_annealing(inst, 50, default_annealing_ladder(), 8, seed=42)
        assert (a.best_state, a.best_energy, a.success_count) == (b.best_state, b.best_energy, b.success_count)

    def test_workers_do_not_change_result(self):
        inst = random_ising(10, seed=2)
        a = simulated_annealing(inst, 30, default_annealing_ladder(), 16, seed=7, workers=1)
        b = simulated_annealing(inst, 30, default_annealing_ladder(), 16, seed=7, workers=4)
        assert a.to_dict() | {"elapsed": 0} == b.to_dict() | {"elapsed": 0}

    @pytest.mark.parametrize("seed", range(20))
    def test_finds_ground(self, seed):
        inst = random_ising(12, seed=100 + seed)
        e0 = enumerate_spectrum_naive(inst, 1).ground[0]
        res = simulated_annealing(inst, 200, default_annealing_ladder(), 100, seed=seed, target_energy=e0)
        assert res.success_count >= 90

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            simulated_annealing(random_ising(3, seed=0), 0, default_annealing_ladder(), 1, seed=0)


class TestTempering:
    def test_equal_betas_always_swap(self):
        assert swap_probability(1.3, 1.3, -5.0, 7.0) == 1.0

    def test_swap_formula(self):
        assert swap_probability(1.0, 2.0, 0.0, -1.0) == pytest.approx(math.exp(-1.0))

    def test_ground_rate(self):
        found = 0
        lad = BetaLadder.geometric(0.2, 3.0, 12)
        for seed in range(20):
            inst = random_ising(12, seed=200 + seed)
            e0 = enumerate_spectrum_naive(inst, 1).ground[0]
            res = parallel_tempering(inst, lad, 500, seed=seed, target_energy=e0)
            found += res.success_count > 0
        assert found >= 18

    def test_energy_bookkeeping(self):
        inst = random_ising(16, seed=3)
        for sweeps in (1, 7, 40):
            res, spins, tracked = parallel_tempering(
                inst, BetaLadder.geometric(0.1, 2.0, 6), sweeps, seed=1, return_replicas=True
            )
            words = ((spins > 0).astype(np.uint64) << np.arange(16, dtype=np.uint64)).sum(axis=1)
            assert np.allclose(tracked, ising_energies(inst, words), rtol=1e-9, atol=1e-9)

    def test_needs_two_replicas(self):
        with pytest.raises(ValueError):
            parallel_tempering(random_ising(3, seed=0), BetaLadder((1.0,)), 5, seed=0)


def test_metropolis_low_temperature_settles():
    inst = IsingInstance(3, {0: 1.0, 1: 1.0, 2: 1.0})
    words = metropolis_sample(inst, 50.0, 10, seed=0, burn_in=5)
    assert set(words.tolist()) == {0}


class TestTts:
    def test_equal_probabilities(self):
        assert time_to_solution(3.0, 0.99, 0.99, scale_ratio=2.0) == pytest.approx(6.0, rel=1e-12)

    def test_reference_value(self):
        assert time_to_solution(1.0, 0.5, 0.99) == pytest.approx(math.log(0.01) / math.log(0.5), abs=1e-9)
        assert abs(time_to_solution(1.0, 0.5, 0.99) - 6.6439) < 1e-4

    def test_never_succeeded(self):
        assert time_to_solution(1.0, 0.0) == math.inf

    def test_always_succeeded(self):
        assert time_to_solution(2.0, 1.0, scale_ratio=3.0) == 6.0

    @pytest.mark.parametrize("args", [(0.0, 0.5), (1.0, 1.5), (1.0, 0.5, 1.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            time_to_solution(*args)
