"""Monte Carlo baselines and the time-to-solution metric.

Both samplers use single-spin Metropolis updates with spins proposed in index
order. Each restart or replica draws from its own random stream spawned from
the user seed, so results do not depend on how replicas are spread over
threads.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .model import (
    Instance,
    IsingInstance,
    QuboInstance,
    ising_energies,
    ising_energy,
    qubo_to_ising,
    sort_by_energy_then_word,
)

__all__ = [
    "BetaLadder",
    "default_annealing_ladder",
    "McResult",
    "simulated_annealing",
    "parallel_tempering",
    "swap_probability",
    "metropolis_sample",
    "time_to_solution",
]


@dataclass(frozen=True)
class BetaLadder:
    """Strictly increasing positive inverse temperatures."""

    betas: tuple
    kind: str = "explicit"

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if not betas:
            raise ValueError("empty beta ladder")
        if any(b <= 0 for b in betas):
            raise ValueError("inverse temperatures must be positive")
        if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ValueError("inverse temperatures must be strictly increasing")
        if self.kind not in ("explicit", "geometric"):
            raise ValueError(f"unknown ladder kind {self.kind!r}")
        object.__setattr__(self, "betas", betas)

    @classmethod
    def geometric(cls, beta_min: float, beta_max: float, count: int) -> "BetaLadder":
        if count == 1:
            return cls((beta_max,), "geometric")
        return cls(tuple(np.geomspace(beta_min, beta_max, count)), "geometric")

    def __len__(self):
        return len(self.betas)

    def at_fraction(self, x: float) -> float:
        """Linear interpolation in ladder index, ``x`` in [0, 1]."""
        if len(self.betas) == 1:
            return self.betas[0]
        pos = x * (len(self.betas) - 1)
        lo = min(int(math.floor(pos)), len(self.betas) - 2)
        frac = pos - lo
        return self.betas[lo] + frac * (self.betas[lo + 1] - self.betas[lo])


def default_annealing_ladder(count: int = 20) -> BetaLadder:
    """Geometric schedule from 0.3 to 3, suited to couplings of order one."""
    return BetaLadder.geometric(0.3, 3.0, count)


@dataclass(frozen=True)
class McResult:
    """Outcome of a Monte Carlo run.

    Attributes
    ----------
    best_state : int
        Packed spin word with the lowest energy seen.
    best_energy : float
        Its energy, recomputed from the instance.
    success_count : int
        Samples that reached the target energy (or the best energy found
        when no target was given).
    samples_taken : int
        Restarts for annealing; sweeps of the coldest replica for tempering.
    elapsed : float
        Wall-clock seconds.
    sweeps : int
        Sweeps per restart or per replica.
    first_success_sweep : int or None
        Tempering only: first sweep whose coldest replica hit the target.
    """

    best_state: int
    best_energy: float
    success_count: int
    samples_taken: int
    elapsed: float
    sweeps: int = 0
    first_success_sweep: int | None = None

    def to_dict(self) -> dict:
        return {
            "best_state": self.best_state,
            "best_energy": self.best_energy,
            "success_count": self.success_count,
            "samples_taken": self.samples_taken,
            "elapsed": self.elapsed,
            "sweeps": self.sweeps,
            "first_success_sweep": self.first_success_sweep,
        }


def _as_ising(inst: Instance) -> IsingInstance:
    if inst.n > 64:
        raise ValueError(f"samplers report packed 64-bit states, got n={inst.n}")
    return qubo_to_ising(inst) if isinstance(inst, QuboInstance) else inst


def _words(spins: np.ndarray) -> np.ndarray:
    n = spins.shape[1]
    weights = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    return ((spins > 0).astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


class _Sweeper:
    """Runs the Metropolis kernel over replica ranges, optionally threaded."""

    def __init__(self, ising: IsingInstance, replicas: int, workers: int | None):
        self.h = np.ascontiguousarray(ising.linear_vector, dtype=float)
        self.J = np.ascontiguousarray(ising.quadratic_matrix, dtype=float)
        W = max(1, min(workers or 1, replicas))
        bounds = np.linspace(0, replicas, W + 1).astype(int)
        self.ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        self.pool = ThreadPoolExecutor(len(self.ranges)) if len(self.ranges) > 1 else None
        self.kern = _backend.kernels

    def sweep(self, spins, betas, uniforms, energies):
        args = (spins, self.h, self.J, betas, uniforms, energies)
        if self.pool is None:
            return self.kern.metropolis_batch(*args, 0, spins.shape[0])
        futs = [self.pool.submit(self.kern.metropolis_batch, *args, lo, hi) for lo, hi in self.ranges]
        return sum(f.result() for f in futs)

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _streams(seed, count: int) -> list[np.random.Generator]:
    if seed is None:
        raise ValueError("a seed is required for reproducible Monte Carlo runs")
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _initial_spins(rngs, n: int) -> np.ndarray:
    spins = np.empty((len(rngs), n), dtype=np.int8)
    for r, g in enumerate(rngs):
        spins[r] = np.where(g.random(n) < 0.5, -1, 1)
    return spins


def _draw_uniforms(rngs, n: int, out: np.ndarray) -> None:
    for r, g in enumerate(rngs):
        out[r] = g.random(n)


def _best_of(words, es):
    i = sort_by_energy_then_word(es, words)[0]
    return int(words[i]), float(es[i])


def simulated_annealing(
    inst: Instance,
    sweeps: int,
    ladder: BetaLadder,
    restarts: int = 1,
    seed=None,
    *,
    target_energy: float | None = None,
    tol: float = 1e-9,
    workers: int | None = None,
) -> McResult:
    """Independent annealing runs from random starts.

    Sweep ``t`` of ``sweeps`` runs at the ladder interpolated at
    ``t / (sweeps - 1)``; a single sweep uses the largest ``beta``.

    Parameters
    ----------
    inst : IsingInstance or QuboInstance
    sweeps : int
        Sweeps per restart, each proposing every spin once in index order.
    ladder : BetaLadder
    restarts : int
    seed : int or SeedSequence
        Required.
    target_energy : float, optional
        Energy counted as success; defaults to the best energy found.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    t0 = time.perf_counter()
    ising = _as_ising(inst)
    n = ising.n
    rngs = _streams(seed, restarts)
    spins = _initial_spins(rngs, n)
    energies = ising_energies(ising, _words(spins))
    best_e = energies.copy()
    best_w = _words(spins)
    uniforms = np.empty((restarts, n))
    betas = np.empty(restarts)
    sweeper = _Sweeper(ising, restarts, workers)
    try:
        for t in range(sweeps):
            betas[:] = ladder.betas[-1] if sweeps == 1 else ladder.at_fraction(t / (sweeps - 1))
            _draw_uniforms(rngs, n, uniforms)
            sweeper.sweep(spins, betas, uniforms, energies)
            words = _words(spins)
            better = (energies < best_e) | ((energies == best_e) & (words < best_w))
            best_e = np.where(better, energies, best_e)
            best_w = np.where(better, words, best_w)
    finally:
        sweeper.close()
    exact = ising_energies(ising, best_w)
    w, e = _best_of(best_w, exact)
    target = e if target_energy is None else target_energy
    success = int(np.sum(exact <= target + tol * (1 + abs(target))))
    return McResult(w, ising_energy(ising, w), success, restarts, time.perf_counter() - t0, sweeps)


def swap_probability(beta_i: float, beta_j: float, e_i: float, e_j: float) -> float:
    """Replica-exchange acceptance ``min(1, exp((beta_j - beta_i)(e_j - e_i)))``."""
    x = (beta_j - beta_i) * (e_j - e_i)
    return 1.0 if x >= 0 else math.exp(x)


def parallel_tempering(
    inst: Instance,
    ladder: BetaLadder,
    sweeps: int,
    seed=None,
    *,
    target_energy: float | None = None,
    tol: float = 1e-9,
    workers: int | None = None,
    return_replicas: bool = False,
):
    """Replica exchange over a ladder of inverse temperatures.

    Each sweep updates every replica, then proposes swaps between
    neighbouring temperatures from the hottest pair upward.

    Returns
    -------
    McResult, or (McResult, spins, energies) with ``return_replicas``
        ``spins`` rows are ordered by temperature slot and ``energies`` are
        the tracked (incremental) energies.
    """
    if len(ladder) < 2:
        raise ValueError("parallel tempering needs at least two replicas")
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    t0 = time.perf_counter()
    ising = _as_ising(inst)
    n, R = ising.n, len(ladder)
    rngs = _streams(seed, R + 1)
    swap_rng = rngs.pop()
    spins = _initial_spins(rngs, n)
    energies = ising_energies(ising, _words(spins))
    betas = np.asarray(ladder.betas, dtype=float)
    uniforms = np.empty((R, n))
    words = _words(spins)
    best_w, best_e = _best_of(words, energies)
    cold_hits = 0
    first_hit = None
    cold_energies = np.empty(sweeps)
    sweeper = _Sweeper(ising, R, workers)
    try:
        for t in range(sweeps):
            _draw_uniforms(rngs, n, uniforms)
            sweeper.sweep(spins, betas, uniforms, energies)
            u = swap_rng.random(R - 1)
            for i in range(R - 1):
                if u[i] < swap_probability(betas[i], betas[i + 1], energies[i], energies[i + 1]):
                    spins[[i, i + 1]] = spins[[i + 1, i]]
                    energies[[i, i + 1]] = energies[[i + 1, i]]
            words = _words(spins)
            w, e = _best_of(words, energies)
            if (e, w) < (best_e, best_w):
                best_w, best_e = w, e
            cold_energies[t] = energies[-1]
    finally:
        sweeper.close()
    best_e = ising_energy(ising, best_w)
    target = best_e if target_energy is None else target_energy
    hit = cold_energies <= target + tol * (1 + abs(target))
    cold_hits = int(hit.sum())
    if cold_hits:
        first_hit = int(np.argmax(hit))
    result = McResult(best_w, best_e, cold_hits, sweeps, time.perf_counter() - t0, sweeps, first_hit)
    if return_replicas:
        return result, spins, energies
    return result


def metropolis_sample(inst: Instance, beta: float, sweeps: int, seed=None, burn_in: int = 0) -> np.ndarray:
    """State words of one chain at fixed ``beta`` after each sweep past ``burn_in``."""
    ising = _as_ising(inst)
    n = ising.n
    rngs = _streams(seed, 1)
    spins = _initial_spins(rngs, n)
    energies = ising_energies(ising, _words(spins))
    betas = np.array([float(beta)])
    uniforms = np.empty((1, n))
    out = np.empty(sweeps, dtype=np.uint64)
    sweeper = _Sweeper(ising, 1, 1)
    for t in range(burn_in + sweeps):
        _draw_uniforms(rngs, n, uniforms)
        sweeper.sweep(spins, betas, uniforms, energies)
        if t >= burn_in:
            out[t - burn_in] = _words(spins)[0]
    return out


def time_to_solution(T: float, p_succ: float, p_target: float = 0.99, scale_ratio: float = 1.0) -> float:
    """Runtime needed to see the target with probability ``p_target``.

    Returns ``math.inf`` when ``p_succ`` is 0 (the run never succeeded) and
    ``T * scale_ratio`` when ``p_succ`` is 1.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if not 0 <= p_succ <= 1:
        raise ValueError("p_succ must lie in [0, 1]")
    if not 0 < p_target < 1:
        raise ValueError("p_target must lie in (0, 1)")
    if not scale_ratio > 0:
        raise ValueError("scale_ratio must be positive")
    if p_succ == 0:
        return math.inf
    if p_succ == 1:
        return T * scale_ratio
    return T * (math.log1p(-p_target) / math.log1p(-p_succ)) * scale_ratio
