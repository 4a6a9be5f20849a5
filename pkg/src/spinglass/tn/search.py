"""Branch-and-bound over cluster states driven by PEPS conditionals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..model import Spectrum, ising_energies, sort_by_energy_then_word
from .lattice import ClusterLattice
from .peps import (
    _caps,
    _open_site,
    build_peps,
    contract_boundary,
    row_left_transfer,
    row_right_transfer,
)

__all__ = ["TnConfig", "SearchResult", "branch_and_bound", "prune"]


@dataclass(frozen=True)
class TnConfig:
    """Settings of the tensor-network search.

    Parameters
    ----------
    beta : float
        Inverse temperature of the sampled distribution.
    chi : int
        Bond cap of the boundary MPS.
    cutoff : float
        Keep a branch only if its probability is at least ``cutoff`` times
        the best branch at the same depth.
    max_branches : int
        Hard cap on branches kept per depth, applied after the cutoff.
    k : int
        Spectrum size.
    """

    beta: float = 3.0
    chi: int = 16
    cutoff: float = 1e-3
    max_branches: int = 1024
    k: int = 1

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.chi < 1:
            raise ValueError("chi must be at least 1")
        if not 0 <= self.cutoff <= 1:
            raise ValueError("cutoff must lie in [0, 1]")
        if self.max_branches < 1 or self.k < 1:
            raise ValueError("max_branches and k must be positive")


@dataclass(frozen=True)
class SearchResult:
    """Spectrum of surviving leaves with pruning diagnostics.

    Attributes
    ----------
    spectrum : Spectrum
    p_d : float
        Largest probability of any discarded branch (0 when nothing was cut).
    p_1 : float
        Probability the search assigned to the returned ground state.
    """

    spectrum: Spectrum
    p_d: float
    p_1: float

    @property
    def certified(self) -> bool:
        return self.p_d < self.p_1

    def diagnostics(self) -> dict:
        return {"p_d": self.p_d, "p_1": self.p_1}


def prune(logp: np.ndarray, words: np.ndarray, cutoff: float, max_branches: int):
    """Indices of branches to keep, in ``(-logp, word)`` order, plus the best discarded log-probability."""
    order = np.lexsort((words, -logp))
    top = logp[order[0]]
    thresh = top + math.log(cutoff) if cutoff > 0 else -np.inf
    ok = logp[order] >= thresh
    kept = order[ok][:max_branches]
    dropped = np.setdiff1d(order, kept, assume_unique=True)
    best_drop = float(logp[dropped].max()) if len(dropped) else -np.inf
    return kept, best_drop


def branch_and_bound(lat: ClusterLattice, cfg: TnConfig) -> SearchResult:
    """Low-energy states by growing configurations site by site.

    Sites are visited in row-major order. Every kept branch is extended by
    all states of the next cluster, weighted by the conditional probability
    from the boundary MPS. Surviving leaves are scored by exact energy.
    """
    net = build_peps(lat, cfg.beta)
    bd = contract_boundary(net, cfg.chi)
    C = lat.cols
    configs = np.zeros((1, 0), dtype=np.int64)
    logp = np.zeros(1)
    words = np.zeros(1, dtype=np.uint64)
    best_drop = -np.inf
    bit_words = [
        np.array([lat.word_of([0] * s + [x]) for x in range(len(net.weights[s]))], dtype=np.uint64)
        for s in range(lat.sites)
    ]
    for site in range(lat.sites):
        r, c = divmod(site, C)
        env = bd.envs[r]
        dim = len(net.weights[site])
        child_cfg, child_lp, child_w = [], [], []
        with np.errstate(divide="ignore"):
            for cfg_row, lp, w in zip(configs, logp, words):
                caps = _caps(net, r, cfg_row)
                L = row_left_transfer(net, env, caps, r, cfg_row, c)
                Rm = row_right_transfer(net, env, caps, r, c + 1)
                p = _open_site(net, env, caps, r, c, L, Rm)
                child_lp.append(lp + np.log(p))
                child_w.append(w | bit_words[site])
                child_cfg.append(np.column_stack([np.repeat(cfg_row[None, :], dim, 0), np.arange(dim)]))
        child_lp = np.concatenate(child_lp)
        child_w = np.concatenate(child_w)
        child_cfg = np.concatenate(child_cfg)
        kept, drop = prune(child_lp, child_w, cfg.cutoff, cfg.max_branches)
        best_drop = max(best_drop, drop)
        configs, logp, words = child_cfg[kept], child_lp[kept], child_w[kept]
    energies = ising_energies(lat.instance, words)
    order = sort_by_energy_then_word(energies, words)[: cfg.k]
    spectrum = Spectrum(energies[order], words[order])
    p_1 = float(np.exp(logp[order[0]]))
    p_d = float(np.exp(best_drop)) if np.isfinite(best_drop) else 0.0
    return SearchResult(spectrum, p_d, p_1)
