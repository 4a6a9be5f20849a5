"""Imaginary-time MPS solver for instances on arbitrary graphs.

The state ``psi(s) ~ exp(-beta H(s) / 2)`` is built from the uniform product
state by applying, per step ``dbeta`` and for ``i = 0 .. n-1``, the diagonal
gate ``exp(-dbeta/2 * (h_i s_i + sum_{j>i} J_ij s_i s_j))``. Each gate is a
bond-2 MPO that carries ``s_i`` to the right; the MPS is compressed back to
bond ``D`` after every gate. Low-energy states are then read off with the same
branch-and-bound as the PEPS solver, using ``p(s) ~ psi(s)^2``.
"""

from __future__ import annotations

import numpy as np

from ..model import IsingInstance, Spectrum, ising_energies, sort_by_energy_then_word
from .peps import compress_mps
from .search import SearchResult, prune

__all__ = ["gate_mpo", "imaginary_time_mps", "mps_imaginary_time", "mps_amplitudes"]

_S = np.array([-1.0, 1.0])


def gate_mpo(inst: IsingInstance, i: int, dbeta: float) -> list:
    """MPO tensors ``W[a, s, b]`` (diagonal in ``s``) for gate ``i``; ``None`` means identity."""
    n = inst.n
    Jrow = inst.quadratic_matrix[i]
    last = max([j for j in range(i + 1, n) if Jrow[j] != 0], default=i)
    ops = [None] * n
    hi = inst.linear_vector[i]
    if last == i:
        ops[i] = np.exp(-0.5 * dbeta * hi * _S).reshape(1, 2, 1)
        return ops
    W = np.zeros((1, 2, 2))
    W[0, 0, 0] = np.exp(-0.5 * dbeta * hi * _S[0])
    W[0, 1, 1] = np.exp(-0.5 * dbeta * hi * _S[1])
    ops[i] = W
    for j in range(i + 1, last + 1):
        fac = np.exp(-0.5 * dbeta * Jrow[j] * np.outer(_S, _S))  # [g, s_j]
        if j < last:
            W = np.zeros((2, 2, 2))
            W[0, :, 0] = fac[0]
            W[1, :, 1] = fac[1]
        else:
            W = fac.reshape(2, 2, 1)
        ops[j] = W
    return ops


def _apply(mps: list, ops: list) -> list:
    out = []
    for A, W in zip(mps, ops):
        if W is None:
            out.append(A)
            continue
        t = np.einsum("apb,cpd->acpbd", A, W)
        a, c, p, b, d = t.shape
        out.append(t.reshape(a * c, p, b * d))
    return out


def imaginary_time_mps(inst: IsingInstance, D: int, beta: float, dbeta: float) -> tuple[list, float]:
    """Compressed MPS of ``exp(-beta H / 2)`` and the log of its removed norm."""
    if D < 1:
        raise ValueError("bond dimension must be positive")
    steps = beta / dbeta
    if not dbeta > 0 or abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
        raise ValueError("dbeta must divide beta into a whole number of steps")
    mps = [np.ones((1, 2, 1)) for _ in range(inst.n)]
    log_norm = 0.0
    for _ in range(int(round(steps))):
        for i in range(inst.n):
            mps = _apply(mps, gate_mpo(inst, i, dbeta))
            mps, ln = compress_mps(mps, D)
            log_norm += ln
    return mps, log_norm


def mps_amplitudes(mps: list) -> np.ndarray:
    """Dense amplitudes indexed by packed word (small ``n`` only)."""
    n = len(mps)
    words = np.arange(1 << n)
    v = np.ones((len(words), 1))
    for i, A in enumerate(mps):
        bits = (words >> i) & 1
        v = np.einsum("wa,wab->wb", v, A[:, bits, :].transpose(1, 0, 2))
    return v[:, 0]


def _right_envs(mps: list) -> list:
    n = len(mps)
    envs = [None] * n
    R = np.ones((1, 1))
    envs[n - 1] = R
    for i in range(n - 1, 0, -1):
        A = mps[i]
        R = np.einsum("apb,cpd,bd->ac", A, A, R)
        R = R / np.abs(R).max()
        envs[i - 1] = R
    return envs


def mps_imaginary_time(
    inst: IsingInstance,
    D: int,
    beta: float,
    dbeta: float,
    *,
    k: int = 1,
    cutoff: float = 1e-3,
    max_branches: int = 64,
) -> SearchResult:
    """k lowest states found by branch-and-bound over the compressed MPS."""
    mps, _ = imaginary_time_mps(inst, D, beta, dbeta)
    envs = _right_envs(mps)
    vecs = np.ones((1, 1))
    logp = np.zeros(1)
    words = np.zeros(1, dtype=np.uint64)
    best_drop = -np.inf
    for i, A in enumerate(mps):
        new_vecs = np.einsum("na,apb->npb", vecs, A)  # [node, s, b]
        q = np.einsum("npb,bc,npc->np", new_vecs, envs[i], new_vecs)
        q = np.clip(q, 0.0, None)
        tot = q.sum(axis=1, keepdims=True)
        p = np.where(tot > 0, q / np.where(tot > 0, tot, 1.0), 0.5)
        with np.errstate(divide="ignore"):
            child_lp = (logp[:, None] + np.log(p)).ravel()
        child_w = (words[:, None] | (np.array([0, 1], dtype=np.uint64) << np.uint64(i))[None, :]).ravel()
        child_v = new_vecs.reshape(-1, new_vecs.shape[2])
        kept, drop = prune(child_lp, child_w, cutoff, max_branches)
        best_drop = max(best_drop, drop)
        vecs, logp, words = child_v[kept], child_lp[kept], child_w[kept]
        m = np.abs(vecs).max(axis=1, keepdims=True)
        vecs = vecs / np.where(m > 0, m, 1.0)
    energies = ising_energies(inst, words)
    order = sort_by_energy_then_word(energies, words)[:k]
    p_d = float(np.exp(best_drop)) if np.isfinite(best_drop) else 0.0
    return SearchResult(Spectrum(energies[order], words[order]), p_d, float(np.exp(logp[order[0]])))
