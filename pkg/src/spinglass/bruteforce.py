"""Exhaustive search over all 2^n states.

Two solvers are provided:

* :func:`spectrum_search` walks the state space in chunks of ``2^M``
  consecutive words, keeps the ``k`` lowest of each chunk and merges them into
  a running ``2k`` buffer.
* :func:`ground_search_gray` splits each word into a low *prefix* of ``n - M``
  bits and a high *suffix* of ``M`` bits. All ``2^M`` suffixes ("lanes") walk
  the prefix space in Gray-code order together, so each step changes one bit
  and the energy is updated incrementally. The prefix part of the change is
  computed once per step and shared by every lane.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from . import _backend
from .errors import SizingError
from .model import (
    Instance,
    QuboInstance,
    Spectrum,
    as_qubo,
    check_state,
    qubo_energy,
    sort_by_energy_then_word,
)

__all__ = [
    "SearchConfig",
    "GrayState",
    "GraySearch",
    "chunk_range",
    "select_k_lowest",
    "spectrum_search",
    "gray_code",
    "flip_index",
    "delta_energy",
    "split_delta",
    "ground_search_gray",
    "fix_variables",
    "compose_state",
]

DEFAULT_MEMORY_CAP = 2 << 30  # bytes
RESYNC_INTERVAL = 1 << 20


def _default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


@dataclass(frozen=True)
class SearchConfig:
    """Parameters shared by the exhaustive solvers.

    Parameters
    ----------
    M : int, optional
        Chunk exponent for :func:`spectrum_search`; suffix width (lanes
        ``2^M``) for the Gray solver. Chosen from ``n`` when omitted.
    k : int
        Spectrum size. May exceed ``2^M``; each chunk then contributes all
        of its states to the merge.
    workers : int, optional
        Thread count; defaults to the available CPUs.
    K : int, optional
        Number of low prefix bits whose suffix contributions are cached.
    steps_per_batch : int
        Gray steps precomputed per dispatch.
    l : int
        Number of highest-index variables fixed to split the Gray search.
    memory_cap : int
        Bytes of working memory a search may request.
    resync_interval : int
        Gray flips between exact energy recomputations; 0 disables.
    """

    M: int | None = None
    k: int = 1
    workers: int | None = None
    K: int | None = None
    steps_per_batch: int = 4096
    l: int = 0
    memory_cap: int = DEFAULT_MEMORY_CAP
    resync_interval: int = RESYNC_INTERVAL

    def resolve(self, n: int, *, gray: bool = False) -> "SearchConfig":
        """Fill defaults for an ``n``-variable problem and check invariants."""
        if not 1 <= n <= 64:
            raise ValueError(f"exhaustive search needs 1 <= n <= 64, got {n}")
        M = self.M
        if M is None:
            M = min(n, max(1, n - 16)) if gray else min(n, 16)
        if not 0 < M <= n:
            raise ValueError(f"need 0 < M <= n, got M={M}, n={n}")
        if self.k < 1 or self.k > (1 << n):
            raise ValueError(f"need 1 <= k <= 2^n, got k={self.k}, n={n}")
        if not 0 <= self.l < n:
            raise ValueError(f"need 0 <= l < n, got l={self.l}")
        n_p = n - M
        K = self.K
        if K is None:
            K = min(n_p, 8)
            while K > 0 and (8 << M) * K > self.memory_cap // 4:
                K -= 1
        if not 0 <= K <= n_p:
            raise ValueError(f"need 0 <= K <= n - M, got K={K}")
        workers = self.workers or _default_workers()
        if workers < 1:
            raise ValueError("workers must be positive")
        if self.steps_per_batch < 1:
            raise ValueError("steps_per_batch must be positive")
        return replace(self, M=M, K=K, workers=workers)


# ---------------------------------------------------------------- chunks


def chunk_range(N: int, M: int, j: int) -> tuple[int, int]:
    """First and last word of chunk ``j`` when ``2^N`` states are cut into ``2^M`` blocks."""
    if not 0 <= M <= N:
        raise ValueError(f"need 0 <= M <= N, got M={M}, N={N}")
    if not 0 <= j < (1 << (N - M)):
        raise ValueError(f"chunk {j} outside [0, {1 << (N - M)})")
    return j << M, ((j + 1) << M) - 1


def select_k_lowest(energies, states, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` lowest entries by ``(energy, word)``, sorted.

    A pivot energy is found with a linear-time partition. Entries strictly
    below it are kept and ties at the pivot are resolved by word.
    """
    e = np.asarray(energies, dtype=float)
    s = np.asarray(states, dtype=np.uint64)
    if e.shape != s.shape:
        raise ValueError("energies and states differ in length")
    if not 1 <= k <= len(e):
        raise ValueError(f"k={k} outside [1, {len(e)}]")
    if k < len(e):
        pivot = np.partition(e, k - 1)[k - 1]
        below = np.flatnonzero(e < pivot)
        at = np.flatnonzero(e == pivot)
        need = k - len(below)
        if need < len(at):
            at = at[np.argpartition(s[at], need - 1)[:need]] if need > 0 else at[:0]
        idx = np.concatenate([below, at])
        e, s = e[idx], s[idx]
    order = sort_by_energy_then_word(e, s)
    return e[order], s[order]


def _check_memory(nbytes: int, cap: int, what: str) -> None:
    if nbytes > cap:
        raise SizingError(
            f"{what} needs about {nbytes} bytes, above the cap of {cap}",
            {"required_bytes": int(nbytes), "cap_bytes": int(cap), "what": what},
        )


def _qubo_arrays(q: QuboInstance):
    b = np.ascontiguousarray(q.linear_vector, dtype=float)
    A = np.ascontiguousarray(q.quadratic_matrix, dtype=float)
    return b, A


def spectrum_search(inst: Instance, cfg: SearchConfig | None = None) -> Spectrum:
    """Exact k-lowest spectrum by chunked enumeration.

    Within a chunk each worker evaluates every ``workers``-th word. The chunk's
    ``k`` best are merged with the running ``k`` best and reselected, so the
    result does not depend on the worker count.

    Raises
    ------
    SizingError
        If the chunk buffers would exceed ``cfg.memory_cap``.
    """
    cfg = (cfg or SearchConfig()).resolve(inst.n)
    n, M, k, W = inst.n, cfg.M, cfg.k, cfg.workers
    chunk = 1 << M
    _check_memory(chunk * 16 + 4 * k * 16, cfg.memory_cap, "chunk buffers")
    b, A = _qubo_arrays(as_qubo(inst))
    offset = as_qubo(inst).offset
    kern = _backend.kernels
    out = np.empty(chunk)
    words = np.arange(chunk, dtype=np.uint64)
    best_e = np.empty(0)
    best_s = np.empty(0, dtype=np.uint64)
    pool = ThreadPoolExecutor(W) if W > 1 else None
    try:
        for j in range(1 << (n - M)):
            first, _ = chunk_range(n, M, j)
            if pool is None:
                kern.chunk_energies(b, A, offset, first, chunk, 0, 1, out)
            else:
                futs = [
                    pool.submit(kern.chunk_energies, b, A, offset, first, chunk, w, W, out)
                    for w in range(min(W, chunk))
                ]
                for f in futs:
                    f.result()
            ce, cs = select_k_lowest(out, words + np.uint64(first), min(k, chunk))
            merged_e = np.concatenate([best_e, ce])
            merged_s = np.concatenate([best_s, cs])
            best_e, best_s = select_k_lowest(merged_e, merged_s, min(k, len(merged_e)))
    finally:
        if pool is not None:
            pool.shutdown()
    return Spectrum(best_e, best_s)


# ---------------------------------------------------------------- Gray code


def gray_code(i: int) -> int:
    """Reflected binary code ``i ^ (i >> 1)``."""
    i = int(i)
    if i < 0:
        raise ValueError("gray_code needs a non-negative integer")
    return i ^ (i >> 1)


def flip_index(i: int) -> int:
    """1-based position of the bit that differs between ``gray(i)`` and ``gray(i+1)``."""
    i = int(i)
    if i < 0:
        raise ValueError("flip_index needs a non-negative integer")
    x = i + 1
    return (x & -x).bit_length()


def _check_kbit(n: int, kbit: int) -> int:
    kbit = int(kbit)
    if not 1 <= kbit <= n:
        raise ValueError(f"bit {kbit} outside 1..{n}")
    return kbit - 1


def delta_energy(inst: QuboInstance, q, kbit: int) -> float:
    """Energy change from flipping 1-based bit ``kbit`` of state ``q``."""
    w = check_state(q, inst.n)
    p = _check_kbit(inst.n, kbit)
    qp = (w >> p) & 1
    row = inst.quadratic_matrix[p]
    field_ = inst.linear_vector[p] + sum(row[i] for i in range(inst.n) if i != p and (w >> i) & 1)
    return (1 - 2 * qp) * field_


def split_delta(inst: QuboInstance, q, kbit: int, M: int) -> tuple[float, float]:
    """Prefix and suffix parts of :func:`delta_energy` for a prefix bit.

    The prefix is variables ``1..n-M`` (low bits), the suffix the top ``M``.
    The linear term ``b_k`` is counted in the prefix part only.
    """
    w = check_state(q, inst.n)
    p = _check_kbit(inst.n, kbit)
    n_p = inst.n - int(M)
    if not 0 <= M <= inst.n:
        raise ValueError(f"M={M} outside [0, {inst.n}]")
    if p >= n_p:
        raise ValueError(f"bit {kbit} lies in the suffix (last {M} variables)")
    sg = 1 - 2 * ((w >> p) & 1)
    row = inst.quadratic_matrix[p]
    pre = inst.linear_vector[p] + sum(row[i] for i in range(n_p) if i != p and (w >> i) & 1)
    suf = sum(row[i] for i in range(n_p, inst.n) if (w >> i) & 1)
    return sg * pre, sg * float(suf)


@dataclass
class GrayState:
    """Per-lane arrays of the Gray solver; entry ``s`` belongs to suffix ``s``."""

    current_states: np.ndarray
    current_energies: np.ndarray
    best_states: np.ndarray
    best_energies: np.ndarray
    steps: int = 0


class GraySearch:
    """Incremental Gray-code walk of all ``2^(n-M)`` prefixes for ``2^M`` lanes.

    Parameters
    ----------
    inst : QuboInstance or IsingInstance
        Ising input is converted; reported energies include the offset.
    cfg : SearchConfig
    """

    def __init__(self, inst: Instance, cfg: SearchConfig | None = None):
        q = as_qubo(inst)
        cfg = (cfg or SearchConfig()).resolve(q.n, gray=True)
        self.cfg = cfg
        self.n = q.n
        self.M = cfg.M
        self.n_p = q.n - cfg.M
        self.lanes = 1 << cfg.M
        self.total_steps = (1 << self.n_p) - 1
        L, K, n_p = self.lanes, cfg.K, self.n_p
        batch = cfg.steps_per_batch
        _check_memory(L * (32 + 8 * K) + batch * 32, cfg.memory_cap, "Gray lane buffers")
        self.b, self.A = _qubo_arrays(q)
        self.offset = q.offset
        self._kern = _backend.kernels
        self.asuf = np.ascontiguousarray(self.A[:n_p, n_p:])
        lane_words = np.arange(L, dtype=np.uint64)
        lane_bits = ((lane_words[:, None] >> np.arange(self.M, dtype=np.uint64)) & np.uint64(1)).astype(bool)
        cache = np.zeros((L, K))
        for j in range(self.M):
            cache = np.where(lane_bits[:, j, None], cache + self.asuf[None, :K, j], cache)
        self.cache = np.ascontiguousarray(cache)
        words = lane_words << np.uint64(n_p)
        e0 = np.empty(L)
        self._kern.word_energies(self.b, self.A, self.offset, words, e0)
        self.state = GrayState(words.copy(), e0, words.copy(), e0.copy())
        self.lf = np.ascontiguousarray(self.b[:n_p].copy())
        self.prefix = np.zeros(1, dtype=np.uint64)
        self._since_resync = 0
        self._buf = (
            np.empty(batch, dtype=np.int64),
            np.empty(batch),
            np.empty(batch),
            np.empty(batch, dtype=np.uint64),
        )
        W = min(cfg.workers, L)
        bounds = np.linspace(0, L, W + 1).astype(int)
        self._ranges = [(int(a), int(c)) for a, c in zip(bounds[:-1], bounds[1:]) if c > a]
        self._pool = ThreadPoolExecutor(len(self._ranges)) if len(self._ranges) > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @property
    def done(self) -> bool:
        return self.state.steps >= self.total_steps

    def resync(self) -> None:
        """Recompute lane energies and prefix fields exactly."""
        st = self.state
        self._kern.word_energies(self.b, self.A, self.offset, st.current_states, st.current_energies)
        n_p = self.n_p
        p = int(self.prefix[0])
        qp = np.array([(p >> i) & 1 for i in range(n_p)], dtype=float)
        self.lf[:] = self.b[:n_p] + self.A[:n_p, :n_p] @ qp
        self._since_resync = 0

    def advance(self, steps: int | None = None) -> None:
        """Run up to ``steps`` further Gray steps (all remaining if omitted)."""
        remaining = self.total_steps - self.state.steps
        todo = remaining if steps is None else min(int(steps), remaining)
        interval = self.cfg.resync_interval
        pos, sign, pdelta, pwords = self._buf
        st = self.state
        while todo > 0:
            count = min(todo, len(pos))
            if interval:
                count = min(count, interval - self._since_resync)
            self._kern.gray_prefix_batch(
                self.A, self.lf, self.prefix, st.steps, count, pos, sign, pdelta, pwords
            )
            args = (pdelta, sign, pos, pwords, count, self.cache, self.asuf, self.n_p)
            tail = (st.current_energies, st.current_states, st.best_energies, st.best_states)
            if self._pool is None:
                self._kern.gray_lanes(*args, 0, self.lanes, *tail)
            else:
                futs = [self._pool.submit(self._kern.gray_lanes, *args, lo, hi, *tail)
                        for lo, hi in self._ranges]
                for f in futs:
                    f.result()
            st.steps += count
            todo -= count
            self._since_resync += count
            if interval and self._since_resync >= interval:
                self.resync()

    def result(self) -> tuple[int, float]:
        """Best ``(word, energy)`` over all lanes with the ``(energy, word)`` order."""
        st = self.state
        i = sort_by_energy_then_word(st.best_energies, st.best_states)[0]
        return int(st.best_states[i]), float(st.best_energies[i])


def fix_variables(inst: QuboInstance, assignment: Mapping[int, int]) -> QuboInstance:
    """Fold fixed binary values into a smaller instance.

    The remaining variables keep their relative order and are renumbered from
    0. Quadratic terms touching one fixed variable become linear terms, terms
    among fixed variables and their linear terms go into the offset.
    """
    n = inst.n
    fixed = {}
    for i, v in assignment.items():
        i = int(i)
        if not 0 <= i < n:
            raise ValueError(f"fixed index {i} outside [0, {n})")
        if v not in (0, 1):
            raise ValueError(f"fixed value {v!r} is not binary")
        fixed[i] = int(v)
    free = [i for i in range(n) if i not in fixed]
    new_index = {i: r for r, i in enumerate(free)}
    b = {new_index[i]: inst.b.get(i, 0.0) for i in free}
    offset = inst.offset
    for i, v in sorted(fixed.items()):
        offset += inst.b.get(i, 0.0) * v
    a = {}
    for (i, j), x in inst.a.items():
        fi, fj = i in fixed, j in fixed
        if fi and fj:
            offset += x * fixed[i] * fixed[j]
        elif fi:
            b[new_index[j]] += x * fixed[i]
        elif fj:
            b[new_index[i]] += x * fixed[j]
        else:
            a[(new_index[i], new_index[j])] = x
    b = {i: x for i, x in b.items() if x != 0.0}
    return QuboInstance(len(free), b, a, offset)


def compose_state(sub_word: int, assignment: Mapping[int, int], n: int) -> int:
    """Inverse of the renumbering in :func:`fix_variables`."""
    free = [i for i in range(n) if i not in assignment]
    w = 0
    for r, i in enumerate(free):
        if (int(sub_word) >> r) & 1:
            w |= 1 << i
    for i, v in assignment.items():
        if v:
            w |= 1 << int(i)
    return w


def ground_search_gray(inst: Instance, cfg: SearchConfig | None = None) -> tuple[int, float]:
    """Exact ground state by Gray-code enumeration.

    With ``cfg.l > 0`` the ``l`` highest-index variables are fixed to each of
    their ``2^l`` values and the subproblems are solved independently.

    Returns
    -------
    (word, energy)
        Lowest energy and, among ties, the smallest word. For Ising input the
        energy is the Ising energy.
    """
    cfg = cfg or SearchConfig()
    q = as_qubo(inst)
    l = cfg.l
    if l == 0:
        with GraySearch(q, cfg) as gs:
            gs.advance()
            return gs.result()
    if not 0 < l < q.n:
        raise ValueError(f"need 0 <= l < n, got l={l}")
    best = None
    sub_cfg = replace(cfg, l=0, M=None if cfg.M is None else min(cfg.M, q.n - l))
    for v in range(1 << l):
        assign = {q.n - l + t: (v >> t) & 1 for t in range(l)}
        sub = fix_variables(q, assign)
        with GraySearch(sub, sub_cfg) as gs:
            gs.advance()
            w, e = gs.result()
        cand = (e, compose_state(w, assign, q.n))
        if best is None or cand < best:
            best = cand
    w = best[1]
    return w, qubo_energy(q, w)
