"""Exact searches that exploit the one-hot group structure.

All energies are evaluated with the same kernel as the brute-force spectrum
search, so results compare byte for byte.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .. import _backend
from ..bruteforce import select_k_lowest
from ..errors import SizingError
from ..model import QuboInstance, Spectrum, qubo_energy
from .model import DispatchProblem
from .qubo import VariableMap, assemble_qubo

__all__ = [
    "ONEHOT_LIMIT",
    "exact_onehot_search",
    "onehot_branch_and_bound",
    "defect_spectrum",
    "OneHotResult",
]

ONEHOT_LIMIT = 10**7
_BLOCK = 1 << 18


def _arrays(q: QuboInstance):
    return (np.ascontiguousarray(q.linear_vector, dtype=float),
            np.ascontiguousarray(q.quadratic_matrix, dtype=float))


def _word_energies(q: QuboInstance, words: np.ndarray) -> np.ndarray:
    b, A = _arrays(q)
    out = np.empty(len(words))
    _backend.kernels.word_energies(b, A, q.offset, np.ascontiguousarray(words, dtype=np.uint64), out)
    return out


def _product_words(options: list, start: int, count: int) -> np.ndarray:
    """Words for mixed-radix indices ``start .. start+count-1`` over per-group option words."""
    idx = np.arange(start, start + count, dtype=np.int64)
    words = np.zeros(count, dtype=np.uint64)
    for opts in options:
        r = len(opts)
        words |= opts[idx % r]
        idx //= r
    return words


def _lowest_over_products(q: QuboInstance, options: list, k: int, best_e, best_s):
    total = 1
    for o in options:
        total *= len(o)
    for start in range(0, total, _BLOCK):
        cnt = min(_BLOCK, total - start)
        w = _product_words(options, start, cnt)
        e = _word_energies(q, w)
        ce, cs = select_k_lowest(e, w, min(k, cnt))
        me, ms = np.concatenate([best_e, ce]), np.concatenate([best_s, cs])
        best_e, best_s = select_k_lowest(me, ms, min(k, len(me)))
    return best_e, best_s, total


def _onehot_options(vmap: VariableMap) -> list:
    return [np.array([1 << i for i in idx], dtype=np.uint64) for _, _, idx in vmap.groups]


def exact_onehot_search(problem: DispatchProblem, k: int = 1, *, limit: int = ONEHOT_LIMIT,
                        qubo=None) -> Spectrum:
    """The ``k`` lowest assembled-QUBO energies over one-hot assignments.

    Raises
    ------
    SizingError
        If the number of one-hot assignments exceeds ``limit``.
    """
    q, vmap = qubo if qubo is not None else assemble_qubo(problem)
    total = 1
    for _, _, idx in vmap.groups:
        total *= len(idx)
    if total > limit:
        raise SizingError(f"{total} one-hot assignments exceed the limit of {limit}",
                          {"assignments": total, "limit": limit})
    if q.n > 64:
        raise SizingError(f"packed words hold 64 variables, the problem has {q.n}",
                          {"variables": q.n, "limit": 64})
    options = _onehot_options(vmap)
    e, s, _ = _lowest_over_products(q, options, max(1, min(k, total)),
                                    np.empty(0), np.empty(0, dtype=np.uint64))
    return Spectrum(e, s)


def _residual_check(q: QuboInstance, vmap: VariableMap, p_sum: float):
    """Objective and conflict coefficients must be non-negative for the bounds to hold."""
    b, A = _arrays(q)
    lin = b + p_sum
    A = A.copy()
    for _, _, idx in vmap.groups:
        for i, j in combinations(idx, 2):
            A[i, j] -= 2.0 * p_sum
    if lin.min(initial=0.0) < 0 or A.min(initial=0.0) < 0:
        raise ValueError("bounding needs non-negative objective weights")
    return lin, A + A.T


@dataclass(frozen=True)
class OneHotResult:
    """Lowest one-hot states as Python-int words, usable beyond 64 variables.

    Attributes
    ----------
    energies : tuple of float
        Ascending, ties broken by word.
    words : tuple of int
    n : int
    """

    energies: tuple
    words: tuple
    n: int

    @property
    def entries(self) -> list:
        return list(zip(self.energies, self.words))

    @property
    def ground(self) -> tuple:
        return self.energies[0], self.words[0]

    def to_spectrum(self) -> Spectrum:
        if self.n > 64:
            raise ValueError("spectra hold packed 64-bit states only")
        return Spectrum(np.array(self.energies), np.array(self.words, dtype=np.uint64))

    def to_dict(self) -> dict:
        return {"k": len(self.words),
                "entries": [{"energy": e, "state": w} for e, w in self.entries]}


def onehot_branch_and_bound(problem: DispatchProblem, k: int = 1, *, qubo=None) -> OneHotResult:
    """Depth-first exact search over one-hot assignments for larger problems.

    The energy of a one-hot assignment is ``-p_sum * groups`` plus non-negative
    objective and conflict terms. Groups are visited in timetabled departure
    order. The bound of a child adds, for every open group, its cheapest
    variable given the assigned ones and the child.
    """
    q, vmap = qubo if qubo is not None else assemble_qubo(problem)
    lin, P = _residual_check(q, vmap, problem.p_sum)
    tt = problem.timetable
    ordered = sorted(vmap.groups, key=lambda g: (tt.train(g[0]).leave(g[1]), g[0]))
    groups = [np.array(idx) for _, _, idx in ordered]
    G = len(groups)
    tails = []
    for g in range(G):
        rest = groups[g + 1:]
        flat = np.concatenate(rest) if rest else np.zeros(0, dtype=np.int64)
        starts = np.cumsum([0] + [len(r) for r in rest[:-1]]) if rest else np.zeros(0, dtype=np.int64)
        tails.append((flat, starts))
    heap: list = []  # (-cost, -word) of the best k so far
    slack = 1e-9

    def bound():
        return -heap[0][0] if len(heap) >= k else np.inf

    def visit(g: int, cost: float, word: int, acc: np.ndarray):
        if g == G:
            item = (-cost, -word)
            if len(heap) < k:
                heapq.heappush(heap, item)
            elif item > heap[0]:
                heapq.heapreplace(heap, item)
            return
        idx = groups[g]
        flat, starts = tails[g]
        lb = cost + acc[idx]
        if len(flat):
            lb = lb + np.minimum.reduceat(acc[flat][None, :] + P[np.ix_(idx, flat)], starts, axis=1).sum(axis=1)
        for t in np.argsort(lb, kind="stable"):
            if lb[t] > bound() + slack:
                break
            v = int(idx[t])
            visit(g + 1, cost + acc[v], word | (1 << v), acc + P[v])

    visit(0, 0.0, 0, lin.copy())
    words = [-w for _, w in heap]
    if q.n <= 64:
        e = _word_energies(q, np.array(words, dtype=np.uint64)).tolist()
    else:
        e = [qubo_energy(q, w) for w in words]
    ranked = sorted(zip(e, words))
    return OneHotResult(tuple(float(x) for x, _ in ranked), tuple(w for _, w in ranked), q.n)


def _patterns(sizes: list, budget: int):
    """Occupation counts per group with ``sum (r - 1)^2 == budget``."""
    G = len(sizes)

    def rec(g, left):
        if g == G:
            if left == 0:
                yield ()
            return
        for r in range(sizes[g] + 1):
            c = (r - 1) ** 2
            if c <= left:
                for rest in rec(g + 1, left - c):
                    yield (r,) + rest

    yield from rec(0, budget)


def defect_spectrum(problem: DispatchProblem, k: int, *, max_states: int = 10**8,
                    qubo=None) -> tuple[Spectrum, int]:
    """Exact ``k`` lowest states of the assembled QUBO over all bit strings.

    A state whose groups hold ``r_g`` active bits has energy at least
    ``p_sum * (sum_g (r_g - 1)^2 - groups)`` because every other term is
    non-negative. States are enumerated level by level in this defect and the
    search stops once the next level's bound exceeds the ``k``-th energy.

    Returns
    -------
    (Spectrum, int)
        The spectrum and the number of states evaluated.

    Raises
    ------
    SizingError
        If more than ``max_states`` states would be evaluated.
    """
    q, vmap = qubo if qubo is not None else assemble_qubo(problem)
    _residual_check(q, vmap, problem.p_sum)
    k = min(k, 1 << len(vmap)) if len(vmap) < 63 else k
    groups = [idx for _, _, idx in vmap.groups]
    sizes = [len(g) for g in groups]
    G, ps = len(groups), problem.p_sum
    best_e, best_s = np.empty(0), np.empty(0, dtype=np.uint64)
    seen, level = 0, 0
    max_level = sum((s - 1) ** 2 if s > 1 else 1 for s in sizes) + G
    while level <= max_level:
        if len(best_e) >= k and ps * (level - G) > best_e[-1]:
            break
        for pat in _patterns(sizes, level):
            options = [
                np.array([sum(1 << i for i in c) for c in combinations(g, r)], dtype=np.uint64)
                for g, r in zip(groups, pat)
            ]
            count = int(np.prod([len(o) for o in options], dtype=object))
            if seen + count > max_states:
                raise SizingError(f"defect enumeration passed {max_states} states",
                                  {"states": seen + count, "limit": max_states})
            best_e, best_s, n = _lowest_over_products(q, options, k, best_e, best_s)
            seen += n
        level += 1
    return Spectrum(best_e, best_s), seen
