"""Compilation of a dispatching problem into a QUBO over one-hot delay variables.

Variable ``x[j, s, m] = 1`` means train ``j`` leaves station ``s`` with total
delay ``m``, for ``m`` in ``{d_U(j, s), ..., d_U(j, s) + d_max(j)}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..model import QuboInstance
from .model import DispatchProblem, propagate_primary

__all__ = [
    "VariableMap",
    "OneHotViolation",
    "CONDITION_KINDS",
    "enumerate_variables",
    "objective_terms",
    "condition_terms",
    "all_condition_pairs",
    "onehot_penalty_terms",
    "assemble_qubo",
    "decode_schedule",
    "encode_schedule",
    "delay_sets",
]

CONDITION_KINDS = ("passing", "single_block", "deadlock", "rolling_stock")


@dataclass(frozen=True)
class VariableMap:
    """Bijection between ``(train, station, delay)`` and bit indices.

    Attributes
    ----------
    variables : tuple of (str, int, int)
        Key of every bit, in index order.
    groups : tuple of (str, int, tuple of int)
        One-hot groups: train, station and their bit indices by ascending delay.
    """

    variables: tuple
    groups: tuple

    def __post_init__(self):
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.variables)})

    def __len__(self):
        return len(self.variables)

    def index(self, train: str, station: int, delay: int) -> int:
        return self._index[(train, station, delay)]

    def get(self, train: str, station: int, delay: int):
        return self._index.get((train, station, delay))

    def group_of(self, train: str, station: int) -> tuple:
        for t, s, idx in self.groups:
            if t == train and s == station:
                return idx
        raise KeyError(f"no group for train {train} at station {station}")

    def to_dict(self) -> dict:
        return {
            "variables": [
                {"index": i, "train": t, "station": s, "delay": m}
                for i, (t, s, m) in enumerate(self.variables)
            ],
            "groups": [{"train": t, "station": s, "indices": list(idx)} for t, s, idx in self.groups],
        }

    @classmethod
    def from_dict(cls, d) -> "VariableMap":
        vs = sorted(d["variables"], key=lambda v: v["index"])
        if [v["index"] for v in vs] != list(range(len(vs))):
            raise ValueError("variable indices must be 0..n-1")
        variables = tuple((str(v["train"]), int(v["station"]), int(v["delay"])) for v in vs)
        groups = tuple((str(g["train"]), int(g["station"]), tuple(int(i) for i in g["indices"]))
                       for g in d["groups"])
        return cls(variables, groups)


class OneHotViolation(ValueError):
    """Raised by :func:`decode_schedule` when some group is not one-hot.

    Attributes
    ----------
    report : dict
        ``{"groups": [{"train", "station", "active"}]}`` for each bad group.
    """

    def __init__(self, report: dict):
        names = ", ".join(f"{g['train']}@{g['station']}" for g in report["groups"])
        super().__init__(f"groups not one-hot: {names}")
        self.report = report


def enumerate_variables(problem: DispatchProblem) -> VariableMap:
    """One group of ``d_max(j) + 1`` variables per train and decision station."""
    dU = propagate_primary(problem)
    variables, groups = [], []
    for t in problem.trains:
        for s in problem.decision_stations(t):
            lo = dU[(t.name, s)]
            idx = []
            for m in range(lo, lo + problem.d_max[t.name] + 1):
                idx.append(len(variables))
                variables.append((t.name, s, m))
            groups.append((t.name, s, tuple(idx)))
    return VariableMap(tuple(variables), tuple(groups))


def objective_terms(problem: DispatchProblem, vmap: VariableMap,
                    weight: Callable[[int, str, int], float] | None = None) -> dict:
    """Linear objective coefficients by bit index.

    By default only the last decision station of each train carries cost
    ``w_j * (m - d_U) / d_max``. A callable ``weight(station, train, delay)``
    instead assigns a coefficient to every variable.
    """
    out = {}
    if weight is not None:
        for i, (t, s, m) in enumerate(vmap.variables):
            c = float(weight(s, t, m))
            if c != 0:
                out[i] = c
        return out
    dU = propagate_primary(problem)
    for t in problem.trains:
        last = problem.decision_stations(t)[-1]
        dmax = problem.d_max[t.name]
        if dmax == 0:
            continue
        w = problem.weights[t.name]
        for i in vmap.group_of(t.name, last):
            m = vmap.variables[i][2]
            c = w * (m - dU[(t.name, last)]) / dmax
            if c != 0:
                out[i] = c
    return out


def delay_sets(kind: str, m: int, **kw) -> range:
    """Delays of the partner variable that conflict with delay ``m``.

    ``passing``: ``reserve``; ``single_block``: ``delta, tau1``;
    ``deadlock``: ``delta, tau_j, tau_k``; ``rolling_stock``: ``R``.
    """
    if kind == "passing":
        return range(0, m - kw["reserve"])
    if kind == "single_block":
        lo = m + kw["delta"]
        return range(lo, lo + kw["tau1"])
    if kind == "deadlock":
        lo = m + kw["delta"] - kw["tau_k"] + 1
        return range(lo, m + kw["delta"] + kw["tau_j"])
    if kind == "rolling_stock":
        return range(0, m - kw["R"] + 1)
    raise ValueError(f"unknown condition kind {kind!r}; expected one of {CONDITION_KINDS}")


def _pairs_from(vmap, ga, gb, kind, **kw):
    """Pairs ``(i, j)`` between two groups whose delays conflict."""
    out = set()
    tb, sb, idx_b = gb
    for i in ga[2]:
        m = vmap.variables[i][2]
        for mp in delay_sets(kind, m, **kw):
            j = vmap.get(tb, sb, mp)
            if j is not None and j != i:
                out.add((min(i, j), max(i, j)))
    return out


def condition_terms(problem: DispatchProblem, vmap: VariableMap, kind: str) -> list:
    """Sorted index pairs whose joint activation violates condition ``kind``."""
    if kind not in CONDITION_KINDS:
        raise ValueError(f"unknown condition kind {kind!r}; expected one of {CONDITION_KINDS}")
    pairs = set()
    trains = problem.trains
    groups = {(t, s): (t, s, idx) for t, s, idx in vmap.groups}
    if kind == "passing":
        for t in trains:
            ds = problem.decision_stations(t)
            for s, nxt in zip(ds, ds[1:]):
                pairs |= _pairs_from(vmap, groups[(t.name, s)], groups[(t.name, nxt)], kind,
                                     reserve=problem.reserve_sum(t, s))
    elif kind == "single_block":
        for a in trains:
            for b in trains:
                if a.name == b.name or a.direction != b.direction:
                    continue
                for s in set(problem.decision_stations(a)) & set(problem.decision_stations(b)):
                    if problem.next_station(a, s) != problem.next_station(b, s):
                        continue
                    pairs |= _pairs_from(vmap, groups[(a.name, s)], groups[(b.name, s)], kind,
                                         delta=a.leave(s) - b.leave(s), tau1=problem.headway(a, s))
    elif kind == "deadlock":
        for a in trains:
            for b in trains:
                if a.direction != 0 or b.direction != 1:
                    continue
                for s in problem.decision_stations(a):
                    nxt = problem.next_station(a, s)
                    if nxt not in problem.decision_stations(b) or problem.next_station(b, nxt) != s:
                        continue
                    pairs |= _pairs_from(
                        vmap, groups[(a.name, s)], groups[(b.name, nxt)], kind,
                        delta=a.leave(s) - b.leave(nxt),
                        tau_j=problem.run_time(a, s), tau_k=problem.run_time(b, nxt),
                    )
    else:
        for c in problem.timetable.circulations:
            a, b = problem.timetable.train(c.first), problem.timetable.train(c.second)
            last = problem.decision_stations(a)[-1]
            first = problem.decision_stations(b)[0]
            R = b.leave(first) - a.leave(last) - problem.run_time(a, last) - c.turnover
            pairs |= _pairs_from(vmap, groups[(a.name, last)], groups[(b.name, first)], kind, R=R)
    return sorted(pairs)


def all_condition_pairs(problem: DispatchProblem, vmap: VariableMap) -> dict:
    """Union of all condition pairs, mapped to the kinds that produced them."""
    out: dict = {}
    for kind in CONDITION_KINDS:
        for p in condition_terms(problem, vmap, kind):
            out.setdefault(p, []).append(kind)
    return out


def onehot_penalty_terms(vmap: VariableMap, p_sum: float) -> tuple[dict, dict]:
    """``(linear, quadratic)`` terms of ``p_sum * (sum_g x - 1)^2`` without the constant."""
    lin, quad = {}, {}
    for _, _, idx in vmap.groups:
        for a, i in enumerate(idx):
            lin[i] = -p_sum
            for j in idx[a + 1:]:
                quad[(i, j)] = 2.0 * p_sum
    return lin, quad


def assemble_qubo(problem: DispatchProblem, weight=None) -> tuple[QuboInstance, VariableMap]:
    """Objective plus one-hot and conflict penalties.

    Each conflicting pair is penalized once with ``p_pair`` even when several
    conditions produce it.
    """
    vmap = enumerate_variables(problem)
    b = dict.fromkeys(range(len(vmap)), 0.0)
    for i, c in objective_terms(problem, vmap, weight).items():
        b[i] += c
    lin, quad = onehot_penalty_terms(vmap, problem.p_sum)
    for i, c in lin.items():
        b[i] += c
    a = dict(quad)
    for p in all_condition_pairs(problem, vmap):
        a[p] = a.get(p, 0.0) + problem.p_pair
    return QuboInstance(len(vmap), {i: c for i, c in b.items() if c != 0}, a), vmap


def _bits_of(bits, n: int) -> np.ndarray:
    if isinstance(bits, (int, np.integer)):
        return np.array([(int(bits) >> i) & 1 for i in range(n)], dtype=np.int64)
    arr = np.asarray(bits, dtype=np.int64)
    if arr.shape != (n,) or np.any((arr != 0) & (arr != 1)):
        raise ValueError(f"expected {n} bits")
    return arr


def decode_schedule(bits, vmap: VariableMap) -> dict:
    """Delay table ``{(train, station): delay}`` from a word or bit vector.

    Raises
    ------
    OneHotViolation
        Listing every group with zero or several active bits.
    """
    q = _bits_of(bits, len(vmap))
    out, bad = {}, []
    for t, s, idx in vmap.groups:
        on = [i for i in idx if q[i]]
        if len(on) != 1:
            bad.append({"train": t, "station": s, "active": [vmap.variables[i][2] for i in on]})
        else:
            out[(t, s)] = vmap.variables[on[0]][2]
    if bad:
        raise OneHotViolation({"groups": bad})
    return out


def encode_schedule(delays, vmap: VariableMap) -> int:
    """Packed word of a delay table; the inverse of :func:`decode_schedule`."""
    w = 0
    for t, s, _ in vmap.groups:
        i = vmap.get(t, s, int(delays[(t, s)]))
        if i is None:
            raise ValueError(f"delay {delays[(t, s)]} of {t} at {s} is outside its window")
        w |= 1 << i
    return w
