"""Network, timetable and dispatching-problem types for single-track lines.

Times and delays are integer minutes. A train's delay ``d(j, s)`` at a station
block ``s`` is the lateness of its departure from ``s``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from ..errors import InstanceFormatError

__all__ = [
    "Block",
    "Network",
    "Train",
    "Circulation",
    "Timetable",
    "DispatchProblem",
    "make_train",
    "propagate_primary",
    "problem_to_dict",
    "problem_from_dict",
    "load_problem",
    "dump_problem",
]

STATION = "station"
LINE = "line"


@dataclass(frozen=True)
class Block:
    """One block section.

    Parameters
    ----------
    id : int
        Label used in timetables and reports.
    kind : {"station", "line"}
    tracks : int
        Parallel tracks; line blocks always have one.
    """

    id: int
    kind: str
    tracks: int = 1

    def __post_init__(self):
        if self.kind not in (STATION, LINE):
            raise ValueError(f"block {self.id}: kind must be 'station' or 'line'")
        if int(self.tracks) < 1:
            raise ValueError(f"block {self.id}: track count must be at least 1")
        if self.kind == LINE and int(self.tracks) != 1:
            raise ValueError(f"block {self.id}: line blocks are single track")

    @property
    def is_station(self) -> bool:
        return self.kind == STATION


@dataclass(frozen=True)
class Network:
    """Ordered blocks of a line; the ends are stations."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        ids = [b.id for b in blocks]
        if len(set(ids)) != len(ids):
            raise ValueError("block ids must be unique")
        if sum(b.is_station for b in blocks) < 2:
            raise ValueError("a network needs at least two stations")
        if not (blocks[0].is_station and blocks[-1].is_station):
            raise ValueError("the first and last blocks must be stations")

    def block(self, bid: int) -> Block:
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(f"unknown block {bid}")

    def position(self, bid: int) -> int:
        for k, b in enumerate(self.blocks):
            if b.id == bid:
                return k
        raise KeyError(f"unknown block {bid}")

    @property
    def stations(self) -> list[int]:
        return [b.id for b in self.blocks if b.is_station]


@dataclass(frozen=True)
class Train:
    """Timetabled path of one train.

    Parameters
    ----------
    name : str
    direction : int
        0 runs along increasing block positions, 1 along decreasing.
    route : tuple of int
        Block ids in travel order; starts and ends at a station.
    t_in : int
        Timetabled entry time into the first block.
    t_out : tuple of int
        Timetabled leave time of each route block.
    p_min : tuple of int
        Minimum passing time of each route block.
    """

    name: str
    direction: int
    route: tuple
    t_in: int
    t_out: tuple
    p_min: tuple

    def __post_init__(self):
        for attr in ("route", "t_out", "p_min"):
            object.__setattr__(self, attr, tuple(int(x) for x in getattr(self, attr)))
        if self.direction not in (0, 1):
            raise ValueError(f"train {self.name}: direction must be 0 or 1")
        if not (len(self.route) == len(self.t_out) == len(self.p_min)) or len(self.route) < 2:
            raise ValueError(f"train {self.name}: route, t_out and p_min lengths differ")
        for k, p in enumerate(self.passage):
            if p < self.p_min[k]:
                raise ValueError(f"train {self.name}: negative reserve at block {self.route[k]}")
            if self.p_min[k] < 0:
                raise ValueError(f"train {self.name}: negative minimum passing time")

    @property
    def passage(self) -> tuple:
        """Timetabled passage time ``t_out - t_in`` per route block."""
        prev = (self.t_in,) + self.t_out[:-1]
        return tuple(o - i for o, i in zip(self.t_out, prev))

    @property
    def reserve(self) -> tuple:
        return tuple(p - m for p, m in zip(self.passage, self.p_min))

    def _k(self, bid: int) -> int:
        try:
            return self.route.index(bid)
        except ValueError:
            raise KeyError(f"train {self.name} does not pass block {bid}") from None

    def leave(self, bid: int) -> int:
        return self.t_out[self._k(bid)]

    def enter(self, bid: int) -> int:
        k = self._k(bid)
        return self.t_in if k == 0 else self.t_out[k - 1]


@dataclass(frozen=True)
class Circulation:
    """``second`` reuses the train set of ``first`` after ``turnover`` minutes."""

    first: str
    second: str
    turnover: int


@dataclass(frozen=True)
class Timetable:
    trains: tuple
    circulations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "trains", tuple(self.trains))
        object.__setattr__(self, "circulations", tuple(self.circulations))
        names = [t.name for t in self.trains]
        if len(set(names)) != len(names):
            raise ValueError("train names must be unique")
        for c in self.circulations:
            if c.first not in names or c.second not in names or c.first == c.second:
                raise ValueError(f"circulation {c.first} -> {c.second} names unknown trains")

    def train(self, name: str) -> Train:
        for t in self.trains:
            if t.name == name:
                return t
        raise KeyError(f"unknown train {name}")


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    """A disturbed timetable plus QUBO parameters.

    Parameters
    ----------
    network, timetable
    entry_delays : mapping
        Primary delay of each train at its first station; missing means 0.
    d_max : int or mapping
        Largest secondary delay, uniform or per train.
    weights : mapping
        Priority ``w_j`` of each train; missing means 1.
    p_pair, p_sum : float
        Conflict and one-hot penalty weights.
    """

    network: Network
    timetable: Timetable
    entry_delays: Mapping = field(default_factory=dict)
    d_max: object = 0
    weights: Mapping = field(default_factory=dict)
    p_pair: float = 4.0
    p_sum: float = 4.0

    def __post_init__(self):
        names = [t.name for t in self.timetable.trains]
        if not names:
            raise ValueError("the timetable has no trains")
        dm = self.d_max
        dmax = {n: int(dm[n] if isinstance(dm, Mapping) else dm) for n in names}
        if any(v < 0 for v in dmax.values()):
            raise ValueError("d_max must be non-negative")
        delays = {n: int(self.entry_delays.get(n, 0)) for n in names}
        if any(v < 0 for v in delays.values()):
            raise ValueError("entry delays must be non-negative")
        for n in self.entry_delays:
            if n not in names:
                raise ValueError(f"entry delay for unknown train {n}")
        weights = {n: float(self.weights.get(n, 1.0)) for n in names}
        if not (self.p_pair > 0 and self.p_sum > 0):
            raise ValueError("penalty weights must be positive")
        object.__setattr__(self, "d_max", dmax)
        object.__setattr__(self, "entry_delays", delays)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "p_pair", float(self.p_pair))
        object.__setattr__(self, "p_sum", float(self.p_sum))
        for t in self.timetable.trains:
            self._check_route(t)

    def _check_route(self, t: Train) -> None:
        net = self.network
        pos = [net.position(b) for b in t.route]
        step = 1 if t.direction == 0 else -1
        if any(b - a != step for a, b in zip(pos, pos[1:])):
            raise ValueError(f"train {t.name}: route is not contiguous in its direction")
        if not (net.block(t.route[0]).is_station and net.block(t.route[-1]).is_station):
            raise ValueError(f"train {t.name}: route must start and end at stations")

    @property
    def trains(self) -> tuple:
        return self.timetable.trains

    def stations(self, train: Train) -> list[int]:
        """Station blocks visited by ``train`` in order."""
        return [b for b in train.route if self.network.block(b).is_station]

    def decision_stations(self, train: Train) -> list[int]:
        """Stations with a departure decision: all but the final one."""
        return self.stations(train)[:-1]

    def _between(self, train: Train, s: int) -> list[int]:
        st = self.stations(train)
        k = st.index(s)
        a, b = train.route.index(s), train.route.index(st[k + 1])
        return list(range(a + 1, b + 1))

    def next_station(self, train: Train, s: int) -> int:
        st = self.stations(train)
        return st[st.index(s) + 1]

    def reserve_sum(self, train: Train, s: int) -> int:
        """Reserves of the blocks after ``s`` up to and including the next station."""
        return sum(train.reserve[k] for k in self._between(train, s))

    def headway(self, train: Train, s: int) -> int:
        """Largest timetabled passage over the blocks strictly between ``s`` and the next station."""
        ks = self._between(train, s)[:-1]
        return max((train.passage[k] for k in ks), default=0)

    def run_time(self, train: Train, s: int) -> int:
        """Minimum time from leaving ``s`` to entering the next station."""
        return sum(train.p_min[k] for k in self._between(train, s)[:-1])


def make_train(name: str, direction: int, route, start: int, passage, p_min=None) -> Train:
    """Train whose leave times accumulate ``passage`` from entry time ``start``."""
    passage = [int(p) for p in passage]
    t, t_out = int(start), []
    for p in passage:
        t += p
        t_out.append(t)
    return Train(name, direction, tuple(route), int(start), tuple(t_out),
                 tuple(passage if p_min is None else p_min))


def propagate_primary(problem: DispatchProblem) -> dict:
    """Primary delay ``d_U(j, s)`` at every station of every train.

    The entry delay applies at the first station. Each later station gets
    ``max(0, previous - reserves)`` where the reserves are summed over the
    blocks after the previous station up to and including this one.
    """
    out = {}
    for t in problem.trains:
        st = problem.stations(t)
        d = problem.entry_delays[t.name]
        out[(t.name, st[0])] = d
        for s in st[:-1]:
            d = max(0, d - problem.reserve_sum(t, s))
            out[(t.name, problem.next_station(t, s))] = d
    return out


# ---------------------------------------------------------------- JSON


def problem_to_dict(p: DispatchProblem) -> dict:
    return {
        "blocks": [{"id": b.id, "kind": b.kind, "tracks": b.tracks} for b in p.network.blocks],
        "trains": [
            {
                "name": t.name,
                "direction": t.direction,
                "t_in": t.t_in,
                "blocks": [
                    {"block": b, "t_out": o, "p_min": m}
                    for b, o, m in zip(t.route, t.t_out, t.p_min)
                ],
            }
            for t in p.trains
        ],
        "circulations": [
            {"first": c.first, "second": c.second, "turnover": c.turnover}
            for c in p.timetable.circulations
        ],
        "entry_delays": dict(p.entry_delays),
        "d_max": dict(p.d_max),
        "weights": dict(p.weights),
        "p_pair": p.p_pair,
        "p_sum": p.p_sum,
    }


def problem_from_dict(d: Mapping) -> DispatchProblem:
    """Inverse of :func:`problem_to_dict`; raises ``InstanceFormatError`` on bad input."""
    try:
        net = Network(tuple(Block(int(b["id"]), b["kind"], int(b.get("tracks", 1))) for b in d["blocks"]))
        trains = []
        for t in d["trains"]:
            rows = t["blocks"]
            trains.append(Train(
                str(t["name"]), int(t["direction"]),
                tuple(int(r["block"]) for r in rows), int(t["t_in"]),
                tuple(int(r["t_out"]) for r in rows), tuple(int(r["p_min"]) for r in rows),
            ))
        circ = tuple(
            Circulation(str(c["first"]), str(c["second"]), int(c["turnover"]))
            for c in d.get("circulations", [])
        )
        return DispatchProblem(
            net, Timetable(tuple(trains), circ),
            entry_delays=d.get("entry_delays", {}),
            d_max=d.get("d_max", 0),
            weights=d.get("weights", {}),
            p_pair=float(d.get("p_pair", 4.0)),
            p_sum=float(d.get("p_sum", 4.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad railway problem: {exc}") from exc


def load_problem(path) -> DispatchProblem:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: {exc}") from exc
    return problem_from_dict(data)


def dump_problem(p: DispatchProblem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(p), fh, indent=2)
        fh.write("\n")
