"""Check a delay table against the dispatching conditions in delay form."""

from __future__ import annotations

from itertools import combinations

from .model import DispatchProblem, propagate_primary

__all__ = ["validate_schedule", "occupation_intervals", "PAIRWISE_CONDITIONS"]

PAIRWISE_CONDITIONS = ("passing", "single_block", "deadlock", "rolling_stock")


def _dep(problem, delays, t, s) -> int:
    return t.leave(s) + delays[(t.name, s)]


def occupation_intervals(problem: DispatchProblem, delays) -> dict:
    """Closed ``[arrive, leave]`` intervals per station: ``{station: [(train, a, b)]}``.

    Arrival at the first station is the timetabled entry plus the primary
    delay. Arrival elsewhere is departure from the previous station plus the
    minimum run time. The final station is left after its minimum passing time.
    """
    dU = propagate_primary(problem)
    out: dict = {}
    for t in problem.trains:
        st = problem.stations(t)
        arrive = t.enter(st[0]) + dU[(t.name, st[0])]
        for k, s in enumerate(st):
            if k + 1 < len(st):
                leave = _dep(problem, delays, t, s)
            else:
                leave = arrive + t.p_min[t.route.index(s)]
            out.setdefault(s, []).append((t.name, arrive, leave))
            if k + 1 < len(st):
                arrive = leave + problem.run_time(t, s)
    return out


def validate_schedule(problem: DispatchProblem, delays) -> dict:
    """Pass/fail per condition with the offending tuples.

    Parameters
    ----------
    problem : DispatchProblem
    delays : mapping
        ``{(train, station): delay}`` for every decision station.

    Returns
    -------
    dict
        ``{"passed": bool, "conditions": {name: {"passed", "violations"}}}``
        with conditions ``bounds``, ``passing``, ``single_block``,
        ``deadlock``, ``rolling_stock`` and ``capacity``.
    """
    dU = propagate_primary(problem)
    trains = problem.trains
    missing = [(t.name, s) for t in trains for s in problem.decision_stations(t) if (t.name, s) not in delays]
    if missing:
        raise KeyError(f"delay table lacks entries for {missing}")
    res = {k: [] for k in ("bounds",) + PAIRWISE_CONDITIONS + ("capacity",)}

    for t in trains:
        for s in problem.decision_stations(t):
            d, lo = delays[(t.name, s)], dU[(t.name, s)]
            if not lo <= d <= lo + problem.d_max[t.name]:
                res["bounds"].append({"train": t.name, "station": s, "delay": d,
                                      "window": [lo, lo + problem.d_max[t.name]]})
        ds = problem.decision_stations(t)
        for s, nxt in zip(ds, ds[1:]):
            if delays[(t.name, nxt)] < delays[(t.name, s)] - problem.reserve_sum(t, s):
                res["passing"].append({"train": t.name, "from": s, "to": nxt})

    for a, b in combinations(trains, 2):
        if a.direction == b.direction:
            for s in sorted(set(problem.decision_stations(a)) & set(problem.decision_stations(b))):
                if problem.next_station(a, s) != problem.next_station(b, s):
                    continue
                ta, tb = _dep(problem, delays, a, s), _dep(problem, delays, b, s)
                bad = (ta <= tb < ta + problem.headway(a, s)) or (tb <= ta < tb + problem.headway(b, s))
                if bad:
                    res["single_block"].append({"trains": [a.name, b.name], "station": s,
                                                "departures": [ta, tb]})
        else:
            j, k = (a, b) if a.direction == 0 else (b, a)
            for s in problem.decision_stations(j):
                nxt = problem.next_station(j, s)
                if nxt not in problem.decision_stations(k) or problem.next_station(k, nxt) != s:
                    continue
                tj, tk = _dep(problem, delays, j, s), _dep(problem, delays, k, nxt)
                ok = tk >= tj + problem.run_time(j, s) or tj >= tk + problem.run_time(k, nxt)
                if not ok:
                    res["deadlock"].append({"trains": [j.name, k.name], "stations": [s, nxt],
                                            "departures": [tj, tk]})

    for c in problem.timetable.circulations:
        a, b = problem.timetable.train(c.first), problem.timetable.train(c.second)
        last, first = problem.decision_stations(a)[-1], problem.decision_stations(b)[0]
        R = b.leave(first) - a.leave(last) - problem.run_time(a, last) - c.turnover
        if not delays[(b.name, first)] > delays[(a.name, last)] - R:
            res["rolling_stock"].append({"trains": [a.name, b.name], "stations": [last, first]})

    for s, occ in sorted(occupation_intervals(problem, delays).items()):
        cap = problem.network.block(s).tracks
        for combo in combinations(occ, cap + 1):
            if max(x[1] for x in combo) <= min(x[2] for x in combo):
                res["capacity"].append({"station": s, "trains": [x[0] for x in combo],
                                        "tracks": cap})

    conditions = {k: {"passed": not v, "violations": v} for k, v in res.items()}
    return {"passed": all(c["passed"] for c in conditions.values()), "conditions": conditions}
