"""Desk-scale problems shaped like two single-track line segments.

The block layouts, train counts, priorities and ``d_max`` follow the studied
segments; running times and disturbances are synthetic stand-ins.
"""

from __future__ import annotations

from .model import Block, Circulation, DispatchProblem, Network, Timetable, make_train

__all__ = ["line216_problem", "line191_problem", "toy_problem"]


def _net(layout) -> Network:
    return Network(tuple(Block(i, "station", t) if t else Block(i, "line") for i, t in layout))


def _run(route, net, start, line_times, dwell=2):
    """Train over ``route`` with 1-minute minimum dwell and ``dwell`` timetabled dwell."""
    passage, pmin = [], []
    for k, b in enumerate(route):
        if net.block(b).is_station:
            p = 1 if k in (0, len(route) - 1) else dwell
            passage.append(p)
            pmin.append(1)
        else:
            passage.append(line_times[b])
            pmin.append(line_times[b])
    return passage, pmin


def line216_problem(d_max: int = 7, p_pair: float = 4.0, p_sum: float = 4.0) -> DispatchProblem:
    """Three stations, two line blocks, two Inter-City trains and one regional train.

    One Inter-City train enters 15 minutes late at the far end and the other
    5 minutes late, which creates meet conflicts on both line blocks.
    """
    net = _net([(1, 4), (2, 0), (3, 2), (4, 0), (5, 2)])
    fwd, back = [1, 2, 3, 4, 5], [5, 4, 3, 2, 1]
    ic = {2: 8, 4: 6}
    reg = {2: 10, 4: 8}
    trains = []
    for name, d, route, start, times in (
        ("IC3521", 0, fwd, -1, ic),
        ("IC5320", 1, back, -1, ic),
        ("R90602", 0, fwd, 16, reg),
    ):
        p, m = _run(route, net, start, times)
        trains.append(make_train(name, d, route, start, p, m))
    return DispatchProblem(
        net, Timetable(tuple(trains)),
        entry_delays={"IC5320": 15, "IC3521": 5},
        d_max=d_max,
        weights={"IC3521": 1.5, "IC5320": 1.5, "R90602": 1.0},
        p_pair=p_pair, p_sum=p_sum,
    )


def line191_problem(d_max: int = 10, p_pair: float = 4.0, p_sum: float = 4.0,
                    entry_delays=None) -> DispatchProblem:
    """Four stations, six line blocks, two Inter-City and four regional trains.

    The Inter-City pair shares a train set with a 20-minute turnover. Trains
    towards the last block have priority 0.9; the others 1.5 (Inter-City) or
    1.0 (regional).
    """
    net = _net([(1, 2), (2, 0), (3, 2), (4, 0), (5, 0), (6, 0), (7, 2), (8, 0), (9, 0), (10, 2)])
    fwd = list(range(1, 11))
    back = fwd[::-1]
    ic = {2: 4, 4: 3, 5: 2, 6: 3, 8: 4, 9: 3}
    reg = {2: 5, 4: 3, 5: 3, 6: 4, 8: 5, 9: 4}
    spec = (
        ("Ks1", 0, fwd, 0, reg),
        ("Ks2", 1, back, 8, reg),
        ("IC1", 0, fwd, 37, ic),
        ("IC2", 1, back, 94, ic),
        ("Ks3", 0, fwd, 62, reg),
        ("Ks4", 1, back, 71, reg),
    )
    trains = []
    for name, d, route, start, times in spec:
        p, m = _run(route, net, start, times)
        trains.append(make_train(name, d, route, start, p, m))
    weights = {t.name: (0.9 if t.direction == 0 else 1.5 if t.name.startswith("IC") else 1.0)
               for t in trains}
    return DispatchProblem(
        net, Timetable(tuple(trains), (Circulation("IC1", "IC2", 20),)),
        entry_delays=entry_delays if entry_delays is not None else {"IC1": 8, "Ks4": 6},
        d_max=d_max, weights=weights, p_pair=p_pair, p_sum=p_sum,
    )


def toy_problem(d_max: int = 2, p_pair: float = 4.0, p_sum: float = 4.0) -> DispatchProblem:
    """Two stations, one line block, two same-direction trains: 2 * (d_max + 1) bits."""
    net = _net([(1, 2), (2, 0), (3, 2)])
    route = [1, 2, 3]
    a = make_train("A", 0, route, 0, [1, 3, 1])
    b = make_train("B", 0, route, 1, [1, 3, 1])
    return DispatchProblem(
        net, Timetable((a, b)), entry_delays={"A": 1}, d_max=d_max,
        weights={"A": 1.0, "B": 1.0}, p_pair=p_pair, p_sum=p_sum,
    )
