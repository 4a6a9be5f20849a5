"""Time the compiled kernels against the numpy fallback and check their outputs agree.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""

import argparse
import json
import time
from contextlib import contextmanager

import numpy as np

from spinglass import _backend
from spinglass.bruteforce import SearchConfig, ground_search_gray, spectrum_search
from spinglass.heuristics import default_annealing_ladder, simulated_annealing
from spinglass.model import random_ising, random_qubo


@contextmanager
def using(kernels):
    saved = _backend.kernels
    _backend.kernels = kernels
    try:
        yield
    finally:
        _backend.kernels = saved


def word_energies_case():
    q = random_qubo(24, seed=1)
    b, A = np.ascontiguousarray(q.linear_vector), np.ascontiguousarray(q.quadratic_matrix)
    words = np.random.default_rng(0).integers(0, 1 << 24, 1 << 18).astype(np.uint64)

    def run():
        out = np.empty(len(words))
        _backend.kernels.word_energies(b, A, q.offset, words, out)
        return out.tobytes()
    return run


def spectrum_case():
    inst = random_ising(20, seed=2)
    return lambda: spectrum_search(inst, SearchConfig(k=50, workers=1))


def gray_case():
    inst = random_ising(22, seed=3)
    return lambda: ground_search_gray(inst, SearchConfig(workers=1))


def annealing_case():
    inst = random_ising(64, seed=4, density=0.2)
    return lambda: simulated_annealing(inst, 100, default_annealing_ladder(), 16, seed=5).best_energy


CASES = {
    "word_energies n=24, 2^18 words": word_energies_case,
    "spectrum_search n=20 k=50": spectrum_case,
    "ground_search_gray n=22": gray_case,
    "simulated_annealing n=64, 16x100 sweeps": annealing_case,
}


def best_time(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None, help="also write the table as JSON")
    args = ap.parse_args(argv)

    if _backend.compiled_kernels is None:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    rows = []
    print(f"{'case':<42}{'compiled s':>12}{'python s':>12}{'speedup':>10}  equal")
    for name, make in CASES.items():
        fn = make()
        with using(_backend.compiled_kernels):
            tc, rc = best_time(fn, args.repeat)
        with using(_backend.python_kernels):
            tp, rp = best_time(fn, args.repeat)
        equal = rc == rp
        rows.append({"case": name, "compiled": tc, "python": tp, "speedup": tp / tc, "equal": equal})
        print(f"{name:<42}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {equal}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0 if all(r["equal"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
