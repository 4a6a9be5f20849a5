"""Desk-scale acceptance suite; one PASS/FAIL line per criterion in the terminal summary."""

import itertools
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, spins_word
from spinglass.bruteforce import (
    GraySearch,
    SearchConfig,
    delta_energy,
    flip_index,
    ground_search_gray,
    spectrum_search,
    split_delta,
)
from spinglass.dynamics import (
    FixedPointCode,
    build_clock_system,
    exact_trajectory,
    qubit_rotation_spec,
    simulate_pipeline,
    step_propagators,
)
from spinglass.heuristics import time_to_solution
from spinglass.model import (
    IsingInstance,
    QuboInstance,
    enumerate_spectrum_naive,
    ising_energy,
    ising_to_qubo,
    qubo_energy,
    random_ising,
)
from spinglass.railway import (
    OneHotViolation,
    assemble_qubo,
    decode_schedule,
    defect_spectrum,
    exact_onehot_search,
    line191_problem,
    line216_problem,
    validate_schedule,
)
from spinglass.tn import (
    ClusterLattice,
    TnConfig,
    branch_and_bound,
    build_peps,
    conditional_probability,
    contract_boundary,
    mps_imaginary_time,
    random_lattice_instance,
)
from spinglass.topology import apply_embedding, generate_topology, resolve_chains


@pytest.fixture
def verdict(capsys):
    """Record and print one criterion line, then fail the test if any check failed."""
    def record(number, checks):
        passed = all(ok for _, ok in checks)
        detail = "; ".join(f"{name} {'ok' if ok else 'FAILED'}" for name, ok in checks)
        ACCEPTANCE.append((number, passed, detail))
        with capsys.disabled():
            print(f"\n{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
        assert passed, detail
    return record


def gaussian_qubo(n, rng):
    b = rng.normal(size=n)
    a = {(i, j): float(rng.normal()) for i in range(n) for j in range(i + 1, n)}
    return QuboInstance(n, dict(enumerate(b.tolist())), a, float(rng.normal()))


ISING_TABLE = {
    (-1, -1, -1): -1, (1, -1, -1): -5, (-1, -1, 1): 7, (1, -1, 1): 3,
    (-1, 1, -1): -5, (1, 1, -1): 3, (-1, 1, 1): -5, (1, 1, 1): 3,
}
QUBO_TABLE = {
    (0, 0, 0): 0, (1, 0, 0): -4, (0, 0, 1): 8, (1, 0, 1): 4,
    (0, 1, 0): -4, (1, 1, 0): 4, (0, 1, 1): -4, (1, 1, 1): 4,
}

# (z0, z3, z4, z5), constant part, printed sign of alpha; first eight printed as feasible
EMBEDDING_TABLE = [
    ((-1, -1, -1, -1), -5.0, -1), ((-1, 1, 1, -1), -2.0, -1), ((-1, -1, 1, -1), -2.0, -1),
    ((1, 1, -1, 1), 2.0, -1), ((1, -1, -1, 1), -2.0, -1), ((-1, 1, -1, -1), -1.0, -1),
    ((1, -1, 1, 1), 1.0, -1), ((1, 1, 1, 1), 1.0, -1),
    ((1, 1, 1, -1), 1.0, 1), ((1, -1, 1, -1), 1.0, 1), ((-1, -1, -1, 1), -1.0, 1),
    ((1, 1, -1, -1), 2.0, 1), ((1, -1, -1, -1), -2.0, 1), ((-1, -1, 1, 1), 2.0, 1),
    ((-1, 1, 1, 1), 2.0, 1), ((-1, 1, -1, 1), 3.0, 1),
]


def test_criterion_01_worked_example(verdict, three_spin):
    q = ising_to_qubo(three_spin)
    ising_ok = all(ising_energy(three_spin, spins_word(s)) == e for s, e in ISING_TABLE.items())
    qubo_ok = all(qubo_energy(q, spins_word(b)) - q.offset == e for b, e in QUBO_TABLE.items())
    coeff_ok = q.b == {0: -4, 1: -4, 2: 8} and q.a == {(0, 1): 12, (1, 2): -8}
    verdict(1, [("ising table", ising_ok), ("qubo table", qubo_ok), ("coefficients", coeff_ok),
                ("offset 1", -q.offset == 1)])


def test_criterion_02_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    same = True
    for seed in range(100):
        inst = random_ising(16, seed=seed)
        ref = enumerate_spectrum_naive(inst, 100)
        for workers in (1, 4):
            got = spectrum_search(inst, SearchConfig(k=100, workers=workers))
            same &= got.entries == ref.entries
    elapsed = time.perf_counter() - t0
    verdict(2, [("100 instances x workers {1,4}", same), (f"runtime {elapsed:.1f}s < 60s", elapsed < 60)])


def test_criterion_03_gray_exact_and_fast(verdict):
    same = True
    for seed in range(100):
        inst = random_ising(20, seed=1000 + seed)
        e, w = spectrum_search(inst, SearchConfig(k=1)).ground
        same &= ground_search_gray(inst) == (w, e)
    t0 = time.perf_counter()
    ground_search_gray(random_ising(28, seed=7))
    elapsed = time.perf_counter() - t0
    verdict(3, [("100 n=20 grounds", same), (f"n=28 in {elapsed:.1f}s < 120s", elapsed < 120)])


def test_criterion_04_gray_mechanics(verdict, rng):
    m_max = 20
    flips = np.array([flip_index(i) for i in range((1 << m_max) - 1)], dtype=np.int64)
    words = np.concatenate([[0], np.bitwise_xor.accumulate(np.left_shift(1, flips - 1))])
    perm_ok = all(np.array_equal(np.sort(words[: 1 << m]), np.arange(1 << m)) for m in range(1, m_max + 1))

    inst = gaussian_qubo(24, rng)
    with GraySearch(inst, SearchConfig(M=3, resync_interval=0, workers=1)) as gs:
        gs.advance(1 << 20)
        st = gs.state
        steps = st.steps
        exact = np.array([qubo_energy(inst, int(w)) for w in st.current_states])
        err = float(np.max(np.abs(st.current_energies - exact) / np.maximum(1.0, np.abs(exact))))
    verdict(4, [("permutation for m<=20", perm_ok), ("2^20 flips taken", steps == 1 << 20),
                (f"drift {err:.1e} <= 1e-9", err <= 1e-9)])


def test_criterion_05_split_delta(verdict, rng):
    worst = 0.0
    for t in range(100):
        n = int(rng.integers(3, 13))
        inst = gaussian_qubo(n, rng)
        for _ in range(100):
            M = int(rng.integers(0, n))
            kbit = int(rng.integers(1, n - M + 1))
            q = int(rng.integers(0, 1 << n))
            prefix_part, suffix_part = split_delta(inst, q, kbit, M)
            d = delta_energy(inst, q, kbit)
            worst = max(worst, abs(prefix_part + suffix_part - d) / max(abs(d), 1e-300))
    verdict(5, [(f"10^4 triples, worst relative {worst:.1e} <= 1e-12", worst <= 1e-12)])


def _enumerated_conditional(lat, beta, prefix, site):
    inst = lat.instance
    words = np.arange(1 << inst.n, dtype=np.uint64)
    e = np.array([ising_energy(inst, int(w)) for w in words])
    w = np.exp(-beta * (e - e.min()))
    configs = np.array([lat.config_of(int(x)) for x in words])
    mask = np.all(configs[:, :site] == np.asarray(prefix, dtype=int), axis=1)
    p = np.bincount(configs[mask, site], weights=w[mask], minlength=1 << len(lat.cluster_spins[site]))
    return p / p.sum()


def test_criterion_06_tn_exactness(verdict):
    cond_err = 0.0
    for seed in range(5):
        inst = random_lattice_instance(2, 3, 2, seed=seed)
        lat = ClusterLattice.grid(inst, 2, 3)
        net = build_peps(lat, 1.0)
        bnd = contract_boundary(net, 256)
        rng = np.random.default_rng(seed)
        for site in range(6):
            prefix = rng.integers(0, 4, site).tolist()
            got = conditional_probability(net, bnd, prefix, site)
            cond_err = max(cond_err, float(np.max(np.abs(got - _enumerated_conditional(lat, 1.0, prefix, site)))))

    # earlier sites touching neither the current site nor any later one must not matter
    loc_err, sensitive = 0.0, 0
    for seed in range(3):
        inst = random_lattice_instance(4, 4, 1, seed=seed)
        net = build_peps(ClusterLattice.grid(inst, 4, 4), 1.0)
        bnd = contract_boundary(net, 16)
        rng = np.random.default_rng(100 + seed)
        for site in range(16):
            r, c = divmod(site, 4)
            prefix = rng.integers(0, 2, site)
            base = conditional_probability(net, bnd, prefix.tolist(), site)
            remote = [s for s in range(site) if s // 4 < r - 1 or (s // 4 == r - 1 and s % 4 < c)]
            for _ in range(4):
                other = prefix.copy()
                other[remote] = rng.integers(0, 2, len(remote))
                p = conditional_probability(net, bnd, other.tolist(), site)
                loc_err = max(loc_err, float(np.max(np.abs(p - base))))
            if c > 0:
                other = prefix.copy()
                other[site - 1] ^= 1
                sensitive += not np.allclose(conditional_probability(net, bnd, other.tolist(), site), base)
    verdict(6, [(f"2x3 conditionals {cond_err:.1e} <= 1e-8", cond_err <= 1e-8),
                (f"4x4 locality {loc_err:.1e} <= 1e-12", loc_err <= 1e-12),
                ("left neighbour changes the conditional", sensitive > 0)])


def test_criterion_07_tn_branch_and_bound(verdict):
    shapes = [(3, 3, 2), (2, 4, 2), (3, 2, 3), (2, 3, 3)]
    hits, certified_wrong = 0, 0
    for seed in range(20):
        rows, cols, per = shapes[seed % 4]
        inst = random_lattice_instance(rows, cols, per, seed=1000 + seed)
        res = branch_and_bound(ClusterLattice.grid(inst, rows, cols), TnConfig(beta=3.0, chi=16, cutoff=1e-3))
        ref = spectrum_search(inst, SearchConfig(k=1)).ground
        hits += res.spectrum.ground == ref
        certified_wrong += res.certified and res.spectrum.ground != ref
    verdict(7, [(f"{hits}/20 grounds", hits == 20), ("certified results all correct", certified_wrong == 0)])


def test_criterion_08_mps(verdict):
    exact_two = all(
        mps_imaginary_time(random_ising(2, seed=s), 2, 1.0, 0.25, k=4, cutoff=0.0, max_branches=4).spectrum
        == enumerate_spectrum_naive(random_ising(2, seed=s), 4)
        for s in range(5)
    )
    insts = [random_ising(12, seed=500 + s) for s in range(20)]
    grounds = [enumerate_spectrum_naive(i, 1).ground for i in insts]
    rates = [sum(mps_imaginary_time(i, D, 1.0, 0.25).spectrum.ground[0] == g[0] for i, g in zip(insts, grounds))
             for D in (4, 8, 16, 32, 64)]
    verdict(8, [("n=2 exact at D=2", exact_two),
                (f"rates {rates} non-decreasing", all(a <= b for a, b in zip(rates, rates[1:]))),
                ("20/20 at D=64", rates[-1] == 20)])


def test_criterion_09_dynamics(verdict):
    t0 = time.perf_counter()
    spec = qubit_rotation_spec(6)
    traj = simulate_pipeline(spec, FixedPointCode(0, 2))
    elapsed = time.perf_counter() - t0
    rabi = [[1, 0], [0, 1], [-1, 0], [0, -1], [1, 0], [0, 1]]
    U = step_propagators(spec)
    cs = build_clock_system(U, spec.psi0)
    residual = float(np.linalg.norm(cs.A @ exact_trajectory(U, spec.psi0).ravel() - cs.phi))
    verdict(9, [("24 variables", traj.diagnostics["variables"] == 24),
                ("exact Rabi sequence", traj.normalized.tolist() == rabi),
                (f"clock residual {residual:.1e} <= 1e-12", residual <= 1e-12),
                (f"runtime {elapsed:.1f}s < 30s", elapsed < 30)])


def _schedule_feasible(problem, vmap, word):
    try:
        delays = decode_schedule(int(word), vmap)
    except OneHotViolation:
        return False
    conds = validate_schedule(problem, delays)["conditions"]
    return all(conds[k]["passed"] for k in ("bounds", "passing", "single_block", "deadlock", "rolling_stock"))


def test_criterion_10_railway(verdict):
    t0 = time.perf_counter()
    p216 = line216_problem(p_pair=4.0, p_sum=4.0)
    q216, vmap = assemble_qubo(p216)
    q191, _ = assemble_qubo(line191_problem())
    e, w = exact_onehot_search(p216, 1, qubo=(q216, vmap)).ground
    report = validate_schedule(p216, decode_schedule(int(w), vmap))
    # 2^48 states are out of reach for plain enumeration; the defect-ordered search is exact
    spec, _ = defect_spectrum(p216, 5000, qubo=(q216, vmap))
    feas = [en for en, wd in spec.entries if _schedule_feasible(p216, vmap, wd)]
    infeas = [en for en, wd in spec.entries if not _schedule_feasible(p216, vmap, wd)]
    strict = bool(feas) and (not infeas or max(feas) < min(infeas))
    elapsed = time.perf_counter() - t0
    verdict(10, [("Line 216 has 48 variables", q216.n == 48), ("Line 191 has 198 variables", q191.n == 198),
                 ("optimum validates with capacity", report["passed"] and report["conditions"]["capacity"]["passed"]),
                 (f"strict separation over lowest 5000 (feasible max {max(feas) if feas else None}, "
                  f"infeasible min {min(infeas) if infeas else None})", strict),
                 (f"runtime {elapsed:.1f}s < 600s", elapsed < 600)])


def test_criterion_11_embedding(verdict):
    inst = IsingInstance(3, {0: 1.0, 1: 1.0, 2: 1.0}, {(0, 1): -1.0, (1, 2): -1.0})
    chains = {0: [3], 1: [0, 4], 2: [5]}
    cell = generate_topology("chimera", 1)

    def energy(z, alpha):
        emb = apply_embedding(inst, chains, alpha, cell)
        spins = dict(zip((0, 3, 4, 5), z))
        return ising_energy(emb.instance, sum(1 << t for t, q in enumerate(emb.qubits) if spins[q] > 0))

    constants_ok = all(energy(z, 0.0) == c for z, c, _ in EMBEDDING_TABLE)
    wrong_sign = [z for z, c, s in EMBEDDING_TABLE for a in (1.0, 2.0) if energy(z, a) != c + s * a]
    configs = list(itertools.product((-1, 1), repeat=4))
    aligned = [energy(z, 2.0) for z in configs if z[0] == z[2]]
    broken = [energy(z, 2.0) for z in configs if z[0] != z[2]]
    inversion = energy((1, 1, 1, 1), 1.0) > energy((1, -1, -1, -1), 1.0)

    samples = np.tile([1, -1], (10**4, 1))
    resolved, _ = resolve_chains(samples, {0: [0, 1]}, seed=2024)
    up = float((resolved == 1).mean())
    verdict(11, [("constant parts of all 16 rows", constants_ok),
                 (f"alpha terms ({len(set(wrong_sign))} rows disagree)", not wrong_sign),
                 (f"strict separation at alpha=2 (aligned max {max(aligned)}, broken min {min(broken)})",
                  max(aligned) < min(broken)),
                 ("inversion pair at alpha=1", inversion),
                 (f"tie fairness {up:.4f} in [0.48, 0.52]", 0.48 <= up <= 0.52)])


def test_criterion_12_tts(verdict):
    equal = time_to_solution(2.5, 0.99, 0.99) == pytest.approx(2.5, rel=1e-12)
    ref = time_to_solution(1.0, 0.5, 0.99)
    value_ok = abs(ref - math.log(0.01) / math.log(0.5)) <= 1e-9 and abs(ref - 6.6439) < 1e-4
    verdict(12, [("p_succ = p_target gives T", equal), (f"reference value {ref:.6f}", value_ok),
                 ("p_succ = 0 unbounded", time_to_solution(1.0, 0.0) == math.inf)])
