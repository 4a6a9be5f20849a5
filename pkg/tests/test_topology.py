import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinglass.errors import InstanceFormatError
from spinglass.model import IsingInstance, ising_energy, random_ising
from spinglass.topology import (
    NODE_COUNT,
    TABLE_NODE_COUNT,
    WorkingGraph,
    apply_embedding,
    chain_strength_from_scale,
    check_chimera_witness,
    chimera_coloring,
    dump_working_graph,
    generate_topology,
    load_embedding,
    load_working_graph,
    resolve_chains,
    validate_embedding,
)

# logical 0 -> qubit 3, logical 1 -> chain 0-4, logical 2 -> qubit 5 on one Chimera cell
CELL_EMB = {0: [3], 1: [0, 4], 2: [5]}
CELL_INST = IsingInstance(3, {0: 1.0, 1: 1.0, 2: 1.0}, {(0, 1): -1.0, (1, 2): -1.0})


def physical_energy(emb_inst, spins_by_qubit):
    inst = emb_inst.instance
    word = sum(1 << t for t, q in enumerate(emb_inst.qubits) if spins_by_qubit[q] > 0)
    return ising_energy(inst, word)


class TestChimera:
    @pytest.mark.parametrize("n,nodes,edges", [(1, 8, 16), (2, 32, 80), (16, 2048, 6016)])
    def test_counts(self, n, nodes, edges):
        wg = generate_topology("chimera", n)
        assert len(wg.nodes) == nodes and len(wg.edges) == edges

    @pytest.mark.parametrize("n", [1, 3, 4])
    def test_bipartite(self, n):
        color = chimera_coloring(n)
        wg = generate_topology("chimera", n)
        assert all(color[u] != color[v] for u, v in wg.edges)

    def test_degree_bound(self):
        wg = generate_topology("chimera", 4)
        assert max(len(wg.neighbours(v)) for v in wg.nodes) == 6

    def test_identity_witness(self):
        wg = generate_topology("chimera", 2)
        assert check_chimera_witness(wg, 2, {i: i for i in range(32)})["passed"]

    def test_witness_missing_coupler(self):
        full = generate_topology("chimera", 2)
        wg = WorkingGraph(full.nodes, full.edges[1:])
        report = check_chimera_witness(wg, 2, {i: i for i in range(32)})
        assert not report["passed"] and "absent" in report["problems"][0]


class TestOtherFamilies:
    @pytest.mark.parametrize("kind,n", [("pegasus", 16), ("zephyr", 15)])
    def test_node_sets(self, kind, n):
        wg = generate_topology(kind, n)
        assert len(wg.nodes) == NODE_COUNT[kind](n) and not wg.complete

    def test_zephyr_table_agrees(self):
        assert NODE_COUNT["zephyr"](15) == TABLE_NODE_COUNT[("zephyr", 15)] == 7440

    def test_pegasus_table_differs(self):
        assert NODE_COUNT["pegasus"](16) == 5760 and TABLE_NODE_COUNT[("pegasus", 16)] == 5640

    @pytest.mark.parametrize("kind,n", [("hex", 2), ("chimera", 0), ("pegasus", 1)])
    def test_rejected(self, kind, n):
        with pytest.raises(ValueError):
            generate_topology(kind, n)


class TestGraphFiles:
    def test_triangle(self, tmp_path):
        path = tmp_path / "tri.txt"
        path.write_text("# triangle\n0 1\n1 2\n2 0\n")
        wg = load_working_graph(path)
        assert wg.nodes == (0, 1, 2) and wg.edges == ((0, 1), (0, 2), (1, 2))

    @pytest.mark.parametrize("body", ["0 0\n", "0 1\n1 0\n", "0 1 2\n", "a b\n"])
    def test_malformed(self, tmp_path, body):
        path = tmp_path / "bad.txt"
        path.write_text(body)
        with pytest.raises(InstanceFormatError):
            load_working_graph(path)

    def test_declared_count(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\n")
        with pytest.raises(InstanceFormatError):
            load_working_graph(path, declared_nodes=3)

    def test_round_trip(self, tmp_path):
        wg = generate_topology("chimera", 2)
        path = tmp_path / "c2.txt"
        dump_working_graph(wg, path)
        assert load_working_graph(path) == wg

    def test_embedding_file(self, tmp_path):
        path = tmp_path / "emb.json"
        path.write_text('{"0": [3], "1": [0, 4], "2": [5]}')
        assert load_embedding(path) == CELL_EMB

    def test_embedding_file_invalid(self, tmp_path):
        path = tmp_path / "emb.json"
        path.write_text('{"0": "x"}')
        with pytest.raises(InstanceFormatError):
            load_embedding(path)


class TestEmbedding:
    @pytest.fixture
    def cell(self):
        return generate_topology("chimera", 1)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0])
    def test_all_down(self, cell, alpha):
        emb = apply_embedding(CELL_INST, CELL_EMB, alpha, cell)
        assert emb.qubits == (0, 3, 4, 5) and emb.chain_links == 1
        assert physical_energy(emb, dict.fromkeys(emb.qubits, -1)) == -5.0 - alpha

    def test_layout(self, cell):
        emb = apply_embedding(CELL_INST, CELL_EMB, 2.0, cell)
        # columns (z0, z3, z4, z5)
        assert emb.instance.h == {0: 0.5, 1: 1.0, 2: 0.5, 3: 1.0}
        assert emb.instance.J == {(1, 2): -1.0, (0, 3): -1.0, (0, 2): -2.0}

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    def test_aligned_chains(self, cell, alpha):
        emb = apply_embedding(CELL_INST, CELL_EMB, alpha, cell)
        for s in itertools.product((-1, 1), repeat=3):
            phys = {q: s[i] for i, c in CELL_EMB.items() for q in c}
            word = sum(1 << i for i in range(3) if s[i] > 0)
            assert physical_energy(emb, phys) == ising_energy(CELL_INST, word) - alpha

    def test_random_instance_on_chimera(self):
        wg = generate_topology("chimera", 2)
        # four logical spins as length-2 chains inside cells, coupled through the vertical links
        emb = {0: [0, 4], 1: [16, 20], 2: [8, 12], 3: [24, 28]}
        inst = random_ising(4, seed=3, edges=[(0, 1), (0, 2), (1, 3), (2, 3)])
        assert validate_embedding(emb, wg, inst)["passed"]
        e = apply_embedding(inst, emb, 1.5, wg)
        for w in range(16):
            phys = {q: (1 if (w >> i) & 1 else -1) for i, c in emb.items() for q in c}
            assert physical_energy(e, phys) == pytest.approx(ising_energy(inst, w) - 1.5 * 4, abs=1e-12)

    def test_broken_chain_rejected(self, cell):
        with pytest.raises(ValueError):
            apply_embedding(CELL_INST, {0: [3], 1: [0, 1], 2: [5]}, 1.0, cell)

    def test_negative_alpha(self, cell):
        with pytest.raises(ValueError):
            apply_embedding(CELL_INST, CELL_EMB, -1.0, cell)

    def test_chain_strength(self, three_spin):
        assert chain_strength_from_scale(three_spin, 2.0) == 6.0
        assert chain_strength_from_scale(IsingInstance(2, {0: 1.0}), 1.5) == 1.5


class TestValidation:
    @pytest.fixture
    def cell(self):
        return generate_topology("chimera", 1)

    def test_pass(self, cell):
        assert validate_embedding(CELL_EMB, cell, CELL_INST) == {
            "passed": True,
            "checks": {"coverage": [], "qubits": [], "disjoint": [], "connected": [], "couplers": []},
        }

    def test_overlap(self, cell):
        report = validate_embedding({0: [4], 1: [0, 4], 2: [5]}, cell, CELL_INST)
        assert report["checks"]["disjoint"] == [{"qubit": 4, "logical": [0, 1]}]

    def test_disconnected(self, cell):
        report = validate_embedding({0: [3], 1: [0, 1], 2: [5]}, cell, CELL_INST)
        assert report["checks"]["connected"] == [{"logical": 1, "gaps": [(0, 1)]}]

    def test_missing_coupler_and_qubit(self, cell):
        report = validate_embedding({0: [3], 1: [4], 2: [99]}, cell, CELL_INST)
        assert report["checks"]["qubits"] == [{"logical": 2, "qubit": 99}]
        assert report["checks"]["couplers"] == [[1, 2]]

    def test_coverage(self, cell):
        report = validate_embedding({0: [3], 1: [0, 4]}, cell, CELL_INST)
        assert report["checks"]["coverage"] == [2] and not report["passed"]


class TestResolve:
    def test_majority(self):
        out, kept = resolve_chains([[1, 1, -1]], {0: [0, 1, 2]})
        assert out.tolist() == [[1]] and kept.tolist() == [0]

    def test_discard(self):
        samples = np.array([[1, 1, -1], [-1, -1, 1], [1, -1, 1]])
        out, kept = resolve_chains(samples, {0: [0, 1], 1: [2]}, "discard")
        assert kept.tolist() == [0, 1] and out.tolist() == [[1, -1], [-1, 1]]

    def test_tie_needs_seed(self):
        with pytest.raises(ValueError):
            resolve_chains([[1, -1]], {0: [0, 1]})

    def test_tie_fairness(self):
        samples = np.tile([1, -1], (20000, 1))
        out, _ = resolve_chains(samples, {0: [0, 1]}, seed=11)
        assert 0.48 <= (out == 1).mean() <= 0.52

    def test_tie_deterministic(self):
        samples = np.tile([1, -1], (50, 1))
        a, _ = resolve_chains(samples, {0: [0, 1]}, seed=5)
        b, _ = resolve_chains(samples, {0: [0, 1]}, seed=5)
        assert np.array_equal(a, b)

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            resolve_chains([[1]], {0: [0]}, "vote")

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=3), min_size=1, max_size=10))
    def test_odd_chain_matches_sign(self, rows):
        out, _ = resolve_chains(rows, {0: [0, 1, 2]})
        assert out[:, 0].tolist() == [1 if sum(r) > 0 else -1 for r in rows]
