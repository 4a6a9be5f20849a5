"""Annealer working graphs and minor embeddings with chain-break resolution.

Chimera qubit ``(row, col, shore, k)`` of ``C_n`` has index
``((row * n + col) * 2 + shore) * 4 + k``. Shore 0 couples to the same qubit in
the cell below, shore 1 to the cell on the right.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InstanceFormatError
from .model import IsingInstance

__all__ = [
    "WorkingGraph",
    "EmbeddedInstance",
    "NODE_COUNT",
    "TABLE_NODE_COUNT",
    "chimera_index",
    "chimera_coloring",
    "generate_topology",
    "load_working_graph",
    "dump_working_graph",
    "check_chimera_witness",
    "load_embedding",
    "apply_embedding",
    "chain_strength_from_scale",
    "resolve_chains",
    "validate_embedding",
]

NODE_COUNT = {
    "chimera": lambda n: 8 * n * n,
    "pegasus": lambda n: 24 * n * (n - 1),
    "zephyr": lambda n: 16 * n * (2 * n + 1),
}

# Published full-yield qubit counts, kept next to the formulas because P16 disagrees.
TABLE_NODE_COUNT = {("chimera", 4): 128, ("chimera", 8): 512, ("chimera", 12): 1152,
                    ("chimera", 16): 2048, ("pegasus", 16): 5640, ("zephyr", 15): 7440}


@dataclass(frozen=True, eq=False)
class WorkingGraph:
    """Simple undirected hardware graph.

    Parameters
    ----------
    nodes : iterable of int
    edges : iterable of (int, int)
    kind : {"chimera", "pegasus", "zephyr", "custom"}
    complete : bool
        False when only the node set is known.
    """

    nodes: tuple
    edges: tuple
    kind: str = "custom"
    complete: bool = True
    _adj: dict = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(sorted({int(v) for v in self.nodes}))
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise InstanceFormatError(f"self-loop at node {u}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise InstanceFormatError(f"duplicate edge {e}")
            seen.add(e)
        node_set = set(nodes)
        for u, v in seen:
            if u not in node_set or v not in node_set:
                raise InstanceFormatError(f"edge ({u}, {v}) uses an unknown node")
        adj = {v: set() for v in nodes}
        for u, v in seen:
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        object.__setattr__(self, "_adj", adj)

    def __eq__(self, other):
        return (isinstance(other, WorkingGraph) and self.nodes == other.nodes
                and self.edges == other.edges)

    __hash__ = None

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj.get(u, ())

    def neighbours(self, u: int) -> set:
        return self._adj[u]


def chimera_index(n: int, row: int, col: int, shore: int, k: int) -> int:
    return ((row * n + col) * 2 + shore) * 4 + k


def chimera_coloring(n: int) -> np.ndarray:
    """Two-coloring of ``C_n``: parity of ``row + col + shore``."""
    idx = np.arange(8 * n * n)
    cell, shore = divmod(idx // 4, 2)
    row, col = divmod(cell, n)
    return (row + col + shore) % 2


def _chimera_edges(n: int) -> list:
    edges = []
    for r in range(n):
        for c in range(n):
            for a in range(4):
                for b in range(4):
                    edges.append((chimera_index(n, r, c, 0, a), chimera_index(n, r, c, 1, b)))
            for k in range(4):
                if r + 1 < n:
                    edges.append((chimera_index(n, r, c, 0, k), chimera_index(n, r + 1, c, 0, k)))
                if c + 1 < n:
                    edges.append((chimera_index(n, r, c, 1, k), chimera_index(n, r, c + 1, 1, k)))
    return edges


def generate_topology(kind: str, n: int) -> WorkingGraph:
    """``C_n`` with all couplers, or the node set of ``P_n`` / ``Z_n``.

    Pegasus and Zephyr couplers are not generated; load them from a file.
    """
    if kind not in NODE_COUNT:
        raise ValueError(f"unsupported topology {kind!r}")
    n = int(n)
    if n < 1 or (kind == "pegasus" and n < 2):
        raise ValueError(f"unsupported size n={n} for {kind}")
    nodes = range(NODE_COUNT[kind](n))
    if kind == "chimera":
        return WorkingGraph(tuple(nodes), tuple(_chimera_edges(n)), kind)
    return WorkingGraph(tuple(nodes), (), kind, complete=False)


def load_working_graph(path, kind: str = "custom", declared_nodes: int | None = None) -> WorkingGraph:
    """Parse ``u v`` lines (``#`` starts a comment); nodes are the edge endpoints."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            toks = raw.split("#", 1)[0].split()
            if not toks:
                continue
            if len(toks) != 2:
                raise InstanceFormatError(f"line {lineno}: expected 'u v'")
            try:
                edges.append((int(toks[0]), int(toks[1])))
            except ValueError as exc:
                raise InstanceFormatError(f"line {lineno}: non-integer node") from exc
    nodes = {v for e in edges for v in e}
    wg = WorkingGraph(tuple(nodes), tuple(edges), kind)
    if declared_nodes is not None and len(wg.nodes) != declared_nodes:
        raise InstanceFormatError(f"graph has {len(wg.nodes)} nodes, {declared_nodes} declared")
    return wg


def dump_working_graph(wg: WorkingGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in wg.edges:
            fh.write(f"{u} {v}\n")


def check_chimera_witness(wg: WorkingGraph, n: int, witness: Mapping) -> dict:
    """Verify that ``witness`` (Chimera index -> node) maps ``C_n`` into ``wg``."""
    w = {int(k): int(v) for k, v in witness.items()}
    problems = []
    if sorted(w) != list(range(8 * n * n)):
        problems.append("witness does not cover every Chimera qubit")
    if len(set(w.values())) != len(w):
        problems.append("witness is not injective")
    missing = [(u, v) for u, v in _chimera_edges(n)
               if u in w and v in w and not wg.has_edge(w[u], w[v])]
    if missing:
        problems.append(f"{len(missing)} Chimera couplers are absent, e.g. {missing[0]}")
    return {"passed": not problems, "problems": problems}


# ---------------------------------------------------------------- embeddings


def load_embedding(path) -> dict:
    """Read ``{logical: [physical, ...]}`` JSON with integer labels."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: {exc}") from exc
    try:
        return {int(k): [int(q) for q in v] for k, v in raw.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise InstanceFormatError(f"{path}: embedding must map integers to integer lists") from exc


@dataclass(frozen=True, eq=False)
class EmbeddedInstance:
    """Physical instance; local index ``t`` is physical qubit ``qubits[t]``."""

    instance: IsingInstance
    qubits: tuple
    chain_links: int

    def local(self, qubit: int) -> int:
        return self.qubits.index(qubit)


def _coupler(chain_a, chain_b, wg):
    pairs = sorted((min(p, q), max(p, q)) for p in chain_a for q in chain_b if wg.has_edge(p, q))
    return pairs[0] if pairs else None


def apply_embedding(inst: IsingInstance, emb: Mapping, alpha: float, wg: WorkingGraph) -> EmbeddedInstance:
    """Spread an instance over chains of physical qubits.

    Each field is split equally over its chain. Each coupling goes on the
    lowest-index available coupler between the two chains. Consecutive
    qubits of a chain are bound by ``-alpha``.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    chains = {int(k): [int(q) for q in v] for k, v in emb.items()}
    missing = [i for i in range(inst.n) if i not in chains]
    if missing:
        raise ValueError(f"logical variables {missing} have no chain")
    qubits = tuple(sorted(q for c in chains.values() for q in c))
    if len(set(qubits)) != len(qubits):
        raise ValueError("chains overlap")
    loc = {q: t for t, q in enumerate(qubits)}
    h = dict.fromkeys(range(len(qubits)), 0.0)
    J: dict = {}
    for i, x in inst.h.items():
        for q in chains[i]:
            h[loc[q]] += x / len(chains[i])
    for (i, j), x in inst.J.items():
        e = _coupler(chains[i], chains[j], wg)
        if e is None:
            raise ValueError(f"no physical coupler between chains of {i} and {j}")
        key = (loc[e[0]], loc[e[1]])
        J[key] = J.get(key, 0.0) + x
    links = 0
    for i, c in chains.items():
        for p, q in zip(c, c[1:]):
            if not wg.has_edge(p, q):
                raise ValueError(f"chain of {i} is broken between qubits {p} and {q}")
            key = (min(loc[p], loc[q]), max(loc[p], loc[q]))
            J[key] = J.get(key, 0.0) - alpha
            links += 1
    h = {t: v for t, v in h.items() if v != 0}
    return EmbeddedInstance(IsingInstance(len(qubits), h, J, inst.offset), qubits, links)


def chain_strength_from_scale(inst: IsingInstance, css: float) -> float:
    """``css * max|J|``; an instance without couplings gives ``css``."""
    if not inst.J:
        return float(css)
    return float(css) * max(abs(v) for v in inst.J.values())


def resolve_chains(samples, emb: Mapping, strategy: str = "majority", seed=None,
                   qubits=None) -> tuple[np.ndarray, np.ndarray]:
    """Logical ``+-1`` samples from physical ones.

    Parameters
    ----------
    samples : array of shape (S, Q)
        Spins with columns ordered as ``qubits``.
    emb : mapping
        Logical variable ``0..L-1`` to its chain.
    strategy : {"discard", "majority"}
        ``discard`` drops samples with a misaligned chain. ``majority`` takes
        the most common spin per chain; a tie draws from sample ``i``'s own
        stream ``SeedSequence(seed).spawn``.
    qubits : sequence, optional
        Column labels; defaults to the sorted union of chains.

    Returns
    -------
    (logical, kept)
        Logical samples and the indices of the input samples they came from.
    """
    S = np.asarray(samples)
    if S.ndim != 2:
        raise ValueError("samples must be a 2-D array")
    chains = {int(k): [int(q) for q in v] for k, v in emb.items()}
    L = len(chains)
    if sorted(chains) != list(range(L)):
        raise ValueError("logical variables must be 0..L-1")
    cols = list(qubits) if qubits is not None else sorted(q for c in chains.values() for q in c)
    loc = {q: t for t, q in enumerate(cols)}
    sums = np.stack([S[:, [loc[q] for q in chains[i]]].sum(axis=1) for i in range(L)], axis=1)
    sizes = np.array([len(chains[i]) for i in range(L)])
    if strategy == "discard":
        aligned = np.all(np.abs(sums) == sizes, axis=1)
        kept = np.flatnonzero(aligned)
        return np.sign(sums[kept]).astype(np.int8), kept
    if strategy != "majority":
        raise ValueError(f"unknown strategy {strategy!r}")
    out = np.sign(sums).astype(np.int8)
    tied = np.flatnonzero((sums == 0).any(axis=1))
    if len(tied):
        if seed is None:
            raise ValueError("majority vote with ties needs a seed")
        streams = np.random.SeedSequence(seed).spawn(len(S))
        for i in tied:
            cols_tied = np.flatnonzero(sums[i] == 0)
            draw = np.random.default_rng(streams[i]).integers(0, 2, len(cols_tied))
            out[i, cols_tied] = 2 * draw - 1
    return out, np.arange(len(S))


def validate_embedding(emb: Mapping, wg: WorkingGraph, inst: IsingInstance) -> dict:
    """Structured checks: coverage, known qubits, disjointness, chain paths, couplers."""
    chains = {int(k): [int(q) for q in v] for k, v in emb.items()}
    node_set = set(wg.nodes)
    checks = {"coverage": [], "qubits": [], "disjoint": [], "connected": [], "couplers": []}
    for i in range(inst.n):
        if i not in chains or not chains[i]:
            checks["coverage"].append(i)
    owner: dict = {}
    for i, c in sorted(chains.items()):
        for q in c:
            if q not in node_set:
                checks["qubits"].append({"logical": i, "qubit": q})
            if q in owner:
                checks["disjoint"].append({"qubit": q, "logical": [owner[q], i]})
            owner.setdefault(q, i)
        breaks = [(p, q) for p, q in zip(c, c[1:]) if not wg.has_edge(p, q)]
        if breaks:
            checks["connected"].append({"logical": i, "gaps": breaks})
    for i, j in inst.J:
        if i in chains and j in chains and _coupler(chains[i], chains[j], wg) is None:
            checks["couplers"].append([i, j])
    return {"passed": not any(checks.values()), "checks": checks}
