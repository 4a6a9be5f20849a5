"""Grouping of spins into clusters that sit on a square lattice."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InstanceFormatError
from ..model import IsingInstance, _dyadic

__all__ = ["ClusterLattice", "read_cluster_map", "random_lattice_instance", "MAX_CLUSTER_SPINS"]

MAX_CLUSTER_SPINS = 8


@dataclass(frozen=True, eq=False)
class ClusterLattice:
    """Partition of an instance's spins over a ``rows x cols`` grid.

    Parameters
    ----------
    instance : IsingInstance
    rows, cols : int
    cluster_spins : sequence of sequences
        Spins held by each site, sites in row-major order. Local bit ``t`` of
        a cluster state is spin ``cluster_spins[site][t]``.
    cap : int
        Largest allowed cluster.

    Attributes
    ----------
    intra : list of IsingInstance
        Restriction of the instance to each cluster, in local indices.
    inter : dict
        ``(site_a, site_b) -> [(t_a, t_b, J), ...]`` for lattice neighbours,
        ``site_a < site_b``.
    """

    instance: IsingInstance
    rows: int
    cols: int
    cluster_spins: tuple
    cap: int = MAX_CLUSTER_SPINS
    intra: list = field(init=False, repr=False)
    inter: dict = field(init=False, repr=False)

    def __post_init__(self):
        inst, R, C = self.instance, int(self.rows), int(self.cols)
        if R < 1 or C < 1:
            raise ValueError("lattice needs at least one row and column")
        clusters = tuple(tuple(int(s) for s in c) for c in self.cluster_spins)
        if len(clusters) != R * C:
            raise ValueError(f"expected {R * C} clusters, got {len(clusters)}")
        where = {}
        for site, spins in enumerate(clusters):
            if len(spins) > self.cap:
                raise ValueError(f"site {site} holds {len(spins)} spins, cap is {self.cap}")
            for t, s in enumerate(spins):
                if not 0 <= s < inst.n:
                    raise ValueError(f"spin {s} outside the instance")
                if s in where:
                    raise ValueError(f"spin {s} appears in two clusters")
                where[s] = (site, t)
        if len(where) != inst.n:
            missing = sorted(set(range(inst.n)) - set(where))
            raise ValueError(f"spins {missing} are not assigned to any cluster")
        intra_h = [dict() for _ in clusters]
        intra_J = [dict() for _ in clusters]
        for i, x in inst.h.items():
            site, t = where[i]
            intra_h[site][t] = x
        inter: dict = {}
        for (i, j), x in inst.J.items():
            (si, ti), (sj, tj) = where[i], where[j]
            if si == sj:
                intra_J[si][(ti, tj)] = x
                continue
            if not self.adjacent(si, sj, C):
                raise ValueError(f"coupling ({i}, {j}) joins non-adjacent sites {si} and {sj}")
            if si > sj:
                si, sj, ti, tj = sj, si, tj, ti
            inter.setdefault((si, sj), []).append((ti, tj, x))
        object.__setattr__(self, "rows", R)
        object.__setattr__(self, "cols", C)
        object.__setattr__(self, "cluster_spins", clusters)
        object.__setattr__(
            self, "intra", [IsingInstance(len(c), h, J) for c, h, J in zip(clusters, intra_h, intra_J)]
        )
        object.__setattr__(self, "inter", inter)

    @staticmethod
    def adjacent(a: int, b: int, cols: int) -> bool:
        ra, ca = divmod(a, cols)
        rb, cb = divmod(b, cols)
        return abs(ra - rb) + abs(ca - cb) == 1

    @property
    def sites(self) -> int:
        return self.rows * self.cols

    def site(self, r: int, c: int) -> int:
        return r * self.cols + c

    def local_energies(self, site: int) -> np.ndarray:
        """Energy of every cluster state from fields and intra-cluster couplings."""
        sub = self.intra[site]
        m = sub.n
        x = np.arange(1 << m)
        s = 2.0 * ((x[:, None] >> np.arange(m)) & 1) - 1.0
        e = s @ sub.linear_vector
        for (a, b), J in sub.J.items():
            e = e + J * s[:, a] * s[:, b]
        return e

    def word_of(self, config) -> int:
        """Global packed word from per-site cluster states (a prefix is allowed)."""
        w = 0
        for site, x in enumerate(config):
            for t, spin in enumerate(self.cluster_spins[site]):
                if (int(x) >> t) & 1:
                    w |= 1 << spin
        return w

    def config_of(self, word: int) -> list[int]:
        out = []
        for spins in self.cluster_spins:
            x = 0
            for t, spin in enumerate(spins):
                if (int(word) >> spin) & 1:
                    x |= 1 << t
            out.append(x)
        return out

    @classmethod
    def grid(cls, instance: IsingInstance, rows: int, cols: int, per_site: int | None = None,
             cap: int = MAX_CLUSTER_SPINS) -> "ClusterLattice":
        """Assign consecutive spin blocks to sites in row-major order."""
        if per_site is None:
            per_site, rem = divmod(instance.n, rows * cols)
            if rem:
                raise ValueError("spin count is not divisible by the site count")
        clusters = [list(range(s * per_site, (s + 1) * per_site)) for s in range(rows * cols)]
        return cls(instance, rows, cols, clusters, cap)


def read_cluster_map(path, instance: IsingInstance, cap: int = MAX_CLUSTER_SPINS) -> ClusterLattice:
    """Parse ``row col spin...`` lines; all indices are 1-based, ``#`` comments."""
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            toks = raw.split("#", 1)[0].split()
            if not toks:
                continue
            try:
                vals = [int(t) for t in toks]
            except ValueError as exc:
                raise InstanceFormatError(f"line {lineno}: non-integer token") from exc
            if len(vals) < 2 or vals[0] < 1 or vals[1] < 1 or any(v < 1 for v in vals[2:]):
                raise InstanceFormatError(f"line {lineno}: expected 'row col spin...' (1-based)")
            key = (vals[0] - 1, vals[1] - 1)
            if key in entries:
                raise InstanceFormatError(f"line {lineno}: site {vals[0]} {vals[1]} repeated")
            entries[key] = [v - 1 for v in vals[2:]]
    if not entries:
        raise InstanceFormatError("empty cluster map")
    rows = 1 + max(r for r, _ in entries)
    cols = 1 + max(c for _, c in entries)
    clusters = [entries.get((r, c), []) for r in range(rows) for c in range(cols)]
    try:
        return ClusterLattice(instance, rows, cols, clusters, cap)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def random_lattice_instance(rows: int, cols: int, per_site: int, seed=None, *,
                            inter_density: float = 0.5, resolution: int = 10) -> IsingInstance:
    """Quasi-2D instance: dense clusters, sparse couplings between lattice neighbours.

    Every pair of neighbouring clusters gets at least one coupling.
    """
    rng = np.random.default_rng(seed)
    n = rows * cols * per_site
    h = _dyadic(rng, n, 1.0, resolution)
    edges = []
    for site in range(rows * cols):
        base = site * per_site
        for a in range(per_site):
            for b in range(a + 1, per_site):
                edges.append((base + a, base + b))
    for site in range(rows * cols):
        r, c = divmod(site, cols)
        for other in ([site + 1] if c + 1 < cols else []) + ([site + cols] if r + 1 < rows else []):
            pairs = [(site * per_site + a, other * per_site + b)
                     for a in range(per_site) for b in range(per_site)]
            keep = rng.random(len(pairs)) < inter_density
            if not keep.any():
                keep[rng.integers(len(pairs))] = True
            edges.extend(p for p, k in zip(pairs, keep) if k)
    vals = _dyadic(rng, len(edges), 1.0, resolution)
    J = {e: float(v) for e, v in zip(edges, vals) if v != 0}
    return IsingInstance(n, {i: float(x) for i, x in enumerate(h) if x != 0}, J)
