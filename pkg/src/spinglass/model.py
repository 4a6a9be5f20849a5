"""Ising and QUBO instances, packed states, spectra and the naive oracle.

Energies follow the convention

    H(s) = sum_{i<j} J_ij s_i s_j + sum_i h_i s_i + offset,   s_i in {-1, +1}
    F(q) = sum_{i<j} a_ij q_i q_j + sum_i b_i q_i + offset,   q_i in {0, 1}

A state is a packed word. Bit ``i`` holds variable ``i``; for spins, a set
bit means ``+1``. The same word therefore names corresponding Ising and QUBO
states under ``s = 2q - 1``. Scalar energies accept any size; vectorized
routines and spectra store words as ``uint64`` and need ``n <= 64``.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import InstanceFormatError, InvalidStateError, SizingError

__all__ = [
    "IsingInstance",
    "QuboInstance",
    "Spectrum",
    "check_state",
    "pack_bits",
    "unpack_bits",
    "pack_spins",
    "unpack_spins",
    "ising_energy",
    "qubo_energy",
    "ising_energies",
    "qubo_energies",
    "energy",
    "energies",
    "ising_to_qubo",
    "qubo_to_ising",
    "as_qubo",
    "to_matrix",
    "enumerate_spectrum_naive",
    "sort_by_energy_then_word",
    "read_instance",
    "write_instance",
    "random_ising",
    "random_qubo",
    "NAIVE_MAX_N",
]

NAIVE_MAX_N = 24
_WORD_BITS = 64


def _canonical_edges(n: int, edges: Mapping, name: str) -> dict:
    out: dict[tuple[int, int], float] = {}
    for key, value in edges.items():
        i, j = (int(x) for x in key)
        if i == j:
            raise InstanceFormatError(f"self-edge ({i}, {j}) in {name}")
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceFormatError(f"edge ({i}, {j}) outside [0, {n})")
        e = (i, j) if i < j else (j, i)
        if e in out:
            raise InstanceFormatError(f"duplicate edge {e} in {name}")
        out[e] = float(value)
    return dict(sorted(out.items()))


def _canonical_fields(n: int, fields: Mapping, name: str) -> dict:
    out: dict[int, float] = {}
    for key, value in fields.items():
        i = int(key)
        if not 0 <= i < n:
            raise InstanceFormatError(f"{name} index {i} outside [0, {n})")
        out[i] = float(value)
    return dict(sorted(out.items()))


class _Graph:
    """Shared dense views for both instance kinds."""

    n: int

    def _linear(self) -> Mapping[int, float]:
        raise NotImplementedError

    def _quadratic(self) -> Mapping[tuple[int, int], float]:
        raise NotImplementedError

    @cached_property
    def linear_vector(self) -> np.ndarray:
        v = np.zeros(self.n)
        for i, x in self._linear().items():
            v[i] = x
        v.setflags(write=False)
        return v

    @cached_property
    def quadratic_matrix(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal."""
        m = np.zeros((self.n, self.n))
        for (i, j), x in self._quadratic().items():
            m[i, j] = x
            m[j, i] = x
        m.setflags(write=False)
        return m

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        q = self._quadratic()
        ii = np.fromiter((e[0] for e in q), dtype=np.intp, count=len(q))
        jj = np.fromiter((e[1] for e in q), dtype=np.intp, count=len(q))
        vv = np.fromiter(q.values(), dtype=float, count=len(q))
        return ii, jj, vv

    def neighbours(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.quadratic_matrix[i])]


@dataclass(frozen=True, eq=True)
class IsingInstance(_Graph):
    """Ising spin glass on a simple graph.

    Parameters
    ----------
    n : int
        Number of spins.
    h : mapping of int to float
        Local fields.
    J : mapping of (int, int) to float
        Couplings on unordered edges. Keys are normalized to ``i < j``.
    offset : float
        Constant added to every energy. Needed so that QUBO round trips
        preserve absolute energies.
    """

    n: int
    h: Mapping[int, float] = field(default_factory=dict)
    J: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if int(self.n) < 0:
            raise InstanceFormatError(f"variable count {self.n} is negative")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", _canonical_fields(self.n, self.h, "h"))
        object.__setattr__(self, "J", _canonical_edges(self.n, self.J, "J"))
        object.__setattr__(self, "offset", float(self.offset))

    __hash__ = None  # mutable-looking mappings; equality only

    def _linear(self):
        return self.h

    def _quadratic(self):
        return self.J

    @classmethod
    def from_arrays(cls, h, J=None, offset=0.0) -> "IsingInstance":
        """Build from a field vector and a symmetric (or upper) coupling matrix."""
        h = np.asarray(h, dtype=float)
        n = h.shape[0]
        hm = {i: float(x) for i, x in enumerate(h) if x != 0}
        Jm = {}
        if J is not None:
            J = np.asarray(J, dtype=float)
            if np.array_equal(J, J.T):
                U = np.triu(J, 1)
            else:
                U = np.triu(J, 1) + np.tril(J, -1).T
            for i, j in zip(*np.nonzero(U)):
                Jm[(int(i), int(j))] = float(U[i, j])
        return cls(n, hm, Jm, offset)


@dataclass(frozen=True, eq=True)
class QuboInstance(_Graph):
    """Quadratic unconstrained binary optimization instance.

    Parameters
    ----------
    n : int
        Number of binary variables.
    b : mapping of int to float
        Linear coefficients.
    a : mapping of (int, int) to float
        Quadratic coefficients on unordered pairs.
    offset : float
        Constant added to every energy.
    """

    n: int
    b: Mapping[int, float] = field(default_factory=dict)
    a: Mapping[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if int(self.n) < 0:
            raise InstanceFormatError(f"variable count {self.n} is negative")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "b", _canonical_fields(self.n, self.b, "b"))
        object.__setattr__(self, "a", _canonical_edges(self.n, self.a, "a"))
        object.__setattr__(self, "offset", float(self.offset))

    __hash__ = None

    def _linear(self):
        return self.b

    def _quadratic(self):
        return self.a

    @classmethod
    def from_matrix(cls, Q, offset=0.0) -> "QuboInstance":
        """Inverse of :func:`to_matrix`: diagonal is linear, off-diagonal symmetric."""
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        b = {i: float(Q[i, i]) for i in range(n) if Q[i, i] != 0}
        a = {}
        for i in range(n):
            for j in range(i + 1, n):
                if Q[i, j] != 0:
                    a[(i, j)] = float(Q[i, j])
        return cls(n, b, a, offset)


Instance = Union[IsingInstance, QuboInstance]


# ---------------------------------------------------------------- states


def check_state(word, n: int) -> int:
    """Validate a packed state and return it as a Python int."""
    w = int(word)
    if w < 0 or w >> n:
        raise InvalidStateError(f"state {w:#x} has bits at or beyond n={n}")
    return w


def pack_bits(bits: Iterable[int]) -> int:
    """Pack a 0/1 sequence (variable 0 first) into a word."""
    w = 0
    for i, q in enumerate(bits):
        if q not in (0, 1, True, False):
            raise InvalidStateError(f"bit {i} is {q!r}, expected 0 or 1")
        w |= int(q) << i
    return w


def unpack_bits(word, n: int) -> np.ndarray:
    w = check_state(word, n)
    return np.array([(w >> i) & 1 for i in range(n)], dtype=np.int8)


def pack_spins(spins: Iterable[int]) -> int:
    """Pack a +1/-1 sequence; +1 maps to a set bit."""
    bits = []
    for i, s in enumerate(spins):
        if s not in (1, -1):
            raise InvalidStateError(f"spin {i} is {s!r}, expected +1 or -1")
        bits.append(1 if s == 1 else 0)
    return pack_bits(bits)


def unpack_spins(word, n: int) -> np.ndarray:
    return (2 * unpack_bits(word, n) - 1).astype(np.int8)


def _bit_matrix(words: np.ndarray, n: int) -> np.ndarray:
    words = np.asarray(words, dtype=np.uint64)
    shifts = np.arange(n, dtype=np.uint64)
    return ((words[:, None] >> shifts) & np.uint64(1)).astype(np.int8)


# ---------------------------------------------------------------- energies


def ising_energy(inst: IsingInstance, s) -> float:
    """Energy of one packed spin state."""
    s = unpack_spins(s, inst.n).astype(float)
    ii, jj, vv = inst.edge_arrays
    return float(np.dot(vv, s[ii] * s[jj]) + np.dot(inst.linear_vector, s) + inst.offset)


def qubo_energy(inst: QuboInstance, q) -> float:
    """Energy of one packed binary state."""
    q = unpack_bits(q, inst.n).astype(float)
    ii, jj, vv = inst.edge_arrays
    return float(np.dot(vv, q[ii] * q[jj]) + np.dot(inst.linear_vector, q) + inst.offset)


def _check_words(words: np.ndarray, n: int) -> np.ndarray:
    if n > _WORD_BITS:
        raise InvalidStateError(f"vectorized states hold at most {_WORD_BITS} variables, got n={n}")
    words = np.asarray(words, dtype=np.uint64)
    if n < _WORD_BITS and words.size and np.any(words >> np.uint64(n)):
        raise InvalidStateError(f"some states have bits at or beyond n={n}")
    return words


def ising_energies(inst: IsingInstance, words) -> np.ndarray:
    """Vectorized :func:`ising_energy` over an array of words."""
    words = _check_words(words, inst.n)
    s = 2.0 * _bit_matrix(words, inst.n) - 1.0
    ii, jj, vv = inst.edge_arrays
    return (s[:, ii] * s[:, jj]) @ vv + s @ inst.linear_vector + inst.offset


def qubo_energies(inst: QuboInstance, words) -> np.ndarray:
    """Vectorized :func:`qubo_energy` over an array of words."""
    words = _check_words(words, inst.n)
    q = _bit_matrix(words, inst.n).astype(float)
    ii, jj, vv = inst.edge_arrays
    return (q[:, ii] * q[:, jj]) @ vv + q @ inst.linear_vector + inst.offset


def energy(inst: Instance, word) -> float:
    if isinstance(inst, IsingInstance):
        return ising_energy(inst, word)
    return qubo_energy(inst, word)


def energies(inst: Instance, words) -> np.ndarray:
    if isinstance(inst, IsingInstance):
        return ising_energies(inst, words)
    return qubo_energies(inst, words)


# ---------------------------------------------------------------- conversions


def ising_to_qubo(inst: IsingInstance) -> QuboInstance:
    """Convert spins to binaries with ``s = 2q - 1``.

    ``a_ij = 4 J_ij``, ``b_i = 2 h_i - 2 sum_j J_ij`` and the offset absorbs
    ``sum J - sum h`` so that energies agree state by state.
    """
    b = {i: 2.0 * x for i, x in inst.h.items()}
    a = {}
    for (i, j), x in inst.J.items():
        a[(i, j)] = 4.0 * x
        b[i] = b.get(i, 0.0) - 2.0 * x
        b[j] = b.get(j, 0.0) - 2.0 * x
    gap = sum(inst.h.values()) - sum(inst.J.values())
    return QuboInstance(inst.n, b, a, inst.offset - gap)


def qubo_to_ising(inst: QuboInstance) -> IsingInstance:
    """Inverse of :func:`ising_to_qubo` (``q = (s + 1) / 2``)."""
    h = {i: 0.5 * x for i, x in inst.b.items()}
    J = {}
    for (i, j), x in inst.a.items():
        J[(i, j)] = 0.25 * x
        h[i] = h.get(i, 0.0) + 0.25 * x
        h[j] = h.get(j, 0.0) + 0.25 * x
    const = inst.offset + 0.5 * sum(inst.b.values()) + 0.25 * sum(inst.a.values())
    return IsingInstance(inst.n, h, J, const)


def as_qubo(inst: Instance) -> QuboInstance:
    return ising_to_qubo(inst) if isinstance(inst, IsingInstance) else inst


def to_matrix(inst: QuboInstance) -> np.ndarray:
    """Symmetric matrix with ``Q_ii = b_i`` and ``Q_ij = Q_ji = a_ij``.

    The energy is ``sum_{i<=j} Q_ij q_i q_j + offset``.
    """
    Q = np.array(inst.quadratic_matrix)
    Q[np.diag_indices(inst.n)] = inst.linear_vector
    return Q


# ---------------------------------------------------------------- spectra


def sort_by_energy_then_word(energies, words) -> np.ndarray:
    """Permutation ordering by ``(energy, word)``."""
    return np.lexsort((np.asarray(words, dtype=np.uint64), np.asarray(energies, dtype=float)))


@dataclass(frozen=True)
class Spectrum:
    """The k lowest states, sorted by ``(energy, word)``.

    Attributes
    ----------
    energies : ndarray of float64
    states : ndarray of uint64
    """

    energies: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        e = np.ascontiguousarray(self.energies, dtype=float)
        s = np.ascontiguousarray(self.states, dtype=np.uint64)
        if e.shape != s.shape or e.ndim != 1:
            raise ValueError("energies and states must be equal-length vectors")
        order = sort_by_energy_then_word(e, s)
        if np.any(order != np.arange(len(e))):
            raise ValueError("spectrum entries are not sorted by (energy, word)")
        if len(np.unique(s)) != len(s):
            raise ValueError("duplicate state words in spectrum")
        e.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "states", s)

    @classmethod
    def from_unsorted(cls, energies, states, k=None) -> "Spectrum":
        e = np.asarray(energies, dtype=float)
        s = np.asarray(states, dtype=np.uint64)
        order = sort_by_energy_then_word(e, s)
        if k is not None:
            order = order[:k]
        return cls(e[order], s[order])

    @property
    def k(self) -> int:
        return len(self.energies)

    def __len__(self):
        return self.k

    @property
    def entries(self) -> list[tuple[float, int]]:
        return [(float(e), int(s)) for e, s in zip(self.energies, self.states)]

    @property
    def ground(self) -> tuple[float, int]:
        return float(self.energies[0]), int(self.states[0])

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            self.energies.tobytes() == other.energies.tobytes()
            and self.states.tobytes() == other.states.tobytes()
        )

    def to_dict(self) -> dict:
        return {"k": self.k, "entries": [{"energy": e, "state": s} for e, s in self.entries]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Spectrum":
        entries = d["entries"]
        return cls(
            np.array([x["energy"] for x in entries], dtype=float),
            np.array([x["state"] for x in entries], dtype=np.uint64),
        )


def enumerate_spectrum_naive(inst: Instance, k: int, block: int = 1 << 16) -> Spectrum:
    """Exact k-lowest spectrum by evaluating every state.

    Reference oracle for small problems. Each state is evaluated with the
    per-term formulas of :func:`ising_energies` or :func:`qubo_energies`.

    Raises
    ------
    SizingError
        If ``n`` exceeds ``NAIVE_MAX_N``.
    """
    n = inst.n
    if n > NAIVE_MAX_N:
        raise SizingError(
            f"naive enumeration refuses n={n} > {NAIVE_MAX_N}",
            {"n": n, "max_n": NAIVE_MAX_N, "states": 2**n},
        )
    total = 1 << n
    k = min(int(k), total)
    if k < 1:
        raise ValueError("k must be at least 1")
    all_e = np.empty(total)
    for start in range(0, total, block):
        words = np.arange(start, min(start + block, total), dtype=np.uint64)
        all_e[start : start + len(words)] = energies(inst, words)
    words = np.arange(total, dtype=np.uint64)
    order = np.lexsort((words, all_e))[:k]
    return Spectrum(all_e[order], words[order])


# ---------------------------------------------------------------- text format


def _read_text(source) -> str:
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return source.read()
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(source, str) and "\n" in source:
        return source
    raise InstanceFormatError(f"cannot read instance from {source!r}")


def read_instance(source, kind: str = "ising") -> Instance:
    """Parse the plain-text instance format.

    The first non-comment line is ``N M``; then ``M`` lines ``i j v`` with
    1-based indices, ``i == j`` for linear terms. ``#`` starts a comment. A
    comment of the form ``# offset v`` sets the constant term.
    """
    if kind not in ("ising", "qubo"):
        raise InstanceFormatError(f"unknown instance kind {kind!r}")
    text = _read_text(source)
    offset = 0.0
    header = None
    lin: dict[int, float] = {}
    quad: dict[tuple[int, int], float] = {}
    count = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        body, _, comment = raw.partition("#")
        ctoks = comment.split()
        if len(ctoks) == 2 and ctoks[0] == "offset":
            try:
                offset = float(ctoks[1])
            except ValueError as exc:
                raise InstanceFormatError(f"line {lineno}: bad offset") from exc
        toks = body.split()
        if not toks:
            continue
        try:
            if header is None:
                if len(toks) != 2:
                    raise ValueError
                header = (int(toks[0]), int(toks[1]))
                continue
            if len(toks) != 3:
                raise ValueError
            i, j, v = int(toks[0]) - 1, int(toks[1]) - 1, float(toks[2])
        except ValueError as exc:
            raise InstanceFormatError(f"line {lineno}: cannot parse {raw.strip()!r}") from exc
        n = header[0]
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceFormatError(f"line {lineno}: index outside 1..{n}")
        if i == j:
            if i in lin:
                raise InstanceFormatError(f"line {lineno}: repeated linear term {i + 1}")
            lin[i] = v
        else:
            e = (min(i, j), max(i, j))
            if e in quad:
                raise InstanceFormatError(f"line {lineno}: repeated edge {i + 1} {j + 1}")
            quad[e] = v
        count += 1
    if header is None:
        raise InstanceFormatError("missing 'N M' header")
    if count != header[1]:
        raise InstanceFormatError(f"header declares {header[1]} coefficient lines, found {count}")
    cls = IsingInstance if kind == "ising" else QuboInstance
    return cls(header[0], lin, quad, offset)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_instance(inst: Instance, dest=None) -> str:
    """Serialize to the text format; returns the text and writes it if ``dest`` is a path."""
    lin = inst._linear()
    quad = inst._quadratic()
    lines = []
    if inst.offset != 0.0:
        lines.append(f"# offset {_fmt(inst.offset)}")
    lines.append(f"{inst.n} {len(lin) + len(quad)}")
    for i, v in lin.items():
        lines.append(f"{i + 1} {i + 1} {_fmt(v)}")
    for (i, j), v in quad.items():
        lines.append(f"{i + 1} {j + 1} {_fmt(v)}")
    text = "\n".join(lines) + "\n"
    if dest is not None:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------- generators


def _dyadic(rng: np.random.Generator, size, scale: float, resolution: int) -> np.ndarray:
    # multiples of 2**-resolution keep every partial sum exact in float64
    step = 2.0**-resolution
    raw = rng.uniform(-scale, scale, size)
    return np.round(raw / step) * step


def random_ising(
    n: int,
    seed=None,
    *,
    density: float = 1.0,
    field_scale: float = 1.0,
    coupling_scale: float = 1.0,
    resolution: int = 10,
    edges: Iterable[tuple[int, int]] | None = None,
) -> IsingInstance:
    """Random instance with dyadic coefficients.

    Parameters
    ----------
    n : int
        Number of spins.
    seed : int or Generator, optional
    density : float
        Probability that each pair carries a coupling (ignored if ``edges``).
    resolution : int
        Coefficients are multiples of ``2**-resolution``, so energies are
        exact regardless of summation order.
    edges : iterable of pairs, optional
        Fixed coupling graph.
    """
    rng = np.random.default_rng(seed)
    h = _dyadic(rng, n, field_scale, resolution)
    if edges is None:
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < density
        edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    else:
        edges = [tuple(sorted(map(int, e))) for e in edges]
    vals = _dyadic(rng, len(edges), coupling_scale, resolution)
    J = {e: float(v) for e, v in zip(edges, vals) if v != 0}
    return IsingInstance(n, {i: float(x) for i, x in enumerate(h) if x != 0}, J)


def random_qubo(n: int, seed=None, *, density: float = 1.0, scale: float = 1.0,
                resolution: int = 10) -> QuboInstance:
    """Random QUBO with dyadic coefficients; see :func:`random_ising`."""
    rng = np.random.default_rng(seed)
    b = _dyadic(rng, n, scale, resolution)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < density
    vals = _dyadic(rng, int(keep.sum()), scale, resolution)
    a = {(int(i), int(j)): float(v) for i, j, v in zip(iu[keep], ju[keep], vals) if v != 0}
    return QuboInstance(n, {i: float(x) for i, x in enumerate(b) if x != 0}, a)
