"""Parallel-in-time simulation of linear dynamics as a QUBO.

The trajectory ``psi(t_0), ..., psi(t_{N-1})`` of ``dpsi/dt = K(t) psi`` is
the solution of one linear system ``A x = Phi`` built from a clock operator.
The system is turned into a quadratic objective, each unknown is written in
fixed point with ``R`` bits, and the resulting QUBO is handed to a solver.

Objectives are stored as ``x -> x^T G x - 2 c^T x + const``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import expm

from .errors import DefinitenessError, InstanceFormatError
from .model import QuboInstance, qubo_energy

__all__ = [
    "SystemSpec",
    "ClockSystem",
    "FixedPointCode",
    "Trajectory",
    "step_propagators",
    "complex_to_real",
    "build_clock_system",
    "exact_trajectory",
    "quadratic_objective",
    "objective_value",
    "encode_fixed_point",
    "decode_fixed_point",
    "nearest_bits",
    "literal_energy_coefficients",
    "truncate_coefficients",
    "simulate_pipeline",
    "load_system_spec",
    "qubit_rotation_spec",
]

Generator = Union[np.ndarray, Callable[[float], np.ndarray]]


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Linear dynamical system with its initial state and time grid.

    Parameters
    ----------
    K : ndarray or callable
        Generator, constant ``(L, L)`` or a function of time.
    psi0 : array_like
        Initial state of length ``L``.
    times : array_like, optional
        Increasing time points; defaults to ``0, 1, ..., N-1``.
    N : int, optional
        Number of time points when ``times`` is omitted.
    field : {"real", "complex"}
    """

    K: Generator
    psi0: np.ndarray
    times: np.ndarray | None = None
    N: int | None = None
    field: str = "real"

    def __post_init__(self):
        if self.field not in ("real", "complex"):
            raise ValueError(f"unknown field {self.field!r}")
        dtype = complex if self.field == "complex" else float
        psi0 = np.asarray(self.psi0, dtype=dtype)
        if psi0.ndim != 1:
            raise ValueError("psi0 must be a vector")
        times = self.times
        if times is None:
            if self.N is None:
                raise ValueError("give either times or N")
            times = np.arange(int(self.N), dtype=float)
        times = np.asarray(times, dtype=float)
        if len(times) < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("need at least two strictly increasing time points")
        if not callable(self.K):
            K = np.asarray(self.K, dtype=dtype)
            if K.ndim != 2 or K.shape[0] != K.shape[1]:
                raise ValueError("K must be square")
            if K.shape[0] != len(psi0):
                raise ValueError("K and psi0 sizes differ")
            object.__setattr__(self, "K", K)
        object.__setattr__(self, "psi0", psi0)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "N", len(times))

    @property
    def L(self) -> int:
        return len(self.psi0)

    def generator(self, t: float) -> np.ndarray:
        K = self.K(t) if callable(self.K) else self.K
        K = np.asarray(K)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        return K


@dataclass(frozen=True, eq=False)
class ClockSystem:
    """Real linear system ``A x = phi`` over all time points."""

    A: np.ndarray
    phi: np.ndarray
    N: int
    L: int
    complex_embedded: bool = False


@dataclass(frozen=True)
class FixedPointCode:
    """``x = 2^D (2 sum_a 2^-a q_a - 1)`` with ``R`` bits ``q_0 .. q_{R-1}``."""

    D: int = 0
    R: int = 2

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")

    @property
    def weights(self) -> np.ndarray:
        return np.array([2.0 ** (1 - a + self.D) for a in range(self.R)])

    @property
    def shift(self) -> float:
        return -(2.0**self.D)

    def grid(self) -> np.ndarray:
        """All representable values, ascending."""
        codes = np.arange(1 << self.R)
        bits = (codes[:, None] >> np.arange(self.R - 1, -1, -1)) & 1
        return np.sort(bits @ self.weights + self.shift)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Decoded states per time point with diagnostics."""

    raw: np.ndarray
    normalized: np.ndarray
    times: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def enc(a):
            if np.iscomplexobj(a):
                return [[[float(z.real), float(z.imag)] for z in row] for row in a]
            return a.tolist()

        return {
            "times": self.times.tolist(),
            "raw": enc(self.raw),
            "normalized": enc(self.normalized),
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------- propagators


def step_propagators(spec: SystemSpec, substeps: int = 1) -> list[np.ndarray]:
    """``U(t_{n+1}, t_n)`` for ``n = 0 .. N-2``.

    A constant generator gives exact exponentials. A time-dependent one is
    approximated by a product of ``substeps`` midpoint exponentials, later
    times acting on the left.
    """
    if substeps < 1:
        raise ValueError("substeps must be at least 1")
    out = []
    t = spec.times
    for n in range(len(t) - 1):
        dt = t[n + 1] - t[n]
        if not callable(spec.K):
            out.append(expm(spec.K * dt))
            continue
        h = dt / substeps
        U = np.eye(spec.L, dtype=complex if spec.field == "complex" else float)
        for m in range(substeps):
            U = expm(spec.generator(t[n] + (m + 0.5) * h) * h) @ U
        out.append(U)
    return out


def complex_to_real(z) -> np.ndarray:
    """Embed complex scalars, vectors or matrices into reals.

    Each matrix entry ``a + bi`` becomes ``[[a, -b], [b, a]]`` and each vector
    entry becomes ``[a, b]``.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        return np.array([[z.real, -z.imag], [z.imag, z.real]])
    if z.ndim == 1:
        return np.column_stack([z.real, z.imag]).ravel()
    if z.ndim == 2:
        n, m = z.shape
        out = np.empty((2 * n, 2 * m))
        out[0::2, 0::2] = z.real
        out[0::2, 1::2] = -z.imag
        out[1::2, 0::2] = z.imag
        out[1::2, 1::2] = z.real
        return out
    raise ValueError("complex_to_real handles up to two dimensions")


def real_to_complex(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[0::2] + 1j * v[1::2]


def build_clock_system(U: Sequence[np.ndarray], psi0) -> ClockSystem:
    """Clock operator plus the initial-state pin.

    ``A = sum_n (|n+1><n+1| + |n><n|) (x) I - |n+1><n| (x) U_n - |n><n+1| (x) U_n^dagger``
    plus ``|0><0| (x) I``, and ``phi = |0> (x) psi0``. Complex systems are
    embedded into reals.
    """
    psi0 = np.asarray(psi0)
    L = len(psi0)
    N = len(U) + 1
    for u in U:
        if np.shape(u) != (L, L):
            raise ValueError(f"propagator of shape {np.shape(u)} does not match state size {L}")
    is_complex = np.iscomplexobj(psi0) or any(np.iscomplexobj(u) and np.any(np.imag(u) != 0) for u in U)
    dtype = complex if is_complex else float
    A = np.zeros((N * L, N * L), dtype=dtype)
    eye = np.eye(L)
    for n, u in enumerate(U):
        u = np.asarray(u, dtype=dtype)
        a, b = slice(n * L, (n + 1) * L), slice((n + 1) * L, (n + 2) * L)
        A[b, b] += eye
        A[a, a] += eye
        A[b, a] -= u
        A[a, b] -= u.conj().T
    A[:L, :L] += eye
    phi = np.zeros(N * L, dtype=dtype)
    phi[:L] = psi0
    if is_complex:
        return ClockSystem(complex_to_real(A), complex_to_real(phi), N, L, True)
    return ClockSystem(A.real.copy(), phi.real.copy(), N, L, False)


def exact_trajectory(U: Sequence[np.ndarray], psi0) -> np.ndarray:
    """States ``psi_n = U_{n-1} ... U_0 psi0`` stacked into one vector."""
    states = [np.asarray(psi0)]
    for u in U:
        states.append(u @ states[-1])
    return np.concatenate(states)


# ---------------------------------------------------------------- objectives


def quadratic_objective(cs: ClockSystem, form: str = "lsq") -> tuple[np.ndarray, np.ndarray, float]:
    """``(G, c, const)`` of ``x^T G x - 2 c^T x + const``.

    ``lsq`` gives ``||A x - phi||^2``. ``energy`` gives
    ``x^T A x / 2 - x^T phi`` and needs a symmetric positive-definite ``A``.

    Raises
    ------
    DefinitenessError
        For ``energy`` when ``A`` is asymmetric or its smallest eigenvalue is
        not above ``1e-10 * ||A||``.
    """
    A, phi = cs.A, cs.phi
    if form == "lsq":
        return A.T @ A, A.T @ phi, float(phi @ phi)
    if form != "energy":
        raise ValueError(f"unknown objective form {form!r}")
    scale = np.linalg.norm(A, 2)
    if np.linalg.norm(A - A.T) > 1e-12 * max(scale, 1.0):
        raise DefinitenessError("energy objective needs a symmetric matrix; A is not symmetric")
    lam = float(np.linalg.eigvalsh(A).min())
    if not lam > 1e-10 * scale:
        raise DefinitenessError(
            f"energy objective needs a positive-definite matrix; smallest eigenvalue is {lam:.6g}",
            eigenvalue=lam,
        )
    return A / 2.0, phi / 2.0, 0.0


def objective_value(G, c, const, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x @ G @ x - 2.0 * c @ x + const)


def literal_energy_coefficients(A, phi, D: int, R: int):
    """Per-index coefficients of the energy objective in the printed form.

    Returns ``(b, a, h0)`` with ``b[i, j, al, be] = A_ij 2^(1-al-be+2D)``,
    ``a[i, al] = (2^(D-al) A_ii - 2^D sum_j A_ij - phi_i) 2^(1-al+D)`` and
    ``h0 = 2^D (2^(D-1) sum A + sum phi)``. The QUBO weight of a pair of
    distinct bits is ``b[i, j, al, be] + b[j, i, be, al]``.
    """
    A = np.asarray(A, dtype=float)
    phi = np.asarray(phi, dtype=float)
    al = np.arange(R)
    b = A[:, :, None, None] * 2.0 ** (1 - al[None, None, :, None] - al[None, None, None, :] + 2 * D)
    a = (2.0 ** (D - al)[None, :] * np.diag(A)[:, None] - 2.0**D * A.sum(axis=1)[:, None]
         - phi[:, None]) * 2.0 ** (1 - al + D)[None, :]
    h0 = 2.0**D * (2.0 ** (D - 1) * A.sum() + phi.sum())
    return b, a, h0


def encode_fixed_point(G, c, const: float, code: FixedPointCode) -> tuple[QuboInstance, np.ndarray]:
    """Substitute the fixed-point expansion into ``x^T G x - 2 c^T x + const``.

    Bit ``alpha`` of unknown ``i`` is QUBO variable ``i * R + alpha``.

    Returns
    -------
    qubo : QuboInstance
        Energy equals the objective at the decoded point.
    varmap : (n, R) int ndarray
        Variable index of each bit.
    """
    G = np.asarray(G, dtype=float)
    c = np.asarray(c, dtype=float)
    S = 0.5 * (G + G.T)
    n, R = len(c), code.R
    w = code.weights
    o = code.shift
    rows = S.sum(axis=1)
    varmap = np.arange(n * R).reshape(n, R)
    b = {}
    for i in range(n):
        for al in range(R):
            v = S[i, i] * w[al] ** 2 + 2.0 * w[al] * o * rows[i] - 2.0 * c[i] * w[al]
            if v != 0:
                b[int(varmap[i, al])] = float(v)
    a = {}
    for i in range(n):
        for j in range(i, n):
            if S[i, j] == 0:
                continue
            for al in range(R):
                for be in range(R):
                    u, v = int(varmap[i, al]), int(varmap[j, be])
                    if u >= v:
                        continue
                    a[(u, v)] = a.get((u, v), 0.0) + 2.0 * S[i, j] * w[al] * w[be]
    offset = o * o * S.sum() - 2.0 * o * c.sum() + const
    return QuboInstance(n * R, b, {e: x for e, x in a.items() if x != 0}, offset), varmap


def decode_fixed_point(bits, code: FixedPointCode) -> np.ndarray:
    """Values from bits; ``bits`` is ``(n, R)`` or a flat ``n * R`` vector."""
    bits = np.asarray(bits, dtype=float).reshape(-1, code.R)
    return bits @ code.weights + code.shift


def nearest_bits(x, code: FixedPointCode) -> np.ndarray:
    """Bits of the grid point closest to each value (ties toward the lower point)."""
    x = np.asarray(x, dtype=float)
    step = 2.0 ** (code.D + 2 - code.R)
    top = (1 << code.R) - 1
    idx = np.clip(np.ceil((x - code.shift) / step - 0.5), 0, top).astype(int)
    return ((idx[:, None] >> np.arange(code.R - 1, -1, -1)) & 1).astype(np.int8)


def _truncate(v: float, r: int) -> float:
    q = Decimal(repr(float(v))).quantize(Decimal(1).scaleb(-r), rounding=ROUND_DOWN)
    return float(q)


def truncate_coefficients(inst: QuboInstance, r: int) -> QuboInstance:
    """Cut every linear and quadratic coefficient toward zero at ``r`` decimals.

    The constant offset is kept, since it does not affect which state is best.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    b = {i: _truncate(v, r) for i, v in inst.b.items()}
    a = {e: _truncate(v, r) for e, v in inst.a.items()}
    return QuboInstance(
        inst.n,
        {i: v for i, v in b.items() if v != 0},
        {e: v for e, v in a.items() if v != 0},
        inst.offset,
    )


# ---------------------------------------------------------------- pipeline


def _solve(qubo: QuboInstance, solver, options: dict) -> int:
    from .bruteforce import SearchConfig, ground_search_gray, spectrum_search

    workers = options.get("workers")
    if callable(solver):
        return int(solver(qubo))
    if solver in ("bruteforce", "gray"):
        word, _ = ground_search_gray(qubo, SearchConfig(workers=workers))
        return word
    if solver == "chunked":
        return spectrum_search(qubo, SearchConfig(k=1, workers=workers)).ground[1]
    raise ValueError(f"unknown solver {solver!r}")


def simulate_pipeline(spec: SystemSpec, code: FixedPointCode, solver="bruteforce", options=None) -> Trajectory:
    """Propagators, clock system, objective, QUBO, solve, decode.

    Options
    -------
    objective : {"lsq", "energy"}
    substeps : int
    truncate : int or None
        Decimal digits kept in QUBO coefficients.
    workers : int
    """
    options = dict(options or {})
    U = step_propagators(spec, options.get("substeps", 1))
    cs = build_clock_system(U, spec.psi0)
    form = options.get("objective", "lsq")
    G, c, const = quadratic_objective(cs, form)
    qubo, varmap = encode_fixed_point(G, c, const, code)
    if options.get("truncate") is not None:
        qubo = truncate_coefficients(qubo, int(options["truncate"]))
    word = _solve(qubo, solver, options)
    bits = np.array([(word >> int(v)) & 1 for v in varmap.ravel()], dtype=np.int8)
    x = decode_fixed_point(bits, code)
    states = real_to_complex(x) if cs.complex_embedded else x
    raw = states.reshape(cs.N, cs.L)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    normalized = np.where(norms > 0, raw / np.where(norms > 0, norms, 1.0), raw)
    diag = {
        "objective_form": form,
        "objective": objective_value(G, c, const, x),
        "residual": float(np.linalg.norm(cs.A @ x - cs.phi)),
        "qubo_energy": qubo_energy(qubo, word),
        "variables": qubo.n,
        "state_word": int(word),
    }
    return Trajectory(raw, normalized, spec.times, diag)


def qubit_rotation_spec(N: int) -> SystemSpec:
    """Real two-level system rotating by a quarter turn per unit time."""
    K = (math.pi / 2) * np.array([[0.0, -1.0], [1.0, 0.0]])
    return SystemSpec(K, np.array([1.0, 0.0]), N=N)


def _parse_entry(v, complex_field: bool):
    if isinstance(v, (list, tuple)):
        if not complex_field or len(v) != 2:
            raise InstanceFormatError("pairs [re, im] are only valid for complex systems")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return float(v)


def load_system_spec(source) -> tuple[SystemSpec, FixedPointCode]:
    """Read ``{"L", "field", "K", "psi0", "N", "R", "D"}`` JSON (path, text or dict).

    Complex entries are ``[re, im]`` pairs or strings such as ``"1-2j"``.
    """
    if isinstance(source, dict):
        d = source
    else:
        try:
            if isinstance(source, str) and source.lstrip().startswith("{"):
                d = json.loads(source)
            else:
                with open(source, encoding="utf-8") as fh:
                    d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InstanceFormatError(f"cannot read system spec: {exc}") from exc
    try:
        fld = d.get("field", "real")
        cplx = fld == "complex"
        K = np.array([[_parse_entry(v, cplx) for v in row] for row in d["K"]])
        psi0 = np.array([_parse_entry(v, cplx) for v in d["psi0"]])
        L = int(d.get("L", len(psi0)))
        if L != len(psi0):
            raise InstanceFormatError(f"L={L} but psi0 has {len(psi0)} entries")
        spec = SystemSpec(K, psi0, times=d.get("times"), N=d.get("N"), field=fld)
        code = FixedPointCode(int(d.get("D", 0)), int(d.get("R", 2)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"invalid system spec: {exc}") from exc
    return spec, code
