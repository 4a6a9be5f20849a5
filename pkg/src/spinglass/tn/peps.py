"""PEPS form of the Boltzmann weight and its boundary-MPS contraction.

Every site tensor factorizes as

    A[x; l, r, u, d] = w(x) * F_l[x, l] * F_r[x, r] * F_u[x, u] * F_d[x, d]

where ``w(x) = exp(-beta E_local(x))`` and each bond between neighbouring
clusters is split into a copy factor (``delta``) on the side with fewer
interacting spins and an exponential factor on the other side. The bond index
runs over the configurations of the interacting spins of the smaller side.
The factors are stored instead of the dense five-leg array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OrderError
from .lattice import ClusterLattice

__all__ = [
    "edge_decompose",
    "PepsNetwork",
    "build_peps",
    "Boundary",
    "contract_boundary",
    "compress_mps",
    "conditional_probability",
]


def edge_decompose(J: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Split ``exp(-beta J s_i s_j)`` into ``sum_g B[s_i, g] C[s_j, g]``.

    Row index 0 is spin -1 and row 1 is spin +1.

    Returns
    -------
    B : (2, 2) ndarray
        Identity (copy of ``s_i`` onto the bond).
    C : (2, 2) ndarray
        ``C[s, g] = exp(-beta * g * J * s)``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    s = np.array([-1.0, 1.0])
    B = np.eye(2)
    C = np.exp(-beta * J * np.outer(s, s))
    return B, C


def _spins_of(states: np.ndarray, bits) -> np.ndarray:
    """``(len(states), len(bits))`` array of +-1 for the chosen local bits."""
    return 2.0 * ((states[:, None] >> np.asarray(bits, dtype=int)[None, :]) & 1) - 1.0


def _bond_factors(lat: ClusterLattice, a: int, b: int, beta: float):
    """Factor matrices ``(F_a, F_b)`` for the bond between sites ``a < b``."""
    ma = len(lat.cluster_spins[a])
    mb = len(lat.cluster_spins[b])
    xa = np.arange(1 << ma)
    xb = np.arange(1 << mb)
    terms = lat.inter.get((a, b), [])
    if not terms:
        return np.ones((len(xa), 1)), np.ones((len(xb), 1))
    pa = sorted({t for t, _, _ in terms})
    pb = sorted({t for _, t, _ in terms})
    if len(pa) <= len(pb):
        copy_x, copy_bits, exp_x = xa, pa, xb
        pos = {t: i for i, t in enumerate(pa)}
        pairs = [(pos[ta], tb, J) for ta, tb, J in terms]
    else:
        copy_x, copy_bits, exp_x = xb, pb, xa
        pos = {t: i for i, t in enumerate(pb)}
        pairs = [(pos[tb], ta, J) for ta, tb, J in terms]
    D = 1 << len(copy_bits)
    proj = np.zeros(len(copy_x), dtype=int)
    for i, t in enumerate(copy_bits):
        proj |= ((copy_x >> t) & 1) << i
    F_copy = np.zeros((len(copy_x), D))
    F_copy[np.arange(len(copy_x)), proj] = 1.0
    g = np.arange(D)
    energy = np.zeros((len(exp_x), D))
    for gi, t, J in pairs:
        sg = 2.0 * ((g >> gi) & 1) - 1.0
        sx = 2.0 * ((exp_x >> t) & 1) - 1.0
        energy += J * np.outer(sx, sg)
    F_exp = np.exp(-beta * energy)
    if copy_x is xa:
        return F_copy, F_exp
    return F_exp, F_copy


@dataclass(frozen=True, eq=False)
class PepsNetwork:
    """Factored PEPS of ``exp(-beta H)`` on a cluster lattice.

    Attributes
    ----------
    lattice : ClusterLattice
    beta : float
    weights : list of ndarray
        ``w(x)`` per site, shifted by the site's lowest local energy.
    legs : list of dict
        ``{"l", "r", "u", "d"} -> (2^m, D)`` factor matrices per site.
    log_shift : float
        ``log`` of the factor removed by the weight shifts.
    """

    lattice: ClusterLattice
    beta: float
    weights: list
    legs: list
    log_shift: float

    def bond_dims(self, site: int) -> dict:
        return {k: v.shape[1] for k, v in self.legs[site].items()}

    def tensor(self, site: int) -> np.ndarray:
        """Dense ``[x, l, r, u, d]`` array of one site."""
        f = self.legs[site]
        return np.einsum("x,xl,xr,xu,xd->xlrud", self.weights[site], f["l"], f["r"], f["u"], f["d"])

    def traced(self, site: int, scale=None) -> np.ndarray:
        """``[l, r, u, d]`` with the physical index summed (optionally weighted)."""
        w = self.weights[site] if scale is None else self.weights[site] * scale
        f = self.legs[site]
        return np.einsum("x,xl,xr,xu,xd->lrud", w, f["l"], f["r"], f["u"], f["d"])


def build_peps(lat: ClusterLattice, beta: float) -> PepsNetwork:
    """Construct the factored network for ``exp(-beta H)``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    R, C = lat.rows, lat.cols
    weights = []
    log_shift = 0.0
    legs = []
    for site in range(lat.sites):
        e = lat.local_energies(site)
        emin = float(e.min())
        weights.append(np.exp(-beta * (e - emin)))
        log_shift += -beta * emin
        dim = len(e)
        legs.append({k: np.ones((dim, 1)) for k in "lrud"})
    for r in range(R):
        for c in range(C):
            a = lat.site(r, c)
            if c + 1 < C:
                b = lat.site(r, c + 1)
                legs[a]["r"], legs[b]["l"] = _bond_factors(lat, a, b, beta)
            if r + 1 < R:
                b = lat.site(r + 1, c)
                legs[a]["d"], legs[b]["u"] = _bond_factors(lat, a, b, beta)
    return PepsNetwork(lat, float(beta), weights, legs, log_shift)


# ---------------------------------------------------------------- boundary MPS


def compress_mps(tensors: list, chi: int) -> tuple[list, float]:
    """Left-canonicalize with QR, then truncate right-to-left by SVD to bond ``chi``.

    Returns the compressed tensors (unit norm) and the log of the removed norm.
    """
    ts = [np.array(t, dtype=float) for t in tensors]
    log_norm = 0.0
    for i in range(len(ts) - 1):
        Dl, p, Dr = ts[i].shape
        Q, Rm = np.linalg.qr(ts[i].reshape(Dl * p, Dr))
        ts[i] = Q.reshape(Dl, p, Q.shape[1])
        ts[i + 1] = np.einsum("ab,bpc->apc", Rm, ts[i + 1])
    nrm = np.linalg.norm(ts[-1])
    if nrm == 0:
        return ts, -np.inf
    ts[-1] /= nrm
    log_norm += np.log(nrm)
    for i in range(len(ts) - 1, 0, -1):
        Dl, p, Dr = ts[i].shape
        U, S, Vh = np.linalg.svd(ts[i].reshape(Dl, p * Dr), full_matrices=False)
        keep = max(1, min(chi, int(np.sum(S > S[0] * 1e-14)) if S[0] > 0 else 1))
        ts[i] = Vh[:keep].reshape(keep, p, Dr)
        ts[i - 1] = np.einsum("apb,bc->apc", ts[i - 1], U[:, :keep] * S[:keep])
    nrm = np.linalg.norm(ts[0])
    ts[0] /= nrm
    log_norm += np.log(nrm)
    return ts, log_norm


@dataclass(frozen=True, eq=False)
class Boundary:
    """Bottom environments of a network.

    ``envs[r]`` is the compressed contraction of rows ``r+1 .. rows-1``, an MPS
    whose physical legs attach to the down legs of row ``r``. ``log_scales[r]``
    is the log of the factor divided out of it.
    """

    envs: list
    log_scales: list
    log_Z: float
    chi: int


def _apply_row(net: PepsNetwork, r: int, mps: list) -> list:
    lat = net.lattice
    out = []
    for c in range(lat.cols):
        T = net.traced(lat.site(r, c))
        E = mps[c]
        t = np.einsum("lrud,adb->laurb", T, E)
        L, A, U, Rr, B = t.shape
        out.append(t.reshape(L * A, U, Rr * B))
    return out


def contract_boundary(net: PepsNetwork, chi: int) -> Boundary:
    """Absorb rows from the bottom up, compressing to bond ``chi`` after each row."""
    if chi < 1:
        raise ValueError("chi must be at least 1")
    lat = net.lattice
    R, C = lat.rows, lat.cols
    envs = [None] * R
    scales = [0.0] * R
    mps = [np.ones((1, 1, 1)) for _ in range(C)]
    log_scale = 0.0
    envs[R - 1] = mps
    for r in range(R - 1, -1, -1):
        mps = _apply_row(net, r, mps)
        mps, ln = compress_mps(mps, chi)
        log_scale += ln
        if r > 0:
            envs[r - 1] = mps
            scales[r - 1] = log_scale
    v = np.ones((1,))
    for t in mps:
        v = v @ t[:, 0, :]
    log_Z = float(np.log(v[0])) + log_scale + net.log_shift if v[0] > 0 else -np.inf
    return Boundary(envs, scales, log_Z, chi)


# ---------------------------------------------------------------- conditionals


def _caps(net: PepsNetwork, r: int, config) -> list:
    """Per-site vectors over cluster states from the fixed row above."""
    lat = net.lattice
    out = []
    for c in range(lat.cols):
        site = lat.site(r, c)
        if r == 0:
            out.append(np.ones(len(net.weights[site])))
        else:
            up = lat.site(r - 1, c)
            out.append(net.legs[site]["u"] @ net.legs[up]["d"][config[up]])
    return out


def row_left_transfer(net, env, caps, r, config, upto):
    """Left transfer matrix ``[row bond, env bond]`` over projected sites ``< upto``."""
    lat = net.lattice
    L = np.ones((1, 1))
    for c in range(upto):
        site = lat.site(r, c)
        x = config[site]
        f = net.legs[site]
        wx = net.weights[site][x] * caps[c][x]
        v = f["l"][x] @ L
        u = np.einsum("a,d,adb->b", v, f["d"][x], env[c])
        L = wx * np.outer(f["r"][x], u)
        m = np.abs(L).max()
        if m > 0:
            L = L / m
    return L


def row_right_transfer(net, env, caps, r, start):
    """Right transfer matrix over traced sites ``>= start``."""
    lat = net.lattice
    Rm = np.ones((1, 1))
    for c in range(lat.cols - 1, start - 1, -1):
        site = lat.site(r, c)
        f = net.legs[site]
        T = np.einsum("x,xl,xr,xd->lrd", net.weights[site] * caps[c], f["l"], f["r"], f["d"])
        Rm = np.einsum("lrd,adb,rb->la", T, env[c], Rm)
        m = np.abs(Rm).max()
        if m > 0:
            Rm = Rm / m
    return Rm


def conditional_probability(net: PepsNetwork, boundary: Boundary, partial_config, site: int) -> np.ndarray:
    """Distribution of ``site``'s cluster state given all earlier sites.

    Parameters
    ----------
    partial_config : sequence of int
        Cluster states for sites ``0 .. site-1`` in row-major order.
    """
    lat = net.lattice
    if not 0 <= site < lat.sites:
        raise OrderError(f"site {site} outside the lattice")
    if len(partial_config) < site:
        raise OrderError(f"site {site} needs states for all {site} earlier sites")
    config = list(partial_config[:site])
    r, c = divmod(site, lat.cols)
    env = boundary.envs[r]
    caps = _caps(net, r, config)
    L = row_left_transfer(net, env, caps, r, config, c)
    Rm = row_right_transfer(net, env, caps, r, c + 1)
    return _open_site(net, env, caps, r, c, L, Rm)


def _open_site(net, env, caps, r, c, L, Rm):
    site = net.lattice.site(r, c)
    f = net.legs[site]
    G = np.einsum("la,adb,rb->ldr", L, env[c], Rm)
    p = net.weights[site] * caps[c] * np.einsum("xl,xd,xr,ldr->x", f["l"], f["d"], f["r"], G)
    p = np.clip(p, 0.0, None)
    s = p.sum()
    if not s > 0:
        return np.full(len(p), 1.0 / len(p))
    return p / s
