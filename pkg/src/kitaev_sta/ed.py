"""Exact diagonalization of the Kitaev chain in the full 2^N Fock space.

Basis: little-endian occupation bitstrings, bit ``j`` of the basis index is the
occupation of site ``j`` (0-based). Fermion operators carry Jordan-Wigner sign
strings over the lower sites. With ``Boundary.PBC`` the bond N-1 -> 0 is the
image of a periodic spin chain: it carries the sign ``-P`` (P the fermion
parity), so the even sector is antiperiodic and its momenta are exactly
k = (2n - 1) pi / N.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from ._stepping import default_n_steps, schedule
from ._validation import check_state
from .krylov import expm_krylov
from .model import Boundary, ChainParams

BUILD_CAP = 14
DENSE_CAP = 12
_DENSE_SECTOR = 512

PARITIES = ("even", "odd", "mixed")


class DimensionCapError(ValueError):
    pass


class EigensolverError(RuntimeError):
    pass


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    y = x.copy()
    while np.any(y):
        count += y & 1
        y >>= 1
    return count


def parity_of(states):
    return _popcount(states) & 1


def sector_indices(n_sites, parity):
    idx = np.arange(1 << n_sites)
    return idx[parity_of(idx) == {"even": 0, "odd": 1}[parity]]


def _apply(states, sign, site, dagger):
    """Apply c_site^dag (or c_site) to basis states; zero-out invalid entries via sign."""
    occ = (states >> site) & 1
    ok = occ == 0 if dagger else occ == 1
    below = _popcount(states & ((1 << site) - 1))
    sign = np.where(ok, sign * (1 - 2 * (below & 1)), 0)
    return states ^ (1 << site), sign


def _quadratic(n_sites, ops, coeff):
    """Sparse matrix of coeff * op_0 op_1 (op_1 applied first); ops = ((site, dagger), ...)."""
    cols = np.arange(1 << n_sites)
    states, sign = cols.copy(), np.ones(cols.size, dtype=np.int64)
    for site, dagger in reversed(ops):
        states, sign = _apply(states, sign, site, dagger)
    keep = sign != 0
    coeff = np.broadcast_to(np.asarray(coeff), cols.shape)
    vals = coeff[keep] * sign[keep]
    dim = 1 << n_sites
    return sp.csr_matrix((vals, (states[keep], cols[keep])), shape=(dim, dim))


def fermion_operator(n_sites, site, dagger):
    """Sparse c_site^dag (dagger=True) or c_site on the full Fock space."""
    cols = np.arange(1 << n_sites)
    states, sign = _apply(cols, np.ones(cols.size, dtype=np.int64), site, dagger)
    keep = sign != 0
    dim = 1 << n_sites
    return sp.csr_matrix((sign[keep].astype(float), (states[keep], cols[keep])), shape=(dim, dim))


def number_operator(n_sites):
    return _popcount(np.arange(1 << n_sites)).astype(float)


@dataclass
class HamiltonianMatrix:
    """H(mu) = kinetic - mu * N_op as a sparse matrix plus its mu-independent part."""

    params: ChainParams
    mu: float
    kinetic: sp.csr_matrix
    number: np.ndarray

    @property
    def dimension(self):
        return self.kinetic.shape[0]

    @property
    def boundary(self):
        return self.params.boundary

    @property
    def matrix(self):
        return (self.kinetic - self.mu * sp.diags(self.number)).tocsr()

    def sector(self, parity):
        idx = sector_indices(self.params.n_sites, parity)
        return self.matrix[idx][:, idx]


_KINETIC_CACHE = {}


def _kinetic(params: ChainParams):
    key = (params.n_sites, params.omega, params.delta, params.phase, params.boundary)
    if key in _KINETIC_CACHE:
        return _KINETIC_CACHE[key]
    n = params.n_sites
    d = params.pairing
    dim = 1 << n
    h = sp.csr_matrix((dim, dim), dtype=complex)
    bonds = [(j, j + 1, 1.0) for j in range(n - 1)]
    if params.boundary is Boundary.PBC:
        # c_{N} -> -P c_0 : parity-dependent sign of the wrap-around bond
        bonds.append((n - 1, 0, -(1 - 2 * parity_of(np.arange(dim)))))
    for i, j, s in bonds:
        h = h + _quadratic(n, ((i, True), (j, False)), -params.omega * s)
        h = h + _quadratic(n, ((j, True), (i, False)), -params.omega * s)
        h = h + _quadratic(n, ((i, True), (j, True)), np.conj(d) * s)
        h = h + _quadratic(n, ((j, False), (i, False)), d * s)
    h = h.tocsr()
    h.eliminate_zeros()
    if np.allclose(h.data.imag, 0):
        h = h.real.tocsr()
    _KINETIC_CACHE[key] = h
    return h


def build_hamiltonian(mu, params: ChainParams, cap=BUILD_CAP) -> HamiltonianMatrix:
    if params.n_sites > cap:
        raise DimensionCapError(f"N={params.n_sites} exceeds the build cap {cap}")
    return HamiltonianMatrix(params, float(mu), _kinetic(params), number_operator(params.n_sites))


@dataclass
class ManyBodyState:
    """Normalized amplitude vector over the full 2^N occupation basis."""

    amplitudes: np.ndarray
    n_sites: int
    parity: str = "mixed"

    def __post_init__(self):
        self.amplitudes = check_state(self.amplitudes, 1 << self.n_sites)
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}")
        if self.parity != "mixed":
            wrong = parity_of(np.flatnonzero(self.amplitudes)) != (self.parity == "odd")
            if np.any(wrong):
                raise ValueError(f"state has support outside the {self.parity} sector")

    @classmethod
    def from_sector(cls, vec, n_sites, parity):
        full = np.zeros(1 << n_sites, dtype=complex)
        full[sector_indices(n_sites, parity)] = vec
        return cls(full, n_sites, parity)

    def sector_vector(self):
        return self.amplitudes[sector_indices(self.n_sites, self.parity)]

    def overlap(self, other):
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _fix_phase(vec):
    i = int(np.argmax(np.abs(vec) > 1e-12 * np.abs(vec).max()))
    return vec * (abs(vec[i]) / vec[i])


def _sector_ground(h):
    if h.shape[0] <= _DENSE_SECTOR:
        w, v = np.linalg.eigh(h.toarray())
        return w[0], v[:, 0]
    v0 = np.ones(h.shape[0], dtype=h.dtype)
    try:
        w, v = eigsh(h, k=1, which="SA", v0=v0, tol=1e-13)
    except Exception as exc:  # ArpackNoConvergence and friends
        raise EigensolverError(str(exc)) from exc
    return w[0], v[:, 0]


def lowest_states(mu, params: ChainParams, cap=BUILD_CAP):
    """Lowest eigenpair in each parity sector: (E_even, state_even, E_odd, state_odd)."""
    ham = build_hamiltonian(mu, params, cap)
    out = []
    for parity in ("even", "odd"):
        e, v = _sector_ground(ham.sector(parity))
        out += [float(e), ManyBodyState.from_sector(_fix_phase(v), params.n_sites, parity)]
    return tuple(out)


@dataclass
class SpectrumTable:
    """Eigen-decomposition restricted to ``basis_indices`` (rows of ``eigenvectors``)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    parities: np.ndarray
    basis_indices: np.ndarray
    n_sites: int
    mu: float = float("nan")
    boundary: Optional[Boundary] = None

    def __len__(self):
        return self.eigenvalues.size

    @property
    def complete(self):
        return self.eigenvalues.size == 1 << self.n_sites

    def amplitudes(self, state):
        """Expansion coefficients <m|psi> of ``state`` in this eigenbasis."""
        amps = getattr(state, "amplitudes", state)
        return self.eigenvectors.conj().T @ np.asarray(amps)[self.basis_indices]

    def residual(self, ham: HamiltonianMatrix):
        h = ham.matrix[self.basis_indices][:, self.basis_indices]
        r = h @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.max(np.linalg.norm(r, axis=0)))


def full_spectrum(mu, params: ChainParams, parity=None, allow_large=False,
                  dense_cap=DENSE_CAP) -> SpectrumTable:
    """Dense eigen-decomposition, per parity sector; ``parity=None`` gives all 2^N levels."""
    n = params.n_sites
    if n > dense_cap and not allow_large:
        raise DimensionCapError(
            f"N={n} exceeds the dense cap {dense_cap}; pass allow_large=True")
    ham = build_hamiltonian(mu, params, cap=max(BUILD_CAP, n))
    sectors = ("even", "odd") if parity is None else (parity,)
    vals, labels, blocks, indices = [], [], [], []
    for par in sectors:
        idx = sector_indices(n, par)
        w, v = np.linalg.eigh(ham.matrix[idx][:, idx].toarray())
        vals.append(w)
        labels.append(np.full(w.size, par))
        blocks.append((idx, v))
        indices.append(idx)
    basis = np.concatenate(indices)
    dim = basis.size
    vecs = np.zeros((dim, dim), dtype=np.result_type(*[b[1].dtype for b in blocks]))
    row = 0
    for idx, v in blocks:
        vecs[row:row + idx.size, row:row + idx.size] = v
        row += idx.size
    w = np.concatenate(vals)
    order = np.argsort(w, kind="stable")
    return SpectrumTable(w[order], vecs[:, order], np.concatenate(labels)[order], basis,
                         n, float(mu), params.boundary)


def propagate(state: ManyBodyState, protocol, params: ChainParams, n_steps=None,
              scheme="magnus4", tol=1e-10, cap=BUILD_CAP) -> ManyBodyState:
    """Time-ordered evolution along the step schedule, one Lanczos exponential per entry.

    Works inside the state's parity sector (full space for mixed states).
    """
    if n_steps is None:
        n_steps = default_n_steps(protocol.tau, params.omega)
    ham = build_hamiltonian(protocol.mu_0, params, cap)
    n = params.n_sites
    if state.parity == "mixed":
        idx = np.arange(1 << n)
    else:
        idx = sector_indices(n, state.parity)
    kin = ham.kinetic[idx][:, idx].tocsr()
    num = ham.number[idx]
    psi = state.amplitudes[idx].astype(complex)
    mus, dts = schedule(protocol, n_steps, scheme)
    for mu, dt in zip(mus, dts):
        psi = expm_krylov(lambda x, mu=mu: kin @ x - mu * (num * x), psi, dt, tol=tol)
    full = np.zeros(1 << n, dtype=complex)
    full[idx] = psi / np.linalg.norm(psi)
    return ManyBodyState(full, n, state.parity)


def ed_fidelity(protocol, params: ChainParams, parity="even", n_steps=None,
                scheme="magnus4", cap=BUILD_CAP):
    """|<phi_target(tau)|U|phi_start(0)>|^2 within one parity sector.

    Start and target are the lowest states of the sector at mu_0 and mu_f; in
    the trivial phase the odd target is the first excited state.
    """
    e0, s_even, o0, s_odd = lowest_states(protocol.mu_0, params, cap)
    start = s_even if parity == "even" else s_odd
    psi = propagate(start, protocol, params, n_steps, scheme, cap=cap)
    _, t_even, _, t_odd = lowest_states(protocol.mu_f, params, cap)
    target = t_even if parity == "even" else t_odd
    return abs(target.overlap(psi)) ** 2
