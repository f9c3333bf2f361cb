"""Momentum-sector dynamics of the Kitaev chain in the bulk approximation.

Each (k, -k) pair with 0 < k < pi spans the four states ``|00>, |11>, |01>,
|10>`` (occupations of +k then -k, ``|11> = c_k^dag c_-k^dag |00>``).
Quadratic dynamics never mixes the even pair ``{|00>, |11>}`` with the odd
pair ``{|01>, |10>}``.

Sector matrices follow the real-space Hamiltonian (``convention="physical"``):
the even block is ``[[0, -2i Delta s], [2i Delta* s, 2 xi]]`` and the odd block
``xi * I`` with ``xi = -mu - 2 omega cos k`` and ``s = sin k``. Its even block
equals ``xi * I`` minus the textbook traceless BdG block, so summing over the
grid shifts every total energy by ``sum_k xi_k = -N mu / 2``.
"""
from dataclasses import dataclass, field
import numpy as np

from ._stepping import default_n_steps, schedule
from .model import ChainParams, PhaseLabel, bulk_spectrum, momentum_grid, phase_of, sector_gap
from .work import WorkDistribution, convolve, point_mass

DEGENERACY_TOL = 1e-10
EVEN_BASIS = ("00", "11")
FULL_BASIS = ("00", "11", "01", "10")
_CHUNK = 1 << 14


class DegenerateSectorError(ValueError):
    pass


@dataclass(frozen=True)
class SectorBlock:
    k: float
    matrix: np.ndarray
    basis: tuple


@dataclass(frozen=True)
class BogoliubovPair:
    u: complex
    v: complex
    e_bulk: float
    epsilon: float
    delta_tilde: complex


@dataclass
class FidelityResult:
    value: float
    per_sector_factors: np.ndarray
    momenta: np.ndarray
    lowest_index: int = -1
    meta: dict = field(default_factory=dict)


def _xi(k, mu, params):
    return -mu - 2 * params.omega * np.cos(k)


def _traceless_terms(k, mu, params):
    """Components (a, off) of the traceless even block [[a, off], [off*, -a]]."""
    a = mu + 2 * params.omega * np.cos(k)
    off = -2j * params.pairing * np.sin(k)
    return a, off


def sector_hamiltonian(k, mu, params: ChainParams, size=2, convention="physical") -> SectorBlock:
    """Hamiltonian of momentum pair ``k``.

    ``convention="bdg"`` gives the traceless textbook form
    ``-[[a, -2i Delta* s], [2i Delta s, -a]] (+) -a I`` with ``a = mu + 2 omega cos k``.
    """
    if size not in (2, 4):
        raise ValueError("size must be 2 or 4")
    k = float(k)
    xi = _xi(k, mu, params)
    s = np.sin(k)
    d = params.pairing
    if convention == "physical":
        even = np.array([[0.0, -2j * d * s], [2j * np.conj(d) * s, 2 * xi]])
    elif convention == "bdg":
        a = -xi
        even = -np.array([[a, -2j * np.conj(d) * s], [2j * d * s, -a]])
    else:
        raise ValueError(f"unknown convention {convention!r}")
    if size == 2:
        return SectorBlock(k, even.astype(complex), EVEN_BASIS)
    full = np.zeros((4, 4), dtype=complex)
    full[:2, :2] = even
    full[2, 2] = full[3, 3] = xi
    return SectorBlock(k, full, FULL_BASIS)


def _step_matrices(ks, mus, dts, params):
    """exp(-i H(mu) dt) of the even blocks, shape (n_steps, n_k, 2, 2), closed form."""
    k = ks[None, :]
    mu = mus[:, None]
    dt = dts[:, None]
    a, off = _traceless_terms(k, mu, params)
    off = np.broadcast_to(off, a.shape)
    xi = -a
    e = np.sqrt(a * a + np.abs(off) ** 2)
    c = np.cos(e * dt)
    sn = dt * np.sinc(e * dt / np.pi)  # sin(e dt) / e, finite at e = 0
    ph = np.exp(-1j * xi * dt)
    m = np.empty(a.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = ph * (c - 1j * sn * a)
    m[..., 1, 1] = ph * (c + 1j * sn * a)
    m[..., 0, 1] = ph * (-1j * sn * off)
    m[..., 1, 0] = ph * (-1j * sn * np.conj(off))
    return m


def _ordered_product(m):
    """M[n-1] @ ... @ M[1] @ M[0] by pairwise reduction along axis 0."""
    while m.shape[0] > 1:
        n = m.shape[0]
        paired = m[1:n - n % 2:2] @ m[0:n - n % 2:2]
        if n % 2:
            paired = np.concatenate([paired, m[-1:]], axis=0)
        m = paired
    return m[0]


def evolve_even_blocks(ks, protocol, params: ChainParams, n_steps=None, scheme="magnus4"):
    """Even-block propagators U_k(tau) for every momentum in ``ks``, shape (n_k, 2, 2).

    Time-ordered product of exact 2x2 exponentials along the step schedule.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    if n_steps is None:
        n_steps = default_n_steps(protocol.tau, params.omega)
    mus, dts = schedule(protocol, n_steps, scheme)
    u = np.broadcast_to(np.eye(2, dtype=complex), (ks.size, 2, 2))
    for start in range(0, mus.size, _CHUNK):
        chunk = _step_matrices(ks, mus[start:start + _CHUNK], dts[start:start + _CHUNK], params)
        u = _ordered_product(chunk) @ u
    return np.array(u)


def odd_block_phase(k, protocol, params: ChainParams, n_steps=None, scheme="magnus4"):
    """Scalar propagator exp(-i sum xi dt) of the (diagonal, degenerate) odd block."""
    if n_steps is None:
        n_steps = default_n_steps(protocol.tau, params.omega)
    mus, dts = schedule(protocol, n_steps, scheme)
    return np.exp(-1j * np.sum(dts * _xi(k, mus, params)))


def evolve_sector(k, protocol, params: ChainParams, n_steps=None, size=2,
                  scheme="magnus4") -> SectorBlock:
    u_even = evolve_even_blocks([k], protocol, params, n_steps, scheme)[0]
    if size == 2:
        return SectorBlock(float(k), u_even, EVEN_BASIS)
    if size != 4:
        raise ValueError("size must be 2 or 4")
    full = np.zeros((4, 4), dtype=complex)
    full[:2, :2] = u_even
    full[2:, 2:] = odd_block_phase(k, protocol, params, n_steps, scheme) * np.eye(2)
    return SectorBlock(float(k), full, FULL_BASIS)


def _fix_phase(vecs):
    """Make the first component with |x| > 1e-14 real positive (vectorized over rows)."""
    vecs = np.array(vecs, dtype=complex)
    idx = np.argmax(np.abs(vecs) > 1e-14, axis=-1)
    lead = np.take_along_axis(vecs, idx[..., None], axis=-1)
    return vecs * (np.abs(lead) / lead)


def sector_ground_states(ks, mu, params: ChainParams):
    """Lower-eigenvalue eigenvectors of the even blocks, shape (n_k, 2)."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    gaps = sector_gap(ks, mu, params)
    if np.any(gaps < DEGENERACY_TOL * params.omega):
        bad = ks[gaps < DEGENERACY_TOL * params.omega]
        raise DegenerateSectorError(f"gap closed at mu={mu} for k={bad}")
    h = np.stack([sector_hamiltonian(k, mu, params).matrix for k in ks])
    _, vecs = np.linalg.eigh(h)
    return _fix_phase(vecs[..., :, 0])


def sector_ground_state(k, mu, params: ChainParams):
    return sector_ground_states([k], mu, params)[0]


def bogoliubov_pair(k, mu, params: ChainParams) -> BogoliubovPair:
    """Quasiparticle coefficients, rescaled by 1/sqrt(2) to unit norm."""
    s = np.sin(k)
    if abs(s) < 1e-14:
        raise ValueError("Bogoliubov phase undefined at sin k = 0")
    eps = -2 * params.omega * np.cos(k) - mu
    dt = -2j * params.delta * s
    e = float(np.hypot(eps, abs(dt)))
    # (e - eps)(e + eps) = |dt|^2 avoids cancellation in whichever sum is small
    if eps >= 0:
        e_plus = e + eps
        e_minus = abs(dt) ** 2 / e_plus
    else:
        e_minus = e - eps
        e_plus = abs(dt) ** 2 / e_minus
    u = dt / abs(dt) * np.sqrt(e_plus / e)
    v = e_minus / dt * u
    return BogoliubovPair(u / np.sqrt(2), v / np.sqrt(2), e, float(eps), dt)


def f_dagger_block(k, params: ChainParams) -> SectorBlock:
    """Sector-k part of f^dag = (c_1^dag + c_1 + c_N^dag - c_N)/2 in FULL_BASIS."""
    n = params.n_sites
    p, m = np.exp(1j * k), np.exp(-1j * k)
    pn, mn = np.exp(1j * k * n), np.exp(-1j * k * n)
    mat = np.array([
        [0, 0, m - mn, p - pn],
        [0, 0, m + mn, -p - pn],
        [p + pn, p - pn, 0, 0],
        [m + mn, -m + mn, 0, 0],
    ], dtype=complex) / (2 * np.sqrt(n))
    return SectorBlock(float(k), mat, FULL_BASIS)


def beta_block(k, mu, params: ChainParams) -> SectorBlock:
    """Quasiparticle annihilator of sector k in FULL_BASIS (rescaled u, v)."""
    bp = bogoliubov_pair(k, mu, params)
    u, v = bp.u, bp.v
    mat = np.array([
        [0, 0, 0, u],
        [0, 0, 0, -v],
        [v, u, 0, 0],
        [0, 0, 0, 0],
    ], dtype=complex)
    return SectorBlock(float(k), mat, FULL_BASIS)


def _even_factors(protocol, params, n_steps, scheme):
    ks = momentum_grid(params)
    g0 = sector_ground_states(ks, protocol.mu_0, params)
    gf = sector_ground_states(ks, protocol.mu_f, params)
    u = evolve_even_blocks(ks, protocol, params, n_steps, scheme)
    amps = np.einsum("ki,kij,kj->k", gf.conj(), u, g0)
    return ks, amps


def fidelity_even(protocol, params: ChainParams, n_steps=None, scheme="magnus4") -> FidelityResult:
    """|prod_k <k_tau^-| U_k |k_0^-> |^2 over the positive momentum grid."""
    ks, amps = _even_factors(protocol, params, n_steps, scheme)
    value = float(np.prod(np.abs(amps) ** 2))
    return FidelityResult(value, amps, ks)


def lowest_sector(mu, params: ChainParams) -> int:
    """Grid index of the momentum pair with the smallest gap at ``mu``."""
    return int(np.argmin(sector_gap(momentum_grid(params), mu, params)))


def _embed_even(vec):
    out = np.zeros(4, dtype=complex)
    out[:2] = vec
    return out


def odd_lowest_factor(protocol, params: ChainParams, n_steps=None, target="manifold",
                      scheme="magnus4"):
    """Amplitude of the lowest sector's contribution to the odd-state fidelity.

    The sector starts in ``f_k^dag |k_0^->`` (normalized) and, the odd block
    being proportional to the identity, only picks up a phase. ``target``
    selects the final odd state it is projected on:

    ``"manifold"``
        the degenerate one-quasiparticle doublet ``{|01>, |10>}`` of the
        sector (modulus 1).
    ``"bogoliubov"``
        the single state ``beta_k^dag |k_tau^->`` built from the rescaled
        Bogoliubov coefficients.
    """
    ks = momentum_grid(params)
    i = lowest_sector(protocol.mu_f, params)
    k = ks[i]
    u4 = evolve_sector(k, protocol, params, n_steps, 4, scheme).matrix
    start = f_dagger_block(k, params).matrix @ _embed_even(sector_ground_state(k, protocol.mu_0, params))
    start /= np.linalg.norm(start)
    evolved = u4 @ start
    if target == "manifold":
        lam = np.vdot(start, evolved)
        return i, complex(lam)
    if target == "bogoliubov":
        beta = beta_block(k, protocol.mu_f, params).matrix
        final = _embed_even(sector_ground_state(k, protocol.mu_f, params))
        bra = beta.conj().T @ final
        return i, complex(np.vdot(bra, evolved) / np.linalg.norm(bra))
    raise ValueError(f"unknown target {target!r}")


def fidelity_odd(protocol, params: ChainParams, n_steps=None, target="manifold",
                 scheme="magnus4") -> FidelityResult:
    """Odd-parity fidelity: the lowest-gap sector enters through its odd block.

    The drive must end in the trivial phase, where the first excited state is
    one quasiparticle in the lowest-gap sector on top of the ground state.
    """
    if phase_of(protocol.mu_f, params) is not PhaseLabel.TRIVIAL:
        raise ValueError("fidelity_odd needs a drive ending in the trivial phase")
    ks, amps = _even_factors(protocol, params, n_steps, scheme)
    i, lowest = odd_lowest_factor(protocol, params, n_steps, target, scheme)
    factors = amps.copy()
    factors[i] = lowest
    value = float(np.prod(np.abs(factors) ** 2))
    return FidelityResult(value, factors, ks, lowest_index=i, meta={"target": target})


def _sector_levels(ks, mu, params, physical):
    _, eps = bulk_spectrum(ks, mu, params)
    shift = _xi(ks, mu, params) if physical else 0.0
    return shift - eps, shift + eps


def bulk_work_distribution(protocol, params: ChainParams, n_steps=None, parity="even",
                           physical_energies=False, merge_tol=1e-9,
                           scheme="magnus4") -> WorkDistribution:
    """Two-point-measurement work distribution assembled sector by sector.

    Each even sector contributes two atoms (stay in / leave the lower level);
    for ``parity="odd"`` the lowest-gap sector sits in its odd block and
    contributes a single atom. Energies are the traceless BdG levels
    ``-+eps_k`` unless ``physical_energies`` adds the ``xi_k`` shift, which moves
    every work value by ``-N (mu_f - mu_0) / 2``.
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    ks, amps = _even_factors(protocol, params, n_steps, scheme)
    lo0, _ = _sector_levels(ks, protocol.mu_0, params, physical_energies)
    lof, hif = _sector_levels(ks, protocol.mu_f, params, physical_energies)
    p_stay = np.clip(np.abs(amps) ** 2, 0.0, 1.0)
    skip = lowest_sector(protocol.mu_f, params) if parity == "odd" else -1

    dist = point_mass(0.0, merge_tol)
    for i in range(ks.size):
        if i == skip:
            w = (_xi(ks[i], protocol.mu_f, params) - _xi(ks[i], protocol.mu_0, params)
                 if physical_energies else 0.0)
            sector = point_mass(w, merge_tol)
        else:
            sector = WorkDistribution([lof[i] - lo0[i], hif[i] - lo0[i]],
                                      [p_stay[i], 1 - p_stay[i]], merge_tol)
        dist = convolve(dist, sector)
    return dist


def evolved_energy(protocol, params: ChainParams, n_steps=None, physical_energies=False,
                   scheme="magnus4"):
    """<psi(tau)|H(tau)|psi(tau)> - E_0(0) for the even ground state, from sector expectations."""
    ks = momentum_grid(params)
    g0 = sector_ground_states(ks, protocol.mu_0, params)
    u = evolve_even_blocks(ks, protocol, params, n_steps, scheme)
    psi = np.einsum("kij,kj->ki", u, g0)
    total = 0.0
    for i, k in enumerate(ks):
        h = sector_hamiltonian(k, protocol.mu_f, params).matrix
        h0 = sector_hamiltonian(k, protocol.mu_0, params).matrix
        if not physical_energies:
            h = h - _xi(k, protocol.mu_f, params) * np.eye(2)
            h0 = h0 - _xi(k, protocol.mu_0, params) * np.eye(2)
        total += np.vdot(psi[i], h @ psi[i]).real - np.vdot(g0[i], h0 @ g0[i]).real
    return float(total)
