"""Static Kitaev-chain model: parameters, bulk spectrum, sector gaps and phases.

Energies are in units of the hopping ``omega`` and hbar = 1 throughout.
"""
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np

CRITICAL_TOL = 1e-12


class Boundary(str, Enum):
    PBC = "PBC"
    OBC = "OBC"


class PhaseLabel(str, Enum):
    TRIVIAL = "Trivial"
    TOPOLOGICAL = "Topological"
    CRITICAL = "Critical"


@dataclass(frozen=True)
class ChainParams:
    """Time-independent data of a Kitaev chain.

    ``delta`` is the pairing magnitude |Delta|; ``phase`` its argument. The
    chemical potential is not stored here since it is the drive.
    """

    n_sites: int
    omega: float = 1.0
    delta: float = 1.0
    phase: float = 0.0
    boundary: Boundary = Boundary.PBC

    def __post_init__(self):
        n = self.n_sites
        if isinstance(n, bool) or int(n) != n:
            raise ValueError(f"n_sites must be an integer, got {n!r}")
        object.__setattr__(self, "n_sites", int(n))
        if self.n_sites < 2 or self.n_sites % 2:
            raise ValueError(f"n_sites must be even and >= 2, got {self.n_sites}")
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def pairing(self) -> complex:
        """Complex pairing amplitude Delta = |Delta| exp(i phase)."""
        return self.delta * np.exp(1j * self.phase)

    def replace(self, **changes) -> "ChainParams":
        fields = dict(n_sites=self.n_sites, omega=self.omega, delta=self.delta,
                      phase=self.phase, boundary=self.boundary)
        fields.update(changes)
        return ChainParams(**fields)


class GapPoint(NamedTuple):
    k: float
    gamma: float


@dataclass(frozen=True)
class GapLandscape:
    mu: float
    gamma_s1: float
    gamma_s2: float
    gamma_s3: Optional[float]
    k_s3: Optional[float]
    s3_window: Optional[Tuple[float, float]]
    global_min_continuum: GapPoint
    global_min_grid: GapPoint
    gamma_s3_closed_form: Optional[float] = None


def momentum_grid(params: ChainParams) -> np.ndarray:
    """Positive momenta k_n = (2n - 1) pi / N, n = 1..N/2."""
    n = np.arange(1, params.n_sites // 2 + 1)
    return (2 * n - 1) * np.pi / params.n_sites


def bulk_spectrum(k, mu, params: ChainParams):
    """Return (eps_minus, eps_plus) for the bulk BdG band at momentum ``k``."""
    k = np.asarray(k, dtype=float)
    a = mu + 2 * params.omega * np.cos(k)
    b = 2 * params.delta * np.sin(k)
    eps = np.hypot(a, b)
    return -eps, eps


def sector_gap(k, mu, params: ChainParams):
    """Gap Gamma_k = eps_plus - eps_minus of momentum sector ``k``."""
    _, eps = bulk_spectrum(k, mu, params)
    return 2 * eps


def s3_window(params: ChainParams) -> Optional[Tuple[float, float]]:
    """Interval of mu where the interior stationary momentum exists.

    Returns None for |Delta| == omega, where the stationarity condition has
    no interior solution.
    """
    w, d = params.omega, params.delta
    if np.isclose(d, w, rtol=0, atol=1e-14 * w):
        return None
    half = 2 * abs(w * w - d * d) / w
    return (-half, half)


def _s3_branch(mu, params):
    w, d = params.omega, params.delta
    window = s3_window(params)
    if window is None:
        return None, None, None
    arg = w * mu / (2 * (d * d - w * w))
    if abs(arg) > 1:
        return None, None, None
    k3 = float(np.arccos(np.clip(arg, -1.0, 1.0)))
    gamma = float(sector_gap(k3, mu, params))
    closed = 4 * d * np.sqrt(1 - mu * mu / (4 * (w * w - d * d)))
    return k3, gamma, float(closed)


def gap_landscape(mu: float, params: ChainParams, grid=None) -> GapLandscape:
    """Stationary-gap analysis of Gamma_k(mu) over k in [0, pi].

    The continuum minimum is taken among the stationary candidates k=0, k=pi
    and the interior point (when it exists); the grid minimum is the smallest
    gap over the quantized momenta.
    """
    if grid is None:
        grid = momentum_grid(params)
    w = params.omega
    g1 = 2 * abs(mu + 2 * w)
    g2 = 2 * abs(mu - 2 * w)
    k3, g3, g3_closed = _s3_branch(mu, params)
    window = s3_window(params)

    candidates = [GapPoint(0.0, g1), GapPoint(float(np.pi), g2)]
    if k3 is not None:
        candidates.append(GapPoint(k3, g3))
    cont = min(candidates, key=lambda p: p.gamma)

    grid = np.asarray(grid, dtype=float)
    gaps = sector_gap(grid, mu, params)
    i = int(np.argmin(gaps))
    return GapLandscape(
        mu=float(mu),
        gamma_s1=float(g1),
        gamma_s2=float(g2),
        gamma_s3=g3,
        k_s3=k3,
        s3_window=window,
        global_min_continuum=cont,
        global_min_grid=GapPoint(float(grid[i]), float(gaps[i])),
        gamma_s3_closed_form=g3_closed,
    )


def phase_of(mu: float, params: ChainParams, tol: Optional[float] = None) -> PhaseLabel:
    if tol is None:
        tol = CRITICAL_TOL * params.omega
    if tol < 0:
        raise ValueError("tol must be >= 0")
    edge = 2 * params.omega
    if abs(mu) < edge - tol:
        return PhaseLabel.TOPOLOGICAL
    if abs(mu) > edge + tol:
        return PhaseLabel.TRIVIAL
    return PhaseLabel.CRITICAL
