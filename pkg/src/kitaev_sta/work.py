"""Two-point-measurement work distributions and their moments."""
import csv
from dataclasses import dataclass

import numpy as np

from ._validation import check_state

DEFAULT_MERGE_TOL = 1e-9
PROBABILITY_FLOOR = 1e-14
MAX_ATOMS = 200_000


class IncompleteSpectrumError(ValueError):
    pass


def _merge(w, p, tol):
    order = np.argsort(w, kind="stable")
    w, p = w[order], p[order]
    while w.size > 1:
        # clusters: start a new one wherever the gap to the previous atom is >= tol
        starts = np.r_[True, np.diff(w) >= tol]
        if starts.all():
            break
        ids = np.cumsum(starts) - 1
        mass = np.bincount(ids, weights=p)
        first = w[starts]
        # weighted mean relative to the cluster's first atom keeps precision
        rel = np.bincount(ids, weights=p * (w - first[ids]))
        safe = np.where(mass > 0, mass, 1.0)
        w = first + np.where(mass > 0, rel / safe, 0.0)
        p = mass
    return w, p


class WorkDistribution:
    """Sorted, merged list of work atoms ``(W, p)``.

    ``pruned_mass`` records probability dropped by :func:`convolve` when the
    atom count had to be capped.
    """

    def __init__(self, work, prob, merge_tol=DEFAULT_MERGE_TOL, pruned_mass=0.0):
        w = np.asarray(work, dtype=float).ravel()
        p = np.asarray(prob, dtype=float).ravel()
        if w.shape != p.shape:
            raise ValueError("work and probability arrays differ in length")
        if np.any(p < -1e-12):
            raise ValueError("negative probability")
        p = np.clip(p, 0.0, None)
        self.merge_tol = float(merge_tol)
        self.work, self.prob = _merge(w, p, self.merge_tol)
        self.pruned_mass = float(pruned_mass)

    def __len__(self):
        return self.work.size

    def __repr__(self):
        return f"WorkDistribution(n_atoms={len(self)}, total={self.total:.12f})"

    @property
    def atoms(self):
        return list(zip(self.work.tolist(), self.prob.tolist()))

    @property
    def total(self):
        return float(self.prob.sum())

    def shifted(self, offset):
        return WorkDistribution(self.work + offset, self.prob, self.merge_tol, self.pruned_mass)

    def histogram(self, bin_width):
        """Bin the atoms on a grid of width ``bin_width``; returns (centers, mass)."""
        if bin_width <= 0:
            raise ValueError("bin_width must be > 0")
        idx = np.floor(self.work / bin_width).astype(np.int64)
        uniq, inv = np.unique(idx, return_inverse=True)
        return (uniq + 0.5) * bin_width, np.bincount(inv, weights=self.prob)

    def to_csv(self, path, bin_width=None):
        if bin_width is None:
            rows, header = zip(self.work, self.prob), ["W", "p"]
        else:
            rows, header = zip(*self.histogram(bin_width)), ["W_center", "p"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)


def point_mass(w=0.0, merge_tol=DEFAULT_MERGE_TOL):
    return WorkDistribution([w], [1.0], merge_tol)


@dataclass(frozen=True)
class MomentSet:
    mean: float
    variance: float
    third_central: float

    @property
    def skewness_std(self):
        """Standardized skewness; nan when the variance vanishes."""
        if self.variance <= 0:
            return float("nan")
        return self.third_central / self.variance ** 1.5


def moments(dist: WorkDistribution) -> MomentSet:
    """Non-centered mean, variance and third central moment."""
    p = dist.prob / dist.prob.sum()
    mean = float(p @ dist.work)
    d = dist.work - mean
    var = float(p @ d ** 2)
    return MomentSet(mean, max(var, 0.0), float(p @ d ** 3))


def convolve(a: WorkDistribution, b: WorkDistribution, max_atoms=MAX_ATOMS) -> WorkDistribution:
    """Distribution of the sum of independent work values drawn from ``a`` and ``b``."""
    tol = max(a.merge_tol, b.merge_tol)
    w = (a.work[:, None] + b.work[None, :]).ravel()
    p = (a.prob[:, None] * b.prob[None, :]).ravel()
    pruned = a.pruned_mass + b.pruned_mass
    w, p = _merge(w, p, tol)
    if w.size > max_atoms:
        keep = p >= PROBABILITY_FLOOR
        if keep.sum() > max_atoms:
            heaviest = np.argsort(p, kind="stable")[-max_atoms:]
            keep = np.zeros_like(keep)
            keep[heaviest] = True
        dropped = float(p[~keep].sum())
        w, p = w[keep], p[keep]
        p = p * (1 + dropped / p.sum())
        pruned += dropped
    return WorkDistribution(w, p, tol, pruned)


def tpm_distribution(evolved, final_spectrum, e0_initial, merge_tol=DEFAULT_MERGE_TOL,
                     completeness_tol=1e-6) -> WorkDistribution:
    """P(W) = sum_m |<m_tau|psi(tau)>|^2 delta(W - (E_m - E_0)).

    ``final_spectrum`` is a spectrum table over (a parity sector of) the Fock
    space; ``evolved`` a state or amplitude vector over the full space.
    """
    amps = getattr(evolved, "amplitudes", evolved)
    check_state(amps, 1 << final_spectrum.n_sites)
    p = np.abs(final_spectrum.amplitudes(amps)) ** 2
    if p.sum() < 1 - completeness_tol:
        raise IncompleteSpectrumError(
            f"spectrum captures only {p.sum():.8f} of the state's probability")
    return WorkDistribution(final_spectrum.eigenvalues - e0_initial, p, merge_tol)
