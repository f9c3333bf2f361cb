"""Drive protocols mu(t) with an estimator-style interface.

Every protocol is a scikit-learn ``BaseEstimator``: hyperparameters live in
``__init__`` (so ``get_params``/``set_params``/``clone`` work), ``fit`` derives
the shape coefficients (trailing-underscore attributes) and ``predict`` maps an
array of times to mu(t).
"""
import csv
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_times
from .model import ChainParams, momentum_grid

ENDPOINT_TOL = 1e-10


class ProtocolKind(str, Enum):
    LINEAR = "Linear"
    MA_SINGLE = "MASingle"
    MA_TWO_PLATEAU = "MATwoPlateau"
    TABULATED = "Tabulated"


class DriveEndpoints(NamedTuple):
    mu_0: float
    mu_f: float
    tau: float


@dataclass(frozen=True)
class PlateauCoefficients:
    beta_minus: float
    beta_plus: float
    gamma_minus: float
    gamma_plus: float


def sector_coefficients(k, params: ChainParams):
    """Avoided-crossing location and gap of momentum sector ``k``."""
    return -2 * params.omega * np.cos(k), 2 * params.delta * np.sin(k)


def plateau_coefficients(params: ChainParams) -> PlateauCoefficients:
    n = params.n_sites
    bm, gm = sector_coefficients(np.pi / n, params)
    bp, gp = sector_coefficients((n - 1) * np.pi / n, params)
    return PlateauCoefficients(float(bm), float(bp), float(gm), float(gp))


class Protocol(BaseEstimator):
    """Base class: subclasses implement ``_evaluate(t)`` on validated times."""

    kind: ProtocolKind

    def fit(self, params=None):
        check_positive(self.tau, "tau")
        self.is_fitted_ = True
        return self

    @property
    def endpoints(self) -> DriveEndpoints:
        return DriveEndpoints(float(self.mu_0), float(self.mu_f), float(self.tau))

    @property
    def breakpoints(self):
        """Interior times where mu(t) may lose smoothness."""
        return ()

    def evaluate(self, t):
        """Return ``(mu, dmu_dt)`` at times ``t`` (scalar or 1-d array)."""
        check_is_fitted(self)
        scalar = np.ndim(t) == 0
        t = check_times(t, self.tau)
        mu, dmu = self._evaluate(t)
        if scalar:
            return float(mu[0]), float(dmu[0])
        return mu, dmu

    def predict(self, t):
        return self.evaluate(t)[0]

    def derivative(self, t):
        return self.evaluate(t)[1]

    def __call__(self, t):
        return self.predict(t)

    def sample(self, n_points=201):
        t = np.linspace(0.0, self.tau, n_points)
        mu, dmu = self.evaluate(t)
        return t, mu, dmu

    def to_csv(self, path, n_points=201):
        t, mu, dmu = self.sample(n_points)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "mu", "dmu_dt"])
            writer.writerows(zip(t, mu, dmu))


class LinearRamp(Protocol):
    kind = ProtocolKind.LINEAR

    def __init__(self, mu_0=-3.0, mu_f=3.0, tau=1.0):
        self.mu_0 = mu_0
        self.mu_f = mu_f
        self.tau = tau

    def fit(self, params=None):
        super().fit(params)
        self.slope_ = (self.mu_f - self.mu_0) / self.tau
        return self

    def _evaluate(self, t):
        return self.mu_0 + self.slope_ * t, np.full_like(t, self.slope_)


def _tan_profile(s, g0, gf, beta, gamma):
    """Euler-Lagrange minimizer G(s) and dG/ds for a single avoided crossing."""
    th0 = np.arctan((g0 - beta) / gamma)
    thf = np.arctan((gf - beta) / gamma)
    theta = (1 - s) * th0 + s * thf
    g = beta + gamma * np.tan(theta)
    dg = gamma * (thf - th0) / np.cos(theta) ** 2
    # pin the boundary values exactly; tan(atan(x)) is only good to a few ulp
    g = np.where(s == 0, g0, np.where(s == 1, gf, g))
    return g, dg


class MinimalActionRamp(Protocol):
    """Single-plateau minimal-action drive.

    The plateau sits at ``beta`` with width ``gamma``. Either pass both
    explicitly, or leave them ``None`` and ``fit(params)`` takes them from
    momentum sector ``k_target`` (default: the lowest grid momentum pi/N).
    """

    kind = ProtocolKind.MA_SINGLE

    def __init__(self, mu_0=-3.0, mu_f=0.0, tau=1.0, beta=None, gamma=None,
                 k_target=None):
        self.mu_0 = mu_0
        self.mu_f = mu_f
        self.tau = tau
        self.beta = beta
        self.gamma = gamma
        self.k_target = k_target

    def fit(self, params=None):
        super().fit(params)
        beta, gamma = self.beta, self.gamma
        if beta is None or gamma is None:
            if params is None:
                raise ValueError("beta/gamma not given: fit() needs ChainParams")
            k = momentum_grid(params)[0] if self.k_target is None else self.k_target
            b, g = sector_coefficients(k, params)
            beta = b if beta is None else beta
            gamma = g if gamma is None else gamma
        if not gamma > 0:
            raise ValueError(f"gamma must be > 0, got {gamma}")
        self.beta_ = float(beta)
        self.gamma_ = float(gamma)
        return self

    def _evaluate(self, t):
        g, dg = _tan_profile(t / self.tau, self.mu_0, self.mu_f, self.beta_, self.gamma_)
        return g, dg / self.tau


class TwoPlateauRamp(Protocol):
    """Two concatenated minimal-action pieces, one per gap closure at mu = -+2 omega.

    The first piece runs mu_0 -> ``mu_mid`` over ``split * tau`` avoiding the
    closure crossed first, the second runs ``mu_mid`` -> mu_f avoiding the other.
    Endpoints must both lie in the trivial phase; same-sign trivial endpoints
    need ``allow_general=True``.
    """

    kind = ProtocolKind.MA_TWO_PLATEAU

    def __init__(self, mu_0=-3.0, mu_f=3.0, tau=1.0, split=0.5, mu_mid=0.0,
                 allow_general=False):
        self.mu_0 = mu_0
        self.mu_f = mu_f
        self.tau = tau
        self.split = split
        self.mu_mid = mu_mid
        self.allow_general = allow_general

    def fit(self, params):
        super().fit(params)
        if not 0 < self.split < 1:
            raise ValueError(f"split must lie in (0, 1), got {self.split}")
        edge = 2 * params.omega
        if abs(self.mu_0) <= edge or abs(self.mu_f) <= edge:
            raise ValueError(
                "two-plateau drive needs both endpoints in the trivial phase "
                f"(|mu| > {edge}); use MinimalActionRamp instead")
        if np.sign(self.mu_0) == np.sign(self.mu_f) and not self.allow_general:
            raise ValueError("endpoints do not straddle both transitions; "
                             "pass allow_general=True to force a two-plateau drive")
        c = plateau_coefficients(params)
        self.coefficients_ = c
        if self.mu_0 < self.mu_f:
            self.first_ = (c.beta_minus, c.gamma_minus)
            self.second_ = (c.beta_plus, c.gamma_plus)
        else:
            self.first_ = (c.beta_plus, c.gamma_plus)
            self.second_ = (c.beta_minus, c.gamma_minus)
        return self

    @property
    def breakpoints(self):
        return (self.split * self.tau,)

    def _evaluate(self, t):
        t1 = self.split * self.tau
        t2 = self.tau - t1
        first = t <= t1
        s1 = np.where(first, t / t1, 0.0)
        s2 = np.where(first, 0.0, (t - t1) / t2)
        g1, d1 = _tan_profile(s1, self.mu_0, self.mu_mid, *self.first_)
        g2, d2 = _tan_profile(s2, self.mu_mid, self.mu_f, *self.second_)
        return np.where(first, g1, g2), np.where(first, d1 / t1, d2 / t2)


class TabulatedProtocol(Protocol):
    """mu(t) from samples, monotone-cubic (PCHIP) interpolated."""

    kind = ProtocolKind.TABULATED

    def __init__(self, times=None, values=None):
        self.times = times
        self.values = values

    @property
    def mu_0(self):
        return float(np.asarray(self.values)[0])

    @property
    def mu_f(self):
        return float(np.asarray(self.values)[-1])

    @property
    def tau(self):
        return float(np.asarray(self.times)[-1])

    def fit(self, params=None):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("times and values must be 1-d arrays of equal length >= 2")
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and be strictly increasing")
        super().fit(params)
        self.interpolator_ = PchipInterpolator(t, v)
        self.slope_ = self.interpolator_.derivative()
        return self

    def _evaluate(self, t):
        return self.interpolator_(t), self.slope_(t)


def linear_ramp(endpoints: DriveEndpoints) -> LinearRamp:
    return LinearRamp(*endpoints).fit()


def ma_single(endpoints: DriveEndpoints, beta: float, gamma: float) -> MinimalActionRamp:
    return MinimalActionRamp(*endpoints, beta=beta, gamma=gamma).fit()


def ma_two_plateau(endpoints: DriveEndpoints, params: ChainParams, **kwargs) -> TwoPlateauRamp:
    return TwoPlateauRamp(*endpoints, **kwargs).fit(params)
