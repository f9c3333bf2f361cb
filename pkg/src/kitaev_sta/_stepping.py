"""Time-step schedules shared by the bulk and exact-diagonalization propagators.

H(t) is affine in mu, so any linear combination of H at quadrature nodes is H at
an effective mu. A schedule is therefore a list of (mu, dt) pairs, applied in
order, each standing for one exact exponential exp(-i H(mu) dt).
"""
import math

import numpy as np

_R3 = math.sqrt(3.0)
_C = (0.5 - _R3 / 6, 0.5 + _R3 / 6)
_A = ((3 - 2 * _R3) / 12, (3 + 2 * _R3) / 12)

SCHEMES = ("magnus4", "midpoint")


def default_n_steps(tau, omega=1.0):
    return max(2000, math.ceil(40 * omega * tau))


def schedule(protocol, n_steps, scheme="magnus4"):
    """Return (mus, dts) in time order for ``n_steps`` steps over [0, tau].

    ``midpoint``: one exponential per step with mu frozen at the step midpoint
    (second order). ``magnus4``: the fourth-order commutator-free Magnus pair
    exp(-i dt/2 H(mu_late)) exp(-i dt/2 H(mu_early)) from the two Gauss nodes.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    tau = protocol.tau
    dt = tau / n_steps
    t0 = np.arange(n_steps) * dt
    if scheme == "midpoint":
        return protocol.predict(t0 + 0.5 * dt), np.full(n_steps, dt)
    if scheme != "magnus4":
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    mu1 = protocol.predict(np.minimum(t0 + _C[0] * dt, tau))
    mu2 = protocol.predict(np.minimum(t0 + _C[1] * dt, tau))
    early = 2 * (_A[1] * mu1 + _A[0] * mu2)
    late = 2 * (_A[0] * mu1 + _A[1] * mu2)
    mus = np.empty(2 * n_steps)
    mus[0::2] = early
    mus[1::2] = late
    return mus, np.full(2 * n_steps, 0.5 * dt)
