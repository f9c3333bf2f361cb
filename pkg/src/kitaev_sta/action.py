"""Adiabatic action of a drive around a single avoided crossing."""
import numpy as np

from .model import ChainParams


class DivergentActionError(ArithmeticError):
    pass


def kitaev_alpha(params: ChainParams) -> float:
    """Default action scale (32 |Delta|^2 sin^2(pi/N))^(-1/2)."""
    s = np.sin(np.pi / params.n_sites)
    return float((32 * params.delta ** 2 * s ** 2) ** -0.5)


def _panel_sum(f, edges, nodes, weights):
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * nodes
    vals = f(x.ravel()).reshape(x.shape)
    if not np.all(np.isfinite(vals)):
        raise DivergentActionError("non-finite action integrand")
    return float(np.sum(half * (vals @ weights)[:, None]))


def integrate(f, a, b, breakpoints=(), n_points=32, rtol=1e-10, max_panels=1 << 14):
    """Composite Gauss-Legendre integral of ``f`` over [a, b].

    Panels are split at ``breakpoints`` and uniformly bisected until two
    successive estimates agree to ``rtol`` (relative).
    """
    if n_points < 16:
        raise ValueError("n_points must be >= 16")
    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    cuts = np.unique(np.r_[a, [p for p in breakpoints if a < p < b], b])
    n_panels = 1
    prev = None
    while True:
        edges = np.concatenate(
            [np.linspace(lo, hi, n_panels + 1)[:-1] for lo, hi in zip(cuts[:-1], cuts[1:])]
            + [[b]])
        est = _panel_sum(f, edges, nodes, weights)
        if prev is not None and abs(est - prev) <= rtol * max(abs(est), np.finfo(float).tiny):
            return est
        if est == 0 and prev == 0:
            return 0.0
        if n_panels >= max_panels:
            raise RuntimeError(f"quadrature did not reach rtol={rtol}")
        prev = est
        n_panels *= 2


def adiabatic_action(protocol, beta, gamma, alpha=None, params=None,
                     n_points=32, rtol=1e-10):
    """S = int_0^tau [alpha * mu' * gamma^2 / ((mu - beta)^2 + gamma^2)]^2 dt.

    ``alpha`` defaults to :func:`kitaev_alpha` when ``params`` is given,
    otherwise to 1.
    """
    if gamma == 0:
        raise DivergentActionError("gamma = 0: the drive crosses a closed gap")
    if alpha is None:
        alpha = kitaev_alpha(params) if params is not None else 1.0
    g2 = gamma * gamma

    def integrand(t):
        mu, dmu = protocol.evaluate(t)
        return (alpha * dmu * g2 / ((mu - beta) ** 2 + g2)) ** 2

    return integrate(integrand, 0.0, protocol.tau, protocol.breakpoints,
                     n_points=n_points, rtol=rtol)
