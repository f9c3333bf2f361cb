"""Acceptance criteria 1-9; each prints one PASS/FAIL line (also gathered in the summary)."""
import itertools

import numpy as np

from kitaev_sta import bulk, ed
from kitaev_sta.action import adiabatic_action
from kitaev_sta.model import ChainParams, bulk_spectrum, momentum_grid, sector_gap
from kitaev_sta.protocols import LinearRamp, MinimalActionRamp, TwoPlateauRamp
from kitaev_sta.work import moments, tpm_distribution

from test_action import PerturbedMA
from test_bulk import _lift, _pair_operators


def f_even(proto, params):
    return bulk.fidelity_even(proto, params).value


def test_criterion_1_two_plateau_n20(report):
    p = ChainParams(20)
    f25 = f_even(TwoPlateauRamp(-3.0, 3.0, 25.0).fit(p), p)
    gaps = []
    for wt in range(10, 121, 10):
        two = f_even(TwoPlateauRamp(-3.0, 3.0, float(wt)).fit(p), p)
        lin = f_even(LinearRamp(-3.0, 3.0, float(wt)).fit(), p)
        gaps.append(two - lin)
    ok = f25 >= 0.80 and min(gaps) > 0
    assert report(1, ok, f"F_2pMA(wt=25)={f25:.4f} (>=0.80); min F_2pMA-F_LR over wt=10..120 = {min(gaps):.4f} (>0)")


def test_criterion_2_size_scaling_n80(report):
    p = ChainParams(80)
    f = f_even(TwoPlateauRamp(-3.0, 3.0, 120.0).fit(p), p)
    assert report(2, f >= 0.50, f"N=80 F_2pMA(wt=120)={f:.4f} (>=0.50)")


def test_criterion_3_single_vs_two_plateau(report):
    p = ChainParams(30)
    two = f_even(TwoPlateauRamp(3.0, -3.0, 120.0).fit(p), p)
    # single plateau at the closure crossed first (k = (N-1) pi / N for a downward drive)
    one = f_even(MinimalActionRamp(3.0, -3.0, 120.0, k_target=29 * np.pi / 30).fit(p), p)
    assert report(3, two - one >= 0.2, f"F_2pMA={two:.4f}, F_MA={one:.4f}, margin={two - one:.4f} (>=0.2)")


def test_criterion_4_even_odd_targeting(report):
    p = ChainParams(60)
    diffs = []
    for wt in range(80, 121, 10):
        proto = MinimalActionRamp(0.0, -3.0, float(wt), k_target=np.pi / 60).fit(p)
        diffs.append(abs(bulk.fidelity_odd(proto, p).value - f_even(proto, p)))
    ok_a = max(diffs) < 0.05
    cross = None
    for wt in np.arange(1.0, 40.01, 0.5):
        proto = MinimalActionRamp(0.0, -3.0, wt, k_target=2 * np.pi / 60).fit(p)
        if f_even(proto, p) >= 0.5:
            cross = wt
            break
    ok_b = cross is not None and 15 <= cross <= 25
    assert report(4, ok_a and ok_b,
                  f"(a) max|F_odd-F_even| over wt=80..120 = {max(diffs):.4f} (<0.05); "
                  f"(b) F_even first >= 0.5 at wt={cross} (in [15, 25])")


def _bulk_even_levels(params, mu):
    """All even-parity many-body energies from sector levels (xi-eps, xi+eps, xi, xi)."""
    ks = momentum_grid(params)
    _, eps = bulk_spectrum(ks, mu, params)
    xi = -mu - 2 * params.omega * np.cos(ks)
    levels = [((x - e, 0), (x + e, 0), (x, 1), (x, 1)) for x, e in zip(xi, eps)]
    out = [sum(l[0] for l in combo) for combo in itertools.product(*levels)
           if sum(l[1] for l in combo) % 2 == 0]
    return np.sort(out)


def test_criterion_5_ed_bulk_equivalence(report):
    p = ChainParams(8)
    worst_f = 0.0
    for wt in (1.0, 5.0, 10.0, 30.0):
        for proto in (MinimalActionRamp(0.0, -3.0, wt).fit(p), LinearRamp(-3.0, 3.0, wt).fit()):
            worst_f = max(worst_f, abs(ed.ed_fidelity(proto, p, "even") - f_even(proto, p)))
    worst_e = 0.0
    for mu in (-3.0, -0.7, 0.0, 1.9):
        spec = ed.full_spectrum(mu, p, parity="even")
        worst_e = max(worst_e, np.max(np.abs(spec.eigenvalues - _bulk_even_levels(p, mu))))
    ok = worst_f < 1e-6 and worst_e < 1e-9
    assert report(5, ok, f"max|F_ED-F_bulk|={worst_f:.2e} (<1e-6); max energy mismatch={worst_e:.2e} (<1e-9)")


def _ed_work(params, proto, parity):
    e_even, s_even, e_odd, s_odd = ed.lowest_states(proto.mu_0, params)
    start, e0 = (s_even, e_even) if parity == "even" else (s_odd, e_odd)
    psi = ed.propagate(start, proto, params)
    dist = tpm_distribution(psi, ed.full_spectrum(proto.mu_f, params, parity=parity), e0)
    h = ed.build_hamiltonian(proto.mu_f, params).matrix
    energy = np.vdot(psi.amplitudes, h @ psi.amplitudes).real - e0
    return dist, energy


def test_criterion_6_work_statistics(report):
    # normalization and mean-work identity, bulk and ED
    p20 = ChainParams(20)
    bulk_errs = []
    for proto in (MinimalActionRamp(0.0, -3.0, 7.0).fit(p20), LinearRamp(0.0, -3.0, 2.0).fit()):
        d = bulk.bulk_work_distribution(proto, p20)
        bulk_errs += [abs(d.total - 1), abs(moments(d).mean - bulk.evolved_energy(proto, p20))]
    p6 = ChainParams(6, boundary="OBC")
    ed_errs = []
    for parity in ("even", "odd"):
        d, energy = _ed_work(p6, LinearRamp(0.0, -3.0, 2.0).fit(), parity)
        ed_errs += [abs(d.total - 1), abs(moments(d).mean - energy)]
    ok_norm_mean = max(bulk_errs + ed_errs) < 1e-10

    # adiabatic even/odd peak separation (ED, N=12, OBC, MA 0 -> -3 at wt=30)
    p12 = ChainParams(12, boundary="OBC")
    proto = MinimalActionRamp(0.0, -3.0, 30.0).fit(p12)
    peaks = {}
    for parity in ("even", "odd"):
        d, _ = _ed_work(p12, proto, parity)
        i = int(np.argmax(d.prob))
        peaks[parity] = d.work[i]
    sep = peaks["odd"] - peaks["even"]
    gamma = float(sector_gap(np.pi / 12, -3.0, p12))
    ok_peak = abs(sep - gamma) <= 1e-9

    # ED (N=8, PBC) equals the bulk convolution shifted by -N (mu_f - mu_0) / 2
    p8 = ChainParams(8)
    proto8 = MinimalActionRamp(0.0, -3.0, 5.0).fit(p8)
    d_ed, _ = _ed_work(p8, proto8, "even")
    d_bulk = bulk.bulk_work_distribution(proto8, p8).shifted(-8 * (-3.0 - 0.0) / 2)
    keep = d_ed.prob > 1e-14
    w_ed, p_ed = d_ed.work[keep], d_ed.prob[keep]
    keep_b = d_bulk.prob > 1e-14
    same_len = w_ed.size == keep_b.sum()
    atom_err = (max(np.max(np.abs(w_ed - d_bulk.work[keep_b])), np.max(np.abs(p_ed - d_bulk.prob[keep_b])))
                if same_len else np.inf)
    ok_atoms = atom_err < 1e-8

    ok = ok_norm_mean and ok_peak and ok_atoms
    assert report(6, ok,
                  f"norm/mean err={max(bulk_errs + ed_errs):.1e} (<1e-10) [{'ok' if ok_norm_mean else 'bad'}]; "
                  f"peak separation={sep:.6f} vs Gamma_pi/N(mu_f)={gamma:.6f} "
                  f"[{'ok' if ok_peak else 'bad'}; Gamma/2={gamma / 2:.6f}]; "
                  f"ED vs shifted bulk atoms err={atom_err:.1e} (<1e-8) [{'ok' if ok_atoms else 'bad'}]")


def test_criterion_7_action_optimality(report):
    rng = np.random.default_rng(2024)
    worst = -np.inf
    for _ in range(50):
        mu0, muf = rng.uniform(-4, 4, 2)
        beta, gamma, tau = rng.uniform(-2, 2), rng.uniform(0.05, 1.0), rng.uniform(0.5, 50)
        s_ma = adiabatic_action(MinimalActionRamp(mu0, muf, tau, beta=beta, gamma=gamma).fit(), beta, gamma)
        s_lr = adiabatic_action(LinearRamp(mu0, muf, tau).fit(), beta, gamma)
        worst = max(worst, (s_ma - s_lr) / s_lr)
    base = MinimalActionRamp(-3.0, 0.0, 20.0, beta=-1.975, gamma=0.31).fit()
    s0 = adiabatic_action(base, -1.975, 0.31)
    lowest = min(adiabatic_action(PerturbedMA(base, e).fit(), -1.975, 0.31) - s0
                 for e in np.linspace(-1e-2, 1e-2, 21))
    ok = worst <= 1e-10 and lowest >= -1e-8 * s0
    assert report(7, ok, f"max (S_MA-S_LR)/S_LR={worst:.3e} (<=0); min perturbed S - S_MA={lowest:.3e} (>= -1e-8 S)")


def test_criterion_8_pairing_crossover(report):
    cross = None
    for d in np.round(np.arange(0.10, 1.0001, 0.01), 2):
        p = ChainParams(60, 1.0, d)
        ma = f_even(MinimalActionRamp(-3.0, 0.0, 60.0).fit(p), p)
        lr = f_even(LinearRamp(-3.0, 0.0, 60.0).fit(), p)
        if ma > lr:
            cross = float(d)
            break
    ok = cross is not None and 0.35 <= cross <= 0.65
    assert report(8, ok, f"MA first beats LR at Delta={cross} (in [0.35, 0.65])")


def test_criterion_9_structural_invariants(report):
    p = ChainParams(8)
    worst_u = 0.0
    for n_steps in (1, 1000, 10**6):
        u = bulk.evolve_even_blocks(momentum_grid(ChainParams(4)), TwoPlateauRamp(-3.0, 3.0, 50.0).fit(p),
                                    ChainParams(4), n_steps)
        worst_u = max(worst_u, max(np.linalg.norm(b.conj().T @ b - np.eye(2)) for b in u))

    _, _, _, s_odd = ed.lowest_states(0.0, p)
    psi = ed.propagate(s_odd, MinimalActionRamp(0.0, -3.0, 4.0).fit(p), p, n_steps=300)
    parity_ok = bool(np.all(psi.amplitudes[ed.sector_indices(8, "even")] == 0))

    proto = MinimalActionRamp(0.0, -3.0, 13.0).fit(p)
    worst_odd = max(np.max(np.abs(u[2:, 2:] - u[2, 2] * np.eye(2)))
                    for u in (bulk.evolve_sector(k, proto, p, size=4).matrix for k in momentum_grid(p)))

    p4 = ChainParams(4)
    f = sum(_lift(bulk.f_dagger_block(k, p4).matrix, *_pair_operators(k, 4)) for k in momentum_grid(p4))
    nil = np.max(np.abs(f @ f))
    anti = np.max(np.abs(f.conj().T @ f + f @ f.conj().T - np.eye(16)))

    rng = np.random.default_rng(99)
    worst_uv = 0.0
    for _ in range(100):
        bp = bulk.bogoliubov_pair(rng.uniform(0.01, np.pi - 0.01), rng.uniform(-5, 5),
                                  ChainParams(10, 1.0, rng.uniform(0.1, 2)))
        worst_uv = max(worst_uv, abs(abs(bp.u) ** 2 + abs(bp.v) ** 2 - 1))

    ok = worst_u < 1e-9 and parity_ok and worst_odd < 1e-12 and nil < 1e-12 and anti < 1e-12 and worst_uv < 1e-12
    assert report(9, ok, f"unitarity={worst_u:.1e}; parity support exact={parity_ok}; odd block={worst_odd:.1e}; "
                         f"f^2={nil:.1e}; {{f,f+}}-1={anti:.1e}; |u|^2+|v|^2-1={worst_uv:.1e}")
