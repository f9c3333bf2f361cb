import numpy as np
import pytest

from kitaev_sta import bulk, ed
from kitaev_sta.model import ChainParams, bulk_spectrum, momentum_grid
from kitaev_sta.protocols import LinearRamp, MinimalActionRamp
from kitaev_sta.work import (IncompleteSpectrumError, WorkDistribution, convolve, moments, point_mass,
                             tpm_distribution)


def bernoulli(a, b, p):
    return WorkDistribution([a, b], [1 - p, p])


def test_bernoulli_moments():
    m = moments(bernoulli(0.0, 1.0, 0.3))
    assert np.isclose(m.mean, 0.3) and np.isclose(m.variance, 0.21)
    assert np.isclose(m.third_central, 0.3 * 0.7 * (0.7 - 0.3))
    assert np.isnan(moments(point_mass(2.0)).skewness_std)


def test_convolution_of_bernoullis_is_binomial():
    d = point_mass(0.0)
    for _ in range(6):
        d = convolve(d, bernoulli(0.0, 1.0, 0.25))
    from math import comb
    expect = [comb(6, j) * 0.25 ** j * 0.75 ** (6 - j) for j in range(7)]
    assert np.allclose(d.work, np.arange(7)) and np.allclose(d.prob, expect, atol=1e-15)
    assert abs(d.total - 1) < 1e-14


def test_convolution_commutes_and_cumulants_add():
    a = WorkDistribution([0.1, -2.0, 3.3], [0.2, 0.5, 0.3])
    b = WorkDistribution([1.0, 1.5], [0.6, 0.4])
    ab, ba = convolve(a, b), convolve(b, a)
    assert np.allclose(ab.work, ba.work) and np.allclose(ab.prob, ba.prob)
    ma, mb, mab = moments(a), moments(b), moments(ab)
    assert np.isclose(mab.mean, ma.mean + mb.mean)
    assert np.isclose(mab.variance, ma.variance + mb.variance)
    assert np.isclose(mab.third_central, ma.third_central + mb.third_central)


def test_merge_and_histogram():
    d = WorkDistribution([1.0, 1.0 + 1e-12, 2.0], [0.25, 0.25, 0.5])
    assert len(d) == 2 and np.isclose(d.prob[0], 0.5)
    c, m = WorkDistribution([0.01, 0.02, 0.31], [0.2, 0.3, 0.5]).histogram(0.1)
    assert np.allclose(c, [0.05, 0.35]) and np.allclose(m, [0.5, 0.5])
    with pytest.raises(ValueError):
        WorkDistribution([0.0], [-0.5])


def test_pruning_records_mass():
    d = convolve(WorkDistribution(np.arange(50.0), np.full(50, 0.02)),
                 WorkDistribution(np.arange(50.0) * 0.013, np.full(50, 0.02)), max_atoms=100)
    assert len(d) <= 100 and d.pruned_mass > 0 and abs(d.total - 1) < 1e-12


def test_bulk_adiabatic_limit_single_atom():
    p = ChainParams(8)
    const = LinearRamp(-3.0, -3.0, 2.0).fit()
    d = bulk.bulk_work_distribution(const, p)
    assert abs(d.prob[np.argmax(d.prob)] - 1) < 1e-10 and abs(d.work[np.argmax(d.prob)]) < 1e-9
    slow = MinimalActionRamp(-3.0, -2.5, 200.0).fit(p)
    d = bulk.bulk_work_distribution(slow, p)
    ks = momentum_grid(p)
    expect = np.sum(bulk_spectrum(ks, -2.5, p)[0] - bulk_spectrum(ks, -3.0, p)[0])
    top = np.argmax(d.prob)
    assert d.prob[top] > 0.999 and abs(d.work[top] - expect) < 1e-9


def test_sudden_quench_is_overlap_distribution():
    # tau -> 0: P(m) = |<m_f|psi_0>|^2 in the final eigenbasis
    p = ChainParams(6, boundary="OBC")
    e0, s0, _, _ = ed.lowest_states(0.0, p)
    spec = ed.full_spectrum(-3.0, p, parity="even")
    d = tpm_distribution(s0, spec, e0)
    direct = np.abs(spec.eigenvectors.conj().T @ s0.sector_vector()) ** 2
    ref = WorkDistribution(spec.eigenvalues - e0, direct)
    assert np.allclose(d.work, ref.work) and np.allclose(d.prob, ref.prob)
    quick = ed.propagate(s0, LinearRamp(0.0, -3.0, 1e-9).fit(), p, n_steps=2)
    dq = tpm_distribution(quick, spec, e0)
    assert np.allclose(dq.prob, ref.prob, atol=1e-8)


def test_incomplete_spectrum_rejected():
    p = ChainParams(4, boundary="OBC")
    _, _, _, s_odd = ed.lowest_states(0.0, p)
    with pytest.raises(IncompleteSpectrumError):
        tpm_distribution(s_odd, ed.full_spectrum(-3.0, p, parity="even"), 0.0)


@pytest.mark.parametrize("parity", ["even", "odd"])
def test_ed_mean_work_identity(parity):
    p = ChainParams(6, boundary="OBC")
    e_even, s_even, e_odd, s_odd = ed.lowest_states(0.0, p)
    start, e0 = (s_even, e_even) if parity == "even" else (s_odd, e_odd)
    proto = LinearRamp(0.0, -3.0, 2.0).fit()
    psi = ed.propagate(start, proto, p)
    d = tpm_distribution(psi, ed.full_spectrum(-3.0, p, parity=parity), e0)
    h = ed.build_hamiltonian(-3.0, p).matrix
    energy = np.vdot(psi.amplitudes, h @ psi.amplitudes).real - e0
    assert abs(d.total - 1) < 1e-10
    assert abs(moments(d).mean - energy) < 1e-10


@pytest.mark.parametrize("physical", [False, True])
def test_bulk_mean_work_identity(physical):
    p = ChainParams(20)
    proto = MinimalActionRamp(0.0, -3.0, 7.0).fit(p)
    d = bulk.bulk_work_distribution(proto, p, physical_energies=physical)
    assert abs(d.total - 1) < 1e-10
    assert abs(moments(d).mean - bulk.evolved_energy(proto, p, physical_energies=physical)) < 1e-10


def test_physical_energies_shift():
    p = ChainParams(10)
    proto = LinearRamp(0.0, -3.0, 3.0).fit()
    a = bulk.bulk_work_distribution(proto, p)
    b = bulk.bulk_work_distribution(proto, p, physical_energies=True)
    assert np.allclose(b.work, a.work - p.n_sites * (-3.0 - 0.0) / 2, atol=1e-9)
    assert np.allclose(a.prob, b.prob)


def test_ed_peak_separation_is_one_quasiparticle_energy():
    # even and odd starts are exactly degenerate at mu=0, Delta=omega (OBC)
    p = ChainParams(8, boundary="OBC")
    proto = MinimalActionRamp(0.0, -3.0, 30.0).fit(p)
    e_even, s_even, e_odd, s_odd = ed.lowest_states(0.0, p)
    assert abs(e_even - e_odd) < 1e-12
    peaks = {}
    for parity, s, e0 in (("even", s_even, e_even), ("odd", s_odd, e_odd)):
        d = tpm_distribution(ed.propagate(s, proto, p), ed.full_spectrum(-3.0, p, parity=parity), e0)
        peaks[parity] = d.work[np.argmax(d.prob)]
    f_even, _, f_odd, _ = ed.lowest_states(-3.0, p)
    assert abs((peaks["odd"] - peaks["even"]) - (f_odd - f_even)) < 1e-9


def test_bulk_peak_separation_is_half_the_gap():
    p = ChainParams(20)
    proto = MinimalActionRamp(0.0, -3.0, 400.0).fit(p)
    d_even = bulk.bulk_work_distribution(proto, p, parity="even")
    d_odd = bulk.bulk_work_distribution(proto, p, parity="odd")
    # reference the odd start to the even ground energy: it sits eps_k(mu_0) above it
    i = bulk.lowest_sector(-3.0, p)
    k = momentum_grid(p)[i]
    eps0 = bulk_spectrum(k, 0.0, p)[1]
    sep = (d_odd.work[np.argmax(d_odd.prob)] + eps0) - d_even.work[np.argmax(d_even.prob)]
    assert abs(sep - bulk_spectrum(k, -3.0, p)[1]) < 1e-9
