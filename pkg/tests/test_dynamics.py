import numpy as np
import pytest

from spinchain_id.chain import build_chain, random_chain, single_excitation_hamiltonian, vacuum_energy
from spinchain_id.dynamics import (
    SignalSeries,
    TomographyRecords,
    check_uniform_grid,
    exact_bloch,
    exact_signal,
    reduced_state_spin1,
    return_amplitude,
    sample_bloch,
    signal_from_tomography,
    simulate_tomography,
)
from spinchain_id.eigensolve import eigendecompose
from spinchain_id.errors import GridError
from spinchain_id.oracle import full_space_return_amplitude, full_space_rho1


def _eig(spec):
    return eigendecompose(single_excitation_hamiltonian(spec))


def test_two_site_rabi():
    eig = _eig(build_chain([1.0]))
    t = np.linspace(0, 10, 57)
    np.testing.assert_allclose(return_amplitude(eig, t), np.cos(t), atol=1e-14)


def test_unit_amplitude_at_zero(anisotropic_chain):
    assert return_amplitude(_eig(anisotropic_chain), 0.0) == pytest.approx(1.0, abs=1e-14)


def test_matches_full_space_amplitude(rng):
    spec = random_chain(5, (0.5, 1.5), 0.6, "random", rng)
    ref = full_space_return_amplitude(spec, [3.7])[0]
    assert abs(return_amplitude(_eig(spec), 3.7) - ref) < 1e-12


def test_amplitude_bounded(anisotropic_chain):
    f = return_amplitude(_eig(anisotropic_chain), np.linspace(0, 200, 4001))
    assert np.abs(f).max() <= 1 + 1e-12


def test_rho_at_zero_is_plus_state(anisotropic_chain):
    eig = _eig(anisotropic_chain)
    rho = reduced_state_spin1(eig, vacuum_energy(anisotropic_chain), 0.0)
    np.testing.assert_allclose(rho, np.full((2, 2), 0.5), atol=1e-14)


def test_rho_after_full_transfer():
    spec = build_chain([1.0], 0.0)
    rho = reduced_state_spin1(_eig(spec), 0.0, np.pi / 2)
    np.testing.assert_allclose(rho, np.diag([1.0, 0.0]), atol=1e-15)


def test_rho_matches_partial_trace(rng):
    spec = random_chain(5, (0.5, 1.5), 0.8, "random", rng)
    full = full_space_rho1(spec, [2.0])[0]
    sector = reduced_state_spin1(_eig(spec), vacuum_energy(spec), 2.0)
    np.testing.assert_allclose(sector, full, atol=1e-12)


def test_rho_is_a_density_matrix(anisotropic_chain):
    times = np.linspace(0, 50, 101)
    rho = reduced_state_spin1(_eig(anisotropic_chain), vacuum_energy(anisotropic_chain), times)
    np.testing.assert_allclose(rho, np.conj(np.swapaxes(rho, 1, 2)), atol=1e-15)
    np.testing.assert_allclose(np.trace(rho, axis1=1, axis2=2), 1.0, atol=1e-14)
    assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_exact_tomography_equals_bloch_vector(anisotropic_chain):
    times = np.linspace(0, 5, 11)
    rec = simulate_tomography(anisotropic_chain, times, 0, 0)
    rho = reduced_state_spin1(_eig(anisotropic_chain), vacuum_energy(anisotropic_chain), times)
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    expect = np.stack([np.einsum("kij,ji->k", rho, p).real for p in paulis], axis=1)
    np.testing.assert_allclose(rec.bloch, expect, atol=1e-14)
    assert np.all(np.sum(rec.bloch**2, axis=1) <= 1 + 1e-12)


def test_binomial_spread():
    gen = np.random.default_rng(0)
    expect = np.array([[0.3, -0.6, 0.9]])
    draws = np.array([sample_bloch(expect, 10_000, gen)[0] for _ in range(2000)])
    np.testing.assert_allclose(draws.std(axis=0), np.sqrt((1 - expect[0] ** 2) / 10_000), rtol=0.06)
    np.testing.assert_allclose(draws.mean(axis=0), expect[0], atol=5e-4)
    assert np.all(np.abs(draws) <= 1)


def test_tomography_is_deterministic(anisotropic_chain):
    times = np.linspace(0, 3, 31)
    a = simulate_tomography(anisotropic_chain, times, 100, 42)
    b = simulate_tomography(anisotropic_chain, times, 100, 42)
    c = simulate_tomography(anisotropic_chain, times, 100, 43)
    np.testing.assert_array_equal(a.bloch, b.bloch)
    assert not np.array_equal(a.bloch, c.bloch)


def test_signal_of_two_site_chain():
    times = 0.1 * np.arange(64)
    sig = signal_from_tomography(simulate_tomography(build_chain([1.0]), times, 0, 0))
    np.testing.assert_allclose(sig.samples, np.cos(times), atol=1e-14)


def test_signal_oscillates_at_vacuum_relative_energies(anisotropic_chain):
    eig = _eig(anisotropic_chain)
    e_vac = vacuum_energy(anisotropic_chain)
    times = 0.05 * np.arange(200)
    sig = signal_from_tomography(simulate_tomography(anisotropic_chain, times, 0, 0))
    expect = np.exp(-1j * np.outer(times, eig.energies - e_vac)) @ eig.weights
    np.testing.assert_allclose(sig.samples, expect, atol=1e-12)
    assert sig.samples[0] == pytest.approx(1.0, abs=1e-14)
    ref = exact_signal(eig, e_vac, 0.0, 0.05, 200)
    np.testing.assert_allclose(ref.samples, sig.samples, atol=1e-13)


def test_conjugate_symmetry(anisotropic_chain):
    eig = _eig(anisotropic_chain)
    e_vac = vacuum_energy(anisotropic_chain)
    fwd = exact_signal(eig, e_vac, 0.0, 0.1, 50).samples
    back = exact_signal(eig, e_vac, -4.9, 0.1, 50).samples[::-1]
    np.testing.assert_allclose(back, np.conj(fwd), atol=1e-13)


def test_noisy_signal_error_scales_with_shots(anisotropic_chain):
    times = 0.1 * np.arange(400)
    exact = signal_from_tomography(simulate_tomography(anisotropic_chain, times, 0, 0)).samples
    errs = []
    for shots in (100, 10_000):
        noisy = signal_from_tomography(simulate_tomography(anisotropic_chain, times, shots, 1)).samples
        errs.append(np.sqrt(np.mean(np.abs(noisy - exact) ** 2)))
    assert errs[0] / errs[1] == pytest.approx(10.0, rel=0.15)


def test_phases_multiply_samples():
    times = 0.1 * np.arange(8)
    rec = simulate_tomography(build_chain([1.0]), times, 0, 0)
    phases = np.exp(1j * times)
    sig = signal_from_tomography(rec, phases)
    np.testing.assert_allclose(sig.samples, np.cos(times) * phases, atol=1e-15)
    with pytest.raises(GridError):
        signal_from_tomography(rec, phases[:3])


def test_non_uniform_grid_rejected():
    rec = TomographyRecords(np.array([0.0, 0.1, 0.3]), np.zeros((3, 3)), 10)
    with pytest.raises(GridError):
        signal_from_tomography(rec)
    with pytest.raises(GridError):
        check_uniform_grid([0.0])


def test_csv_roundtrips(anisotropic_chain):
    times = 0.25 * np.arange(20)
    rec = simulate_tomography(anisotropic_chain, times, 50, 3)
    back = TomographyRecords.from_csv(rec.to_csv())
    np.testing.assert_array_equal(back.bloch, rec.bloch)
    np.testing.assert_array_equal(back.times, rec.times)
    assert back.shots == 50
    assert rec.to_csv().splitlines()[0] == "t,sx,sy,sz,shots"
    sig = signal_from_tomography(rec)
    again = SignalSeries.from_csv(sig.to_csv())
    np.testing.assert_array_equal(again.samples, sig.samples)
    assert sig.to_csv().splitlines()[0] == "t,re,im"


def test_exact_bloch_shape(anisotropic_chain):
    out = exact_bloch(_eig(anisotropic_chain), vacuum_energy(anisotropic_chain), np.arange(5.0))
    assert out.shape == (5, 3)
