import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from spinchain_id.chain import TridiagonalOperator, build_chain, random_chain, single_excitation_hamiltonian
from spinchain_id.eigensolve import eigendecompose, gap_report, residuals, twisted_first_components


def test_two_by_two():
    eig = eigendecompose(TridiagonalOperator(np.zeros(2), np.ones(1)), want_vectors=True)
    np.testing.assert_allclose(eig.energies, [-1.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(eig.first_components, [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_three_site_roots_of_characteristic_polynomial():
    # det(H - x) = -x (x^2 + 2x - 2) for D = (0, -2, 0), off = (1, 1)
    roots = np.sort(np.roots([1.0, 2.0, -2.0, 0.0]).real)
    eig = eigendecompose(TridiagonalOperator(np.array([0.0, -2.0, 0.0]), np.ones(2)))
    np.testing.assert_allclose(eig.energies, roots, atol=1e-14)
    np.testing.assert_allclose(eig.energies, [-1 - math.sqrt(3), 0.0, -1 + math.sqrt(3)], atol=1e-14)


def test_residuals_twenty_sites(rng):
    op = single_excitation_hamiltonian(random_chain(20, (0.5, 1.5), 0.6, "random", rng))
    eig = eigendecompose(op, want_vectors=True)
    assert residuals(op, eig).max() <= 1e-12 * op.norm_bound()


@pytest.mark.parametrize("n", [2, 5, 50, 200])
def test_orthogonality_and_trace(n, rng):
    op = single_excitation_hamiltonian(random_chain(n, (0.5, 1.5), 0.4, "random", rng))
    eig = eigendecompose(op, want_vectors=True)
    v = eig.vectors
    assert np.abs(v.T @ v - np.eye(n)).max() <= 1e-12
    assert abs(eig.energies.sum() - op.diagonal.sum()) <= 1e-10
    assert np.all(np.diff(eig.energies) > 0)
    assert np.all(eig.first_components > 0)
    assert math.fsum(eig.weights) == pytest.approx(1.0, abs=1e-13)
    np.testing.assert_allclose(eig.first_components, v[0], atol=1e-14)


def test_matches_scipy(rng):
    op = single_excitation_hamiltonian(random_chain(40, (0.5, 1.5), 0.8, "random", rng))
    eig = eigendecompose(op)
    ref = eigh_tridiagonal(op.diagonal, op.off_diagonal, eigvals_only=True)
    np.testing.assert_allclose(eig.energies, ref, atol=1e-13)


def test_shift_covariance(anisotropic_chain):
    op = single_excitation_hamiltonian(anisotropic_chain)
    base = eigendecompose(op)
    for c in (-5.0, 0.37, 12.0):
        moved = eigendecompose(op.shifted(c))
        np.testing.assert_allclose(moved.energies, base.energies + c, atol=1e-12)
        np.testing.assert_allclose(moved.first_components, base.first_components, atol=1e-12)


def test_first_components_relatively_accurate():
    # strongly localized chain: tiny weights must keep their relative accuracy
    import mpmath

    rng = np.random.default_rng(3)
    spec = random_chain(30, (0.5, 1.5), 1.0, "random", rng)
    op = single_excitation_hamiltonian(spec)
    eig = eigendecompose(op)
    mpmath.mp.dps = 60
    h = mpmath.matrix(op.to_dense().tolist())
    e, q = mpmath.eigsy(h)
    order = sorted(range(30), key=lambda j: e[j])
    ref = np.array([abs(float(q[0, j])) for j in order])
    assert ref.min() < 1e-12
    np.testing.assert_allclose(eig.first_components, ref, rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_twisted_matches_vectors(n, seed):
    op = single_excitation_hamiltonian(random_chain(n, (0.5, 1.5), 0.3, "random", seed))
    eig = eigendecompose(op, want_vectors=True)
    comp = twisted_first_components(op.diagonal, op.off_diagonal, eig.energies)
    np.testing.assert_allclose(comp, eig.vectors[0], atol=1e-12)


def test_gap_report_two_levels():
    eig = eigendecompose(TridiagonalOperator(np.zeros(2), np.ones(1)))
    rep = gap_report(eig)
    assert rep.min_gap == pytest.approx(2.0)
    assert rep.max_abs_energy == pytest.approx(1.0)
    assert not rep.degenerate


def test_gap_report_flags_degeneracy():
    from spinchain_id.eigensolve import EigenData

    eig = EigenData(np.array([-1.0, 0.5, 0.5 + 1e-12, 1.0]), np.full(4, 0.5))
    rep = gap_report(eig)
    assert rep.degenerate
    assert rep.min_gap < 1e-11


def test_uniform_chain_gap_scales_as_inverse_square():
    sizes = np.arange(10, 61, 10)
    gaps = [gap_report(eigendecompose(single_excitation_hamiltonian(build_chain(np.ones(n - 1))))).min_gap for n in sizes]
    slope = np.polyfit(np.log(sizes + 1), np.log(gaps), 1)[0]
    assert slope == pytest.approx(-2.0, abs=0.1)
    # cos dispersion: smallest gap sits at the band edge
    k = np.pi / (sizes + 1)
    np.testing.assert_allclose(gaps, 2 * (np.cos(k) - np.cos(2 * k)), rtol=1e-10)


def test_convergence_failure_reports_index(monkeypatch):
    from spinchain_id import eigensolve
    from spinchain_id.errors import ConvergenceError

    monkeypatch.setattr(eigensolve, "MAX_SWEEPS", 0)
    op = single_excitation_hamiltonian(build_chain([1.0, 0.7, 1.2], 0.3))
    with pytest.raises(ConvergenceError) as info:
        eigendecompose(op)
    assert info.value.index == 0
    assert info.value.module == "eigensolve"
