import numpy as np
import pytest
from hypothesis import settings

from spinchain_id.chain import random_chain, single_excitation_hamiltonian, vacuum_energy
from spinchain_id.eigensolve import eigendecompose
from spinchain_id.reconstruct import SpectralInput

# fixed examples keep the suite reproducible run to run
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


def exact_input(spec, shift=0.0):
    """SpectralInput built from exact eigendata, energies offset by ``shift``."""
    eig = eigendecompose(single_excitation_hamiltonian(spec))
    return SpectralInput(eig.energies + shift, eig.weights, spec.n_sites, spec.sign_hints)


def relative_error(est, true):
    return float(np.max(np.abs(est - true) / np.abs(true)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def anisotropic_chain():
    return random_chain(6, (0.5, 1.5), 0.7, "random", np.random.default_rng(7))


def vacuum_relative(spec):
    eig = eigendecompose(single_excitation_hamiltonian(spec))
    return eig.energies - vacuum_energy(spec), eig.weights
