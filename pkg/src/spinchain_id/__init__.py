"""Identify the couplings of a spin chain from measurements on its first spin.

Typical use::

    from spinchain_id import RunConfig, RandomChainSource, roundtrip
    summary = roundtrip(RunConfig(random_chain=RandomChainSource(20), shots_per_axis=20000))
"""

from .chain import ChainSpec, TridiagonalOperator, build_chain, random_chain, single_excitation_hamiltonian
from .dynamics import SignalSeries, TomographyRecords, simulate_tomography, signal_from_tomography
from .eigensolve import EigenData, eigendecompose, gap_report
from .errors import PipelineError
from .pipeline import (
    EstimationConfig,
    RandomChainSource,
    RunConfig,
    SamplingConfig,
    roundtrip,
    sweep,
)
from .reconstruct import SpectralInput, reconstruct_couplings, verify_reconstruction
from .spectral import extract_peaks, periodogram, plan_sampling

__version__ = "0.1.0"

__all__ = [
    "ChainSpec",
    "EigenData",
    "EstimationConfig",
    "PipelineError",
    "RandomChainSource",
    "RunConfig",
    "SamplingConfig",
    "SignalSeries",
    "SpectralInput",
    "TomographyRecords",
    "TridiagonalOperator",
    "build_chain",
    "eigendecompose",
    "extract_peaks",
    "gap_report",
    "periodogram",
    "plan_sampling",
    "random_chain",
    "reconstruct_couplings",
    "roundtrip",
    "signal_from_tomography",
    "simulate_tomography",
    "single_excitation_hamiltonian",
    "sweep",
    "verify_reconstruction",
]
