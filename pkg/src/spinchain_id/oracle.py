"""Brute-force checks on the full 2**N Hilbert space.

Nothing here is used by the estimator itself.  These routines build the
chain Hamiltonian from Kronecker products of Pauli matrices, evolve the
protocol state exactly and trace out spins 2..N, so that the
single-excitation shortcuts in :mod:`chain` and :mod:`dynamics` can be
checked against first principles.

Qubit ordering: spin 1 is the most significant bit.  ``|0>`` is the
+1 eigenstate of Z and ``|1>`` (the excitation) the -1 eigenstate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import reduce

import numpy as np

from .chain import (
    VACUUM_ENERGY_COEFF,
    ChainSpec,
    random_chain,
    single_excitation_hamiltonian,
    total_coupling,
    vacuum_energy,
)
from .dynamics import reduced_state_spin1
from .eigensolve import eigendecompose
from .errors import OracleError

MAX_FULL_SITES = 10

_I = np.eye(2)
_Z = np.diag([1.0, -1.0])
# s+ raises |0> -> |1>; s- lowers.  Only the symmetric sum enters H.
_SP = np.array([[0.0, 0.0], [1.0, 0.0]])
_SM = _SP.T


@dataclass
class OracleReport:
    check: str
    max_deviation: float
    tolerance: float
    passed: bool
    constants: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _site_op(op, site, n):
    ops = [_I] * n
    ops[site] = op
    return reduce(np.kron, ops)


def full_space_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Dense chain Hamiltonian on all 2**N basis states (N <= 10)."""
    n = spec.n_sites
    if n > MAX_FULL_SITES:
        raise OracleError(f"full-space oracle is capped at {MAX_FULL_SITES} sites, got {n}")
    dim = 2**n
    h = np.zeros((dim, dim))
    sp = [_site_op(_SP, k, n) for k in range(n)]
    sm = [_site_op(_SM, k, n) for k in range(n)]
    z = [_site_op(_Z, k, n) for k in range(n)]
    for k, delta in enumerate(spec.couplings):
        hop = sp[k] @ sm[k + 1] + sm[k] @ sp[k + 1]
        h += delta * (hop + spec.anisotropy * (z[k] @ z[k + 1]))
    return h


def total_z(n: int) -> np.ndarray:
    return sum(_site_op(_Z, k, n) for k in range(n))


def excitation_index(site: int, n: int) -> int:
    """Basis index of the state with one excitation on 0-based ``site``."""
    return 1 << (n - 1 - site)


def single_excitation_block(h: np.ndarray, n: int) -> np.ndarray:
    idx = [excitation_index(k, n) for k in range(n)]
    return h[np.ix_(idx, idx)]


def protocol_state(n: int) -> np.ndarray:
    """(|vacuum> + |excitation on spin 1>)/sqrt(2)."""
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    psi[excitation_index(0, n)] = 1.0
    return psi / np.sqrt(2.0)


def evolve(h: np.ndarray, psi0: np.ndarray, times) -> np.ndarray:
    """Exact states ``exp(-i H t) psi0`` for each time, via eigendecomposition."""
    energies, vecs = np.linalg.eigh(h)
    coeffs = vecs.conj().T @ psi0
    phases = np.exp(-1j * np.outer(np.atleast_1d(times), energies))
    return (phases * coeffs) @ vecs.T


def reduced_state_first_spin(psi: np.ndarray) -> np.ndarray:
    """Partial trace over spins 2..N of a pure state."""
    m = psi.reshape(2, -1)
    return m @ m.conj().T


def full_space_rho1(spec: ChainSpec, times) -> np.ndarray:
    """Reduced first-spin states along the protocol, shape (len(times), 2, 2)."""
    h = full_space_hamiltonian(spec)
    states = evolve(h, protocol_state(spec.n_sites), times)
    return np.array([reduced_state_first_spin(psi) for psi in states])


def full_space_return_amplitude(spec: ChainSpec, times) -> np.ndarray:
    """``<1|U(t)|1>`` from the dense Hamiltonian."""
    n = spec.n_sites
    h = full_space_hamiltonian(spec)
    start = np.zeros(2**n, dtype=complex)
    start[excitation_index(0, n)] = 1.0
    states = evolve(h, start, times)
    return states[:, excitation_index(0, n)]


def derive_constants(specs=None, tol=1e-10, rng=0) -> OracleReport:
    """Read the diagonal-difference and vacuum-energy coefficients off the full matrix.

    For each spec the single-excitation diagonal gives ``D_1 - D_2``, which
    is divided by ``Delta * delta_2``; the vacuum element ``<0|H|0>`` is
    divided by ``Delta * G``.  Both ratios must be the same integer for
    every spec, otherwise the conventions are inconsistent.
    """
    if specs is None:
        specs = random_specs(4, (3, 8), rng)
    specs = list(specs)
    if len(specs) < 3:
        raise OracleError("derive_constants needs at least three specs")
    kappas = []
    vacs = []
    for spec in specs:
        if spec.n_sites < 3 or spec.anisotropy == 0.0:
            raise OracleError("constant derivation needs N >= 3 and nonzero anisotropy")
        h = full_space_hamiltonian(spec)
        diag = np.diag(single_excitation_block(h, spec.n_sites))
        kappas.append((diag[0] - diag[1]) / (spec.anisotropy * spec.couplings[1]))
        vacs.append(h[0, 0] / (spec.anisotropy * total_coupling(spec)))
    kappas = np.array(kappas)
    vacs = np.array(vacs)
    kappa = int(round(kappas.mean()))
    vac = int(round(vacs.mean()))
    dev = float(max(np.abs(kappas - kappa).max(), np.abs(vacs - vac).max()))
    if dev > tol:
        raise OracleError(
            f"coefficients are not constant across specs: kappa={kappas}, vacuum={vacs}"
        )
    return OracleReport(
        "derive_constants",
        dev,
        tol,
        True,
        {"kappa": kappa, "vacuum_energy_coeff": vac},
    )


def check_block_equivalence(specs, tol=1e-14) -> OracleReport:
    """Single-excitation block of the full matrix vs the tridiagonal operator."""
    worst = 0.0
    for spec in specs:
        h = full_space_hamiltonian(spec)
        block = single_excitation_block(h, spec.n_sites)
        dense = single_excitation_hamiltonian(spec).to_dense()
        worst = max(worst, float(np.abs(block - dense).max()))
    return OracleReport("block_equivalence", worst, tol, worst <= tol)


def random_specs(count=4, sizes=(3, 8), rng=0):
    """Small random chains with random signs and anisotropy in [0.2, 1]."""
    gen = np.random.default_rng(rng)
    return [
        random_chain(int(n), (0.5, 1.5), float(gen.uniform(0.2, 1.0)), "random", gen)
        for n in gen.integers(sizes[0], sizes[1] + 1, size=count)
    ]


def check_sector_equivalence(specs, n_times=20, t_max=10.0, tol=1e-10, rng=0) -> OracleReport:
    """Full-space evolution + partial trace vs the single-excitation rho_1."""
    gen = np.random.default_rng(rng)
    worst = 0.0
    for spec in specs:
        times = np.sort(gen.uniform(0.0, t_max, n_times))
        full = full_space_rho1(spec, times)
        eig = eigendecompose(single_excitation_hamiltonian(spec))
        sector = reduced_state_spin1(eig, vacuum_energy(spec), times)
        worst = max(worst, float(np.abs(full - sector).max()))
    return OracleReport("sector_equivalence", worst, tol, worst <= tol)


def check_compiled_constants(report: OracleReport) -> OracleReport:
    """Compare derived constants with those compiled into the estimator."""
    from .reconstruct import DIAGONAL_DIFFERENCE_COEFF

    compiled = {"kappa": DIAGONAL_DIFFERENCE_COEFF, "vacuum_energy_coeff": VACUUM_ENERGY_COEFF}
    dev = max(abs(compiled[k] - report.constants[k]) for k in compiled)
    return OracleReport("compiled_constants", float(dev), 0.0, dev == 0, compiled)


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)


def shot_noise_scaling(
    spec: ChainSpec,
    shots_list=(100, 1000, 10000, 100000),
    seeds=range(20),
    resolution_factor: float = 32.0,
    target: float = -0.5,
    tol: float = 0.1,
) -> OracleReport:
    """Fit log(coupling error) against log(shots) over many seeds.

    Every seed gives one noisy roundtrip per shot count on the fixed
    ``spec``; the per-run RMS coupling error is averaged in quadrature over
    seeds.  Each (seed, shots) pair uses the same shot stream, so the
    comparison between shot counts is paired.  Passes if the slope is
    within ``tol`` of ``target``.  The exact (shots=0) error is reported
    as the floor.
    """
    from .pipeline import RunConfig, SamplingConfig, roundtrip

    shots_list = [int(s) for s in shots_list]
    if len(shots_list) < 2 or min(shots_list) <= 0:
        raise OracleError("need at least two positive shot counts")
    seeds = list(seeds)
    sampling = SamplingConfig(
        resolution_factor=resolution_factor,
        coupling_scale=float(np.max(np.abs(spec.couplings))),
        anisotropy_bound=abs(spec.anisotropy),
    )
    base = RunConfig(chain=spec, sampling=sampling)
    floor = roundtrip(base)["rms_error"]
    errors = []
    for shots in shots_list:
        cfg = RunConfig(chain=spec, sampling=sampling, shots_per_axis=shots)
        runs = np.array([roundtrip(cfg, seed)["rms_error"] for seed in seeds])
        errors.append(float(np.sqrt(np.mean(runs**2))))
    slope = float(np.polyfit(np.log(shots_list), np.log(errors), 1)[0])
    dev = abs(slope - target)
    return OracleReport(
        "shot_noise_scaling",
        dev,
        tol,
        dev <= tol,
        {"slope": slope, "shots": shots_list, "rms_errors": errors, "exact_error": floor},
    )
