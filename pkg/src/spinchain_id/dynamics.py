"""Forward simulation of the first-spin measurement protocol.

The chain starts in (|vacuum> + |1>)/sqrt(2), evolves freely, and spin 1 is
measured along X, Y and Z.  Its coherence is

    rho_10(t) = exp(+i E_vac t) f11(t) / 2,    f11(t) = <1|U(t)|1>,

so ``<X> + i<Y> = exp(+i E_vac t) f11(t) = sum_j a_j^2 exp(-i (E_j - E_vac) t)``.
The measured signal therefore oscillates at energies relative to the
vacuum and never needs the value of E_vac.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec, single_excitation_hamiltonian, vacuum_energy
from .eigensolve import EigenData, eigendecompose
from .errors import GridError

_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class TomographyRecords:
    """Per-time Bloch-vector estimates of spin 1, stored column-wise.

    ``bloch[k]`` holds (<X>, <Y>, <Z>) at ``times[k]``; ``shots`` is the
    number of shots per axis, 0 for exact expectation values.
    """

    times: np.ndarray
    bloch: np.ndarray
    shots: int

    def __len__(self):
        return self.times.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "sx", "sy", "sz", "shots"])
        for t, (x, y, z) in zip(self.times, self.bloch):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(y)), repr(float(z)), self.shots])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TomographyRecords":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise GridError("tomography file has no rows")
        times = np.array([float(r["t"]) for r in rows])
        bloch = np.array([[float(r["sx"]), float(r["sy"]), float(r["sz"])] for r in rows])
        shots = {int(r["shots"]) for r in rows}
        if len(shots) != 1:
            raise GridError(f"mixed shot counts in one tomography file: {sorted(shots)}")
        return cls(times, bloch, shots.pop())


@dataclass(frozen=True, eq=False)
class SignalSeries:
    """Uniformly sampled complex return signal ``s_k = s(t0 + k dt)``."""

    t0: float
    dt: float
    samples: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def __len__(self):
        return self.samples.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "re", "im"])
        for t, s in zip(self.times, self.samples):
            writer.writerow([repr(float(t)), repr(float(s.real)), repr(float(s.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SignalSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        times = np.array([float(r["t"]) for r in rows])
        samples = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        t0, dt = check_uniform_grid(times)
        return cls(t0, dt, samples)


def check_uniform_grid(times, rtol=1e-9):
    """Return ``(t0, dt)`` for a uniform grid or raise :class:`GridError`."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise GridError("need at least two time points")
    steps = np.diff(times)
    dt = (times[-1] - times[0]) / (times.size - 1)
    if dt <= 0 or np.max(np.abs(steps - dt)) > rtol * max(abs(dt), abs(times[-1])):
        raise GridError("time grid is not uniformly spaced and increasing")
    return float(times[0]), float(dt)


def return_amplitude(eig: EigenData, t):
    """``f11(t) = sum_j a_j^2 exp(-i E_j t)`` for scalar or array ``t``."""
    t_arr = np.asarray(t, dtype=float)
    flat = t_arr.ravel()
    w = eig.weights
    out = np.empty(flat.size, dtype=complex)
    for start in range(0, flat.size, _CHUNK):
        block = flat[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.exp(-1j * np.outer(block, eig.energies)) @ w
    out = out.reshape(t_arr.shape)
    return complex(out) if out.ndim == 0 else out


def reduced_state_spin1(eig: EigenData, e_vac: float, t):
    """Density matrix of spin 1 at time ``t`` in the basis (|0>, |1>).

    Returns an array of shape (2, 2), or (len(t), 2, 2) for array input.
    Only the protocol's initial state (|vacuum> + |1>)/sqrt(2) is supported.
    """
    t_arr = np.asarray(t, dtype=float)
    f = np.atleast_1d(return_amplitude(eig, t_arr.ravel()))
    tt = t_arr.ravel()
    pop = np.abs(f) ** 2
    coh = np.exp(1j * e_vac * tt) * f
    rho = np.empty((tt.size, 2, 2), dtype=complex)
    rho[:, 0, 0] = 2.0 - pop
    rho[:, 1, 1] = pop
    rho[:, 1, 0] = coh
    rho[:, 0, 1] = coh.conj()
    rho /= 2.0
    return rho[0] if t_arr.ndim == 0 else rho


def exact_bloch(eig: EigenData, e_vac: float, times) -> np.ndarray:
    """Exact (<X>, <Y>, <Z>) of spin 1, shape (len(times), 3)."""
    times = np.asarray(times, dtype=float)
    f = return_amplitude(eig, times)
    coh = np.exp(1j * e_vac * times) * f
    return np.column_stack([coh.real, coh.imag, 1.0 - np.abs(f) ** 2])


def sample_bloch(expectations, shots, rng) -> np.ndarray:
    """Empirical Pauli means from ``shots`` projective measurements per axis.

    Each axis outcome is +1 with probability (1 + <sigma>)/2.  ``shots=0``
    returns the expectations untouched.
    """
    expectations = np.asarray(expectations, dtype=float)
    if shots == 0:
        return expectations.copy()
    if shots < 0:
        raise ValueError("shots must be >= 0")
    p_plus = np.clip((1.0 + expectations) / 2.0, 0.0, 1.0)
    ups = rng.binomial(shots, p_plus)
    return 2.0 * ups / shots - 1.0


def simulate_tomography(spec: ChainSpec, times, shots_per_axis: int, seed) -> TomographyRecords:
    """Simulate single-qubit tomography of spin 1 at every time point.

    Three independent measurement rounds (X, Y, Z) per time, each with
    ``shots_per_axis`` shots; ``shots_per_axis=0`` gives exact values.
    All draws come from one ``numpy`` generator seeded with ``seed``, so
    the records are a deterministic function of the arguments.
    """
    times = np.asarray(times, dtype=float)
    eig = eigendecompose(single_excitation_hamiltonian(spec))
    exact = exact_bloch(eig, vacuum_energy(spec), times)
    rng = np.random.default_rng(seed)
    return TomographyRecords(times, sample_bloch(exact, shots_per_axis, rng), int(shots_per_axis))


def signal_from_tomography(records: TomographyRecords, phases=None) -> SignalSeries:
    """Assemble ``s_k = <X>_k + i <Y>_k`` on a uniform grid.

    ``phases`` optionally multiplies each sample by a known reference phase
    (e.g. to move to another rotating frame); by default the vacuum
    reference already present in the coherence is kept.
    """
    t0, dt = check_uniform_grid(records.times)
    samples = records.bloch[:, 0] + 1j * records.bloch[:, 1]
    if phases is not None:
        phases = np.asarray(phases)
        if phases.shape != samples.shape:
            raise GridError("phases must match the number of records")
        samples = samples * phases
    return SignalSeries(t0, dt, samples)


def exact_signal(eig: EigenData, e_vac: float, t0: float, dt: float, n_samples: int) -> SignalSeries:
    """Noiseless signal straight from eigendata, equal to shots=0 tomography."""
    times = t0 + dt * np.arange(n_samples)
    return SignalSeries(t0, dt, np.exp(1j * e_vac * times) * return_amplitude(eig, times))
