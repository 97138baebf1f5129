"""From a sampled return signal to energies and spectral weights.

The signal is ``s(t) = sum_j w_j exp(-i E_j t)`` with E_j measured from the
vacuum energy.  A windowed FFT puts the line of energy E_j at angular
frequency ``-E_j`` (numpy's forward-transform sign); :func:`extract_peaks`
undoes that sign so the estimate is expressed in energies directly.

Frequencies are angular throughout (the signal is ``exp(-i E t)``).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SignalSeries
from .errors import BudgetError, FewerPeaksThanExpected, PeakBelowThreshold

DEFAULT_BUDGET = 1 << 22
# Sidelobe candidates are rejected unless they exceed this multiple of the
# window's sidelobe envelope around a stronger line.
SIDELOBE_MARGIN = 2.0
# Local maxima below this fraction of the tallest one are rounding noise.
NOISE_FLOOR = 1e-10

WINDOWS = ("hann", "rectangular")


@dataclass(frozen=True)
class SamplingPlan:
    dt: float
    total_time: float
    n_samples: int
    resolution_factor: float
    max_energy_bound: float
    predicted_min_gap: float

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_samples)

    @property
    def resolution(self) -> float:
        """Angular bin width ``2 pi / T``."""
        return 2.0 * math.pi / self.total_time


def uniform_chain_min_gap(n_sites: int, coupling_scale: float) -> float:
    """Smallest level spacing of a uniform XX chain (band-edge pair)."""
    k = math.pi / (n_sites + 1)
    return 2.0 * coupling_scale * (math.cos(k) - math.cos(2.0 * k))


def energy_bound(coupling_scale: float, anisotropy_bound: float = 0.0) -> float:
    """Gershgorin bound on ``|E_j - E_vac|`` for couplings up to ``coupling_scale``."""
    return 2.0 * coupling_scale * (1.0 + 2.0 * abs(anisotropy_bound))


def plan_sampling(
    n_sites: int,
    coupling_scale: float,
    anisotropy_bound: float = 0.0,
    safety: float = 1.0,
    resolution_factor: float = 4.0,
    budget: int = DEFAULT_BUDGET,
    dt: float | None = None,
    total_time: float | None = None,
    n_samples: int | None = None,
) -> SamplingPlan:
    """Choose step, duration and sample count for a chain of ``n_sites``.

    Parameters
    ----------
    n_sites : int
    coupling_scale : float
        Upper bound on ``|delta_n|``.
    anisotropy_bound : float
        Upper bound on ``|Delta|``; widens the energy band.
    safety : float
        Prefactor of the ``N**2 / coupling_scale`` duration rule.
    resolution_factor : float
        Minimum number of FFT bins between the two closest lines of a
        uniform chain.
    budget : int
        Maximum number of samples.
    dt, total_time, n_samples : optional
        Explicit overrides.  ``n_samples`` wins over ``total_time``.

    The step obeys ``dt <= 1 / (2 E_max)`` with ``E_max = 2 scale (1 + 2 |Delta|)``,
    a Gershgorin bound on the vacuum-relative energies.  The duration is
    the larger of ``safety * N**2 / scale`` and ``resolution_factor`` bins
    across the predicted smallest gap; the count is rounded up to a power
    of two.

    Raises
    ------
    BudgetError
        If the plan needs more than ``budget`` samples.
    """
    if n_sites < 2:
        raise ValueError("n_sites must be at least 2")
    if coupling_scale <= 0:
        raise ValueError("coupling_scale must be positive")
    e_max = energy_bound(coupling_scale, anisotropy_bound)
    gap = uniform_chain_min_gap(n_sites, coupling_scale)
    if dt is None:
        dt = 1.0 / (2.0 * e_max)
    if n_samples is None:
        if total_time is None:
            total_time = max(
                safety * n_sites**2 / coupling_scale,
                resolution_factor * 2.0 * math.pi / gap,
            )
        needed = math.ceil(total_time / dt)
        n_samples = 1 << max(2, (needed - 1).bit_length())
    if n_samples > budget:
        raise BudgetError(n_samples, budget)
    return SamplingPlan(
        dt=float(dt),
        total_time=float(n_samples * dt),
        n_samples=int(n_samples),
        resolution_factor=float(resolution_factor),
        max_energy_bound=e_max,
        predicted_min_gap=gap,
    )


def window_function(name: str, n: int) -> np.ndarray:
    if name == "hann":
        # periodic (DFT-even) Hann, coherent gain exactly 1/2
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if name == "rectangular":
        return np.ones(n)
    raise ValueError(f"unknown window {name!r}; choose from {WINDOWS}")


def _sidelobe_envelope(name, d):
    d = np.maximum(d, 1e-12)
    if name == "hann":
        return 1.0 / (np.pi * d * np.abs(d * d - 1.0))
    return 1.0 / (np.pi * d)


_MAIN_LOBE_HALF_WIDTH = {"hann": 2.0, "rectangular": 1.0}


@dataclass(frozen=True, eq=False)
class Periodogram:
    """Windowed DFT of a signal on an ascending angular-frequency grid."""

    omega: np.ndarray
    spectrum: np.ndarray
    window: str
    window_sum: float
    n_samples: int
    pad: int
    dt: float
    windowed: np.ndarray | None = None

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.spectrum)

    @property
    def bin_width(self) -> float:
        """Angular width of one unpadded bin, ``2 pi / T``."""
        return 2.0 * np.pi / (self.n_samples * self.dt)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["freq", "magnitude"])
        for f, m in zip(self.omega, self.magnitude):
            writer.writerow([repr(float(f)), repr(float(m))])
        return buf.getvalue()


def periodogram(signal: SignalSeries, window: str = "hann", pad: int = 4) -> Periodogram:
    """Windowed, zero-padded FFT of the complex signal.

    Both signs of frequency are kept.  ``pad`` multiplies the transform
    length; it only refines the grid and does not change resolution.
    """
    n = len(signal)
    if n < 4:
        raise ValueError("periodogram needs at least 4 samples")
    if pad < 1:
        raise ValueError("pad must be >= 1")
    w = window_function(window, n)
    windowed = w * signal.samples
    spec = np.fft.fftshift(np.fft.fft(windowed, n=n * pad))
    omega = np.fft.fftshift(np.fft.fftfreq(n * pad, d=signal.dt)) * 2.0 * np.pi
    # referencing to t0 keeps magnitudes unchanged; phases are not used
    return Periodogram(omega, spec, window, float(w.sum()), n, pad, signal.dt, windowed)


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    """Estimated energies (ascending, common offset unknown) and weights."""

    frequencies: np.ndarray
    weights: np.ndarray
    resolution: float
    window: str

    def to_dict(self) -> dict:
        return {
            "frequencies": [float(f) for f in self.frequencies],
            "weights": [float(w) for w in self.weights],
            "resolution": float(self.resolution),
            "window": self.window,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data) -> "SpectrumEstimate":
        return cls(
            np.asarray(data["frequencies"], float),
            np.asarray(data["weights"], float),
            float(data["resolution"]),
            data["window"],
        )


def _refine(logmag, idx):
    """Three-point parabolic vertex on log-magnitude (circular neighbours)."""
    n = logmag.size
    a = logmag[(idx - 1) % n]
    b = logmag[idx]
    g = logmag[(idx + 1) % n]
    denom = a - 2.0 * b + g
    p = np.where(denom < 0.0, 0.5 * (a - g) / np.where(denom < 0.0, denom, -1.0), 0.0)
    # a vertex beyond half a step means a neighbour sits in a null; the fit is meaningless
    p = np.clip(p, -0.5, 0.5)
    return p, b - 0.25 * (a - g) * p


def _dtft(x, t, w, chunk):
    """Windowed transform and its first two omega-derivatives at ``w``."""
    x0 = np.zeros(w.size, complex)
    x1 = np.zeros(w.size, complex)
    x2 = np.zeros(w.size, complex)
    rows = max(1, chunk // w.size)
    for lo in range(0, x.size, rows):
        tt = t[lo : lo + rows]
        e = np.exp(-1j * np.outer(tt, w)) * x[lo : lo + rows, None]
        x0 += e.sum(axis=0)
        x1 += (-1j * tt) @ e
        x2 += -(tt**2) @ e
    return x0, x1, x2


def polish_peaks(pgram: Periodogram, freq, amp, steps: int = 4, chunk: int = 1 << 20):
    """Newton steps on ``|X(omega)|**2`` of the continuous windowed transform.

    Starts from the interpolated grid peaks and removes the interpolation
    bias in both frequency and height.  A line keeps its starting values
    if a step leaves half a grid step or the curvature stops being that
    of a maximum.
    """
    freq = np.asarray(freq, float)
    if pgram.windowed is None or freq.size == 0:
        return freq, amp
    x = pgram.windowed
    t = pgram.dt * np.arange(x.size)
    limit = 0.5 * (pgram.omega[1] - pgram.omega[0])
    w = freq.copy()
    ok = np.ones(w.size, bool)
    for _ in range(steps):
        x0, x1, x2 = _dtft(x, t, w, chunk)
        grad = 2.0 * np.real(np.conj(x0) * x1)
        curv = 2.0 * (np.abs(x1) ** 2 + np.real(np.conj(x0) * x2))
        ok &= curv < 0.0
        w = np.where(ok, w - grad / np.where(ok, curv, -1.0), freq)
        ok &= np.abs(w - freq) <= limit
        w = np.where(ok, w, freq)
    height = np.abs(_dtft(x, t, w, chunk)[0]) / pgram.window_sum
    return w, np.where(ok, height, amp)


def find_candidates(pgram: Periodogram, band=None):
    """Refined local maxima as (frequency, amplitude, raw amplitude, position).

    ``amplitude`` is the interpolated peak height, ``raw amplitude`` the
    grid-point height; both are divided by the window sum.  ``position`` is
    the fractional grid index.

    ``band = (lo, hi)`` keeps only maxima whose *energy* (minus the
    frequency) lies inside the interval.
    """
    mag = pgram.magnitude
    floor = NOISE_FLOOR * mag.max()
    is_max = (mag > np.roll(mag, 1)) & (mag >= np.roll(mag, -1)) & (mag > floor)
    if band is not None:
        lo, hi = band
        is_max &= (-pgram.omega >= lo) & (-pgram.omega <= hi)
    idx = np.flatnonzero(is_max)
    with np.errstate(divide="ignore"):
        logmag = np.log(np.maximum(mag, np.finfo(float).tiny))
    p, logpeak = _refine(logmag, idx)
    step = pgram.omega[1] - pgram.omega[0]
    freq = pgram.omega[idx] + p * step
    amp = np.exp(logpeak) / pgram.window_sum
    raw = mag[idx] / pgram.window_sum
    return freq, amp, raw, idx + p


def _reject_sidelobes(pgram, amp, pos, limit=None):
    """Indices of candidates that are not sidelobes, tallest first.

    Candidates are visited in descending height, so the first ``limit``
    survivors are the ``limit`` tallest genuine lines.
    """
    n_grid = pgram.omega.size
    half = _MAIN_LOBE_HALF_WIDTH[pgram.window]
    kept = []
    for i in np.argsort(-amp, kind="stable"):
        if kept:
            sep = np.abs(pos[kept] - pos[i])
            d = np.minimum(sep, n_grid - sep) / pgram.pad
            # sidelobes of several lines add, so compare with their summed envelope
            bound = SIDELOBE_MARGIN * np.sum(amp[kept] * _sidelobe_envelope(pgram.window, d))
            if np.any(d < half) or amp[i] <= bound:
                continue
        kept.append(i)
        if limit is not None and len(kept) == limit:
            break
    return np.array(kept, dtype=int)


def extract_peaks(
    pgram: Periodogram,
    expected_count: int | None,
    min_weight: float = 0.0,
    band: tuple[float, float] | None = None,
    polish: bool = True,
) -> SpectrumEstimate:
    """Pick spectral lines and convert them to energies and weights.

    Local maxima of ``|X|`` are refined by a parabola through the
    log-magnitudes of the three surrounding grid points.  Maxima that sit
    inside the main lobe or below the sidelobe envelope of a taller line
    are discarded.  The ``expected_count`` tallest survivors are kept,
    their heights divided by the window's coherent sum and renormalized to
    unit total.

    Parameters
    ----------
    pgram : Periodogram
    expected_count : int or None
        Number of lines to return.  ``None`` keeps every survivor whose
        normalized weight exceeds ``min_weight``.
    min_weight : float
        Lines below this normalized weight raise :class:`PeakBelowThreshold`.
    band : (float, float), optional
        Energy interval known to contain every line, e.g. a Gershgorin
        bound.  Maxima outside it are ignored.
    polish : bool
        Refine the selected lines on the continuous transform with
        :func:`polish_peaks`.

    Raises
    ------
    FewerPeaksThanExpected
    PeakBelowThreshold
    """
    if expected_count is not None and expected_count < 2:
        raise ValueError("expected_count must be at least 2")
    if expected_count is None and min_weight <= 0.0:
        raise ValueError("open-ended extraction needs a positive min_weight")
    freq, amp, raw, pos = find_candidates(pgram, band)
    # rank and screen on grid heights: interpolation is unreliable beside nulls
    kept = _reject_sidelobes(pgram, raw, pos, expected_count)
    if expected_count is None:
        keep = kept[amp[kept] >= min_weight * amp[kept].sum()] if kept.size else kept
    else:
        if kept.size < expected_count:
            raise FewerPeaksThanExpected(int(kept.size), expected_count)
        keep = kept[:expected_count]
    freq, amp = freq[keep], amp[keep]
    if polish:
        freq, amp = polish_peaks(pgram, freq, amp)
    energies = -freq
    weights = amp
    order = np.argsort(energies)
    energies = energies[order]
    weights = weights[order] / weights.sum()
    low = np.flatnonzero(weights < min_weight)
    if low.size:
        raise PeakBelowThreshold(low.tolist(), min_weight)
    return SpectrumEstimate(energies, weights, pgram.bin_width, pgram.window)
