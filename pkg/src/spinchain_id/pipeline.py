"""End-to-end experiment: generate a chain, simulate tomography, estimate.

Seeds
-----
One top-level integer seed drives everything.  ``numpy.random.SeedSequence(seed)``
is spawned into two children: the first draws the random chain, the
second drives the tomography shots.  A sweep first spawns one child per
sweep point (in order) and then applies the same split to each.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .chain import ChainSpec, random_chain, single_excitation_hamiltonian, vacuum_energy
from .dynamics import SignalSeries, signal_from_tomography, simulate_tomography
from .eigensolve import eigendecompose
from .errors import PipelineError
from .reconstruct import ReconstructionResult, SpectralInput, reconstruct_couplings, verify_reconstruction
from .spectral import (
    DEFAULT_BUDGET,
    Periodogram,
    SamplingPlan,
    SpectrumEstimate,
    energy_bound,
    extract_peaks,
    periodogram,
    plan_sampling,
)


class ConfigError(ValueError):
    """Malformed or contradictory run configuration."""


@dataclass
class RandomChainSource:
    n_sites: int
    interval: tuple[float, float] = (0.95, 1.05)
    sign_policy: str = "positive"
    anisotropy: float = 0.0


@dataclass
class SamplingConfig:
    dt: float | None = None
    total_time: float | None = None
    n_samples: int | None = None
    resolution_factor: float = 4.0
    safety: float = 1.0
    coupling_scale: float | None = None
    anisotropy_bound: float | None = None
    budget: int = DEFAULT_BUDGET


@dataclass
class EstimationConfig:
    window: str = "hann"
    pad: int = 4
    min_weight: float = 0.0
    # FFT-estimated diagonals are never exactly equal, so "zero anisotropy"
    # needs a looser test than for exact eigendata.
    delta_zero_tol: float = 0.05
    consistency_tol: float | None = None
    magnitude: str = "signed"
    use_band: bool = True


@dataclass
class RunConfig:
    """Everything that defines a run; see README for the JSON layout."""

    chain: ChainSpec | None = None
    random_chain: RandomChainSource | None = None
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    shots_per_axis: int = 0
    seed: int = 0
    output_dir: str = "out"
    emit_plots: bool = False

    def __post_init__(self):
        # estimation alone needs no chain, so both may be absent
        if self.chain is not None and self.random_chain is not None:
            raise ConfigError("give at most one of 'chain' and 'random_chain'")
        if self.shots_per_axis < 0:
            raise ConfigError("shots_per_axis must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if data.get("chain") is not None:
                data["chain"] = ChainSpec.from_dict(data["chain"])
            if data.get("random_chain") is not None:
                rc = dict(data["random_chain"])
                if "interval" in rc:
                    rc["interval"] = tuple(rc["interval"])
                data["random_chain"] = RandomChainSource(**rc)
            data["sampling"] = SamplingConfig(**data.get("sampling", {}))
            data["estimation"] = EstimationConfig(**data.get("estimation", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**data)

    def to_dict(self) -> dict:
        out = {
            "chain": self.chain.to_dict() if self.chain is not None else None,
            "random_chain": asdict(self.random_chain) if self.random_chain else None,
            "sampling": asdict(self.sampling),
            "estimation": asdict(self.estimation),
            "shots_per_axis": self.shots_per_axis,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "emit_plots": self.emit_plots,
        }
        if out["random_chain"] is not None:
            out["random_chain"]["interval"] = list(out["random_chain"]["interval"])
        return out

    @property
    def n_sites(self) -> int | None:
        if self.chain is not None:
            return self.chain.n_sites
        return self.random_chain.n_sites if self.random_chain is not None else None


def seed_streams(seed) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """(chain stream, shots stream) derived from one top-level seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    chain_ss, shots_ss = ss.spawn(2)
    return chain_ss, shots_ss


def generate_chain(config: RunConfig, seed=None) -> ChainSpec:
    if config.chain is not None:
        return config.chain
    src = config.random_chain
    if src is None:
        raise ConfigError("no chain source: give 'chain' or 'random_chain'")
    chain_ss, _ = seed_streams(config.seed if seed is None else seed)
    return random_chain(src.n_sites, src.interval, src.anisotropy, src.sign_policy, np.random.default_rng(chain_ss))


def _coupling_scale(config: RunConfig, spec: ChainSpec | None) -> float:
    if config.sampling.coupling_scale is not None:
        return config.sampling.coupling_scale
    if config.random_chain is not None:
        return float(max(abs(x) for x in config.random_chain.interval))
    if spec is not None:
        return float(np.max(np.abs(spec.couplings)))
    raise ConfigError("sampling.coupling_scale is required when the chain is unknown")


def _anisotropy_bound(config: RunConfig, spec: ChainSpec | None) -> float:
    if config.sampling.anisotropy_bound is not None:
        return config.sampling.anisotropy_bound
    if config.random_chain is not None:
        return abs(config.random_chain.anisotropy)
    if spec is not None:
        return abs(spec.anisotropy)
    return 0.0


def make_plan(config: RunConfig, n_sites: int, spec: ChainSpec | None = None) -> SamplingPlan:
    s = config.sampling
    return plan_sampling(
        n_sites,
        _coupling_scale(config, spec),
        anisotropy_bound=_anisotropy_bound(config, spec),
        safety=s.safety,
        resolution_factor=s.resolution_factor,
        budget=s.budget,
        dt=s.dt,
        total_time=s.total_time,
        n_samples=s.n_samples,
    )


@dataclass
class Simulation:
    spec: ChainSpec
    plan: SamplingPlan
    records: object
    signal: SignalSeries


def simulate(config: RunConfig, spec: ChainSpec, seed=None) -> Simulation:
    plan = make_plan(config, spec.n_sites, spec)
    _, shots_ss = seed_streams(config.seed if seed is None else seed)
    records = simulate_tomography(spec, plan.times, config.shots_per_axis, np.random.default_rng(shots_ss))
    return Simulation(spec, plan, records, signal_from_tomography(records))


@dataclass
class Estimate:
    periodogram: Periodogram
    spectrum: SpectrumEstimate
    result: ReconstructionResult
    spectrum_residual: float


def estimate(config: RunConfig, signal: SignalSeries, n_sites: int, sign_hints, spec: ChainSpec | None = None) -> Estimate:
    """periodogram -> extract_peaks -> reconstruct_couplings -> verify_reconstruction.

    Peaks are searched inside the Gershgorin energy band when a coupling
    scale is known (from the sampling config, the chain source or
    ``spec``); otherwise the whole Nyquist range is used.
    """
    est = config.estimation
    band = None
    if est.use_band:
        try:
            bound = energy_bound(_coupling_scale(config, spec or config.chain), _anisotropy_bound(config, spec))
            band = (-bound, bound)
        except ConfigError:
            band = None
    pgram = periodogram(signal, est.window, est.pad)
    spectrum = extract_peaks(pgram, n_sites, est.min_weight, band)
    data = SpectralInput(spectrum.frequencies, spectrum.weights, n_sites, tuple(sign_hints))
    result = reconstruct_couplings(
        data,
        delta_zero_tol=est.delta_zero_tol,
        consistency_tol=est.consistency_tol,
        magnitude=est.magnitude,
    )
    residual = verify_reconstruction(result, data)
    return Estimate(pgram, spectrum, result, residual)


def compare(spec: ChainSpec, result: ReconstructionResult) -> dict:
    err = result.couplings_hat - spec.couplings
    aniso = result.anisotropy_hat
    return {
        "couplings_true": [float(c) for c in spec.couplings],
        "couplings_hat": [float(c) for c in result.couplings_hat],
        "coupling_errors": [float(e) for e in err],
        "std_error": float(np.std(err)),
        "rms_error": float(np.sqrt(np.mean(err**2))),
        "max_abs_error": float(np.max(np.abs(err))),
        "anisotropy_true": spec.anisotropy,
        "anisotropy_hat": float(aniso) if math.isfinite(aniso) else None,
        "anisotropy_error": float(aniso - spec.anisotropy) if math.isfinite(aniso) else None,
    }


@dataclass
class Roundtrip:
    spec: ChainSpec
    simulation: Simulation
    estimate: Estimate
    summary: dict


def run_roundtrip(config: RunConfig, seed=None) -> Roundtrip:
    """generate -> simulate -> estimate -> compare, keeping every stage's output."""
    spec = generate_chain(config, seed)
    sim = simulate(config, spec, seed)
    est = estimate(config, sim.signal, spec.n_sites, spec.sign_hints, spec)
    summary = compare(spec, est.result)
    summary.update(
        {
            "n_sites": spec.n_sites,
            "shots_per_axis": config.shots_per_axis,
            "dt": sim.plan.dt,
            "total_time": sim.plan.total_time,
            "n_samples": sim.plan.n_samples,
            "n_positive_peaks": int(np.sum(est.spectrum.frequencies > 0)),
            "spectrum_residual": est.spectrum_residual,
        }
    )
    summary["true_energies"] = [float(e) for e in true_energies(spec)]
    summary["estimated_energies"] = [float(e) for e in est.spectrum.frequencies]
    return Roundtrip(spec, sim, est, summary)


def roundtrip(config: RunConfig, seed=None) -> dict:
    """Summary dict of :func:`run_roundtrip`."""
    return run_roundtrip(config, seed).summary


def true_energies(spec: ChainSpec) -> np.ndarray:
    """Single-excitation energies relative to the vacuum, ascending."""
    eig = eigendecompose(single_excitation_hamiltonian(spec))
    return eig.energies - vacuum_energy(spec)


SWEEP_PARAMS = ("n_sites", "shots_per_axis")
SWEEP_COLUMNS = (
    "param",
    "value",
    "repeat",
    "n_sites",
    "shots_per_axis",
    "total_time",
    "n_samples",
    "rms_error",
    "max_abs_error",
    "std_error",
    "ok",
    "error",
)
# wall time is returned per row under "seconds" but kept out of SWEEP_COLUMNS
# so that written sweep tables are reproducible byte for byte


def _with_param(config: RunConfig, param: str, value) -> RunConfig:
    if param == "n_sites":
        if config.random_chain is None:
            raise ConfigError("an n_sites sweep needs a random_chain source")
        return replace(config, random_chain=replace(config.random_chain, n_sites=int(value)))
    if param == "shots_per_axis":
        return replace(config, shots_per_axis=int(value))
    raise ConfigError(f"cannot sweep {param!r}; choose from {SWEEP_PARAMS}")


def _sweep_point(args):
    config, param, value, repeat, seed = args
    cfg = _with_param(config, param, value)
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(param=param, value=value, repeat=repeat, n_sites=cfg.n_sites, shots_per_axis=cfg.shots_per_axis)
    start = time.perf_counter()
    try:
        summary = roundtrip(cfg, seed)
    except PipelineError as exc:
        row.update(ok=False, error=f"{exc.module}:{type(exc).__name__}")
    else:
        row.update(
            total_time=summary["total_time"],
            n_samples=summary["n_samples"],
            rms_error=summary["rms_error"],
            max_abs_error=summary["max_abs_error"],
            std_error=summary["std_error"],
            ok=True,
            error="",
        )
    row["seconds"] = time.perf_counter() - start
    return row


def sweep(config: RunConfig, param: str, values, repeats: int = 1, workers: int = 1, chain_per_point: bool = False):
    """Run a roundtrip for each parameter value (and repeat).

    Every (value, repeat) point gets its own child seed.  With
    ``chain_per_point=False`` all points of a shots sweep share the chain
    drawn from the top-level seed and only the shot noise varies; an
    ``n_sites`` sweep always draws a fresh chain per point.
    """
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {param!r}; choose from {SWEEP_PARAMS}")
    values = list(values)
    children = np.random.SeedSequence(config.seed).spawn(len(values) * repeats)
    base = config
    if param == "shots_per_axis" and not chain_per_point and config.random_chain is not None:
        base = replace(config, chain=generate_chain(config), random_chain=None)
    jobs = [
        (base, param, v, r, children[i * repeats + r])
        for i, v in enumerate(values)
        for r in range(repeats)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(job) for job in jobs]


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def config_json(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), indent=2)
