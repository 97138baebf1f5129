"""Command-line driver: ``spinchain-id <command> [options]``.

Commands
--------
generate   draw or copy a chain and write ``spec.json``
simulate   tomography of spin 1 -> ``tomography.csv`` and ``signal.csv``
estimate   signal -> ``periodogram.csv``, ``spectrum.json``, ``result.json``
roundtrip  all of the above plus ``summary.json`` against the ground truth
sweep      roundtrips over N or shot counts -> ``sweep.csv``
verify     full-space oracle checks -> ``report.json``

Settings come from an optional JSON config (``--config``); command-line
flags override it.  Every output is a deterministic function of the
config, the input files and the seed.

Exit codes: 0 success, 2 configuration or input error, 3 pipeline error
(the failing module is printed), 4 sampling budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .chain import ChainSpec, random_chain
from .dynamics import SignalSeries
from .errors import BudgetError, PipelineError
from .pipeline import (
    SWEEP_COLUMNS,
    SWEEP_PARAMS,
    ConfigError,
    RunConfig,
    estimate,
    generate_chain,
    run_roundtrip,
    simulate,
    sweep,
    true_energies,
)
from .spectral import WINDOWS
from .svgplot import periodogram_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PIPELINE = 3
EXIT_BUDGET = 4


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _add_common(p):
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--emit-plots", action="store_true", default=None, help="also write periodogram.svg")
    g = p.add_argument_group("random chain")
    g.add_argument("--n-sites", type=int)
    g.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"))
    g.add_argument("--sign-policy", choices=("positive", "random"))
    g.add_argument("--anisotropy", type=float)
    g = p.add_argument_group("sampling")
    g.add_argument("--shots", type=int, dest="shots_per_axis", help="shots per axis; 0 = exact")
    g.add_argument("--dt", type=float)
    g.add_argument("--total-time", type=float)
    g.add_argument("--n-samples", type=int)
    g.add_argument("--resolution-factor", type=float)
    g.add_argument("--safety", type=float)
    g.add_argument("--coupling-scale", type=float)
    g.add_argument("--anisotropy-bound", type=float)
    g.add_argument("--budget", type=int)
    g = p.add_argument_group("estimation")
    g.add_argument("--window", choices=WINDOWS)
    g.add_argument("--pad", type=int)
    g.add_argument("--min-weight", type=float)
    g.add_argument("--delta-zero-tol", type=float)
    g.add_argument("--magnitude", choices=("signed", "norm"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinchain-id",
        description="Simulate first-spin measurements of a spin chain and recover its couplings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a chain spec")
    _add_common(p)

    p = sub.add_parser("simulate", help="simulate tomography of spin 1")
    _add_common(p)
    p.add_argument("--spec", type=Path, help="chain spec JSON (default: generate from config)")

    p = sub.add_parser("estimate", help="estimate couplings from a signal CSV")
    _add_common(p)
    p.add_argument("--signal", type=Path, required=True)
    p.add_argument("--sign-hints", type=int, nargs=2, choices=(-1, 1), metavar=("S1", "S2"))
    p.add_argument("--spec", type=Path, help="ground-truth spec, used for plot markers and hints")

    p = sub.add_parser("roundtrip", help="generate, simulate, estimate and compare")
    _add_common(p)

    p = sub.add_parser("sweep", help="roundtrips over a parameter")
    _add_common(p)
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--values", type=int, nargs="+", required=True)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--chain-per-point", action="store_true")

    p = sub.add_parser("verify", help="run the full-space oracle checks")
    _add_common(p)
    p.add_argument("--skip-noise", action="store_true", help="skip the shot-noise regression")
    return parser


_SAMPLING_FLAGS = (
    "dt",
    "total_time",
    "n_samples",
    "resolution_factor",
    "safety",
    "coupling_scale",
    "anisotropy_bound",
    "budget",
)
_ESTIMATION_FLAGS = ("window", "pad", "min_weight", "delta_zero_tol", "magnitude")
_CHAIN_FLAGS = ("n_sites", "interval", "sign_policy", "anisotropy")


def load_config(args) -> RunConfig:
    """Config file (if any) with command-line flags applied on top."""
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    opts = vars(args)
    for key in ("seed", "shots_per_axis"):
        if opts.get(key) is not None:
            data[key] = opts[key]
    if opts.get("output_dir") is not None:
        data["output_dir"] = str(opts["output_dir"])
    if opts.get("emit_plots"):
        data["emit_plots"] = True
    for section, keys in (("sampling", _SAMPLING_FLAGS), ("estimation", _ESTIMATION_FLAGS)):
        given = {k: opts[k] for k in keys if opts.get(k) is not None}
        if given:
            data[section] = {**data.get(section, {}), **given}
    chain_flags = {k: opts[k] for k in _CHAIN_FLAGS if opts.get(k) is not None}
    # estimate reads --n-sites as the number of lines to extract
    if args.command == "estimate":
        chain_flags.pop("n_sites", None)
    if chain_flags:
        if data.get("chain") is not None:
            raise ConfigError("random-chain flags conflict with an explicit 'chain' in the config")
        rc = {**(data.get("random_chain") or {}), **chain_flags}
        if "interval" in rc:
            rc["interval"] = list(rc["interval"])
        if "n_sites" not in rc:
            raise ConfigError("a random chain needs --n-sites")
        data["random_chain"] = rc
    return RunConfig.from_dict(data)


def _read_spec(path: Path) -> ChainSpec:
    try:
        return ChainSpec.from_json(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read spec {path}: {exc}") from exc


def _read_signal(path: Path) -> SignalSeries:
    try:
        return SignalSeries.from_csv(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read signal {path}: {exc}") from exc
    except (KeyError, ValueError) as exc:
        if isinstance(exc, PipelineError):
            raise
        raise ConfigError(f"malformed signal file {path}: {exc}") from exc


def _band(config: RunConfig, est):
    if not config.estimation.use_band:
        return None
    freqs = est.spectrum.frequencies
    width = freqs[-1] - freqs[0]
    return (float(freqs[0] - 0.25 * width), float(freqs[-1] + 0.25 * width))


def _write_estimate(out: Path, config: RunConfig, est, spec=None):
    paths = [
        _write(out / "periodogram.csv", est.periodogram.to_csv()),
        _write(out / "spectrum.json", _json_text(est.spectrum.to_dict())),
        _write(out / "result.json", _json_text(est.result.to_dict())),
    ]
    if config.emit_plots:
        markers = true_energies(spec) if spec is not None else None
        svg = periodogram_svg(est.periodogram, markers, _band(config, est))
        paths.append(_write(out / "periodogram.svg", svg))
    return paths


def cmd_generate(args, config: RunConfig):
    spec = generate_chain(config)
    return [_write(Path(config.output_dir) / "spec.json", spec.to_json() + "\n")]


def cmd_simulate(args, config: RunConfig):
    spec = _read_spec(args.spec) if args.spec is not None else generate_chain(config)
    sim = simulate(config, spec)
    out = Path(config.output_dir)
    return [
        _write(out / "tomography.csv", sim.records.to_csv()),
        _write(out / "signal.csv", sim.signal.to_csv()),
    ]


def cmd_estimate(args, config: RunConfig):
    spec = _read_spec(args.spec) if args.spec is not None else config.chain
    n_sites = args.n_sites or (spec.n_sites if spec is not None else config.n_sites)
    if n_sites is None:
        raise ConfigError("estimate needs --n-sites (or a spec)")
    if args.sign_hints is not None:
        hints = tuple(args.sign_hints)
    elif spec is not None:
        hints = spec.sign_hints
    else:
        hints = (1, 1)
    signal = _read_signal(args.signal)
    est = estimate(config, signal, n_sites, hints, spec)
    return _write_estimate(Path(config.output_dir), config, est, spec)


def cmd_roundtrip(args, config: RunConfig):
    rt = run_roundtrip(config)
    out = Path(config.output_dir)
    paths = [
        _write(out / "spec.json", rt.spec.to_json() + "\n"),
        _write(out / "tomography.csv", rt.simulation.records.to_csv()),
        _write(out / "signal.csv", rt.simulation.signal.to_csv()),
    ]
    paths += _write_estimate(out, config, rt.estimate, rt.spec)
    paths.append(_write(out / "summary.json", _json_text(rt.summary)))
    s = rt.summary
    print(
        f"N={s['n_sites']} std={s['std_error']:.3g} rms={s['rms_error']:.3g} "
        f"max={s['max_abs_error']:.3g} positive_peaks={s['n_positive_peaks']}"
    )
    return paths


def cmd_sweep(args, config: RunConfig):
    rows = sweep(config, args.param, args.values, args.repeats, args.workers, args.chain_per_point)
    sio = io.StringIO()
    writer = csv.DictWriter(sio, fieldnames=SWEEP_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    for row in rows:
        status = "ok" if row["ok"] else row["error"]
        err = "" if row["max_abs_error"] is None else f" max_err={row['max_abs_error']:.3g}"
        print(f"{args.param}={row['value']} repeat={row['repeat']} {status}{err} ({row['seconds']:.2f} s)")
    return [_write(Path(config.output_dir) / "sweep.csv", sio.getvalue())]


def cmd_verify(args, config: RunConfig):
    specs = oracle.random_specs(4, (3, 8), config.seed)
    constants = oracle.derive_constants(specs)
    reports = [
        constants,
        oracle.check_compiled_constants(constants),
        oracle.check_block_equivalence(specs),
        oracle.check_sector_equivalence(specs, rng=config.seed),
    ]
    if not args.skip_noise:
        probe = random_chain(8, (0.95, 1.05), 0.3, "positive", np.random.default_rng(5))
        reports.append(oracle.shot_noise_scaling(probe))
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check}: deviation {r.max_deviation:.3g} (tol {r.tolerance:g})")
    path = _write(Path(config.output_dir) / "report.json", oracle.reports_to_json(reports) + "\n")
    if not all(r.passed for r in reports):
        raise oracle.OracleError("one or more oracle checks failed")
    return [path]


COMMANDS = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "roundtrip": cmd_roundtrip,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        paths = COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"error [{exc.module}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PipelineError as exc:
        print(f"error [{exc.module}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
