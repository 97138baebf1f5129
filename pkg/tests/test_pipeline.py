import json

import numpy as np
import pytest

from spinchain_id.chain import build_chain
from spinchain_id.errors import FewerPeaksThanExpected
from spinchain_id.pipeline import (
    ConfigError,
    EstimationConfig,
    RandomChainSource,
    RunConfig,
    SamplingConfig,
    estimate,
    generate_chain,
    loglog_slope,
    roundtrip,
    seed_streams,
    simulate,
    sweep,
)


def test_config_dict_roundtrip():
    cfg = RunConfig(random_chain=RandomChainSource(12, (0.9, 1.1), "random", 0.4), shots_per_axis=500, seed=9)
    back = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.to_dict() == cfg.to_dict()


def test_config_rejects_unknown_keys_and_two_sources():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"random_chain": {"n_sites": 4}, "colour": "red"})
    with pytest.raises(ConfigError):
        RunConfig(chain=build_chain([1.0]), random_chain=RandomChainSource(3))
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"sampling": {"warp": 9}})
    with pytest.raises(ConfigError):
        generate_chain(RunConfig())


def test_seed_streams_are_independent():
    a, b = seed_streams(3)
    assert np.random.default_rng(a).random() != np.random.default_rng(b).random()


def test_generate_is_deterministic():
    cfg = RunConfig(random_chain=RandomChainSource(20), seed=1)
    a, b = generate_chain(cfg), generate_chain(cfg)
    assert a.to_json() == b.to_json()
    assert a.couplings.size == 19


def test_noiseless_five_sites():
    cfg = RunConfig(chain=build_chain([1.0, 0.97, 1.04, 0.99], 0.0))
    s = roundtrip(cfg)
    assert s["max_abs_error"] <= 1e-3
    cfg = RunConfig(chain=build_chain([1.0, 0.97, 1.04, 0.99], 0.0), sampling=SamplingConfig(safety=40))
    assert roundtrip(cfg)["max_abs_error"] <= 1e-6


def test_wrong_site_count_propagates():
    spec = build_chain([1.0, 0.97, 1.04, 0.99])
    cfg = RunConfig(chain=spec)
    sim = simulate(cfg, spec)
    with pytest.raises(FewerPeaksThanExpected):
        estimate(cfg, sim.signal, 7, (1, 1), spec)


def test_estimate_without_chain_source():
    spec = build_chain([1.0, 0.97, 1.04, 0.99])
    sim = simulate(RunConfig(chain=spec), spec)
    est = estimate(RunConfig(), sim.signal, 5, (1, 1))
    np.testing.assert_allclose(est.result.couplings_hat, spec.couplings, atol=1e-3)


def test_roundtrip_reproducible():
    cfg = RunConfig(random_chain=RandomChainSource(10), shots_per_axis=1000, seed=4)
    assert roundtrip(cfg) == roundtrip(cfg)
    assert roundtrip(cfg)["rms_error"] != roundtrip(cfg, seed=5)["rms_error"]


def test_anisotropic_roundtrip():
    source = RandomChainSource(8, (0.95, 1.05), "positive", 0.3)
    short = roundtrip(RunConfig(random_chain=source, seed=5))
    long = roundtrip(RunConfig(random_chain=source, seed=5, sampling=SamplingConfig(resolution_factor=32)))
    assert abs(long["anisotropy_error"]) < 1e-5
    assert long["max_abs_error"] < 1e-4
    assert long["max_abs_error"] < short["max_abs_error"] < 1e-2


def test_sweep_single_point():
    cfg = RunConfig(random_chain=RandomChainSource(10))
    rows = sweep(cfg, "n_sites", [10])
    assert len(rows) == 1 and rows[0]["ok"]


def test_shot_sweep_shares_chain():
    cfg = RunConfig(random_chain=RandomChainSource(6, anisotropy=0.2), seed=2)
    rows = sweep(cfg, "shots_per_axis", [1000, 100000], repeats=2)
    assert [r["shots_per_axis"] for r in rows] == [1000, 1000, 100000, 100000]
    assert all(r["ok"] for r in rows)
    assert rows[0]["rms_error"] > rows[2]["rms_error"]


def test_sweep_reports_failures_as_rows():
    cfg = RunConfig(random_chain=RandomChainSource(10), sampling=SamplingConfig(budget=64))
    rows = sweep(cfg, "n_sites", [10])
    assert not rows[0]["ok"]
    assert rows[0]["error"] == "spectral:BudgetError"


def test_parallel_sweep_matches_serial():
    cfg = RunConfig(random_chain=RandomChainSource(10), seed=3, shots_per_axis=2000)
    serial = sweep(cfg, "n_sites", [8, 12])
    parallel = sweep(cfg, "n_sites", [8, 12], workers=2)
    for a, b in zip(serial, parallel):
        assert a["rms_error"] == b["rms_error"]


def test_sweep_rejects_unknown_param():
    with pytest.raises(ConfigError):
        sweep(RunConfig(random_chain=RandomChainSource(4)), "window", [1])


def test_loglog_slope():
    x = np.array([1.0, 10.0, 100.0])
    assert loglog_slope(x, 3 * x**-0.5) == pytest.approx(-0.5)


def test_norm_route_config():
    cfg = RunConfig(
        random_chain=RandomChainSource(8, anisotropy=0.3),
        sampling=SamplingConfig(resolution_factor=32),
        estimation=EstimationConfig(magnitude="norm"),
        seed=5,
    )
    assert roundtrip(cfg)["max_abs_error"] < 1e-4
