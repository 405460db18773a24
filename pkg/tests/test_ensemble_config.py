import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from floqlab.configfile import ConfigError, load_config
from floqlab.driver import run_stroboscopic
from floqlab.ensemble import (
    RunManifest,
    load_many_timeseries,
    load_timeseries_csv,
    phase_diagram,
    realization_seeds,
    run_ensemble,
    write_timeseries_csv,
)
from floqlab.hamiltonians import (
    DisorderRealization,
    FloquetConfig,
    InteractionKind,
    ResourceLimitError,
    mhz_to_rad_per_ns,
)
from floqlab.statevector import from_bitstring


class TestSeeds:
    def test_counter_derivation_is_deterministic(self):
        assert realization_seeds(7, 5) == realization_seeds(7, 5)
        assert realization_seeds(7, 5) != realization_seeds(8, 5)

    def test_prefix_stability(self):
        # growing the ensemble keeps the existing realizations
        assert realization_seeds(3, 3) == realization_seeds(3, 6)[:3]


class TestEnsemble:
    def test_worker_counts_agree_bitwise(self):
        cfg = FloquetConfig(chain_length=4, epsilon=0.06)
        a = run_ensemble(cfg, [0.0, 0.06], 3, 20, master_seed=5, workers=1)
        b = run_ensemble(cfg, [0.0, 0.06], 3, 20, master_seed=5, workers=2)
        assert np.array_equal(a.m, b.m)
        assert np.array_equal(a.chi_sg, b.chi_sg)

    def test_single_cell_matches_direct_run(self):
        cfg = FloquetConfig(chain_length=4, epsilon=0.1)
        ens = run_ensemble(cfg, [0.1], 1, 15, master_seed=9)
        seed = realization_seeds(9, 1)[0]
        rec = run_stroboscopic(cfg, DisorderRealization.draw(4, seed=seed),
                               from_bitstring("0000"), 15, store_correlators=False)
        assert_allclose(ens.m[0, 0], rec.m, atol=0)

    def test_mean_invariant_under_realization_permutation(self):
        cfg = FloquetConfig(chain_length=4, epsilon=0.08)
        ens = run_ensemble(cfg, [0.08], 6, 10, master_seed=1)
        mean_direct = ens.m_mean()[0]
        rng = np.random.default_rng(0)
        order = rng.permutation(6)
        mean_shuffled = ens.m[0, order].mean(axis=0)
        assert_allclose(mean_shuffled, mean_direct, atol=1e-15)

    def test_phase_diagram_shapes_and_zero_epsilon_column(self):
        cfg = FloquetConfig(chain_length=4)
        diagram = phase_diagram(cfg, [0.0], n_realizations=3, n_half_periods=30,
                                master_seed=2)
        assert diagram.m_mean.shape == (1, 31)
        signs = (-1.0) ** np.arange(31)
        assert np.max(np.abs(diagram.m_mean[0] - signs)) <= 1e-10
        assert np.max(diagram.m_std) <= 1e-10

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            run_ensemble(FloquetConfig(chain_length=3), [], 2, 5)

    def test_stronger_perturbation_beats_earlier_without_interaction(self):
        # non-interacting beats: the staggered envelope crosses zero sooner
        # for a larger flip excess
        cfg = FloquetConfig(chain_length=6, interaction_kind="off")
        ens = run_ensemble(cfg, [0.05, 0.2], 6, 100, master_seed=4)
        signs = (-1.0) ** np.arange(101)
        crossings = {}
        for i, eps in enumerate(ens.epsilons):
            stag = ens.m_mean()[i] * signs
            below = np.nonzero(stag <= 0.0)[0]
            crossings[float(eps)] = below[0] if below.size else 101
        assert crossings[0.2] < crossings[0.05]


class TestManifestAndFiles:
    def test_hash_ignores_timing(self):
        kwargs = dict(command="evolve", config={"chain_length": 4}, master_seed=1,
                      realization_seeds=[11, 12], parameters={"half_periods": 10})
        a = RunManifest(**kwargs)
        b = RunManifest(**kwargs)
        b.elapsed_s = 99.0
        b.created_unix = 1234.5
        assert a.content_hash == b.content_hash
        c = RunManifest(**{**kwargs, "master_seed": 2})
        assert c.content_hash != a.content_hash

    def test_timeseries_roundtrip(self, tmp_path):
        cfg = FloquetConfig(chain_length=3, epsilon=0.05)
        rec = run_stroboscopic(cfg, DisorderRealization.draw(3, seed=1),
                               from_bitstring("000"), 12)
        path = tmp_path / "series.csv"
        write_timeseries_csv(path, rec, "abc123")
        mhash, cols = load_timeseries_csv(path)
        assert mhash == "abc123"
        assert_allclose(cols["m_raw"], rec.m, atol=1e-15)
        assert_allclose(cols["z3"], rec.site_z[:, 2], atol=1e-15)

    def test_mixed_hash_aggregation_refused(self, tmp_path):
        cfg = FloquetConfig(chain_length=2)
        rec = run_stroboscopic(cfg, DisorderRealization.zero(2), from_bitstring("00"), 4)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_timeseries_csv(p1, rec, "hash-a")
        write_timeseries_csv(p2, rec, "hash-b")
        with pytest.raises(ValueError):
            load_many_timeseries([p1, p2])
        assert len(load_many_timeseries([p1, p1])) == 2

    def test_manifest_json_contains_hash(self, tmp_path):
        m = RunManifest(command="sweep", config={}, master_seed=0,
                        realization_seeds=[1])
        path = tmp_path / "m.json"
        m.write(path)
        data = json.loads(path.read_text())
        assert data["content_hash"] == m.content_hash


class TestConfigFile:
    def test_defaults_without_file(self):
        spec = load_config(None)
        assert spec.config.chain_length == 10
        assert spec.config.interaction_kind is InteractionKind.XX
        assert spec.settings.seed == 0
        assert spec.noise is None and spec.calibration is None

    def test_missing_file_names_path(self):
        with pytest.raises(ConfigError, match="no/such/file.cfg"):
            load_config("no/such/file.cfg")

    def test_full_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("""
[chain]
length = 6
epsilon = 0.08
interaction = ising
initial_state = 001000

[stages]
t1_flip = 20.0
t3_int = 5.0

[couplings]
j1_mhz = 12.0
j2_mhz = 0.5, 0.25, 0.125, 0.0625

[noise]
t1_us = 50
t2star_us = 1.5

[readout]
f00 = 0.95
f11 = 0.85

[run]
half_periods = 64
realizations = 7
seed = 21
epsilon_grid = 0, 0.04, 0.08
""")
        spec = load_config(path)
        cfg = spec.config
        assert cfg.chain_length == 6
        assert cfg.interaction_kind is InteractionKind.ISING
        assert cfg.t1_flip == 20.0 and cfg.t3_int == 5.0
        assert cfg.j1 == (mhz_to_rad_per_ns(12.0),) * 5
        assert cfg.j2[1] == pytest.approx(mhz_to_rad_per_ns(0.25))
        assert spec.settings.half_periods == 64
        assert spec.settings.epsilon_grid == (0.0, 0.04, 0.08)
        assert spec.settings.initial_state == "001000"
        assert spec.noise is not None and len(spec.noise) == 6
        assert spec.calibration is not None and spec.calibration.f00 == (0.95,) * 6

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[chain]\nlength = 6\nepsilon = 0.02\n")
        spec = load_config(path, {"epsilon": 0.19, "half_periods": 7})
        assert spec.config.epsilon == 0.19
        assert spec.settings.half_periods == 7

    def test_bad_values_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[chain]\nlength = oops\n")
        with pytest.raises(ConfigError):
            load_config(path)
        path.write_text("[chain]\ninteraction = zz\n")
        with pytest.raises(ConfigError):
            load_config(path)
        path.write_text("[noise]\nt1_us = 50\n")
        with pytest.raises(ConfigError):
            load_config(path)
        path.write_text("[chain]\nlength = 4\ninitial_state = 01\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_resource_limit_passes_through(self, tmp_path):
        path = tmp_path / "big.cfg"
        path.write_text("[chain]\nlength = 13\n")
        with pytest.raises(ResourceLimitError):
            load_config(path)
