"""YAML run configuration: defaults, strict key checking, coercion, and
command-line overrides."""

import pytest

from ascentopt.config import (ConfigError, RunConfig, config_from_dict,
                              load_config, with_overrides)
from ascentopt.scvx import ScvxConfig


class TestDefaults:
    def test_empty_config_is_reference_mission(self):
        cfg = config_from_dict({})
        assert cfg.mission.target_altitude_m == 700e3
        assert cfg.mission.inclination_deg == 90.0
        assert cfg.mission.splash_latitude_deg is None
        assert cfg.mission.launch_latitude_deg == 0.0
        assert cfg.guess.payload_kg == 100.0

    def test_none_document_is_empty(self):
        assert config_from_dict(None) == RunConfig()

    def test_built_objects_match_library_defaults(self):
        cfg = config_from_dict({})
        assert cfg.build_scvx_config() == ScvxConfig()
        plan = cfg.build_plan()
        assert len(plan.phases) == 12
        earth = cfg.build_earth()
        assert earth.mu == pytest.approx(3.986e14, rel=1e-3)

    def test_splash_config_builds_constrained_plan(self):
        cfg = config_from_dict({"mission": {"splash_latitude_deg": 60.0}})
        assert len(cfg.build_plan().phases) == 13


class TestStrictKeys:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown top-level"):
            config_from_dict({"missoin": {}})

    def test_unknown_block_key(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            config_from_dict({"mission": {"target_alt_m": 1.0}})

    def test_non_mapping_block(self):
        with pytest.raises(ConfigError, match="expected a mapping"):
            config_from_dict({"mission": [1, 2]})

    def test_non_mapping_top_level(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2, 3])


class TestValidation:
    @pytest.mark.parametrize("block,key,value", [
        ("mission", "target_altitude_m", -1.0),
        ("mission", "inclination_deg", 181.0),
        ("mission", "splash_latitude_deg", 95.0),
        ("mission", "launch_latitude_deg", -91.0),
        ("scvx", "tol", 0.0),
        ("scvx", "max_iters", 0),
        ("weights", "delta_max_frac_coast", 0.5),
        ("guess", "kick_angle_deg", 95.0),
    ])
    def test_out_of_range_values(self, block, key, value):
        with pytest.raises(ConfigError):
            config_from_dict({block: {key: value}})

    def test_empty_sweep_rejected(self):
        with pytest.raises(ConfigError):
            config_from_dict({"sweep": {"latitudes_deg": []}})

    def test_mesh_overrides_coerced(self):
        cfg = config_from_dict({"mesh_overrides": {"8": [2, 10]}})
        assert cfg.mesh_overrides == {8: (2, 10)}
        assert cfg.build_plan().phase(8).mesh_p == (10, 10)

    def test_bad_mesh_overrides(self):
        with pytest.raises(ConfigError):
            config_from_dict({"mesh_overrides": {"8": [2]}})
        with pytest.raises(ConfigError):
            config_from_dict({"mesh_overrides": {"0": [1, 5]}})


class TestYamlLoading:
    def test_round_trip_through_file(self, tmp_path):
        p = tmp_path / "run.yaml"
        p.write_text("mission:\n  splash_latitude_deg: 66.0\n"
                     "scvx:\n  max_iters: 7\nout_dir: results\n")
        cfg = load_config(p)
        assert cfg.mission.splash_latitude_deg == 66.0
        assert cfg.scvx.max_iters == 7
        assert cfg.out_dir == "results"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("mission: [unclosed\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(p)


class TestOverrides:
    def test_flags_apply(self):
        cfg = with_overrides(RunConfig(), out_dir="x", splash_lat=58.0,
                             max_iters=5, tol=1e-3)
        assert cfg.out_dir == "x"
        assert cfg.mission.splash_latitude_deg == 58.0
        assert cfg.scvx.max_iters == 5
        assert cfg.scvx.tol == 1e-3

    def test_unconstrained_clears_splash(self):
        base = config_from_dict({"mission": {"splash_latitude_deg": 60.0}})
        cfg = with_overrides(base, unconstrained=True)
        assert cfg.mission.splash_latitude_deg is None

    def test_conflicting_flags(self):
        with pytest.raises(ConfigError):
            with_overrides(RunConfig(), splash_lat=60.0, unconstrained=True)

    def test_override_values_are_validated(self):
        with pytest.raises(ConfigError):
            with_overrides(RunConfig(), splash_lat=120.0)
        with pytest.raises(ConfigError):
            with_overrides(RunConfig(), tol=-1.0)
