"""Run configuration loading and validation."""

from __future__ import annotations

import json

import pytest

from roadcarbon.config import EngineConfig, load_run_config
from roadcarbon.errors import ConfigError


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


# ============================================================================
# Loading
# ============================================================================

class TestLoad:
    def test_defaults(self):
        cfg = load_run_config()
        assert cfg.engine == EngineConfig()
        assert cfg.generator.seed == 42 and cfg.generator.project_count == 200

    def test_sections_applied(self, tmp_path):
        cfg = load_run_config(write(tmp_path, {
            "seed": 3,
            "pavement": {"constants": {"aggregate_loss": 5.0}, "damage_model": {"a": 2.5}},
            "hydrology": {"freeboards": {"low": 0.1, "medium": 0.4, "high": 0.9}, "min_ditch_slope": 0.002},
            "earthworks": {"reuse_ratio": 0.5},
            "geometry": {"section_spacing": 5.0},
            "generator": {"project_count": 12},
            "analysis": {"vif_threshold": 5.0},
        }))
        e = cfg.engine
        assert e.constants.aggregate_loss == 5.0 and e.damage_model.a == 2.5
        assert e.flood_policy.freeboards["high"] == 0.9
        assert e.min_ditch_slope == 0.002 and e.section_spacing == 5.0
        assert e.earthworks.reuse_ratio == 0.5
        assert cfg.generator.seed == 3 and cfg.generator.project_count == 12
        assert cfg.plan.vif_threshold == 5.0

    def test_overrides_win(self, tmp_path):
        cfg = load_run_config(write(tmp_path, {"seed": 3, "paths": {"output_dir": "x"}}),
                              {"seed": 8, "output_dir": "/tmp/y"})
        assert cfg.generator.seed == 8 and cfg.output_dir == "/tmp/y"

    def test_relative_paths_resolve_against_config(self, tmp_path):
        (tmp_path / "f.csv").write_text("material_id,category,unit,factor_kgco2e_per_unit\naggregate,GWP,m3,1\n")
        cfg = load_run_config(write(tmp_path, {"paths": {"factors": "f.csv"}}))
        assert cfg.engine.factors_path == str(tmp_path / "f.csv")
        assert cfg.engine.factor_db.factor("aggregate").factor == 1.0


# ============================================================================
# Errors
# ============================================================================

class TestErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "none.json")

    def test_bad_json_location(self, tmp_path):
        with pytest.raises(ConfigError, match=r"run\.json:2:"):
            load_run_config(write(tmp_path, '{\n "seed": ,\n}'))

    @pytest.mark.parametrize("doc, where", [
        ({"bogus": 1}, "bogus"),
        ({"paths": {"nope": "x"}}, "nope"),
        ({"pavement": {"constants": {"foo": 1}}}, "pavement.constants"),
        ({"hydrology": {"colour": 1}}, "colour"),
        ({"geometry": {"spin": 1}}, "spin"),
        ({"lca": {"x": 1}}, "lca"),
    ])
    def test_unknown_keys(self, tmp_path, doc, where):
        with pytest.raises(ConfigError, match=where):
            load_run_config(write(tmp_path, doc))

    @pytest.mark.parametrize("doc", [
        {"pavement": {"constants": {"min_thickness": -1}}},
        {"hydrology": {"freeboards": {"low": -1, "medium": 0, "high": 0}}},
        {"earthworks": {"reuse_ratio": 2.0}},
        {"geometry": {"section_spacing": 0}},
        {"generator": {"length_range": [10, 5]}},
    ])
    def test_out_of_range(self, tmp_path, doc):
        with pytest.raises(ConfigError):
            load_run_config(write(tmp_path, doc))

    def test_missing_factor_table(self, tmp_path):
        with pytest.raises(ConfigError, match="factor table"):
            load_run_config(write(tmp_path, {"paths": {"factors": "missing.csv"}}))
