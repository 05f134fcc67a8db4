"""Factor loading, characterisation, normalisation, weighting and result tables."""

from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roadcarbon.errors import AssessmentError, ConfigError, LoadError, SchemaError
from roadcarbon.lca import (
    RESULT_COLUMNS,
    EmissionFactor,
    FactorDatabase,
    assess_project,
    characterize,
    contributions,
    load_demo_factors,
    load_factors,
    normalize,
    read_results_csv,
    results_to_csv,
    weight,
    write_results_csv,
)
from roadcarbon.quantities import BillOfQuantities, BoqItem

HEADER = "material_id,category,unit,factor_kgco2e_per_unit\n"


def db_two_categories():
    return FactorDatabase([
        EmissionFactor("aggregate", "m3", 10.0, "GWP"),
        EmissionFactor("haulage", "t", 0.5, "GWP"),
        EmissionFactor("aggregate", "m3", 2.0, "AP"),
        EmissionFactor("haulage", "t", 0.1, "AP"),
    ])


def boq(agg=100.0, haul=40.0, length=1000.0):
    return BillOfQuantities((BoqItem("aggregate", agg, "m3"), BoqItem("haulage", haul, "t")), length * 4, length)


class TestLoading:
    def test_parse(self):
        db = load_factors(io.StringIO(HEADER + "aggregate,GWP,m3,12.5\nhaulage,GWP,t,0.1\n"))
        assert db.factor("aggregate").factor == 12.5
        assert db.categories == ("GWP",)
        assert len(db) == 2

    def test_demo_covers_pipeline_materials(self):
        db = load_demo_factors()
        for mid in ("aggregate", "excavation", "imported_fill", "haulage", "concrete", "riprap"):
            assert db.factor(mid).factor >= 0

    @pytest.mark.parametrize("body, line", [
        ("a,GWP,m3,1\na,GWP,m3,2\n", 3),
        ("a,GWP,kg,1\n", 2),
        ("a,GWP,m3,abc\n", 2),
        ("a,GWP,m3,-1\n", 2),
        ("a,GWP,m3\n", 2),
    ])
    def test_errors_cite_line(self, body, line):
        with pytest.raises(LoadError, match=f"line {line}"):
            load_factors(io.StringIO(HEADER + body))

    def test_bad_header(self):
        with pytest.raises(LoadError, match="line 1"):
            load_factors(io.StringIO("a,b,c,d\n"))

    def test_rows_and_path(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text(HEADER + "x,GWP,m,3\n")
        assert load_factors(p).factor("x").factor == 3.0
        assert load_factors([HEADER.strip().split(","), ["x", "GWP", "m", "3"]]).factor("x").unit == "m"


class TestAssessment:
    def test_dot_product(self):
        db = db_two_categories()
        assert characterize(boq(), db) == {"AP": 204.0, "GWP": 1020.0}

    def test_contributions_sum(self):
        c = contributions(boq(), db_two_categories())
        assert c == {"aggregate": 1000.0, "haulage": 20.0}

    def test_missing_factor_lists_materials(self):
        db = FactorDatabase([EmissionFactor("aggregate", "m3", 1.0)])
        with pytest.raises(AssessmentError) as err:
            characterize(boq(), db)
        assert err.value.missing == ("haulage/GWP",)

    def test_unit_mismatch(self):
        db = FactorDatabase([EmissionFactor("aggregate", "t", 1.0), EmissionFactor("haulage", "t", 1.0)])
        with pytest.raises(SchemaError):
            characterize(boq(), db)

    def test_normalize_and_weight(self):
        n = normalize({"GWP": 10.0, "AP": 4.0}, {"GWP": 5.0, "AP": 2.0})
        assert n == {"GWP": 2.0, "AP": 2.0}
        assert weight(n, {"GWP": 0.75}) == 1.5
        with pytest.raises(ConfigError):
            normalize({"GWP": 1.0}, {"GWP": 0.0})
        with pytest.raises(ConfigError):
            normalize({"GWP": 1.0}, {})
        with pytest.raises(ConfigError):
            weight(n, {"GWP": -1.0})

    def test_assess_per_km(self):
        r = assess_project(boq(length=2500.0), db_two_categories())
        assert r.embodied_total == pytest.approx(1.02)
        assert r.per_km == pytest.approx(1.02 / 2.5)
        assert r.weighted_single_score == pytest.approx(1020.0 + 204.0)

    def test_empty_boq(self):
        r = assess_project(BillOfQuantities((), 1.0, 1.0), db_two_categories())
        assert r.embodied_total == 0.0

    @settings(max_examples=100)
    @given(a=st.floats(0, 1e3), b=st.floats(0, 1e3), seed=st.integers(0, 2**32 - 1))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        db = db_two_categories()
        b1 = boq(*rng.uniform(0, 1e4, 2))
        b2 = boq(*rng.uniform(0, 1e4, 2))
        mix = BillOfQuantities(tuple(
            BoqItem(i.material_id, a * i.quantity + b * j.quantity, i.unit) for i, j in zip(b1.items, b2.items)
        ), 1.0, 1.0)
        c1, c2, cm = characterize(b1, db), characterize(b2, db), characterize(mix, db)
        for cat in cm:
            expect = a * c1[cat] + b * c2[cat]
            assert cm[cat] == pytest.approx(expect, rel=1e-9, abs=1e-9)


class TestResults:
    rows = [
        {"project_id": "P1", "length_m": 1000.0, "width_m": 4.0, "area_m2": 4000.0,
         "embodied_tco2e": 812.5, "per_km_tco2e": 812.5, "cbr": 0.1 + 0.2},
    ]

    def test_columns_and_extras(self):
        text = results_to_csv(self.rows, ["cbr"])
        assert text.splitlines()[0] == ",".join(RESULT_COLUMNS + ("cbr",))
        assert "0.30000000000000004" in text

    def test_round_trip(self, tmp_path):
        p = tmp_path / "r.csv"
        write_results_csv(self.rows, p, ["cbr"])
        back = read_results_csv(p)
        assert float(back[0]["cbr"]) == self.rows[0]["cbr"]
        assert back[0]["project_id"] == "P1"

    def test_bad_schema(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaError):
            read_results_csv(p)
