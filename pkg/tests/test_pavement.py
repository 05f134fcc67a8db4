"""Subgrade modulus, base factor, seasonal damage and thickness design."""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from roadcarbon.errors import DomainError, InfeasibleDesignError
from roadcarbon.pavement import (
    PSI_TO_MPA,
    USCS_CLASSES,
    ClimateSeasons,
    DesignConstants,
    PowerLawDamageModel,
    Season,
    SoilProfile,
    TrafficDemand,
    base_modulus,
    base_modulus_factor,
    design_thickness,
    resilient_modulus,
    seasonal_damage,
    seasonal_damage_terms,
    seasonal_moduli,
    thickness_grid,
)

mpmath.mp.dps = 40


def mr_oracle(cbr):
    return mpmath.mpf("17.6") * mpmath.power(mpmath.mpf(cbr), mpmath.mpf("0.64"))


# ============================================================================
# Resilient modulus
# ============================================================================

class TestResilientModulus:
    def test_cbr_one(self):
        assert resilient_modulus(1.0) == 17.6

    def test_matches_high_precision(self):
        for cbr in np.logspace(np.log10(0.5), 2, 100):
            expect = float(mr_oracle(float(cbr)))
            assert abs(resilient_modulus(float(cbr)) - expect) <= 1e-12 * expect

    def test_cbr_ten(self):
        assert resilient_modulus(10.0) == pytest.approx(76.827, abs=1e-3)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_rejects_non_positive(self, bad):
        with pytest.raises(DomainError):
            resilient_modulus(bad)

    @settings(max_examples=100)
    @given(a=st.floats(0.01, 100.0), b=st.floats(0.01, 100.0))
    def test_monotone(self, a, b):
        if a < b:
            assert resilient_modulus(a) < resilient_modulus(b)

    @settings(max_examples=100)
    @given(c=st.floats(0.01, 50.0), s=st.floats(0.1, 2.0))
    def test_power_law_scaling(self, c, s):
        assert resilient_modulus(c * s) == pytest.approx(resilient_modulus(c) * s**0.64, rel=1e-12)


# ============================================================================
# Base modulus factor
# ============================================================================

class TestBaseFactor:
    def test_matches_clamped_power(self):
        for h in np.linspace(50.0, 1200.0, 100):
            raw = 0.2 * float(h) ** 0.45
            assert base_modulus_factor(float(h)).k == pytest.approx(min(max(raw, 2.0), 4.0), rel=1e-12)

    def test_boundaries_by_root_finding(self):
        lo = brentq(lambda h: 0.2 * h**0.45 - 2.0, 50, 1200, xtol=1e-12)
        hi = brentq(lambda h: 0.2 * h**0.45 - 4.0, 50, 1200, xtol=1e-12)
        assert lo == pytest.approx(166.81, abs=0.01)
        # closed forms: 10**(1/0.45) and 20**(1/0.45)
        assert hi == pytest.approx(20 ** (1 / 0.45), rel=1e-12)
        assert hi == pytest.approx(778.355, abs=1e-3)
        assert base_modulus_factor(770.6).k == pytest.approx(3.9820, abs=1e-4)
        assert base_modulus_factor(lo).k == pytest.approx(2.0, abs=1e-9)
        assert base_modulus_factor(hi).k == pytest.approx(4.0, abs=1e-9)

    def test_clamp_flags(self):
        assert base_modulus_factor(100.0).clamped
        assert not base_modulus_factor(300.0).clamped
        assert base_modulus_factor(1000.0).clamped
        assert base_modulus_factor(100.0).raw < 2.0

    def test_base_modulus(self):
        assert base_modulus(300.0, 50.0) == pytest.approx(0.2 * 300**0.45 * 50.0)
        with pytest.raises(DomainError):
            base_modulus(300.0, 0.0)

    def test_psi_target(self):
        assert DesignConstants().target_base_modulus_mpa == pytest.approx(30000 * 0.00689476)
        assert PSI_TO_MPA == 0.00689476


# ============================================================================
# Seasons and soils
# ============================================================================

class TestSeasons:
    def test_defaults(self):
        s = ClimateSeasons()
        assert s.durations == (0.25, 0.10, 0.30, 0.35)
        assert s.multipliers == (2.0, 0.5, 0.75, 1.0)

    def test_durations_must_sum_to_one(self):
        with pytest.raises(DomainError):
            ClimateSeasons(Season(0.5, 2.0), Season(0.1, 0.5), Season(0.3, 0.75), Season(0.35, 1.0))

    def test_moisture_ordering_enforced(self):
        with pytest.raises(DomainError):
            ClimateSeasons(Season(0.25, 2.0), Season(0.1, 1.5), Season(0.3, 0.75), Season(0.35, 1.0))

    def test_uniform(self):
        s = ClimateSeasons.uniform(1.0)
        assert s.multipliers == (1.0,) * 4

    def test_soil_validation(self):
        assert len(USCS_CLASSES) == 15
        with pytest.raises(DomainError):
            SoilProfile("XX", 10.0)
        with pytest.raises(DomainError):
            SoilProfile("GW", 0.0)
        with pytest.raises(DomainError):
            SoilProfile("GW", 101.0)

    def test_seasonal_moduli(self):
        m = seasonal_moduli(SoilProfile("CL", 8.0), ClimateSeasons())
        assert m == pytest.approx([resilient_modulus(8.0 * k) for k in (2.0, 0.5, 0.75, 1.0)])

    def test_traffic(self):
        assert TrafficDemand(1000.0, 20).total_esal == 20_000.0
        with pytest.raises(DomainError):
            TrafficDemand(-1.0)
        with pytest.raises(DomainError):
            TrafficDemand(1.0, 0)


# ============================================================================
# Damage and thickness
# ============================================================================

class TestDamage:
    soil = SoilProfile("SM", 12.0)
    seasons = ClimateSeasons()
    model = PowerLawDamageModel()

    def test_miner_sum_by_hand(self):
        traffic = TrafficDemand(10_000.0, 20)
        h = 250.0
        expect = 0.0
        for f, mult in zip(self.seasons.durations, self.seasons.multipliers):
            mr = 17.6 * (12.0 * mult) ** 0.64
            expect += traffic.total_esal * f / (5e4 * (mr / 30) ** 3 * (h / 150) ** 2)
        got = seasonal_damage(h, self.soil, self.seasons, traffic, self.model)
        assert got == pytest.approx(expect, rel=1e-12)
        assert sum(seasonal_damage_terms(h, self.soil, self.seasons, traffic, self.model)) == pytest.approx(got)

    def test_zero_traffic_zero_damage(self):
        assert seasonal_damage(100.0, self.soil, self.seasons, TrafficDemand(0.0), self.model) == 0.0

    def test_saturated_season_worst_per_unit_time(self):
        terms = seasonal_damage_terms(200.0, self.soil, self.seasons, TrafficDemand(1e4), self.model)
        per_time = [t / f for t, f in zip(terms, self.seasons.durations)]
        assert max(per_time) == per_time[1]

    @settings(max_examples=60)
    @given(h1=st.floats(100, 1000), h2=st.floats(100, 1000), esal=st.floats(1.0, 1e5))
    def test_damage_decreases_with_thickness(self, h1, h2, esal):
        t = TrafficDemand(esal)
        if h1 < h2:
            assert seasonal_damage(h1, self.soil, self.seasons, t, self.model) >= seasonal_damage(
                h2, self.soil, self.seasons, t, self.model
            )

    def test_grid(self):
        g = thickness_grid(DesignConstants())
        assert g[0] == 100.0 and g[-1] == 1000.0 and len(g) == 91


class TestDesignThickness:
    def test_zero_traffic_minimum_section(self):
        sec = design_thickness(SoilProfile("CH", 3.0), ClimateSeasons(), TrafficDemand(0.0))
        assert sec.structural_thickness == 100.0
        assert sec.base_thickness == 103.5
        assert sec.total_damage == 0.0

    def test_is_thinnest_passing_grid_value(self):
        soil, seasons, traffic = SoilProfile("CL", 6.0), ClimateSeasons(), TrafficDemand(6000.0, 30)
        model = PowerLawDamageModel()
        sec = design_thickness(soil, seasons, traffic)
        h = sec.structural_thickness
        assert seasonal_damage(h, soil, seasons, traffic, model) <= 1.0
        assert seasonal_damage(h - 10.0, soil, seasons, traffic, model) > 1.0
        # brute-force scan of the same grid
        brute = next(g for g in thickness_grid(DesignConstants())
                     if seasonal_damage(g, soil, seasons, traffic, model) <= 1.0)
        assert h == brute

    def test_base_modulus_uses_effective_subgrade(self):
        sec = design_thickness(SoilProfile("SC", 10.0), ClimateSeasons(), TrafficDemand(20000.0, 30))
        m = np.array(sec.seasonal_subgrade_moduli)
        f = np.array(ClimateSeasons().durations)
        m_eff = float(np.sum(f * m**-3.0) ** (-1 / 3))
        assert sec.effective_subgrade_modulus == pytest.approx(m_eff, rel=1e-12)
        assert sec.base_modulus == pytest.approx(base_modulus_factor(sec.base_thickness).k * m_eff)
        assert min(m) <= m_eff <= max(m)

    def test_infeasible_reports_damage(self):
        with pytest.raises(InfeasibleDesignError) as err:
            design_thickness(SoilProfile("PT", 1.0), ClimateSeasons(), TrafficDemand(1e6, 40))
        assert err.value.details["damage_at_max"] > 1.0

    def test_weaker_soil_needs_more(self):
        t = TrafficDemand(8000.0, 30)
        thick = [design_thickness(SoilProfile("CL", c), ClimateSeasons(), t).base_thickness
                 for c in (3.0, 6.0, 12.0, 24.0)]
        assert thick == sorted(thick, reverse=True)

    @settings(max_examples=40, deadline=None)
    @given(e1=st.floats(0, 3e4), e2=st.floats(0, 3e4), cbr=st.floats(4, 60))
    def test_more_traffic_never_thinner(self, e1, e2, cbr):
        lo, hi = sorted((e1, e2))
        soil = SoilProfile("SM", cbr)
        a = design_thickness(soil, ClimateSeasons(), TrafficDemand(lo)).base_thickness
        b = design_thickness(soil, ClimateSeasons(), TrafficDemand(hi)).base_thickness
        assert a <= b

    def test_custom_model_is_used(self):
        class Generous:
            def allowable_esal(self, m, h, constants=None):
                return math.inf

            def effective_modulus(self, moduli, durations):
                return min(moduli)

        sec = design_thickness(SoilProfile("PT", 1.0), ClimateSeasons(), TrafficDemand(1e9), model=Generous())
        assert sec.structural_thickness == 100.0
