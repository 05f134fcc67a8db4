"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL criterion N: ...`` line that is printed
in the terminal summary (and inline under ``pytest -s``).
"""

from __future__ import annotations

import subprocess
import sys
import time

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate, optimize

import oracles
from conftest import ACCEPTANCE_LINES, flat_surface, plane_surface, straight
from roadcarbon.config import EngineConfig
from roadcarbon.corpus import (
    GeneratorConfig,
    generate_corpus,
    paired_width_corpus,
    paired_width_test,
    result_row,
    results_dataset,
)
from roadcarbon.errors import DegenerateInputError, RankDeficiencyError
from roadcarbon.hydrology import Catchment, peak_discharge
from roadcarbon.lca import characterize, load_demo_factors
from roadcarbon.pavement import base_modulus_factor, resilient_modulus
from roadcarbon.quantities import BillOfQuantities, BoqItem
from roadcarbon.stats import (
    anova_bonferroni,
    corpus_analysis,
    linearity_report,
    ols_vif,
    pca,
    pearson,
    t_test_independent,
)
from roadcarbon.terrain import cross_sections, cut_fill_volumes, sample_alignment

ENGINE = EngineConfig()
mp.mp.dps = 50


def record(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def seed42():
    t0 = time.perf_counter()
    records = generate_corpus(GeneratorConfig(seed=42, project_count=200), ENGINE)
    rows = [result_row(r) for r in records if r.outputs is not None]
    report = corpus_analysis(results_dataset(rows))
    return records, rows, report, time.perf_counter() - t0


# ============================================================================
# Formula suites
# ============================================================================

def test_criterion_1_resilient_modulus():
    cbr = np.logspace(np.log10(0.5), 2.0, 101)[1:]
    t0 = time.perf_counter()
    got = [resilient_modulus(float(c)) for c in cbr]
    elapsed = time.perf_counter() - t0
    worst = max(abs(g - float(mp.mpf("17.6") * mp.mpf(float(c)) ** mp.mpf("0.64"))) / g
                for g, c in zip(got, cbr))
    exact = resilient_modulus(1.0) == 17.6
    record(1, worst < 1e-10 and exact and elapsed < 1.0,
           f"M_R max rel err {worst:.2e} over 100 CBR, M_R(1) = {resilient_modulus(1.0)}, {elapsed:.3f} s")


def test_criterion_2_base_factor():
    h = np.linspace(50.0, 1200.0, 100)
    t0 = time.perf_counter()
    got = [base_modulus_factor(float(x)).k for x in h]
    elapsed = time.perf_counter() - t0
    expect = [float(min(max(mp.mpf("0.2") * mp.mpf(float(x)) ** mp.mpf("0.45"), 2), 4)) for x in h]
    worst = max(abs(g - e) for g, e in zip(got, expect))
    k = lambda x: base_modulus_factor(x).raw
    lo = optimize.brentq(lambda x: k(x) - 2.0, 50.0, 400.0, xtol=1e-12)
    hi = optimize.brentq(lambda x: k(x) - 4.0, 400.0, 1200.0, xtol=1e-12)
    # the k = 4 root is 20**(1/0.45) = 778.355 mm; 770.6 mm gives k = 3.982
    ok = (worst < 1e-10 and abs(lo - 166.81) < 0.01 and abs(hi - float(mp.mpf(20) ** (1 / mp.mpf("0.45")))) < 1e-6
          and elapsed < 1.0)
    record(2, ok, f"k max abs err {worst:.2e}; roots h(k=2) = {lo:.2f} mm, h(k=4) = {hi:.3f} mm "
                  f"(k(770.6) = {k(770.6):.4f}); {elapsed:.3f} s")


def test_criterion_3_earthworks():
    flat = flat_surface()
    slab = straight(100.0, z0=-1.0)
    stations = [s.station for s in sample_alignment(slab, ENGINE.section_spacing)]
    cut, _ = cut_fill_volumes(cross_sections(flat, slab, stations, 5.0))
    slab_err = abs(cut - 1000.0) / 1000.0

    # taper along the road on ground with a cross slope: the cut/fill line moves across the section
    ground = plane_surface(ay=0.1)
    taper = straight(100.0, z0=-0.2, z1=0.3)
    stations = [s.station for s in sample_alignment(taper, ENGINE.section_spacing)]
    tcut, tfill = cut_fill_volumes(cross_sections(ground, taper, stations, 5.0))
    depth = lambda y, x: 0.1 * y - (-0.2 + 0.005 * x)
    exact_cut = integrate.dblquad(lambda y, x: max(depth(y, x), 0.0), 0, 100, -5, 5, epsabs=1e-10)[0]
    exact_fill = integrate.dblquad(lambda y, x: max(-depth(y, x), 0.0), 0, 100, -5, 5, epsabs=1e-10)[0]
    taper_err = max(abs(tcut - exact_cut) / exact_cut, abs(tfill - exact_fill) / exact_fill)
    record(3, slab_err <= 0.005 and taper_err <= 0.005,
           f"slab cut {cut:.3f} m3 (err {slab_err:.1e}); taper cut {tcut:.3f}/{exact_cut:.3f}, "
           f"fill {tfill:.3f}/{exact_fill:.3f} (err {taper_err:.1e})")


def test_criterion_4_rational_identity():
    q = peak_discharge(Catchment(1.0, 1.0, 360.0))
    record(4, q == 1.0, f"Q(C=1, i=360, A=1) = {q:.6f} m3/s")


def test_criterion_5_lca_linearity():
    db = load_demo_factors()
    mats = sorted({(k[0], db[k].unit) for k in db})
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        q1, q2 = rng.uniform(0, 1e5, len(mats)), rng.uniform(0, 1e5, len(mats))
        a, b = rng.uniform(0, 100, 2)
        mk = lambda q: BillOfQuantities(tuple(BoqItem(m, float(x), u) for (m, u), x in zip(mats, q)), 1.0, 1.0)
        c1, c2, cm = characterize(mk(q1), db), characterize(mk(q2), db), characterize(mk(a * q1 + b * q2), db)
        for cat in cm:
            expect = a * c1[cat] + b * c2[cat]
            worst = max(worst, abs(cm[cat] - expect) / abs(expect))
    record(5, worst <= 1e-9, f"max rel deviation {worst:.2e} over 1000 BoQ pairs")


# ============================================================================
# Statistics oracle suite
# ============================================================================

def test_criterion_6_stats_oracles():
    rng = np.random.default_rng(6)
    checks, failures, spent = 0, [], 0.0

    def check(name, a, b):
        nonlocal checks
        checks += 1
        if not oracles.close(a, b):
            failures.append(f"{name}: {a} vs {b}")

    for _ in range(50):
        n = int(rng.integers(8, 21))
        x = rng.normal(size=n)
        y = 0.5 * x + rng.normal(size=n)
        X = rng.normal(size=(n, 3))
        groups = [f"g{i % 3}" for i in range(n)]
        a, b = rng.normal(0, 1, n), rng.normal(0.5, 2, int(rng.integers(3, 21)))

        t0 = time.perf_counter()
        pr = pearson(x, y)
        ols = ols_vif(X, y)
        pc = pca(X)
        welch = t_test_independent(a, b)
        student = t_test_independent(a, b, equal_var=True)
        av = anova_bonferroni(y, groups)
        spent += time.perf_counter() - t0

        r, p = oracles.pearson(x, y)
        check("pearson r", pr.r, r)
        check("pearson p", pr.p_value, p)
        b0, coefs, r2 = oracles.ols(X.tolist(), y.tolist())
        check("ols b0", ols.intercept, b0)
        for u, v in zip(ols.coefficients, coefs):
            check("ols b", u, v)
        check("ols r2", ols.r_squared, r2)
        for j, v in enumerate(oracles.vif(X.tolist())):
            check("vif", ols.vif[f"x{j}"], v)
        vals, _ = oracles.correlation_eigen(X.tolist())
        for u, v in zip(pc.eigenvalues, vals):
            check("pca eig", u, v)
        for res, ref in ((welch, oracles.welch(a, b)), (student, oracles.student(a, b))):
            check("t", res.statistic, ref[0])
            check("t df", res.df[0], ref[1])
            check("t p", res.p_value, ref[2])
        f, df, p, pw = oracles.anova(y, groups)
        check("anova F", av.statistic, f)
        check("anova p", av.p_value, p)
        for c in av.pairwise:
            check("bonferroni", c.p_adjusted, pw[(c.group_a, c.group_b)][2])

    degenerate = []
    same = t_test_independent([1.0, 1.0, 1.0], [1.0, 1.0])
    degenerate.append(same.degenerate and same.p_value == 1.0)
    flat = anova_bonferroni([2.0] * 6, list("aabbcc"))
    degenerate.append(flat.degenerate and flat.p_value == 1.0)
    for fn, args, err in (
        (ols_vif, (np.column_stack([x, 2 * x]), y), RankDeficiencyError),
        (pca, (np.column_stack([x, np.ones(n)]),), DegenerateInputError),
        (pearson, (np.ones(n), y), DegenerateInputError),
    ):
        try:
            fn(*args)
            degenerate.append(False)
        except err:
            degenerate.append(True)
    ok = not failures and all(degenerate) and spent < 10.0
    record(6, ok, f"{checks} oracle comparisons at 1e-8, {len(failures)} mismatches; "
                  f"{sum(degenerate)}/{len(degenerate)} degenerate cases raise or flag; library time {spent:.2f} s")


# ============================================================================
# Corpus-level reproductions
# ============================================================================

def test_criterion_7_directional(seed42):
    records, rows, rep, elapsed = seed42
    t0 = time.perf_counter()
    paired = paired_width_corpus(GeneratorConfig(seed=42, project_count=200), ENGINE)
    wt = paired_width_test(paired)
    elapsed += time.perf_counter() - t0

    area, slope = rep["area_emissions"], rep["slope_change_emissions"]
    soil, flood = rep["soil_anova"], rep["flood_anova"]
    # the headline statistics re-derived by the extended-precision oracles
    y = [r["per_km_tco2e"] for r in rows]
    r_area, p_area = oracles.pearson([r["area_m2"] for r in rows], y)
    f_soil, _, p_soil, _ = oracles.anova(y, [r["uscs_class"] for r in rows])
    agree = (oracles.close(area["r"], r_area) and oracles.close(area["p_value"], p_area)
             and oracles.close(soil["statistic"], f_soil) and oracles.close(soil["p_value"], p_soil))

    parts = {
        "a": area["r"] > 0 and area["p_value"] < 0.05,
        "b": wt.direction == 1 and wt.p_value < 0.05,
        "c": slope["r"] < 0,
        "d": soil["p_value"] < 0.05 and soil["group_means"]["GW"] < soil["group_means"]["CH"],
        "e": flood["p_value"] > 0.05,
    }
    detail = (f"(a) r={area['r']:.3f} p={area['p_value']:.2g}; "
              f"(b) paired t={wt.statistic:.2f} p={wt.p_value:.2g}; "
              f"(c) r={slope['r']:.3f}; "
              f"(d) F={soil['statistic']:.2f} p={soil['p_value']:.2g} "
              f"GW {soil['group_means']['GW']:.0f} < CH {soil['group_means']['CH']:.0f}; "
              f"(e) p={flood['p_value']:.2f}; oracle agreement {agree}; {elapsed:.1f} s")
    record(7, all(parts.values()) and agree and len(rows) == 200 and elapsed < 60.0, detail)


def test_criterion_8_linearity_diagnostic():
    cbr = np.logspace(np.log10(0.5), 2.0, 100)
    power = linearity_report(cbr, [resilient_modulus(float(c)) for c in cbr])
    x = np.linspace(1.0, 100.0, 100)
    line = linearity_report(x, 2.5 * x + 4.0)
    r2 = power.fits["loglog"].r_squared
    record(8, power.verdict == "non-linear" and r2 > 0.999 and line.verdict == "linear-adequate",
           f"power law -> {power.verdict} (log-log R2 {r2:.6f}); linear -> {line.verdict}")


def test_criterion_9_magnitude(seed42):
    _, rows, _, _ = seed42
    mean = float(np.mean([r["per_km_tco2e"] for r in rows]))
    record(9, 400.0 <= mean <= 1400.0, f"seed-42 mean {mean:.1f} tCO2eq/km (band [400, 1400])")


def test_criterion_10_determinism(tmp_path):
    def run(dest):
        cli = [sys.executable, "-m", "roadcarbon"]
        subprocess.run(cli + ["corpus", "--seed", "42", "--jobs", "2", "--out", str(dest)],
                       check=True, capture_output=True)
        subprocess.run(cli + ["analyze", str(dest / "results.csv"), "--out", str(dest)],
                       check=True, capture_output=True)
        return {p.relative_to(dest): p.read_bytes() for p in sorted(dest.rglob("*")) if p.is_file()}

    a, b = run(tmp_path / "a"), run(tmp_path / "b")
    differing = [str(k) for k in a if a[k] != b.get(k)]
    key = [k for k in a if k.suffix in (".csv", ".json") and k.parent.name != "projects"]
    record(10, a.keys() == b.keys() and not differing,
           f"{len(a)} files compared ({', '.join(sorted(map(str, key)))} and project documents), "
           f"{len(differing)} differ")
