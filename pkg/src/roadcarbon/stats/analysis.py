"""Corpus-wide analysis sequence and its JSON/text report."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import ConfigError, DegenerateInputError, DomainError, RoadCarbonError
from .methods import (
    LinearityReport,
    PearsonResult,
    TestReport,
    anova_bonferroni,
    linearity_report,
    ols_vif,
    pca,
    pearson,
    t_test_independent,
)

__all__ = ["Dataset", "AnalysisPlan", "corpus_analysis", "report_to_json", "render_text"]

MIN_RECORDS = 10


@dataclass(frozen=True, eq=False)
class Dataset:
    columns: Mapping[str, np.ndarray]
    groups: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    enumerations: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        grps = {k: tuple(str(x) for x in v) for k, v in self.groups.items()}
        lengths = {v.size for v in cols.values()} | {len(v) for v in grps.values()}
        if len(lengths) > 1:
            raise DomainError(f"dataset columns differ in length: {sorted(lengths)}")
        for k, v in cols.items():
            if not np.all(np.isfinite(v)):
                raise DomainError(f"column {k!r} contains non-finite values")
        for k, allowed in self.enumerations.items():
            bad = set(grps.get(k, ())) - set(allowed)
            if bad:
                raise DomainError(f"column {k!r} has labels outside its enumeration: {sorted(bad)}")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "groups", grps)

    @property
    def n(self) -> int:
        for v in self.columns.values():
            return int(v.size)
        for v in self.groups.values():
            return len(v)
        return 0

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Mapping[str, Any]],
        numeric: Sequence[str],
        categorical: Sequence[str],
        enumerations: Mapping[str, tuple[str, ...]] | None = None,
    ) -> "Dataset":
        cols = {}
        for c in numeric:
            try:
                cols[c] = np.array([float(r[c]) for r in rows])
            except KeyError:
                raise DomainError(f"missing numeric column {c!r}") from None
            except ValueError as exc:
                raise DomainError(f"column {c!r}: {exc}") from None
        try:
            grps = {c: tuple(str(r[c]) for r in rows) for c in categorical}
        except KeyError as exc:
            raise DomainError(f"missing categorical column {exc}") from None
        return cls(cols, grps, dict(enumerations or {}))

    def subset(self, mask: np.ndarray) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            {k: v[mask] for k, v in self.columns.items()},
            {k: tuple(x for x, m in zip(v, mask) if m) for k, v in self.groups.items()},
            self.enumerations,
        )


@dataclass(frozen=True)
class AnalysisPlan:
    response: str = "per_km_tco2e"
    geometry_columns: tuple[str, ...] = (
        "length_m", "mean_abs_grade", "mean_cross_slope", "bend_count", "crossing_count",
    )
    area_column: str = "area_m2"
    slope_change_column: str = "slope_reduction"
    width_column: str = "width_class"
    width_groups: tuple[str, str] = ("4.0", "3.5")
    flood_column: str = "flood_class"
    soil_column: str = "uscs_class"
    cbr_column: str = "cbr"
    slope_group_column: str = "mean_abs_grade"
    slope_group_edges: tuple[float, ...] = (0.03, 0.06)
    linearity_predictors: tuple[str, ...] = (
        "area_m2", "length_m", "cbr", "annual_esal", "slope_reduction", "mean_abs_grade",
    )
    vif_threshold: float = 10.0
    equal_var: bool = False
    linearity_margin: float = 0.02

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AnalysisPlan":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown analysis plan keys: {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


# ---------------------------------------------------------------------------
# report pieces
# ---------------------------------------------------------------------------

def _pearson_doc(res: PearsonResult) -> dict:
    return {"r": res.r, "p_value": res.p_value, "df": res.df, "n": res.n,
            "direction": (res.r > 0) - (res.r < 0)}


def _test_doc(rep: TestReport) -> dict:
    doc = {
        "test": rep.test,
        "statistic": rep.statistic,
        "df": list(rep.df),
        "p_value": rep.p_value,
        "direction": rep.direction,
        "group_means": dict(rep.group_means),
        "group_sizes": dict(rep.group_sizes),
        "degenerate": rep.degenerate,
        "notes": list(rep.notes),
    }
    if rep.pairwise:
        doc["pairwise"] = [
            {"group_a": c.group_a, "group_b": c.group_b, "mean_difference": c.mean_difference,
             "statistic": c.statistic, "p_value": c.p_value, "p_adjusted": c.p_adjusted}
            for c in rep.pairwise
        ]
    return doc


def _linearity_doc(rep: LinearityReport) -> dict:
    return {
        "verdict": rep.verdict,
        "best_model": rep.best_model,
        "margin": rep.margin,
        "fits": {k: {"r_squared": f.r_squared, "aic": f.aic} for k, f in rep.fits.items()},
        "notes": list(rep.notes),
    }


def _guard(fn, *args, **kwargs) -> dict:
    try:
        return fn(*args, **kwargs)
    except (RoadCarbonError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def _slope_groups(values: np.ndarray, edges: Sequence[float]) -> list[str]:
    edges = list(edges)
    labels = []
    for v in values:
        k = int(np.searchsorted(edges, v, side="right"))
        lo = "-inf" if k == 0 else format(edges[k - 1], "g")
        hi = "inf" if k == len(edges) else format(edges[k], "g")
        labels.append(f"[{lo},{hi})")
    return labels


def corpus_analysis(data: Dataset, plan: AnalysisPlan | None = None) -> dict[str, Any]:
    """Run the full battery in a fixed order and return a JSON-ready report.

    Each test is isolated: a failure is recorded under its key as
    ``{"error": ...}`` and the remaining tests still run.
    """
    plan = plan or AnalysisPlan()
    if data.n < MIN_RECORDS:
        raise DegenerateInputError(f"corpus analysis needs at least {MIN_RECORDS} records, got {data.n}")
    col = data.columns
    y = col[plan.response]
    geom = {c: col[c] for c in plan.geometry_columns}
    report: dict[str, Any] = {"n_records": data.n, "response": plan.response, "plan": plan.to_dict()}

    def screen():
        names = list(plan.geometry_columns) + [plan.area_column]
        r = [[None] * len(names) for _ in names]
        p = [[None] * len(names) for _ in names]
        for i, a in enumerate(names):
            for j, b in enumerate(names):
                if i == j:
                    r[i][j], p[i][j] = 1.0, 0.0
                elif j > i:
                    res = pearson(col[a], col[b])
                    r[i][j] = r[j][i] = res.r
                    p[i][j] = p[j][i] = res.p_value
        return {"columns": names, "r": r, "p_value": p}

    report["correlation_screen"] = _guard(screen)

    def vif_screen():
        res = ols_vif(geom, y, threshold=plan.vif_threshold)
        return {"predictors": list(res.names), "vif": dict(res.vif), "flagged": list(res.flagged),
                "threshold": res.threshold, "r_squared": res.r_squared,
                "intercept": res.intercept, "coefficients": list(res.coefficients)}

    report["vif_screen"] = _guard(vif_screen)

    def pca_doc():
        res = pca(geom)
        return {"columns": list(res.names), "eigenvalues": res.eigenvalues.tolist(),
                "explained_variance_ratio": res.explained_variance_ratio.tolist(),
                "loadings": res.loadings.tolist()}

    report["pca"] = _guard(pca_doc)

    def substitution():
        corr = {c: _pearson_doc(pearson(col[c], col[plan.area_column])) for c in plan.geometry_columns}
        related = [c for c, d in corr.items() if d["r"] > 0 and d["p_value"] < 0.05]
        vif = report["vif_screen"]
        flagged = vif.get("flagged", []) if isinstance(vif, dict) else []
        return {"area_correlations": corr, "positively_related": related, "collinear": flagged,
                "substituted": bool(related), "replacement": plan.area_column}

    report["area_substitution"] = _guard(substitution)
    report["area_emissions"] = _guard(lambda: _pearson_doc(pearson(col[plan.area_column], y)))
    report["slope_change_emissions"] = _guard(
        lambda: _pearson_doc(pearson(col[plan.slope_change_column], y)))

    def width_test():
        g = np.array(data.groups[plan.width_column])
        hi, lo = plan.width_groups
        return _test_doc(t_test_independent(y[g == hi], y[g == lo], equal_var=plan.equal_var,
                                            labels=(hi, lo)))

    report["width_ttest"] = _guard(width_test)
    report["flood_anova"] = _guard(
        lambda: _test_doc(anova_bonferroni(y, data.groups[plan.flood_column], plan.equal_var)))
    report["soil_anova"] = _guard(
        lambda: _test_doc(anova_bonferroni(y, data.groups[plan.soil_column], plan.equal_var)))
    report["cbr_emissions"] = _guard(lambda: _pearson_doc(pearson(col[plan.cbr_column], y)))
    report["slope_group_anova"] = _guard(
        lambda: _test_doc(anova_bonferroni(
            y, _slope_groups(col[plan.slope_group_column], plan.slope_group_edges), plan.equal_var)))
    report["linearity"] = {
        c: _guard(lambda c=c: _linearity_doc(linearity_report(col[c], y, plan.linearity_margin)))
        for c in plan.linearity_predictors
    }
    return report


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def report_to_json(report: Mapping[str, Any]) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return format(v, ".6g")
    return str(v)


def _flatten(prefix: str, value, out: list[tuple[str, str]]) -> None:
    if isinstance(value, Mapping):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, list) and value and isinstance(value[0], (Mapping, list)):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    elif isinstance(value, list):
        out.append((prefix, "[" + ", ".join(_fmt(v) for v in value) + "]"))
    else:
        out.append((prefix, _fmt(value)))


_HEADLINE = (
    ("area_emissions", "area vs emissions (Pearson)"),
    ("slope_change_emissions", "slope reduction vs emissions (Pearson)"),
    ("width_ttest", "width 4.0 vs 3.5 (t test)"),
    ("flood_anova", "flood class (one-way ANOVA)"),
    ("soil_anova", "soil class (one-way ANOVA)"),
    ("cbr_emissions", "CBR vs emissions (Pearson)"),
    ("slope_group_anova", "slope groups (one-way ANOVA)"),
)


def render_text(report: Mapping[str, Any]) -> str:
    """Human-readable table; numbers are the JSON values at 6 significant digits."""
    lines = [f"records: {report['n_records']}   response: {report['response']}", ""]
    lines.append(f"{'test':<42}{'statistic':>14}{'df':>22}{'p':>14}{'dir':>5}")
    for key, title in _HEADLINE:
        doc = report.get(key, {})
        if "error" in doc:
            lines.append(f"{title:<42}  error: {doc['error']}")
            continue
        stat = doc.get("r", doc.get("statistic"))
        df = doc["df"] if isinstance(doc["df"], list) else [doc["df"]]
        lines.append(
            f"{title:<42}{_fmt(stat):>14}{', '.join(_fmt(d) for d in df):>22}"
            f"{_fmt(doc['p_value']):>14}{_fmt(doc['direction']):>5}"
        )
    lines.append("")
    lines.append("linearity (response vs predictor):")
    for name, doc in report["linearity"].items():
        if "error" in doc:
            lines.append(f"  {name:<20} error: {doc['error']}")
            continue
        r2 = "  ".join(f"{m}={_fmt(f['r_squared'])}" for m, f in doc["fits"].items())
        lines.append(f"  {name:<20} {doc['verdict']:<16} best={doc['best_model']:<10} {r2}")
    lines.append("")
    lines.append("detail:")
    flat: list[tuple[str, str]] = []
    for key, value in report.items():
        if key in ("plan",):
            continue
        _flatten(key, value, flat)
    lines.extend(f"  {k} = {v}" for k, v in flat)
    return "\n".join(lines) + "\n"
