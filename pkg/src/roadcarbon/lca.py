"""
Linear impact assessment: characterisation, normalisation, weighting.

Every stage is a linear map of the inventory. Quantities are multiplied by
per-unit factors and summed per category (kg CO2eq), divided by reference
values and combined with fixed weights. Totals are reported in tonnes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AssessmentError, ConfigError, LoadError, SchemaError
from .quantities import UNITS, BillOfQuantities

__all__ = [
    "DEFAULT_CATEGORY",
    "FACTOR_COLUMNS",
    "RESULT_COLUMNS",
    "EmissionFactor",
    "FactorDatabase",
    "ImpactResult",
    "load_factors",
    "load_demo_factors",
    "characterize",
    "contributions",
    "normalize",
    "weight",
    "assess_project",
    "results_to_csv",
    "write_results_csv",
    "read_results_csv",
]

DEFAULT_CATEGORY = "GWP"
FACTOR_COLUMNS = ("material_id", "category", "unit", "factor_kgco2e_per_unit")
RESULT_COLUMNS = ("project_id", "length_m", "width_m", "area_m2", "embodied_tco2e", "per_km_tco2e")


@dataclass(frozen=True)
class EmissionFactor:
    material_id: str
    unit: str
    factor: float
    category: str = DEFAULT_CATEGORY


class FactorDatabase(Mapping):
    """Read-only mapping ``(material_id, category) -> EmissionFactor``."""

    def __init__(self, factors: Iterable[EmissionFactor] = ()):
        table = {}
        for f in factors:
            key = (f.material_id, f.category)
            if key in table:
                raise LoadError(f"duplicate factor for {key}")
            table[key] = f
        self._table = table

    def __getitem__(self, key):
        return self._table[key]

    def __iter__(self):
        return iter(self._table)

    def __len__(self):
        return len(self._table)

    def __repr__(self):
        return f"FactorDatabase({len(self)} factors, categories={self.categories})"

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(sorted({c for _, c in self._table}))

    def factor(self, material_id: str, category: str = DEFAULT_CATEGORY) -> EmissionFactor:
        return self._table[(material_id, category)]


@dataclass(frozen=True)
class ImpactResult:
    characterised: Mapping[str, float]  # kg CO2eq per category
    normalised: Mapping[str, float]
    weighted_single_score: float
    embodied_total: float  # t CO2eq
    per_km: float  # t CO2eq / km


def _parse_rows(rows: Iterable[Sequence[str]], origin: str) -> FactorDatabase:
    rows = iter(rows)
    header = next(rows, None)
    if header is None:
        return FactorDatabase()
    if tuple(h.strip() for h in header) != FACTOR_COLUMNS:
        raise LoadError(f"{origin}: line 1: expected header {','.join(FACTOR_COLUMNS)}")
    seen: dict[tuple[str, str], int] = {}
    factors = []
    for lineno, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise LoadError(f"{origin}: line {lineno}: expected 4 fields, found {len(row)}")
        mid, cat, unit, value = (c.strip() for c in row)
        if unit not in UNITS:
            raise LoadError(f"{origin}: line {lineno}: unknown unit {unit!r}")
        try:
            factor = float(value)
        except ValueError:
            raise LoadError(f"{origin}: line {lineno}: factor {value!r} is not a number") from None
        if not (factor >= 0 and math.isfinite(factor)):
            raise LoadError(f"{origin}: line {lineno}: factor must be finite and >= 0")
        key = (mid, cat)
        if key in seen:
            raise LoadError(
                f"{origin}: line {lineno}: duplicate ({mid}, {cat}), first defined on line {seen[key]}"
            )
        seen[key] = lineno
        factors.append(EmissionFactor(mid, unit, factor, cat))
    return FactorDatabase(factors)


def load_factors(source) -> FactorDatabase:
    """Load a factor table from a path, an open file or an iterable of CSV rows."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        with path.open(newline="") as fh:
            return _parse_rows(csv.reader(fh), str(path))
    if hasattr(source, "read"):
        return _parse_rows(csv.reader(source), getattr(source, "name", "<stream>"))
    return _parse_rows(source, "<rows>")


def load_demo_factors() -> FactorDatabase:
    text = resources.files("roadcarbon").joinpath("data/demo_factors.csv").read_text()
    return load_factors(io.StringIO(text))


def _check_coverage(boq: BillOfQuantities, db: FactorDatabase) -> None:
    missing = []
    for cat in db.categories:
        for item in boq.items:
            f = db.get((item.material_id, cat))
            if f is None:
                missing.append(f"{item.material_id}/{cat}")
            elif f.unit != item.unit:
                raise SchemaError(
                    f"{item.material_id!r} is quantified in {item.unit!r} but its "
                    f"{cat} factor is per {f.unit!r}"
                )
    if not db.categories and boq.items:
        missing = [item.material_id for item in boq.items]
    if missing:
        raise AssessmentError(f"no emission factor for: {', '.join(missing)}", tuple(missing))


def contributions(boq: BillOfQuantities, db: FactorDatabase, category: str = DEFAULT_CATEGORY) -> dict[str, float]:
    """Per-material kg CO2eq in one category."""
    _check_coverage(boq, db)
    return {it.material_id: db[(it.material_id, category)].factor * it.quantity for it in boq.items}


def characterize(boq: BillOfQuantities, db: FactorDatabase) -> dict[str, float]:
    """Category totals: sum over items of factor times quantity."""
    _check_coverage(boq, db)
    return {
        cat: math.fsum(db[(it.material_id, cat)].factor * it.quantity for it in boq.items)
        for cat in db.categories
    }


def normalize(totals: Mapping[str, float], references: Mapping[str, float]) -> dict[str, float]:
    out = {}
    for cat, total in totals.items():
        ref = references.get(cat)
        if ref is None:
            raise ConfigError(f"no normalisation reference for category {cat!r}")
        if not ref > 0:
            raise ConfigError(f"normalisation reference for {cat!r} must be positive, got {ref}")
        out[cat] = total / ref
    return out


def weight(normalised: Mapping[str, float], weights: Mapping[str, float]) -> float:
    """Single score; categories without a weight contribute nothing."""
    for cat, w in weights.items():
        if w < 0:
            raise ConfigError(f"weight for {cat!r} must be >= 0, got {w}")
    return math.fsum(weights.get(cat, 0.0) * v for cat, v in normalised.items())


def assess_project(
    boq: BillOfQuantities,
    db: FactorDatabase,
    references: Mapping[str, float] | None = None,
    weights: Mapping[str, float] | None = None,
    category: str = DEFAULT_CATEGORY,
) -> ImpactResult:
    totals = characterize(boq, db)
    references = references if references is not None else {c: 1.0 for c in totals}
    weights = weights if weights is not None else {c: 1.0 for c in totals}
    normalised = normalize(totals, references)
    score = weight(normalised, weights)
    embodied = totals.get(category, 0.0) / 1000.0
    return ImpactResult(
        characterised=dict(totals),
        normalised=normalised,
        weighted_single_score=score,
        embodied_total=embodied,
        per_km=embodied / (boq.road_length / 1000.0),
    )


# ---------------------------------------------------------------------------
# results table
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_to_csv(rows: Sequence[Mapping], extra_columns: Sequence[str] = ()) -> str:
    """Fixed result columns first, then ``extra_columns`` in the given order."""
    cols = RESULT_COLUMNS + tuple(extra_columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_cell(row[c]) for c in cols])
    return buf.getvalue()


def write_results_csv(rows: Sequence[Mapping], path: str | Path, extra_columns: Sequence[str] = ()) -> None:
    Path(path).write_text(results_to_csv(rows, extra_columns))


def read_results_csv(path: str | Path) -> list[dict[str, str]]:
    """Rows as string dicts; callers decide which columns are numeric."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames[: len(RESULT_COLUMNS)]) != RESULT_COLUMNS:
            raise SchemaError(f"{path}: results table must start with columns {RESULT_COLUMNS}")
        return [dict(r) for r in reader]
