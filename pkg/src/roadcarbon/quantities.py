"""Bill of quantities built from the pavement, earthworks and drainage designs."""

from __future__ import annotations

import csv
import io
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DomainError, SchemaError
from .hydrology import Ditch, DitchLining
from .pavement import PavementSection
from .terrain import Alignment

__all__ = [
    "UNITS",
    "BoqItem",
    "BillOfQuantities",
    "EarthworksFactors",
    "DrainageFactors",
    "aggregate_volume",
    "earthworks_quantities",
    "drainage_quantities",
    "assemble_boq",
    "boq_to_csv",
    "write_boq_csv",
    "read_boq_csv",
]

UNITS = ("m3", "t", "m2", "m")

# material ids shared with the factor table
AGGREGATE = "aggregate"
EXCAVATION = "excavation"
IMPORTED_FILL = "imported_fill"
HAULAGE = "haulage"
CONCRETE = "concrete"
RIPRAP = "riprap"


@dataclass(frozen=True)
class BoqItem:
    material_id: str
    quantity: float
    unit: str

    def __post_init__(self):
        if self.unit not in UNITS:
            raise SchemaError(f"unit {self.unit!r} for {self.material_id!r} not in {UNITS}")
        if not (self.quantity >= 0 and math.isfinite(self.quantity)):
            raise SchemaError(f"quantity for {self.material_id!r} must be finite and >= 0")
        object.__setattr__(self, "quantity", float(self.quantity))


@dataclass(frozen=True)
class BillOfQuantities:
    items: tuple[BoqItem, ...]
    road_area: float
    road_length: float

    def __post_init__(self):
        items = tuple(self.items)
        ids = [it.material_id for it in items]
        if len(set(ids)) != len(ids):
            raise SchemaError("bill of quantities contains duplicate material ids")
        if not self.road_length > 0:
            raise DomainError("road_length must be positive")
        object.__setattr__(self, "items", items)

    def quantity(self, material_id: str) -> float:
        for it in self.items:
            if it.material_id == material_id:
                return it.quantity
        return 0.0

    def scaled(self, factor: float) -> "BillOfQuantities":
        """Same road repeated ``factor`` times end to end."""
        return BillOfQuantities(
            tuple(BoqItem(i.material_id, i.quantity * factor, i.unit) for i in self.items),
            self.road_area * factor,
            self.road_length * factor,
        )


@dataclass(frozen=True)
class EarthworksFactors:
    reuse_ratio: float = 0.8
    aggregate_density: float = 2.2  # t/m3
    fill_density: float = 1.8
    concrete_density: float = 2.4

    def __post_init__(self):
        if not 0 <= self.reuse_ratio <= 1:
            raise DomainError(f"reuse_ratio must be in [0, 1], got {self.reuse_ratio}")
        if min(self.aggregate_density, self.fill_density, self.concrete_density) <= 0:
            raise DomainError("densities must be positive")


@dataclass(frozen=True)
class DrainageFactors:
    concrete_thickness: float = 0.10  # m
    riprap_areal_density: float = 0.45  # t/m2 of lined perimeter

    def __post_init__(self):
        if self.concrete_thickness < 0 or self.riprap_areal_density < 0:
            raise DomainError("lining parameters must be >= 0")


def aggregate_volume(alignment: Alignment, section: PavementSection) -> BoqItem:
    return BoqItem(AGGREGATE, alignment.length * alignment.width * section.base_thickness_m, "m3")


def earthworks_quantities(
    cut: float, fill: float, factors: EarthworksFactors = EarthworksFactors()
) -> list[BoqItem]:
    """Excavation, imported fill and haulage.

    Up to ``reuse_ratio`` of the cut is placed as fill; the shortfall is
    imported and any unused cut is carted away. Haulage covers both movements.
    """
    if cut < 0 or fill < 0:
        raise DomainError("cut and fill volumes must be >= 0")
    reused = min(factors.reuse_ratio * cut, fill)
    imported = max(0.0, fill - factors.reuse_ratio * cut)
    spoil = cut - reused
    return [
        BoqItem(EXCAVATION, cut, "m3"),
        BoqItem(IMPORTED_FILL, imported, "m3"),
        BoqItem(HAULAGE, (imported + spoil) * factors.fill_density, "t"),
    ]


def drainage_quantities(
    ditches: Sequence[Ditch],
    lining: DitchLining | str,
    lengths: Sequence[float],
    factors: DrainageFactors = DrainageFactors(),
) -> list[BoqItem]:
    lining = DitchLining(lining)
    if len(ditches) != len(lengths):
        raise DomainError("one length per ditch is required")
    if any(length < 0 for length in lengths):
        raise DomainError("ditch lengths must be >= 0")
    if lining is DitchLining.UNLINED or not ditches:
        return []
    lined_area = math.fsum(d.wetted_perimeter * length for d, length in zip(ditches, lengths))
    if lining is DitchLining.CONCRETE:
        return [BoqItem(CONCRETE, lined_area * factors.concrete_thickness, "m3")]
    return [BoqItem(RIPRAP, lined_area * factors.riprap_areal_density, "t")]


def assemble_boq(parts: Iterable[Iterable[BoqItem]], alignment: Alignment) -> BillOfQuantities:
    """Merge item lists by material id; items come out sorted by id."""
    totals: dict[str, list[float]] = {}
    units: dict[str, str] = {}
    for part in parts:
        for item in part:
            unit = units.setdefault(item.material_id, item.unit)
            if unit != item.unit:
                raise SchemaError(
                    f"material {item.material_id!r} appears in both {unit!r} and {item.unit!r}"
                )
            totals.setdefault(item.material_id, []).append(item.quantity)
    items = tuple(
        BoqItem(mid, math.fsum(totals[mid]), units[mid]) for mid in sorted(totals)
    )
    length = alignment.length
    return BillOfQuantities(items, length * alignment.width, length)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

_BOQ_COLUMNS = ("material_id", "quantity", "unit")


def boq_to_csv(boq: BillOfQuantities) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_BOQ_COLUMNS)
    for it in boq.items:
        w.writerow([it.material_id, f"{it.quantity:.6g}", it.unit])
    return buf.getvalue()


def write_boq_csv(boq: BillOfQuantities, path: str | Path) -> None:
    Path(path).write_text(boq_to_csv(boq))


def read_boq_csv(path: str | Path, road_area: float, road_length: float) -> BillOfQuantities:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != _BOQ_COLUMNS:
            raise SchemaError(f"{path}:1: expected header {','.join(_BOQ_COLUMNS)}")
        merged: OrderedDict[str, BoqItem] = OrderedDict()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                item = BoqItem(row[0], float(row[1]), row[2])
            except (IndexError, ValueError) as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            if item.material_id in merged:
                raise SchemaError(f"{path}:{lineno}: duplicate material {item.material_id!r}")
            merged[item.material_id] = item
    return BillOfQuantities(tuple(merged.values()), road_area, road_length)
