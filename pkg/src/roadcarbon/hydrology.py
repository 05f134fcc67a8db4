"""Rational-method runoff, Manning ditch sizing and flood freeboard on the road grade."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InfeasibleDesignError
from .terrain import Alignment, chainages

__all__ = [
    "Catchment",
    "DitchTemplate",
    "Ditch",
    "DitchLining",
    "FloodPolicy",
    "FloodRisk",
    "FLOOD_CLASSES",
    "peak_discharge",
    "flow_area",
    "wetted_perimeter",
    "manning_capacity",
    "size_ditch",
    "flood_adjust_grade",
]

FLOOD_CLASSES = ("low", "medium", "high")

DEPTH_STEP = 0.05
MAX_DEPTH = 2.0


@dataclass(frozen=True)
class Catchment:
    area: float  # ha
    runoff_coefficient: float
    rainfall_intensity: float  # mm/h

    def __post_init__(self):
        if not self.area > 0:
            raise DomainError(f"catchment area must be positive, got {self.area}")
        if not 0 < self.runoff_coefficient <= 1:
            raise DomainError(f"runoff coefficient must be in (0, 1], got {self.runoff_coefficient}")
        if not self.rainfall_intensity >= 0:
            raise DomainError(f"rainfall intensity must be >= 0, got {self.rainfall_intensity}")


def peak_discharge(catchment: Catchment) -> float:
    """Q = C i A / 360 in m3/s, with A in hectares and i in mm/h."""
    return catchment.runoff_coefficient * catchment.rainfall_intensity * catchment.area / 360.0


# ---------------------------------------------------------------------------
# ditches
# ---------------------------------------------------------------------------

class DitchLining(str, Enum):
    UNLINED = "unlined"
    CONCRETE = "concrete"
    RIPRAP = "riprap"


@dataclass(frozen=True)
class DitchTemplate:
    """Trapezoid cross-section; ``side_slope`` is horizontal run per unit rise (0 = rectangular)."""

    bottom_width: float = 0.5
    side_slope: float = 1.0

    def __post_init__(self):
        if not self.bottom_width > 0:
            raise DomainError("ditch bottom width must be positive")
        if self.side_slope < 0:
            raise DomainError("ditch side slope must be >= 0")


@dataclass(frozen=True)
class Ditch:
    bottom_width: float
    side_slope: float
    depth: float
    longitudinal_slope: float
    manning_n: float
    capacity: float

    def __post_init__(self):
        if not (self.depth > 0 and self.bottom_width > 0):
            raise DomainError("ditch depth and bottom width must be positive")
        if not (self.longitudinal_slope > 0 and self.manning_n > 0):
            raise DomainError("ditch slope and Manning n must be positive")

    @property
    def wetted_perimeter(self) -> float:
        return wetted_perimeter(self.bottom_width, self.side_slope, self.depth)


def flow_area(bottom_width: float, side_slope: float, depth: float) -> float:
    return depth * (bottom_width + side_slope * depth)


def wetted_perimeter(bottom_width: float, side_slope: float, depth: float) -> float:
    return bottom_width + 2.0 * depth * math.sqrt(1.0 + side_slope * side_slope)


def manning_capacity(bottom_width, side_slope, depth, slope, manning_n) -> float:
    """Normal-flow discharge (m3/s) of a trapezoid flowing full to ``depth``."""
    area = flow_area(bottom_width, side_slope, depth)
    radius = area / wetted_perimeter(bottom_width, side_slope, depth)
    return area * radius ** (2.0 / 3.0) * math.sqrt(slope) / manning_n


def size_ditch(
    q_design: float,
    slope: float,
    manning_n: float,
    template: DitchTemplate = DitchTemplate(),
    depth_step: float = DEPTH_STEP,
    max_depth: float = MAX_DEPTH,
) -> Ditch:
    """Shallowest depth on a ``depth_step`` grid whose Manning capacity carries ``q_design``."""
    if not q_design >= 0:
        raise DomainError(f"design discharge must be >= 0, got {q_design}")
    if not slope > 0:
        raise DomainError(f"ditch slope must be positive, got {slope}")
    if not manning_n > 0:
        raise DomainError(f"Manning n must be positive, got {manning_n}")
    n_steps = int(round(max_depth / depth_step))
    cap = 0.0
    for k in range(1, n_steps + 1):
        depth = round(k * depth_step, 10)
        cap = manning_capacity(template.bottom_width, template.side_slope, depth, slope, manning_n)
        if cap >= q_design:
            return Ditch(template.bottom_width, template.side_slope, depth, slope, manning_n, cap)
    raise InfeasibleDesignError(
        f"no ditch depth up to {max_depth} m carries {q_design:.4g} m3/s "
        f"(capacity at max depth {cap:.4g})",
        q_design=q_design,
        capacity_at_max=cap,
    )


# ---------------------------------------------------------------------------
# flood freeboard
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FloodPolicy:
    freeboards: Mapping[str, float] = field(
        default_factory=lambda: {"low": 0.0, "medium": 0.3, "high": 0.6}
    )
    crossing_window: float = 10.0

    def __post_init__(self):
        if set(self.freeboards) != set(FLOOD_CLASSES):
            raise DomainError(f"freeboards must cover exactly {FLOOD_CLASSES}")
        if any(v < 0 for v in self.freeboards.values()):
            raise DomainError("freeboards must be >= 0")
        if self.crossing_window < 0:
            raise DomainError("crossing window must be >= 0")

    def risk(self, risk_class: str) -> "FloodRisk":
        if risk_class not in FLOOD_CLASSES:
            raise DomainError(f"unknown flood class {risk_class!r}")
        return FloodRisk(risk_class, self.freeboards[risk_class])


@dataclass(frozen=True)
class FloodRisk:
    risk_class: str
    freeboard: float

    def __post_init__(self):
        if self.risk_class not in FLOOD_CLASSES:
            raise DomainError(f"unknown flood class {self.risk_class!r}")
        if self.freeboard < 0:
            raise DomainError("freeboard must be >= 0")

    @classmethod
    def from_class(cls, risk_class: str, policy: FloodPolicy | None = None) -> "FloodRisk":
        return (policy or FloodPolicy()).risk(risk_class)


def _insert_vertices(alignment: Alignment, stations: Sequence[float]) -> tuple[Alignment, np.ndarray]:
    """Add vertices at chainages not already present; geometry and profile unchanged."""
    ch = chainages(alignment)
    verts = np.asarray(alignment.vertices)
    z = np.asarray(alignment.design_grade)
    tol = 1e-6
    new = sorted({float(s) for s in stations if np.min(np.abs(ch - s)) > tol})
    if not new:
        return alignment, ch
    all_ch = np.concatenate([ch, new])
    order = np.argsort(all_ch, kind="stable")
    all_ch = all_ch[order]
    xs = np.interp(all_ch, ch, verts[:, 0])
    ys = np.interp(all_ch, ch, verts[:, 1])
    zs = np.interp(all_ch, ch, z)
    out = Alignment(tuple(zip(xs, ys)), alignment.width, tuple(zs))
    return out, chainages(out)


def flood_adjust_grade(
    alignment: Alignment,
    risk: FloodRisk,
    crossing_stations: Sequence[float] = (),
    window: float = 10.0,
) -> Alignment:
    """Lift the design grade by the class freeboard outside low-water crossings.

    Vertices strictly within ``window`` metres of a crossing keep their grade;
    vertices are inserted at each crossing and at both window edges so the
    profile ramps down into the crossing.
    """
    total = alignment.length
    for c in crossing_stations:
        if not -1e-9 <= c <= total + 1e-9:
            raise DomainError(f"crossing station {c} outside alignment [0, {total}]")
    if risk.freeboard == 0:
        return alignment
    marks = []
    for c in crossing_stations:
        marks.extend(s for s in (c - window, c, c + window) if 0 < s < total)
    adjusted, ch = _insert_vertices(alignment, marks)
    z = np.asarray(adjusted.design_grade, dtype=float)
    keep = np.zeros(len(z), dtype=bool)
    for c in crossing_stations:
        keep |= np.abs(ch - c) < window - 1e-9
    z = np.where(keep, z, z + risk.freeboard)
    return adjusted.with_grades(z)
