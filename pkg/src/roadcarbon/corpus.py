"""
Project records, the synthetic project generator, the end-to-end design
pipeline and corpus persistence.

A generated project is a pure function of ``(seed, index)``: every random
attribute is drawn from its own ``SeedSequence([seed, index, stream])`` so
that, for example, road width is statistically independent of terrain and
soil by construction.

Generator couplings (deliberate, documented modelling choices):

* soil group sets the CBR range and a landform relief factor: granular
  soils sit on hillier ground, fine-grained and organic soils on flat ground;
* annual traffic scales with road length (longer access roads serve more
  properties);
* flood class is drawn independently of everything else when
  ``flood_neutral`` is set, otherwise it leans toward the flat, low-lying
  soil groups.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .config import EngineConfig
from .errors import ConfigError, CorpusFormatError, DomainError, RoadCarbonError
from .hydrology import (
    FLOOD_CLASSES,
    Catchment,
    FloodPolicy,
    Ditch,
    DitchLining,
    FloodRisk,
    flood_adjust_grade,
    peak_discharge,
    size_ditch,
)
from .lca import RESULT_COLUMNS, ImpactResult, assess_project
from .pavement import (
    USCS_CLASSES,
    ClimateSeasons,
    PavementSection,
    Season,
    SoilProfile,
    TrafficDemand,
    design_thickness,
)
from .quantities import (
    BillOfQuantities,
    BoqItem,
    aggregate_volume,
    assemble_boq,
    drainage_quantities,
    earthworks_quantities,
)
from .terrain import (
    _locate,
    Alignment,
    TerrainSurface,
    cap_grades,
    chainages,
    cross_sections,
    cut_fill_volumes,
    elevations_at,
    flow_paths,
    grade_profile,
    read_terrain_csv,
    sample_alignment,
    write_terrain_csv,
)

__all__ = [
    "DEFAULT_CBR_RANGES",
    "DEFAULT_RELIEF_FACTORS",
    "ANALYSIS_NUMERIC",
    "ANALYSIS_CATEGORICAL",
    "GeneratorConfig",
    "DesignOutputs",
    "ProjectRecord",
    "generate_project",
    "generate_terrain",
    "StageError",
    "design_project",
    "run_pipeline",
    "generate_corpus",
    "with_width",
    "paired_width_corpus",
    "paired_width_test",
    "result_row",
    "results_dataset",
    "project_to_dict",
    "project_from_dict",
    "save_project",
    "load_project",
    "save_corpus",
    "load_corpus",
]

# CBR (%) ranges per USCS group; typical subgrade values, not project data
DEFAULT_CBR_RANGES = {
    "GW": (30.0, 80.0), "GP": (25.0, 60.0), "GM": (20.0, 50.0), "GC": (15.0, 40.0),
    "SW": (15.0, 40.0), "SP": (10.0, 30.0), "SM": (10.0, 30.0), "SC": (8.0, 20.0),
    "ML": (5.0, 15.0), "CL": (4.0, 12.0), "OL": (3.0, 8.0), "MH": (3.0, 10.0),
    "CH": (2.0, 6.0), "OH": (2.0, 5.0), "PT": (1.0, 3.0),
}

# multiplier on terrain roughness per group (landform association)
DEFAULT_RELIEF_FACTORS = {
    "GW": 1.0, "GP": 1.0, "GM": 0.9, "GC": 0.9,
    "SW": 0.6, "SP": 0.6, "SM": 0.55, "SC": 0.55,
    "ML": 0.35, "CL": 0.35, "OL": 0.2, "MH": 0.3,
    "CH": 0.25, "OH": 0.2, "PT": 0.1,
}

_STREAMS = {
    "terrain": 1, "alignment": 2, "soil": 3, "traffic": 4, "flood": 5,
    "width": 6, "climate": 7, "drainage": 8, "cap": 9,
}

ANALYSIS_NUMERIC = (
    "cbr", "annual_esal", "design_life", "base_thickness_mm", "cut_m3", "fill_m3",
    "max_grade_before", "max_grade_after", "slope_reduction", "mean_abs_grade",
    "mean_cross_slope", "bend_count", "crossing_count",
)
ANALYSIS_CATEGORICAL = ("uscs_class", "flood_class", "width_class", "ditch_lining")


# ---------------------------------------------------------------------------
# generator configuration
# ---------------------------------------------------------------------------

def _check_probs(name: str, probs: Mapping[Any, float]) -> None:
    if not probs or any(p < 0 for p in probs.values()):
        raise ConfigError(f"{name}: probabilities must be non-negative and non-empty")
    if abs(sum(probs.values()) - 1.0) > 1e-9:
        raise ConfigError(f"{name}: probabilities sum to {sum(probs.values())}, expected 1")


def _check_range(name: str, r: Sequence[float]) -> None:
    if len(r) != 2 or not r[0] <= r[1]:
        raise ConfigError(f"{name}: expected a (low, high) pair with low <= high, got {r}")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 42
    project_count: int = 200
    length_range: tuple[float, float] = (500.0, 3000.0)
    roughness_range: tuple[float, float] = (2.0, 20.0)  # m, std of relief before soil factor
    correlation_length: float = 250.0
    cell_size: float = 20.0
    vertex_spacing: float = 100.0
    corridor_half_width: float = 120.0
    soil_probabilities: Mapping[str, float] = field(
        default_factory=lambda: {c: 1.0 / len(USCS_CLASSES) for c in USCS_CLASSES}
    )
    cbr_ranges: Mapping[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_CBR_RANGES))
    relief_factors: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_RELIEF_FACTORS))
    traffic_per_km_range: tuple[float, float] = (2000.0, 8000.0)  # annual ESAL per km of road
    design_life_range: tuple[int, int] = (25, 40)
    flood_probabilities: Mapping[str, float] = field(
        default_factory=lambda: {"low": 0.4, "medium": 0.35, "high": 0.25}
    )
    flood_neutral: bool = True
    width_probabilities: Mapping[str, float] = field(default_factory=lambda: {"3.5": 0.5, "4.0": 0.5})
    grade_cap_range: tuple[float, float] = (0.08, 0.12)
    runoff_coefficient_range: tuple[float, float] = (0.3, 0.7)
    rainfall_intensity_range: tuple[float, float] = (30.0, 90.0)  # mm/h
    lining_probabilities: Mapping[str, float] = field(
        default_factory=lambda: {"unlined": 0.5, "concrete": 0.3, "riprap": 0.2}
    )
    drainage_segment_length: float = 250.0
    stream_threshold_ha: float = 2.0

    def __post_init__(self):
        if self.project_count < 0:
            raise ConfigError("project_count must be >= 0")
        for name in ("length_range", "roughness_range", "traffic_per_km_range", "design_life_range",
                     "grade_cap_range", "runoff_coefficient_range", "rainfall_intensity_range"):
            _check_range(name, getattr(self, name))
        if self.length_range[0] <= 0 or self.roughness_range[0] < 0:
            raise ConfigError("length must be positive and roughness non-negative")
        if not (0 < self.grade_cap_range[0] and self.grade_cap_range[1] < 1):
            raise ConfigError("grade caps must lie in (0, 1)")
        _check_probs("soil_probabilities", self.soil_probabilities)
        _check_probs("flood_probabilities", self.flood_probabilities)
        _check_probs("width_probabilities", self.width_probabilities)
        _check_probs("lining_probabilities", self.lining_probabilities)
        if set(self.soil_probabilities) - set(USCS_CLASSES):
            raise ConfigError("soil_probabilities has unknown USCS groups")
        if set(self.flood_probabilities) != set(FLOOD_CLASSES):
            raise ConfigError(f"flood_probabilities must cover {FLOOD_CLASSES}")
        for g in self.soil_probabilities:
            if g not in self.cbr_ranges or g not in self.relief_factors:
                raise ConfigError(f"no CBR range or relief factor for soil group {g}")
            lo, hi = self.cbr_ranges[g]
            if not 0 < lo <= hi <= 100:
                raise ConfigError(f"CBR range for {g} must satisfy 0 < low <= high <= 100")
        for w in self.width_probabilities:
            if not float(w) > 0:
                raise ConfigError(f"road width {w} must be positive")
        for lining in self.lining_probabilities:
            DitchLining(lining)
        if min(self.correlation_length, self.cell_size, self.vertex_spacing,
               self.drainage_segment_length) <= 0:
            raise ConfigError("lengths and spacings must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"generator: unknown keys {sorted(unknown)}")
        kw = {}
        for k, v in data.items():
            if k == "cbr_ranges":
                v = {g: tuple(r) for g, r in v.items()}
            elif isinstance(v, list):
                v = tuple(v)
            kw[k] = v
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, Mapping):
                v = {k: list(x) if isinstance(x, tuple) else x for k, x in v.items()}
            out[f.name] = v
        return out


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DesignOutputs:
    section: PavementSection
    design_alignment: Alignment
    cut_volume: float
    fill_volume: float
    max_grade_before: float
    max_grade_after: float
    slope_reduction: float
    mean_abs_grade: float
    mean_cross_slope: float
    bend_count: int
    ditches: tuple[Ditch, ...]
    ditch_lengths: tuple[float, ...]
    boq: BillOfQuantities
    impact: ImpactResult | None = None


@dataclass(frozen=True)
class ProjectRecord:
    project_id: str
    terrain: TerrainSurface
    alignment: Alignment
    soil: SoilProfile
    seasons: ClimateSeasons
    traffic: TrafficDemand
    flood: FloodRisk
    catchments: tuple[Catchment, ...]
    drainage_breaks: tuple[float, ...]  # segment boundaries; catchment k drains segment k
    crossing_stations: tuple[float, ...] = ()
    max_grade_cap: float = 0.10
    ditch_lining: str = DitchLining.UNLINED.value
    outputs: DesignOutputs | None = None
    failure: str | None = None

    def __post_init__(self):
        if len(self.drainage_breaks) != len(self.catchments) + 1:
            raise DomainError("need one more drainage break than catchments")
        DitchLining(self.ditch_lining)
        if self.outputs is not None and (self.outputs.impact is None or not self.outputs.impact.per_km > 0):
            raise DomainError("completed record must have positive per-km emissions")

    @property
    def width(self) -> float:
        return self.alignment.width

    @property
    def completed(self) -> bool:
        return self.outputs is not None

    def inputs_only(self) -> "ProjectRecord":
        return replace(self, outputs=None, failure=None)


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def _rng(seed: int, index: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index), _STREAMS[stream]]))


def _choice(rng: np.random.Generator, probs: Mapping[str, float]) -> str:
    keys = list(probs)
    p = np.array([probs[k] for k in keys], dtype=float)
    return keys[int(rng.choice(len(keys), p=p / p.sum()))]


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _value_noise(nx: int, ny: int, cell: float, corr: float, rng: np.random.Generator, octaves: int = 3):
    """Sum of lattice value-noise octaves, normalised to unit standard deviation."""
    xs = np.arange(nx) * cell
    ys = np.arange(ny) * cell
    total = np.zeros((ny, nx))
    for o in range(octaves):
        spacing = corr / 2**o
        lx = int(math.ceil(xs[-1] / spacing)) + 2
        ly = int(math.ceil(ys[-1] / spacing)) + 2
        lattice = rng.standard_normal((ly, lx))
        u = xs / spacing
        v = ys / spacing
        i = np.floor(u).astype(int)
        j = np.floor(v).astype(int)
        fu = _smoothstep(u - i)[None, :]
        fv = _smoothstep(v - j)[:, None]
        z00 = lattice[j[:, None], i[None, :]]
        z10 = lattice[j[:, None], i[None, :] + 1]
        z01 = lattice[j[:, None] + 1, i[None, :]]
        z11 = lattice[j[:, None] + 1, i[None, :] + 1]
        total += 0.5**o * ((z00 * (1 - fu) + z10 * fu) * (1 - fv) + (z01 * (1 - fu) + z11 * fu) * fv)
    sd = total.std()
    return total / sd if sd > 0 else total


def generate_terrain(
    nx: int, ny: int, cell: float, roughness: float, corr: float,
    rng: np.random.Generator, origin=(0.0, 0.0), base: float = 100.0,
) -> TerrainSurface:
    field_ = _value_noise(nx, ny, cell, corr, rng)
    tilt = rng.uniform(-0.01, 0.01, size=2) * (roughness / 30.0)
    xs = np.arange(nx) * cell
    ys = np.arange(ny) * cell
    plane = tilt[0] * xs[None, :] + tilt[1] * ys[:, None]
    z = np.round(base + roughness * field_ + plane, 3)
    return TerrainSurface(origin, cell, z)


def _polyline(length: float, spacing: float, half_width: float, rng: np.random.Generator):
    """Meandering polyline of the given length starting at the origin, heading +x."""
    pts = [(0.0, 0.0)]
    heading = 0.0
    done = 0.0
    y = 0.0
    while done < length - 1e-9:
        heading += rng.normal(0.0, math.radians(12.0))
        # steer back toward the corridor centre line
        heading -= 0.8 * math.radians(30.0) * (y / half_width)
        heading = max(-math.radians(35.0), min(math.radians(35.0), heading))
        step = min(spacing, length - done)
        if length - done - step < 0.2 * spacing:
            step = length - done
        x0, y0 = pts[-1]
        pts.append((x0 + step * math.cos(heading), y0 + step * math.sin(heading)))
        y = pts[-1][1]
        done += step
    return np.round(np.array(pts), 3)


def _bend_count(vertices: Sequence[tuple[float, float]], threshold_deg: float = 10.0) -> int:
    v = np.asarray(vertices)
    if len(v) < 3:
        return 0
    d = np.diff(v, axis=0)
    ang = np.arctan2(d[:, 1], d[:, 0])
    defl = np.abs((np.diff(ang) + np.pi) % (2 * np.pi) - np.pi)
    return int(np.sum(defl > math.radians(threshold_deg)))


def _drainage_layout(terrain: TerrainSurface, alignment: Alignment, config: GeneratorConfig):
    """Segment breaks, contributing areas (ha) and stream crossing stations from D8 routing."""
    flow = flow_paths(terrain)
    length = alignment.length
    n_seg = max(1, int(round(length / config.drainage_segment_length)))
    breaks = np.linspace(0.0, length, n_seg + 1)
    st = np.arange(0.0, length, terrain.cell_size / 2.0)
    st = np.append(st, length)
    pts = _locate(alignment, st)[0]
    xs, ys = pts[:, 0], pts[:, 1]
    ii = np.clip(np.rint((xs - terrain.origin[0]) / terrain.cell_size).astype(int), 0, terrain.nx - 1)
    jj = np.clip(np.rint((ys - terrain.origin[1]) / terrain.cell_size).astype(int), 0, terrain.ny - 1)
    cell_ha = terrain.cell_size**2 / 1e4
    acc_ha = flow.accumulation[jj, ii] * cell_ha
    areas = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = (st >= a) & (st <= b)
        areas.append(float(acc_ha[m].max()))
    crossings = []
    stream = acc_ha >= config.stream_threshold_ha
    k = 0
    while k < len(st):
        if stream[k]:
            e = k
            while e + 1 < len(st) and stream[e + 1]:
                e += 1
            peak = k + int(np.argmax(acc_ha[k : e + 1]))
            crossings.append(round(float(st[peak]), 3))
            k = e + 1
        else:
            k += 1
    return tuple(round(float(b), 3) for b in breaks), tuple(round(a, 4) for a in areas), tuple(crossings)


def generate_project(config: GeneratorConfig, index: int) -> ProjectRecord:
    """Inputs-only record for project ``index``; depends only on ``(config, index)``."""
    if not 0 <= index < config.project_count:
        raise DomainError(f"index {index} outside [0, {config.project_count})")
    seed = config.seed

    soil_rng = _rng(seed, index, "soil")
    group = _choice(soil_rng, config.soil_probabilities)
    lo, hi = config.cbr_ranges[group]
    cbr = round(float(soil_rng.uniform(lo, hi)), 2)
    soil = SoilProfile(group, min(max(cbr, lo), hi))

    geo_rng = _rng(seed, index, "alignment")
    length = round(float(geo_rng.uniform(*config.length_range)), 1)
    poly = _polyline(length, config.vertex_spacing, config.corridor_half_width, geo_rng)
    width = float(_choice(_rng(seed, index, "width"), config.width_probabilities))

    margin = 3 * config.cell_size + 20.0
    xmin, ymin = poly.min(axis=0) - margin
    xmax, ymax = poly.max(axis=0) + margin
    cell = config.cell_size
    origin = (math.floor(xmin / cell) * cell, math.floor(ymin / cell) * cell)
    nx = int(math.ceil((xmax - origin[0]) / cell)) + 1
    ny = int(math.ceil((ymax - origin[1]) / cell)) + 1
    ter_rng = _rng(seed, index, "terrain")
    roughness = float(ter_rng.uniform(*config.roughness_range)) * config.relief_factors[group]
    terrain = generate_terrain(nx, ny, cell, roughness, config.correlation_length, ter_rng, origin)

    ground = np.round(elevations_at(terrain, poly[:, 0], poly[:, 1]), 3)
    alignment = Alignment(tuple(map(tuple, poly)), width, tuple(ground))

    clim = _rng(seed, index, "climate")
    frozen = round(float(clim.uniform(0.15, 0.35)), 3)
    thaw = round(float(clim.uniform(0.05, 0.15)), 3)
    wet = round(float(clim.uniform(0.20, 0.35)), 3)
    dry = round(1.0 - frozen - thaw - wet, 3)
    base = ClimateSeasons()
    seasons = ClimateSeasons(
        Season(frozen, base.frozen.cbr_multiplier),
        Season(thaw, base.saturated.cbr_multiplier),
        Season(wet, base.wet.cbr_multiplier),
        Season(dry, base.dry.cbr_multiplier),
    )

    tr = _rng(seed, index, "traffic")
    annual = round(float(tr.uniform(*config.traffic_per_km_range)) * length / 1000.0)
    life = int(tr.integers(config.design_life_range[0], config.design_life_range[1] + 1))
    traffic = TrafficDemand(float(annual), life)

    fl = _rng(seed, index, "flood")
    if config.flood_neutral:
        probs = config.flood_probabilities
    else:
        lean = 0.5 - config.relief_factors[group]
        raw = {c: config.flood_probabilities[c] * math.exp(4.0 * s * lean)
               for c, s in zip(FLOOD_CLASSES, (-1.0, 0.0, 1.0))}
        tot = sum(raw.values())
        probs = {c: v / tot for c, v in raw.items()}
    flood_class = _choice(fl, probs)

    dr = _rng(seed, index, "drainage")
    c_runoff = round(float(dr.uniform(*config.runoff_coefficient_range)), 3)
    intensity = round(float(dr.uniform(*config.rainfall_intensity_range)), 1)
    lining = _choice(dr, config.lining_probabilities)
    breaks, areas, crossings = _drainage_layout(terrain, alignment, config)
    catchments = tuple(Catchment(a, c_runoff, intensity) for a in areas)

    cap = round(float(_rng(seed, index, "cap").uniform(*config.grade_cap_range)), 3)

    return ProjectRecord(
        project_id=f"P{index:04d}",
        terrain=terrain,
        alignment=alignment,
        soil=soil,
        seasons=seasons,
        traffic=traffic,
        flood=FloodPolicy().risk(flood_class),
        catchments=catchments,
        drainage_breaks=breaks,
        crossing_stations=crossings,
        max_grade_cap=cap,
        ditch_lining=lining,
    )


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _mean_cross_slope(sections) -> float:
    slopes = []
    for s in sections:
        off = np.array([p[0] for p in s.ground_profile])
        z = np.array([p[1] for p in s.ground_profile])
        dc = off - off.mean()
        slopes.append(abs(float(dc @ (z - z.mean())) / float(dc @ dc)))
    return float(np.mean(slopes)) if slopes else 0.0


class StageError(RoadCarbonError):
    """A pipeline stage failed; ``cause`` is the original error."""

    def __init__(self, stage: str, cause: RoadCarbonError):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def design_project(record: ProjectRecord, engine: EngineConfig | None = None) -> DesignOutputs:
    """Every design stage up to the bill of quantities; ``impact`` is left empty.

    Stage order: grade capping, flood freeboard, pavement thickness, cross
    sections and volumes, ditch sizing, bill of quantities.
    """
    engine = engine or EngineConfig()
    stage = "grade_cap"
    try:
        before = grade_profile(record.alignment)
        capped = cap_grades(record.alignment, record.max_grade_cap)
        after = grade_profile(capped)

        stage = "flood_adjust"
        risk = engine.flood_policy.risk(record.flood.risk_class)
        design = flood_adjust_grade(capped, risk, record.crossing_stations,
                                    engine.flood_policy.crossing_window)

        stage = "pavement"
        section = design_thickness(record.soil, record.seasons, record.traffic,
                                   engine.constants, engine.damage_model)

        stage = "earthworks"
        stations = [s.station for s in sample_alignment(design, engine.section_spacing)]
        half = design.width / 2.0 + engine.shoulder
        sections = cross_sections(record.terrain, design, stations, half, engine.offset_step)
        cut, fill = cut_fill_volumes(sections)

        stage = "drainage"
        ch = chainages(design)
        z = np.asarray(design.design_grade)
        ditches, lengths = [], []
        n = engine.manning_n[record.ditch_lining]
        for catchment, a, b in zip(record.catchments, record.drainage_breaks[:-1], record.drainage_breaks[1:]):
            za, zb = np.interp([a, b], ch, z)
            slope = max(abs(zb - za) / (b - a), engine.min_ditch_slope)
            ditches.append(size_ditch(peak_discharge(catchment), slope, n, engine.ditch_template))
            lengths.append(b - a)

        stage = "quantities"
        boq = assemble_boq(
            [
                [aggregate_volume(design, section)],
                earthworks_quantities(cut, fill, engine.earthworks),
                drainage_quantities(ditches, record.ditch_lining, lengths, engine.drainage),
            ],
            design,
        )
    except RoadCarbonError as exc:
        raise StageError(stage, exc) from exc

    g0 = np.abs(before.grades)
    seg = np.diff(chainages(record.alignment))
    return DesignOutputs(
        section=section,
        design_alignment=design,
        cut_volume=cut,
        fill_volume=fill,
        max_grade_before=before.max_abs_grade,
        max_grade_after=after.max_abs_grade,
        slope_reduction=before.max_abs_grade - after.max_abs_grade,
        mean_abs_grade=float(g0 @ seg / seg.sum()),
        mean_cross_slope=_mean_cross_slope(sections),
        bend_count=_bend_count(record.alignment.vertices),
        ditches=tuple(ditches),
        ditch_lengths=tuple(float(x) for x in lengths),
        boq=boq,
    )


def run_pipeline(record: ProjectRecord, engine: EngineConfig | None = None) -> ProjectRecord:
    """Design, quantify and assess one project.

    Failures do not raise; they come back as ``record.failure`` with the
    stage name in front.
    """
    engine = engine or EngineConfig()
    record = record.inputs_only()
    try:
        outputs = design_project(record, engine)
        try:
            impact = assess_project(outputs.boq, engine.factor_db, engine.references, engine.weights)
        except RoadCarbonError as exc:
            raise StageError("assessment", exc) from exc
    except StageError as exc:
        return replace(record, failure=str(exc))
    return replace(record, outputs=replace(outputs, impact=impact))


def _build_one(args) -> ProjectRecord:
    config, engine, index, width = args
    rec = generate_project(config, index)
    if width is not None:
        rec = with_width(rec, width)
    return run_pipeline(rec, engine)


def generate_corpus(
    config: GeneratorConfig,
    engine: EngineConfig | None = None,
    indices: Iterable[int] | None = None,
    jobs: int = 1,
) -> list[ProjectRecord]:
    """Generate and run projects; output order follows ``indices`` regardless of ``jobs``."""
    engine = engine or EngineConfig()
    idx = list(range(config.project_count) if indices is None else indices)
    tasks = [(config, engine, i, None) for i in idx]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_build_one, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_build_one(t) for t in tasks]


def with_width(record: ProjectRecord, width: float) -> ProjectRecord:
    """Same project at another road width; derived outputs are dropped."""
    return replace(record.inputs_only(), alignment=replace(record.alignment, width=float(width)))


def paired_width_corpus(
    config: GeneratorConfig,
    engine: EngineConfig | None = None,
    indices: Iterable[int] | None = None,
    widths: tuple[float, float] = (3.5, 4.0),
) -> list[ProjectRecord]:
    """Every selected project designed once at each width, otherwise identical."""
    engine = engine or EngineConfig()
    idx = list(range(config.project_count) if indices is None else indices)
    out = []
    for i in idx:
        base = generate_project(config, i)
        for w in widths:
            rec = run_pipeline(with_width(base, w), engine)
            out.append(replace(rec, project_id=f"{rec.project_id}-W{w:.1f}"))
    return out


def paired_width_test(records: Sequence[ProjectRecord], widths: tuple[float, float] = (3.5, 4.0)):
    """Paired t test of per-km emissions, wider minus narrower, over complete pairs.

    Records are matched on the project id prefix written by
    :func:`paired_width_corpus`; a pair with a failed member is skipped.
    """
    from .stats import t_test_paired

    narrow, wide = {}, {}
    for r in records:
        if r.outputs is None:
            continue
        base = r.project_id.rsplit("-W", 1)[0]
        if math.isclose(r.width, widths[0]):
            narrow[base] = r.outputs.impact.per_km
        elif math.isclose(r.width, widths[1]):
            wide[base] = r.outputs.impact.per_km
    keys = sorted(set(narrow) & set(wide))
    return t_test_paired([wide[k] for k in keys], [narrow[k] for k in keys],
                         labels=(f"{widths[1]:.1f}", f"{widths[0]:.1f}"))


# ---------------------------------------------------------------------------
# flattening for the statistics stage
# ---------------------------------------------------------------------------

def result_row(record: ProjectRecord) -> dict[str, Any]:
    if record.outputs is None:
        raise DomainError(f"{record.project_id} has no design outputs")
    o = record.outputs
    length = o.boq.road_length
    return {
        "project_id": record.project_id,
        "length_m": length,
        "width_m": record.width,
        "area_m2": o.boq.road_area,
        "embodied_tco2e": o.impact.embodied_total,
        "per_km_tco2e": o.impact.per_km,
        "cbr": record.soil.cbr_base,
        "annual_esal": record.traffic.annual_esal,
        "design_life": record.traffic.design_life,
        "base_thickness_mm": o.section.base_thickness,
        "cut_m3": o.cut_volume,
        "fill_m3": o.fill_volume,
        "max_grade_before": o.max_grade_before,
        "max_grade_after": o.max_grade_after,
        "slope_reduction": o.slope_reduction,
        "mean_abs_grade": o.mean_abs_grade,
        "mean_cross_slope": o.mean_cross_slope,
        "bend_count": o.bend_count,
        "crossing_count": len(record.crossing_stations),
        "uscs_class": record.soil.uscs_class,
        "flood_class": record.flood.risk_class,
        "width_class": f"{record.width:.1f}",
        "ditch_lining": record.ditch_lining,
    }


def results_dataset(rows: Sequence[Mapping[str, Any]]):
    from .stats import Dataset

    numeric = tuple(c for c in RESULT_COLUMNS if c != "project_id") + ANALYSIS_NUMERIC
    return Dataset.from_rows(
        rows, numeric, ANALYSIS_CATEGORICAL,
        enumerations={"uscs_class": USCS_CLASSES, "flood_class": FLOOD_CLASSES},
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

class _Doc:
    """Field access on a decoded JSON object with path-qualified errors."""

    def __init__(self, data, where: str, path: str):
        if not isinstance(data, Mapping):
            raise CorpusFormatError(f"{where}: field '{path or '<root>'}': expected an object")
        self.data, self.where, self.path = data, where, path

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key, default=...):
        if key not in self.data:
            if default is ...:
                raise CorpusFormatError(f"{self.where}: field '{self._name(key)}': missing")
            return default
        return self.data[key]

    def num(self, key, default=...) -> float:
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise CorpusFormatError(f"{self.where}: field '{self._name(key)}': expected a number")
        return float(v)

    def int(self, key) -> int:
        v = self.raw(key)
        if isinstance(v, bool) or not isinstance(v, int):
            raise CorpusFormatError(f"{self.where}: field '{self._name(key)}': expected an integer")
        return v

    def str(self, key, default=...) -> str:
        v = self.raw(key, default)
        if v is not None and not isinstance(v, str):
            raise CorpusFormatError(f"{self.where}: field '{self._name(key)}': expected a string")
        return v

    def list(self, key) -> list:
        v = self.raw(key)
        if not isinstance(v, list):
            raise CorpusFormatError(f"{self.where}: field '{self._name(key)}': expected an array")
        return v

    def sub(self, key) -> "_Doc":
        return _Doc(self.raw(key), self.where, self._name(key))

    def nums(self, key) -> tuple[float, ...]:
        out = []
        for i, v in enumerate(self.list(key)):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise CorpusFormatError(f"{self.where}: field '{self._name(key)}[{i}]': expected a number")
            out.append(float(v))
        return tuple(out)


def _alignment_doc(a: Alignment) -> dict:
    return {"vertices": [list(v) for v in a.vertices], "width": a.width,
            "design_grade": list(a.design_grade)}


def _alignment_from(d: _Doc) -> Alignment:
    verts = []
    for i, v in enumerate(d.list("vertices")):
        if not (isinstance(v, list) and len(v) == 2):
            raise CorpusFormatError(f"{d.where}: field '{d._name('vertices')}[{i}]': expected [x, y]")
        verts.append((float(v[0]), float(v[1])))
    return Alignment(tuple(verts), d.num("width"), d.nums("design_grade"))


def _section_doc(s: PavementSection) -> dict:
    return {
        "base_thickness_mm": s.base_thickness,
        "base_modulus_mpa": s.base_modulus,
        "seasonal_subgrade_moduli_mpa": list(s.seasonal_subgrade_moduli),
        "total_damage": s.total_damage,
        "aggregate_loss_allowance_mm": s.aggregate_loss_allowance,
        "structural_thickness_mm": s.structural_thickness,
        "effective_subgrade_modulus_mpa": s.effective_subgrade_modulus,
        "k_clamped": s.k_clamped,
    }


def _section_from(d: _Doc) -> PavementSection:
    return PavementSection(
        base_thickness=d.num("base_thickness_mm"),
        base_modulus=d.num("base_modulus_mpa"),
        seasonal_subgrade_moduli=d.nums("seasonal_subgrade_moduli_mpa"),
        total_damage=d.num("total_damage"),
        aggregate_loss_allowance=d.num("aggregate_loss_allowance_mm"),
        structural_thickness=d.num("structural_thickness_mm"),
        effective_subgrade_modulus=d.num("effective_subgrade_modulus_mpa"),
        k_clamped=bool(d.raw("k_clamped")),
    )


def _outputs_doc(o: DesignOutputs) -> dict:
    return {
        "section": _section_doc(o.section),
        "design_alignment": _alignment_doc(o.design_alignment),
        "cut_volume_m3": o.cut_volume,
        "fill_volume_m3": o.fill_volume,
        "max_grade_before": o.max_grade_before,
        "max_grade_after": o.max_grade_after,
        "slope_reduction": o.slope_reduction,
        "mean_abs_grade": o.mean_abs_grade,
        "mean_cross_slope": o.mean_cross_slope,
        "bend_count": o.bend_count,
        "ditches": [
            {"bottom_width_m": d.bottom_width, "side_slope": d.side_slope, "depth_m": d.depth,
             "longitudinal_slope": d.longitudinal_slope, "manning_n": d.manning_n,
             "capacity_m3s": d.capacity}
            for d in o.ditches
        ],
        "ditch_lengths_m": list(o.ditch_lengths),
        "boq": {
            "road_area_m2": o.boq.road_area,
            "road_length_m": o.boq.road_length,
            "items": [{"material_id": i.material_id, "quantity": i.quantity, "unit": i.unit}
                      for i in o.boq.items],
        },
        "impact": {
            "characterised_kgco2e": dict(o.impact.characterised),
            "normalised": dict(o.impact.normalised),
            "weighted_single_score": o.impact.weighted_single_score,
            "embodied_tco2e": o.impact.embodied_total,
            "per_km_tco2e": o.impact.per_km,
        },
    }


def _mapping_of_numbers(d: _Doc, key: str) -> dict[str, float]:
    sub = d.sub(key)
    return {k: sub.num(k) for k in sub.data}


def _outputs_from(d: _Doc) -> DesignOutputs:
    ditches = []
    for i, x in enumerate(d.list("ditches")):
        dd = _Doc(x, d.where, f"{d._name('ditches')}[{i}]")
        ditches.append(Ditch(dd.num("bottom_width_m"), dd.num("side_slope"), dd.num("depth_m"),
                             dd.num("longitudinal_slope"), dd.num("manning_n"), dd.num("capacity_m3s")))
    b = d.sub("boq")
    items = []
    for i, x in enumerate(b.list("items")):
        it = _Doc(x, d.where, f"{b._name('items')}[{i}]")
        items.append(BoqItem(it.str("material_id"), it.num("quantity"), it.str("unit")))
    imp = d.sub("impact")

    impact = ImpactResult(
        characterised=_mapping_of_numbers(imp, "characterised_kgco2e"),
        normalised=_mapping_of_numbers(imp, "normalised"),
        weighted_single_score=imp.num("weighted_single_score"),
        embodied_total=imp.num("embodied_tco2e"),
        per_km=imp.num("per_km_tco2e"),
    )
    return DesignOutputs(
        section=_section_from(d.sub("section")),
        design_alignment=_alignment_from(d.sub("design_alignment")),
        cut_volume=d.num("cut_volume_m3"),
        fill_volume=d.num("fill_volume_m3"),
        max_grade_before=d.num("max_grade_before"),
        max_grade_after=d.num("max_grade_after"),
        slope_reduction=d.num("slope_reduction"),
        mean_abs_grade=d.num("mean_abs_grade"),
        mean_cross_slope=d.num("mean_cross_slope"),
        bend_count=d.int("bend_count"),
        ditches=tuple(ditches),
        ditch_lengths=d.nums("ditch_lengths_m"),
        boq=BillOfQuantities(tuple(items), b.num("road_area_m2"), b.num("road_length_m")),
        impact=impact,
    )


def project_to_dict(record: ProjectRecord, terrain_ref: str | None = None) -> dict:
    """JSON-ready document. The terrain is a file reference when ``terrain_ref`` is given."""
    if terrain_ref is None:
        t = record.terrain
        terrain = {"origin": list(t.origin), "cell_size": t.cell_size,
                   "elevations": t.elevations.tolist()}
    else:
        terrain = terrain_ref
    s = record.seasons
    return {
        "project_id": record.project_id,
        "terrain": terrain,
        "alignment": _alignment_doc(record.alignment),
        "soil": {"uscs_class": record.soil.uscs_class, "cbr_base": record.soil.cbr_base},
        "seasons": {
            name: {"duration": getattr(s, name).duration, "cbr_multiplier": getattr(s, name).cbr_multiplier}
            for name in ClimateSeasons.NAMES
        },
        "traffic": {"annual_esal": record.traffic.annual_esal, "design_life": record.traffic.design_life},
        "flood": {"risk_class": record.flood.risk_class, "freeboard_m": record.flood.freeboard},
        "catchments": [
            {"area_ha": c.area, "runoff_coefficient": c.runoff_coefficient,
             "rainfall_intensity_mmh": c.rainfall_intensity}
            for c in record.catchments
        ],
        "drainage_breaks_m": list(record.drainage_breaks),
        "crossing_stations_m": list(record.crossing_stations),
        "max_grade_cap": record.max_grade_cap,
        "ditch_lining": record.ditch_lining,
        "outputs": None if record.outputs is None else _outputs_doc(record.outputs),
        "failure": record.failure,
    }


def project_from_dict(data: Mapping, where: str = "<project>", base_dir: Path | None = None) -> ProjectRecord:
    d = _Doc(data, where, "")
    try:
        t = d.raw("terrain")
        if isinstance(t, str):
            tpath = Path(t)
            if not tpath.is_absolute():
                tpath = (base_dir or Path.cwd()) / tpath
            if not tpath.is_file():
                raise CorpusFormatError(f"{where}: field 'terrain': file not found: {tpath}")
            terrain = read_terrain_csv(tpath)
        else:
            td = d.sub("terrain")
            origin = td.nums("origin")
            terrain = TerrainSurface((origin[0], origin[1]), td.num("cell_size"),
                                     np.array(td.list("elevations"), dtype=float))
        sd = d.sub("seasons")
        seasons = ClimateSeasons(*(
            Season(sd.sub(n).num("duration"), sd.sub(n).num("cbr_multiplier")) for n in ClimateSeasons.NAMES
        ))
        soil = d.sub("soil")
        traffic = d.sub("traffic")
        flood = d.sub("flood")
        catchments = []
        for i, c in enumerate(d.list("catchments")):
            cd = _Doc(c, where, f"catchments[{i}]")
            catchments.append(Catchment(cd.num("area_ha"), cd.num("runoff_coefficient"),
                                        cd.num("rainfall_intensity_mmh")))
        outputs = d.raw("outputs", None)
        return ProjectRecord(
            project_id=d.str("project_id"),
            terrain=terrain,
            alignment=_alignment_from(d.sub("alignment")),
            soil=SoilProfile(soil.str("uscs_class"), soil.num("cbr_base")),
            seasons=seasons,
            traffic=TrafficDemand(traffic.num("annual_esal"), traffic.int("design_life")),
            flood=FloodRisk(flood.str("risk_class"), flood.num("freeboard_m")),
            catchments=tuple(catchments),
            drainage_breaks=d.nums("drainage_breaks_m"),
            crossing_stations=d.nums("crossing_stations_m"),
            max_grade_cap=d.num("max_grade_cap"),
            ditch_lining=d.str("ditch_lining"),
            outputs=None if outputs is None else _outputs_from(d.sub("outputs")),
            failure=d.str("failure", None),
        )
    except CorpusFormatError:
        raise
    except (RoadCarbonError, ValueError, TypeError) as exc:
        raise CorpusFormatError(f"{where}: {exc}") from None


def _dump(doc) -> str:
    return json.dumps(doc, indent=1) + "\n"


def save_project(record: ProjectRecord, path: str | Path) -> None:
    """Write ``<path>`` plus a sibling ``<stem>.terrain.csv`` grid file."""
    path = Path(path)
    tname = f"{path.stem}.terrain.csv"
    write_terrain_csv(record.terrain, path.parent / tname)
    path.write_text(_dump(project_to_dict(record, tname)))


def load_project(path: str | Path) -> ProjectRecord:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return project_from_dict(data, str(path), path.parent)


MANIFEST = "manifest.json"


def save_corpus(records: Sequence[ProjectRecord], directory: str | Path) -> Path:
    """One JSON document (and terrain grid) per project plus ``manifest.json``."""
    directory = Path(directory)
    (directory / "projects").mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in records:
        rel = f"projects/{rec.project_id}.json"
        save_project(rec, directory / rel)
        status = "failed" if rec.failure else ("completed" if rec.outputs else "inputs")
        entries.append({"project_id": rec.project_id, "file": rel, "status": status})
    manifest = {"format": "roadcarbon-corpus", "version": 1, "count": len(entries), "projects": entries}
    (directory / MANIFEST).write_text(_dump(manifest))
    return directory / MANIFEST


def load_corpus(directory: str | Path) -> list[ProjectRecord]:
    directory = Path(directory)
    mpath = directory / MANIFEST
    if not mpath.is_file():
        raise FileNotFoundError(f"file not found: {mpath}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{mpath}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    m = _Doc(manifest, str(mpath), "")
    out = []
    for i, entry in enumerate(m.list("projects")):
        e = _Doc(entry, str(mpath), f"projects[{i}]")
        out.append(load_project(directory / e.str("file")))
    return out
