"""
Existing-ground surfaces and the geometry cut across them.

The ground is a regular elevation grid with bilinear interpolation. Roads are
polyline alignments carrying a target (design) elevation at each vertex.
Cross sections are taken perpendicular to the centreline, cut and fill areas
are integrated across the section and turned into volumes with the average
end area method.

Grid convention: ``elevations[j, i]`` is the node at
``x = origin[0] + i * cell_size`` and ``y = origin[1] + j * cell_size``; the
array therefore has shape ``(ny, nx)`` and row ``j`` of the CSV grid file is
row ``j`` of the array.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InfeasibleDesignError

__all__ = [
    "TerrainSurface",
    "Alignment",
    "Station",
    "CrossSection",
    "GradeProfile",
    "FlowPaths",
    "GradeCapInfeasible",
    "elevation_at",
    "elevations_at",
    "alignment_length",
    "chainages",
    "sample_alignment",
    "cross_section",
    "cross_sections",
    "cut_fill_volumes",
    "grade_profile",
    "cap_grades",
    "flow_paths",
    "read_terrain_csv",
    "write_terrain_csv",
]

# bounds checks tolerate round-off from the perpendicular construction
_EDGE_TOL = 1e-9

DEFAULT_SPACING = 10.0
DEFAULT_OFFSET_STEP = 0.5


@dataclass(frozen=True, eq=False)
class TerrainSurface:
    origin: tuple[float, float]
    cell_size: float
    elevations: np.ndarray

    def __post_init__(self):
        z = np.array(self.elevations, dtype=float)
        if z.ndim != 2 or z.shape[0] < 2 or z.shape[1] < 2:
            raise DomainError(f"elevation grid must be at least 2x2, got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise DomainError("elevation grid contains non-finite values")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise DomainError(f"cell_size must be positive, got {self.cell_size}")
        z.setflags(write=False)
        object.__setattr__(self, "elevations", z)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def nx(self) -> int:
        return self.elevations.shape[1]

    @property
    def ny(self) -> int:
        return self.elevations.shape[0]

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the node lattice."""
        x0, y0 = self.origin
        return (x0, y0, x0 + (self.nx - 1) * self.cell_size, y0 + (self.ny - 1) * self.cell_size)

    def __eq__(self, other):
        if not isinstance(other, TerrainSurface):
            return NotImplemented
        return (
            self.origin == other.origin
            and self.cell_size == other.cell_size
            and np.array_equal(self.elevations, other.elevations)
        )

    def scaled(self, factor: float) -> "TerrainSurface":
        return TerrainSurface(self.origin, self.cell_size, self.elevations * factor)


@dataclass(frozen=True)
class Alignment:
    vertices: tuple[tuple[float, float], ...]
    width: float
    design_grade: tuple[float, ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        grades = tuple(float(z) for z in self.design_grade)
        if len(verts) < 2:
            raise DomainError("an alignment needs at least two vertices")
        if len(grades) != len(verts):
            raise DomainError(
                f"design_grade has {len(grades)} values for {len(verts)} vertices"
            )
        for a, b in zip(verts[:-1], verts[1:]):
            if a == b:
                raise DomainError(f"consecutive vertices coincide at {a}")
        if not self.width > 0:
            raise DomainError(f"width must be positive, got {self.width}")
        if not all(math.isfinite(v) for p in verts for v in p) or not all(
            math.isfinite(z) for z in grades
        ):
            raise DomainError("alignment coordinates must be finite")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "design_grade", grades)
        object.__setattr__(self, "width", float(self.width))

    @property
    def length(self) -> float:
        return float(chainages(self)[-1])

    def with_grades(self, grades: Sequence[float]) -> "Alignment":
        return replace(self, design_grade=tuple(grades))


@dataclass(frozen=True)
class Station:
    station: float
    x: float
    y: float
    design_elevation: float


@dataclass(frozen=True)
class CrossSection:
    station: float
    ground_profile: tuple[tuple[float, float], ...]
    design_profile: tuple[tuple[float, float], ...]
    cut_area: float
    fill_area: float


@dataclass(frozen=True)
class GradeProfile:
    stations: tuple[float, ...]
    grades: tuple[float, ...]
    max_abs_grade: float


@dataclass(frozen=True, eq=False)
class FlowPaths:
    """D8 routing result.

    ``receivers`` holds, per cell, the flat index (``j * nx + i``) of the
    downstream neighbour or -1 for a sink. ``direction`` uses codes 0-7
    (E, NE, N, NW, W, SW, S, SE with north = +y) and -1 for sinks.
    """

    receivers: np.ndarray
    direction: np.ndarray
    accumulation: np.ndarray

    @property
    def sinks(self) -> np.ndarray:
        return np.flatnonzero(self.receivers.ravel() < 0)


class GradeCapInfeasible(InfeasibleDesignError):
    pass


# ---------------------------------------------------------------------------
# sampling the surface
# ---------------------------------------------------------------------------

def elevations_at(surface: TerrainSurface, x, y) -> np.ndarray:
    """Vectorised bilinear interpolation; raises DomainError when any point is outside."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xmin, ymin, xmax, ymax = surface.bounds
    tol = _EDGE_TOL * max(1.0, surface.cell_size)
    outside = (x < xmin - tol) | (x > xmax + tol) | (y < ymin - tol) | (y > ymax + tol)
    if np.any(outside):
        k = int(np.flatnonzero(outside.ravel())[0])
        raise DomainError(
            f"point ({x.ravel()[k]:.3f}, {y.ravel()[k]:.3f}) lies outside the surface "
            f"[{xmin}, {xmax}] x [{ymin}, {ymax}]"
        )
    u = np.clip((x - xmin) / surface.cell_size, 0.0, surface.nx - 1)
    v = np.clip((y - ymin) / surface.cell_size, 0.0, surface.ny - 1)
    i = np.minimum(np.floor(u).astype(int), surface.nx - 2)
    j = np.minimum(np.floor(v).astype(int), surface.ny - 2)
    fu = u - i
    fv = v - j
    z = surface.elevations
    z00 = z[j, i]
    z10 = z[j, i + 1]
    z01 = z[j + 1, i]
    z11 = z[j + 1, i + 1]
    return (z00 * (1 - fu) + z10 * fu) * (1 - fv) + (z01 * (1 - fu) + z11 * fu) * fv


def elevation_at(surface: TerrainSurface, point: tuple[float, float]) -> float:
    return float(elevations_at(surface, point[0], point[1]))


# ---------------------------------------------------------------------------
# alignment geometry
# ---------------------------------------------------------------------------

def chainages(alignment: Alignment) -> np.ndarray:
    """Cumulative chainage of every vertex, starting at 0."""
    v = np.asarray(alignment.vertices)
    seg = np.hypot(*np.diff(v, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def alignment_length(alignment: Alignment) -> float:
    return float(chainages(alignment)[-1])


def _locate(alignment: Alignment, stations: np.ndarray):
    """Centreline points, unit tangents and design elevations at the given chainages."""
    ch = chainages(alignment)
    total = ch[-1]
    tol = 1e-9 * max(1.0, total)
    if np.any(stations < -tol) or np.any(stations > total + tol):
        raise DomainError(f"station outside alignment [0, {total}]")
    s = np.clip(stations, 0.0, total)
    v = np.asarray(alignment.vertices)
    seg = np.searchsorted(ch, s, side="right") - 1
    seg = np.clip(seg, 0, len(ch) - 2)
    seg_len = ch[seg + 1] - ch[seg]
    t = (s - ch[seg]) / seg_len
    d = v[seg + 1] - v[seg]
    pts = v[seg] + d * t[:, None]
    tangents = d / seg_len[:, None]
    z = np.asarray(alignment.design_grade)
    design = z[seg] + (z[seg + 1] - z[seg]) * t
    return pts, tangents, design


def _station_grid(length: float, spacing: float) -> np.ndarray:
    n = int(math.floor(length / spacing + 1e-9))
    st = spacing * np.arange(n + 1)
    if length - st[-1] > 1e-9 * max(1.0, length):
        st = np.append(st, length)
    else:
        st[-1] = min(st[-1], length)
    return st


def sample_alignment(alignment: Alignment, spacing: float = DEFAULT_SPACING) -> list[Station]:
    """Stations every ``spacing`` metres from the start, always including the end point."""
    if not spacing > 0:
        raise DomainError(f"spacing must be positive, got {spacing}")
    st = _station_grid(alignment.length, spacing)
    pts, _, design = _locate(alignment, st)
    return [
        Station(float(s), float(p[0]), float(p[1]), float(z))
        for s, p, z in zip(st, pts, design)
    ]


# ---------------------------------------------------------------------------
# cross sections and volumes
# ---------------------------------------------------------------------------

def _offsets(half_width: float, step: float) -> np.ndarray:
    n = max(5, int(math.ceil(2 * half_width / step - 1e-9)) + 1)
    return np.linspace(-half_width, half_width, n)


def _cut_fill_areas(offsets: np.ndarray, depth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrate positive (cut) and negative (fill) parts of ``depth`` over offsets.

    ``depth`` is ground minus design, shape (..., n_offsets). Each interval is
    treated as linear, so sign changes are split at the exact zero crossing.
    """
    dx = np.diff(offsets)
    d0 = depth[..., :-1]
    d1 = depth[..., 1:]
    p0, p1 = np.maximum(d0, 0.0), np.maximum(d1, 0.0)
    n0, n1 = np.maximum(-d0, 0.0), np.maximum(-d1, 0.0)
    crossing = d0 * d1 < 0
    span = np.where(crossing, np.abs(d0) + np.abs(d1), 1.0)
    cut = np.where(crossing, (p0 * p0 + p1 * p1) / (2 * span), (p0 + p1) / 2) * dx
    fill = np.where(crossing, (n0 * n0 + n1 * n1) / (2 * span), (n0 + n1) / 2) * dx
    return cut.sum(axis=-1), fill.sum(axis=-1)


def cross_sections(
    surface: TerrainSurface,
    alignment: Alignment,
    stations: Iterable[float],
    half_width: float,
    offset_step: float = DEFAULT_OFFSET_STEP,
) -> list[CrossSection]:
    """Batch form of :func:`cross_section`; all stations share one offset lattice."""
    if not half_width > 0:
        raise DomainError(f"half_width must be positive, got {half_width}")
    if not offset_step > 0:
        raise DomainError(f"offset_step must be positive, got {offset_step}")
    st = np.atleast_1d(np.asarray(list(stations), dtype=float))
    if st.size == 0:
        return []
    pts, tangents, design = _locate(alignment, st)
    normals = np.column_stack([-tangents[:, 1], tangents[:, 0]])
    off = _offsets(half_width, offset_step)
    xs = pts[:, 0, None] + normals[:, 0, None] * off
    ys = pts[:, 1, None] + normals[:, 1, None] * off
    ground = elevations_at(surface, xs, ys)
    cut, fill = _cut_fill_areas(off, ground - design[:, None])
    out = []
    offs = tuple(float(o) for o in off)
    for k in range(st.size):
        out.append(
            CrossSection(
                station=float(st[k]),
                ground_profile=tuple(zip(offs, (float(g) for g in ground[k]))),
                design_profile=tuple((o, float(design[k])) for o in offs),
                cut_area=float(cut[k]),
                fill_area=float(fill[k]),
            )
        )
    return out


def cross_section(
    surface: TerrainSurface,
    alignment: Alignment,
    station: float,
    half_width: float,
    offset_step: float = DEFAULT_OFFSET_STEP,
) -> CrossSection:
    """Section perpendicular to the centreline at ``station``.

    The design profile is level across the section at the design elevation
    of the station. Cut is where ground lies above design, fill where below.
    """
    return cross_sections(surface, alignment, [station], half_width, offset_step)[0]


def cut_fill_volumes(sections: Sequence[CrossSection]) -> tuple[float, float]:
    """Average end area volumes ``(cut, fill)`` in m3."""
    if len(sections) < 2:
        raise DomainError("need at least two cross sections for a volume")
    st = np.array([s.station for s in sections])
    if np.any(np.diff(st) <= 0):
        raise DomainError("cross-section stations must be strictly increasing")
    cut = np.array([s.cut_area for s in sections])
    fill = np.array([s.fill_area for s in sections])
    ds = np.diff(st)
    return (
        float(np.sum((cut[:-1] + cut[1:]) / 2 * ds)),
        float(np.sum((fill[:-1] + fill[1:]) / 2 * ds)),
    )


# ---------------------------------------------------------------------------
# longitudinal grades
# ---------------------------------------------------------------------------

def grade_profile(alignment: Alignment) -> GradeProfile:
    ch = chainages(alignment)
    ds = np.diff(ch)
    if np.any(ds <= 0):
        raise DomainError("zero-length segment in alignment")
    g = np.diff(np.asarray(alignment.design_grade)) / ds
    return GradeProfile(
        stations=tuple(float(s) for s in ch[:-1]),
        grades=tuple(float(x) for x in g),
        max_abs_grade=float(np.max(np.abs(g))),
    )


def cap_grades(alignment: Alignment, max_grade: float, max_sweeps: int = 10_000) -> Alignment:
    """Regrade interior vertices until no segment is steeper than ``max_grade``.

    Each sweep visits interior vertices and moves a vertex only as far as
    needed to bring both adjacent segments inside the cap, toward its
    neighbours (crests come down, sags come up). Endpoints never move.
    Raises :class:`GradeCapInfeasible` when the endpoints alone violate the cap.
    """
    if not 0 < max_grade < 1:
        raise DomainError(f"max_grade must be in (0, 1), got {max_grade}")
    ch = chainages(alignment)
    z = np.array(alignment.design_grade, dtype=float)
    total = ch[-1]
    overall = abs(z[-1] - z[0]) / total
    if overall > max_grade * (1 + 1e-12):
        raise GradeCapInfeasible(
            f"endpoints force an average grade of {overall:.4f} > cap {max_grade:.4f}",
            required_grade=overall,
            max_grade=max_grade,
        )
    ds = np.diff(ch)
    limit = max_grade * ds
    tol = 1e-12 * max(1.0, float(np.max(np.abs(z))))

    def violated() -> bool:
        return bool(np.any(np.abs(np.diff(z)) > limit + tol))

    if not violated():
        return alignment

    n = len(z)
    for _ in range(max_sweeps):
        # forward then backward, so a pinned end can pull its neighbours in
        for order in (range(1, n - 1), range(n - 2, 0, -1)):
            for i in order:
                lo = max(z[i - 1] - limit[i - 1], z[i + 1] - limit[i])
                hi = min(z[i - 1] + limit[i - 1], z[i + 1] + limit[i])
                if lo <= hi:
                    z[i] = min(max(z[i], lo), hi)
                else:
                    # neighbours too far apart for any position; split the excess
                    z[i] = (lo + hi) / 2
        if not violated():
            return alignment.with_grades(z)
    raise GradeCapInfeasible(
        f"grade capping did not converge in {max_sweeps} sweeps", max_grade=max_grade
    )


# ---------------------------------------------------------------------------
# flow routing
# ---------------------------------------------------------------------------

# E, NE, N, NW, W, SW, S, SE
_D8 = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def flow_paths(surface: TerrainSurface) -> FlowPaths:
    """D8 steepest-descent routing and upstream cell counts (self included)."""
    z = surface.elevations
    ny, nx = z.shape
    best_slope = np.zeros((ny, nx))
    direction = np.full((ny, nx), -1, dtype=int)
    padded = np.pad(z, 1, constant_values=np.inf)
    for code, (di, dj) in enumerate(_D8):
        dist = surface.cell_size * (math.sqrt(2.0) if di and dj else 1.0)
        neighbour = padded[1 + dj : 1 + dj + ny, 1 + di : 1 + di + nx]
        slope = (z - neighbour) / dist
        better = slope > best_slope
        best_slope = np.where(better, slope, best_slope)
        direction = np.where(better, code, direction)
    jj, ii = np.indices((ny, nx))
    offs = np.array(_D8 + ((0, 0),))
    step = offs[direction]  # -1 indexes the (0, 0) sentinel
    receivers = np.where(direction >= 0, (jj + step[..., 1]) * nx + (ii + step[..., 0]), -1)

    flat_rec = receivers.ravel()
    acc = np.ones(nx * ny, dtype=np.int64)
    order = np.argsort(-z.ravel(), kind="stable")
    for c in order:
        r = flat_rec[c]
        if r >= 0:
            acc[r] += acc[c]
    return FlowPaths(receivers, direction, acc.reshape(ny, nx))


# ---------------------------------------------------------------------------
# grid files
# ---------------------------------------------------------------------------

def read_terrain_csv(path: str | Path) -> TerrainSurface:
    """Read a grid file: header ``nx,ny,cell_size,origin_x,origin_y`` then ny rows of nx values."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DomainError(f"{path}: empty terrain file")
    head = [h.strip() for h in rows[0]]
    if head != ["nx", "ny", "cell_size", "origin_x", "origin_y"]:
        raise DomainError(f"{path}:1: unexpected header {rows[0]}")
    try:
        nx, ny = int(rows[1][0]), int(rows[1][1])
        cell, ox, oy = float(rows[1][2]), float(rows[1][3]), float(rows[1][4])
    except (IndexError, ValueError) as exc:
        raise DomainError(f"{path}:2: bad grid descriptor ({exc})") from None
    body = rows[2:]
    if len(body) != ny:
        raise DomainError(f"{path}: expected {ny} elevation rows, found {len(body)}")
    grid = np.empty((ny, nx))
    for j, row in enumerate(body):
        if len(row) != nx:
            raise DomainError(f"{path}:{j + 3}: expected {nx} values, found {len(row)}")
        try:
            grid[j] = [float(v) for v in row]
        except ValueError as exc:
            raise DomainError(f"{path}:{j + 3}: {exc}") from None
    return TerrainSurface((ox, oy), cell, grid)


def write_terrain_csv(surface: TerrainSurface, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nx", "ny", "cell_size", "origin_x", "origin_y"])
        w.writerow([surface.nx, surface.ny, repr(surface.cell_size), repr(surface.origin[0]), repr(surface.origin[1])])
        for row in surface.elevations:
            w.writerow([repr(float(v)) for v in row])
