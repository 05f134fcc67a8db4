from __future__ import annotations

import numpy as np
import pytest

from roadcarbon.corpus import ProjectRecord
from roadcarbon.hydrology import Catchment, FloodPolicy
from roadcarbon.pavement import ClimateSeasons, SoilProfile, TrafficDemand
from roadcarbon.terrain import Alignment, TerrainSurface


def flat_surface(z=0.0, nx=30, ny=12, cell=10.0, origin=(-50.0, -60.0)) -> TerrainSurface:
    return TerrainSurface(origin, cell, np.full((ny, nx), float(z)))


def plane_surface(ax=0.0, ay=0.0, c=0.0, nx=30, ny=12, cell=10.0, origin=(-50.0, -60.0)) -> TerrainSurface:
    xs = origin[0] + cell * np.arange(nx)
    ys = origin[1] + cell * np.arange(ny)
    return TerrainSurface(origin, cell, c + ax * xs[None, :] + ay * ys[:, None])


def straight(length=100.0, width=4.0, z0=0.0, z1=None, n=2) -> Alignment:
    z1 = z0 if z1 is None else z1
    xs = np.linspace(0.0, length, n)
    zs = np.linspace(z0, z1, n)
    return Alignment(tuple((float(x), 0.0) for x in xs), width, tuple(float(z) for z in zs))


def trivial_record(length=1000.0, width=4.0, lining="concrete", z1=0.0, cap=0.10) -> ProjectRecord:
    terrain = flat_surface(nx=int(length / 10) + 6, ny=6, cell=10.0, origin=(-20.0, -25.0))
    return ProjectRecord(
        project_id="T1",
        terrain=terrain,
        alignment=straight(length, width, 0.0, z1, n=11),
        soil=SoilProfile("GW", 50.0),
        seasons=ClimateSeasons(),
        traffic=TrafficDemand(0.0, 20),
        flood=FloodPolicy().risk("low"),
        catchments=(Catchment(1.5, 0.5, 60.0),),
        drainage_breaks=(0.0, length),
        max_grade_cap=cap,
        ditch_lining=lining,
    )


@pytest.fixture
def flat():
    return flat_surface()


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
