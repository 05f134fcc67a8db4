"""Engine settings and the JSON run-configuration file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, RoadCarbonError
from .hydrology import DitchLining, DitchTemplate, FloodPolicy
from .lca import FactorDatabase, load_demo_factors, load_factors
from .pavement import DesignConstants, PowerLawDamageModel
from .quantities import DrainageFactors, EarthworksFactors

__all__ = ["EngineConfig", "RunConfig", "load_run_config"]

DEFAULT_MANNING_N = {
    DitchLining.UNLINED.value: 0.025,
    DitchLining.CONCRETE.value: 0.013,
    DitchLining.RIPRAP.value: 0.035,
}


@dataclass(frozen=True)
class EngineConfig:
    """Everything :func:`roadcarbon.corpus.run_pipeline` needs besides the project itself."""

    constants: DesignConstants = DesignConstants()
    damage_model: PowerLawDamageModel = PowerLawDamageModel()
    flood_policy: FloodPolicy = field(default_factory=FloodPolicy)
    earthworks: EarthworksFactors = EarthworksFactors()
    drainage: DrainageFactors = DrainageFactors()
    ditch_template: DitchTemplate = DitchTemplate()
    manning_n: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MANNING_N))
    min_ditch_slope: float = 0.005
    section_spacing: float = 10.0
    offset_step: float = 0.5
    shoulder: float = 1.0
    factors_path: str | None = None
    references: Mapping[str, float] = field(default_factory=lambda: {"GWP": 1.0})
    weights: Mapping[str, float] = field(default_factory=lambda: {"GWP": 1.0})

    def __post_init__(self):
        if not (self.section_spacing > 0 and self.offset_step > 0):
            raise ConfigError("section_spacing and offset_step must be positive")
        if self.shoulder < 0:
            raise ConfigError("shoulder must be >= 0")
        if not self.min_ditch_slope > 0:
            raise ConfigError("min_ditch_slope must be positive")
        if set(self.manning_n) != {l.value for l in DitchLining}:
            raise ConfigError("manning_n must give a value for every lining type")

    @cached_property
    def factor_db(self) -> FactorDatabase:
        if self.factors_path is None:
            return load_demo_factors()
        return load_factors(self.factors_path)


@dataclass(frozen=True)
class RunConfig:
    engine: EngineConfig = field(default_factory=EngineConfig)
    generator: Any = None  # GeneratorConfig; filled in lazily to avoid an import cycle
    plan: Any = None  # AnalysisPlan
    seed: int | None = None
    corpus_dir: str | None = None
    output_dir: str | None = None

    def __post_init__(self):
        from .corpus import GeneratorConfig
        from .stats import AnalysisPlan

        if self.generator is None:
            object.__setattr__(self, "generator", GeneratorConfig())
        if self.plan is None:
            object.__setattr__(self, "plan", AnalysisPlan())
        if self.seed is not None:
            object.__setattr__(self, "generator", replace(self.generator, seed=int(self.seed)))


def _build(cls, data: Mapping[str, Any], where: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**kw)
    except (TypeError, RoadCarbonError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _resolve(base: Path, p: str | None) -> str | None:
    if p is None:
        return None
    path = Path(p)
    return str(path if path.is_absolute() else (base / path))


def load_run_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a JSON run configuration; ``overrides`` (from CLI flags) win.

    Sections: ``paths``, ``seed``, ``pavement`` (``constants``,
    ``damage_model``), ``hydrology``, ``earthworks``, ``drainage``,
    ``geometry``, ``lca``, ``generator``, ``analysis``.
    """
    from .corpus import GeneratorConfig
    from .stats import AnalysisPlan

    doc: dict[str, Any] = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        base = path.parent
    allowed = {"paths", "seed", "pavement", "hydrology", "earthworks", "drainage", "geometry",
               "lca", "generator", "analysis"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    paths = dict(doc.get("paths", {}))
    bad = set(paths) - {"factors", "corpus_dir", "output_dir"}
    if bad:
        raise ConfigError(f"paths: unknown keys {sorted(bad)}")
    overrides = dict(overrides or {})
    for key in ("factors", "corpus_dir", "output_dir"):
        if overrides.get(key) is not None:
            paths[key] = str(overrides[key])
        elif paths.get(key) is not None:
            paths[key] = _resolve(base, paths[key])
    if paths.get("factors") and not Path(paths["factors"]).is_file():
        raise ConfigError(f"factor table not found: {paths['factors']}")

    pav = doc.get("pavement", {})
    constants = _build(DesignConstants, pav.get("constants", {}), "pavement.constants")
    model = _build(PowerLawDamageModel, pav.get("damage_model", {}), "pavement.damage_model")
    hyd = dict(doc.get("hydrology", {}))
    policy_kw = {k: hyd.pop(k) for k in ("freeboards", "crossing_window") if k in hyd}
    policy = _build(FloodPolicy, policy_kw, "hydrology")
    template = _build(DitchTemplate, hyd.pop("ditch_template", {}), "hydrology.ditch_template")
    engine_kw: dict[str, Any] = {}
    for k in ("manning_n", "min_ditch_slope"):
        if k in hyd:
            engine_kw[k] = hyd.pop(k)
    if hyd:
        raise ConfigError(f"hydrology: unknown keys {sorted(hyd)}")
    geometry = dict(doc.get("geometry", {}))
    bad = set(geometry) - {"section_spacing", "offset_step", "shoulder"}
    if bad:
        raise ConfigError(f"geometry: unknown keys {sorted(bad)}")
    engine_kw.update(geometry)
    lca = dict(doc.get("lca", {}))
    bad = set(lca) - {"references", "weights"}
    if bad:
        raise ConfigError(f"lca: unknown keys {sorted(bad)}")
    engine_kw.update(lca)
    try:
        engine = EngineConfig(
            constants=constants,
            damage_model=model,
            flood_policy=policy,
            earthworks=_build(EarthworksFactors, doc.get("earthworks", {}), "earthworks"),
            drainage=_build(DrainageFactors, doc.get("drainage", {}), "drainage"),
            ditch_template=template,
            factors_path=paths.get("factors"),
            **engine_kw,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    gen_doc = dict(doc.get("generator", {}))
    generator = GeneratorConfig.from_dict(gen_doc) if gen_doc else GeneratorConfig()
    plan = _build(AnalysisPlan, doc.get("analysis", {}), "analysis")
    seed = overrides.get("seed", doc.get("seed"))
    return RunConfig(
        engine=engine,
        generator=generator,
        plan=plan,
        seed=seed,
        corpus_dir=paths.get("corpus_dir"),
        output_dir=paths.get("output_dir"),
    )
