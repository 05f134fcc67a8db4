"""
Aggregate-surfaced pavement design.

Subgrade stiffness comes from CBR through the power law
``M_R = 17.6 * CBR**0.64`` (MPa, CBR in percent), evaluated per moisture
season. The base layer modulus is ``E_BS = k * M_R`` with
``k = 0.2 * h**0.45`` (h in mm) held inside [2, 4]. Thickness is chosen by
scanning a fixed grid and accumulating seasonal damage with Miner's rule
against an allowable-load model; the aggregate loss allowance is added on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

from .errors import DomainError, InfeasibleDesignError

__all__ = [
    "USCS_CLASSES",
    "PSI_TO_MPA",
    "Season",
    "ClimateSeasons",
    "SoilProfile",
    "TrafficDemand",
    "DesignConstants",
    "DamageModel",
    "PowerLawDamageModel",
    "BaseFactor",
    "PavementSection",
    "resilient_modulus",
    "seasonal_moduli",
    "base_modulus_factor",
    "base_modulus",
    "seasonal_damage",
    "seasonal_damage_terms",
    "thickness_grid",
    "design_thickness",
]

USCS_CLASSES = (
    "GW", "GP", "GM", "GC", "SW", "SP", "SM", "SC",
    "ML", "CL", "OL", "MH", "CH", "OH", "PT",
)

PSI_TO_MPA = 0.00689476

K_MIN = 2.0
K_MAX = 4.0


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Season:
    duration: float
    cbr_multiplier: float


@dataclass(frozen=True)
class ClimateSeasons:
    """Four moisture seasons: frozen winter, saturated thaw, wet spring/fall, dry summer."""

    frozen: Season = Season(0.25, 2.0)
    saturated: Season = Season(0.10, 0.5)
    wet: Season = Season(0.30, 0.75)
    dry: Season = Season(0.35, 1.0)

    NAMES = ("frozen", "saturated", "wet", "dry")

    def __post_init__(self):
        seasons = self.as_tuple()
        total = sum(s.duration for s in seasons)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"season durations sum to {total}, expected 1")
        if any(s.duration < 0 for s in seasons):
            raise DomainError("season durations must be non-negative")
        if any(not s.cbr_multiplier > 0 for s in seasons):
            raise DomainError("CBR multipliers must be positive")
        if not (
            self.saturated.cbr_multiplier <= self.wet.cbr_multiplier <= self.dry.cbr_multiplier
            <= self.frozen.cbr_multiplier
        ):
            raise DomainError(
                "CBR multipliers must satisfy saturated <= wet <= dry <= frozen"
            )

    def as_tuple(self) -> tuple[Season, Season, Season, Season]:
        return (self.frozen, self.saturated, self.wet, self.dry)

    @property
    def durations(self) -> tuple[float, ...]:
        return tuple(s.duration for s in self.as_tuple())

    @property
    def multipliers(self) -> tuple[float, ...]:
        return tuple(s.cbr_multiplier for s in self.as_tuple())

    @classmethod
    def uniform(cls, multiplier: float, durations: Sequence[float] = (0.25, 0.10, 0.30, 0.35)):
        return cls(*(Season(d, multiplier) for d in durations))


@dataclass(frozen=True)
class SoilProfile:
    uscs_class: str
    cbr_base: float

    def __post_init__(self):
        if self.uscs_class not in USCS_CLASSES:
            raise DomainError(f"unknown USCS group {self.uscs_class!r}")
        if not 0 < self.cbr_base <= 100:
            raise DomainError(f"cbr_base must be in (0, 100], got {self.cbr_base}")


@dataclass(frozen=True)
class TrafficDemand:
    annual_esal: float
    design_life: int = 30

    def __post_init__(self):
        if not self.annual_esal >= 0:
            raise DomainError(f"annual_esal must be >= 0, got {self.annual_esal}")
        if int(self.design_life) != self.design_life or self.design_life < 1:
            raise DomainError(f"design_life must be a positive integer, got {self.design_life}")

    @property
    def total_esal(self) -> float:
        return self.annual_esal * self.design_life


@dataclass(frozen=True)
class DesignConstants:
    serviceability_loss: float = 3.0
    allowable_rut_depth: float = 50.8  # mm (2 in)
    aggregate_loss: float = 3.5  # mm (0.35 cm)
    target_base_modulus_psi: float = 30_000.0
    min_thickness: float = 100.0
    max_thickness: float = 1000.0
    thickness_step: float = 10.0

    def __post_init__(self):
        if self.aggregate_loss < 0:
            raise DomainError("aggregate_loss must be >= 0")
        if not 0 < self.min_thickness <= self.max_thickness:
            raise DomainError("thickness range must satisfy 0 < min <= max")
        if not self.thickness_step > 0:
            raise DomainError("thickness_step must be positive")

    @property
    def target_base_modulus_mpa(self) -> float:
        return self.target_base_modulus_psi * PSI_TO_MPA


class DamageModel(Protocol):
    """Allowable-load relation consumed by Miner's-rule damage accumulation."""

    def allowable_esal(
        self, subgrade_modulus: float, thickness: float, constants: DesignConstants
    ) -> float: ...

    def effective_modulus(
        self, moduli: Sequence[float], durations: Sequence[float]
    ) -> float: ...


@dataclass(frozen=True)
class PowerLawDamageModel:
    """W = w0 * (M_R / m_ref)**a * (h / h_ref)**b.

    A monotone stand-in for chart-based design; it ignores the serviceability
    and rutting constants it is handed.
    """

    w0: float = 5.0e4
    m_ref: float = 30.0
    h_ref: float = 150.0
    a: float = 3.0
    b: float = 2.0

    def __post_init__(self):
        if not (self.w0 > 0 and self.m_ref > 0 and self.h_ref > 0):
            raise DomainError("w0, m_ref and h_ref must be positive")
        if self.a < 0 or self.b < 0:
            raise DomainError("exponents must be non-negative")

    def allowable_esal(self, subgrade_modulus, thickness, constants=None):
        return self.w0 * (subgrade_modulus / self.m_ref) ** self.a * (thickness / self.h_ref) ** self.b

    def effective_modulus(self, moduli, durations):
        # modulus producing the same duration-weighted damage as the seasonal mix
        if self.a == 0:
            return sum(m * d for m, d in zip(moduli, durations))
        rel = sum(d * m ** (-self.a) for m, d in zip(moduli, durations))
        return rel ** (-1.0 / self.a)


class BaseFactor(NamedTuple):
    k: float
    raw: float
    clamped: bool


@dataclass(frozen=True)
class PavementSection:
    base_thickness: float  # mm, includes aggregate loss allowance
    base_modulus: float  # MPa
    seasonal_subgrade_moduli: tuple[float, float, float, float]
    total_damage: float
    aggregate_loss_allowance: float = 3.5
    structural_thickness: float = field(default=0.0)
    effective_subgrade_modulus: float = 0.0
    k_clamped: bool = False

    def __post_init__(self):
        if not self.base_thickness > 0:
            raise DomainError(f"base_thickness must be positive, got {self.base_thickness}")
        if self.total_damage > 1 + 1e-9:
            raise DomainError(f"total_damage {self.total_damage} exceeds 1")

    @property
    def base_thickness_m(self) -> float:
        return self.base_thickness / 1000.0


# ---------------------------------------------------------------------------
# moduli
# ---------------------------------------------------------------------------

def resilient_modulus(cbr: float) -> float:
    """Subgrade resilient modulus in MPa for a CBR in percent."""
    if not cbr > 0:
        raise DomainError(f"CBR must be positive, got {cbr}")
    return 17.6 * cbr**0.64


def seasonal_moduli(soil: SoilProfile, seasons: ClimateSeasons) -> tuple[float, float, float, float]:
    """Moduli in season order frozen, saturated, wet, dry."""
    return tuple(resilient_modulus(soil.cbr_base * m) for m in seasons.multipliers)


def base_modulus_factor(h_bs: float) -> BaseFactor:
    if not h_bs > 0:
        raise DomainError(f"base thickness must be positive, got {h_bs}")
    raw = 0.2 * h_bs**0.45
    k = min(max(raw, K_MIN), K_MAX)
    return BaseFactor(k, raw, k != raw)


def base_modulus(h_bs: float, subgrade_mr: float) -> float:
    if not subgrade_mr > 0:
        raise DomainError(f"subgrade modulus must be positive, got {subgrade_mr}")
    return base_modulus_factor(h_bs).k * subgrade_mr


# ---------------------------------------------------------------------------
# damage and thickness
# ---------------------------------------------------------------------------

def seasonal_damage_terms(
    thickness: float,
    soil: SoilProfile,
    seasons: ClimateSeasons,
    traffic: TrafficDemand,
    model: DamageModel,
    constants: DesignConstants | None = None,
) -> tuple[float, float, float, float]:
    if not thickness > 0:
        raise DomainError(f"thickness must be positive, got {thickness}")
    constants = constants or DesignConstants()
    terms = []
    for mr, frac in zip(seasonal_moduli(soil, seasons), seasons.durations):
        applied = traffic.total_esal * frac
        allowed = model.allowable_esal(mr, thickness, constants)
        if not allowed > 0:
            raise InfeasibleDesignError(
                f"damage model returned non-positive allowable load {allowed}",
                subgrade_modulus=mr,
                thickness=thickness,
            )
        terms.append(applied / allowed)
    return tuple(terms)


def seasonal_damage(
    thickness: float,
    soil: SoilProfile,
    seasons: ClimateSeasons,
    traffic: TrafficDemand,
    model: DamageModel,
    constants: DesignConstants | None = None,
) -> float:
    """Miner's-rule damage over the design life, traffic split by season length."""
    return math.fsum(seasonal_damage_terms(thickness, soil, seasons, traffic, model, constants))


def thickness_grid(constants: DesignConstants) -> list[float]:
    n = int(math.floor((constants.max_thickness - constants.min_thickness) / constants.thickness_step + 1e-9))
    return [constants.min_thickness + i * constants.thickness_step for i in range(n + 1)]


def design_thickness(
    soil: SoilProfile,
    seasons: ClimateSeasons,
    traffic: TrafficDemand,
    constants: DesignConstants | None = None,
    model: DamageModel | None = None,
) -> PavementSection:
    """Thinnest grid thickness with damage <= 1, plus the aggregate loss allowance.

    Raises:
        InfeasibleDesignError: when even the thickest grid value fails; the
            error carries ``damage_at_max``.
    """
    constants = constants or DesignConstants()
    model = model or PowerLawDamageModel()
    moduli = seasonal_moduli(soil, seasons)
    damage = None
    for h in thickness_grid(constants):
        damage = seasonal_damage(h, soil, seasons, traffic, model, constants)
        if damage <= 1.0:
            break
    else:
        raise InfeasibleDesignError(
            f"no thickness up to {constants.max_thickness} mm keeps damage <= 1 "
            f"(damage at max = {damage:.4g})",
            damage_at_max=damage,
        )
    total = h + constants.aggregate_loss
    m_eff = model.effective_modulus(moduli, seasons.durations)
    factor = base_modulus_factor(total)
    return PavementSection(
        base_thickness=total,
        base_modulus=factor.k * m_eff,
        seasonal_subgrade_moduli=moduli,
        total_damage=damage,
        aggregate_loss_allowance=constants.aggregate_loss,
        structural_thickness=h,
        effective_subgrade_modulus=m_eff,
        k_clamped=factor.clamped,
    )
