"""Activator dosing, water demand, mix tables and activator costing.

Solid activators generate NaOH in situ through the ion exchange
Ca(OH)2 + Na2CO3 -> CaCO3 + 2 NaOH, so a target of t % equivalent NaOH
(by binder mass) needs 74/80 t % hydrated lime and 106/80 t % soda ash.
"""

from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateId, MissingUnitCost, NegativeDosage, ValidationError
from .materials import Registry

M_CAOH2 = 74.0
M_NA2CO3 = 106.0
M_2NAOH = 80.0
M_CACO3 = 100.0

HL_PER_NAOH = M_CAOH2 / M_2NAOH      # 0.925
SA_PER_NAOH = M_NA2CO3 / M_2NAOH     # 1.325

_TOL = 1e-9


class MixMode(str, enum.Enum):
    SOLID = "solid_activators"
    CONTROL = "control_naoh_solution"
    PREMIXED = "premixed_soda_ash"

    @classmethod
    def parse(cls, value: "str | MixMode") -> "MixMode":
        if isinstance(value, cls):
            return value
        aliases = {"solid": cls.SOLID, "control": cls.CONTROL, "c": cls.CONTROL,
                   "premixed": cls.PREMIXED, "pm": cls.PREMIXED}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)

    @property
    def suffix(self) -> str:
        return {MixMode.SOLID: "", MixMode.CONTROL: "_C", MixMode.PREMIXED: "_PM"}[self]


class Pricing(str, enum.Enum):
    """Activator price sets of the cost comparison."""

    INDUSTRIAL = "industrial"           # industrial HL + SA, solid or premixed
    CONTROL = "control"                 # analytical NaOH pellets in water
    ANALYTICAL = "analytical_powder"    # analytical Na2CO3 + Ca(OH)2 powders


def activator_dosage(target_naoh: float) -> tuple[float, float]:
    """Hydrated lime and soda ash (% of binder) for a target equivalent NaOH %."""
    if target_naoh < 0:
        raise NegativeDosage(f"target NaOH must be >= 0, got {target_naoh}")
    return HL_PER_NAOH * target_naoh, SA_PER_NAOH * target_naoh


def calcite_fraction(target_naoh: float) -> float:
    """Mass fraction of CaCO3 (per unit binder) released by the ion exchange."""
    if target_naoh < 0:
        raise NegativeDosage(f"target NaOH must be >= 0, got {target_naoh}")
    return target_naoh / 100.0 * M_CACO3 / M_2NAOH


@dataclass(frozen=True)
class MixDesign:
    id: str
    sf_frac: float
    ggbfs_frac: float
    target_naoh: float
    hl_dosage: float
    sa_dosage: float
    w_s: float
    binder_sand: float = 3.0    # sand parts per binder part
    mode: MixMode = MixMode.SOLID

    def __post_init__(self):
        object.__setattr__(self, "mode", MixMode.parse(self.mode))
        if abs(self.sf_frac + self.ggbfs_frac - 100.0) > _TOL:
            raise ValidationError(f"{self.id}: SF + GGBFS must equal 100 %")
        if min(self.sf_frac, self.ggbfs_frac, self.target_naoh,
               self.hl_dosage, self.sa_dosage) < 0:
            raise NegativeDosage(f"{self.id}: negative fraction or dosage")
        if not self.w_s > 0:
            raise ValidationError(f"{self.id}: w/s must be > 0")
        if not self.binder_sand > 0:
            raise ValidationError(f"{self.id}: sand/binder ratio must be > 0")
        if self.mode is MixMode.SOLID:
            hl, sa = activator_dosage(self.target_naoh)
            if abs(self.hl_dosage - hl) > _TOL or abs(self.sa_dosage - sa) > _TOL:
                raise ValidationError(
                    f"{self.id}: solid-mode dosages must follow the ion-exchange stoichiometry")
        elif self.mode is MixMode.CONTROL and (self.hl_dosage or self.sa_dosage):
            raise ValidationError(f"{self.id}: control mixes carry no HL/SA")

    @classmethod
    def create(cls, sf_frac: float, target_naoh: float, w_s: float,
               mode: "MixMode | str" = MixMode.SOLID, binder_sand: float = 3.0,
               id: str | None = None) -> "MixDesign":
        mode = MixMode.parse(mode)
        hl, sa = activator_dosage(target_naoh)
        if mode is MixMode.CONTROL:
            hl = sa = 0.0
        return cls(
            id=id or mix_id(sf_frac, target_naoh, mode),
            sf_frac=sf_frac,
            ggbfs_frac=100.0 - sf_frac,
            target_naoh=target_naoh,
            hl_dosage=hl,
            sa_dosage=sa,
            w_s=w_s,
            binder_sand=binder_sand,
            mode=mode,
        )

    @property
    def solids_factor(self) -> float:
        """Total solids per unit binder mass for the water/solids ratio."""
        if self.mode is MixMode.CONTROL:
            return 1.0   # NaOH arrives pre-dissolved
        return 1.0 + (self.hl_dosage + self.sa_dosage) / 100.0

    @property
    def water_binder(self) -> float:
        return self.w_s * self.solids_factor

    def parts(self) -> dict[str, float]:
        """Material parts per 100 binder parts, keyed by registry id."""
        p = {"GGBFS": self.ggbfs_frac, "SF": self.sf_frac}
        if self.mode is MixMode.CONTROL:
            p["NaOH_AR"] = self.target_naoh
        else:
            p["HL"] = self.hl_dosage
            p["SA"] = self.sa_dosage
        return p


def _fmt_num(x: float) -> str:
    return f"{x:g}"


def mix_id(sf_frac: float, target_naoh: float, mode: "MixMode | str" = MixMode.SOLID) -> str:
    return f"SF{_fmt_num(sf_frac)}NH{_fmt_num(target_naoh)}{MixMode.parse(mode).suffix}"


_ID_RE = re.compile(r"^SF(?P<sf>\d+(?:\.\d+)?)NH(?P<nh>\d+(?:\.\d+)?)(?P<sfx>_C|_PM)?$")


def parse_mix_id(mid: str) -> tuple[float, float, MixMode]:
    """Inverse of :func:`mix_id`: ``"SF10NH8_C"`` -> (10.0, 8.0, CONTROL)."""
    m = _ID_RE.match(mid.strip())
    if not m:
        raise ValidationError(f"not a mix id: {mid!r}")
    mode = {None: MixMode.SOLID, "_C": MixMode.CONTROL, "_PM": MixMode.PREMIXED}[m["sfx"]]
    return float(m["sf"]), float(m["nh"]), mode


def water_mass(design: MixDesign, binder_mass: float) -> float:
    """Mixing water (kg) for ``binder_mass`` kg of GGBFS + SF."""
    if not binder_mass > 0:
        raise ValidationError(f"binder mass must be > 0, got {binder_mass}")
    return design.w_s * binder_mass * design.solids_factor


def build_mix_table(sf_fracs: Sequence[float], targets: Sequence[float],
                    w_s: Sequence[float], modes: Sequence["MixMode | str"],
                    binder_sand: float = 3.0) -> list[MixDesign]:
    """Cartesian product of the inputs, ordered target-major like the lab table.

    When more than one w/s is requested the ratio is appended to the id
    (``SF10NH8@0.45``) so ids stay unique.
    """
    for name, seq in (("sf_fracs", sf_fracs), ("targets", targets),
                      ("w_s", w_s), ("modes", modes)):
        if not len(seq):
            raise ValidationError(f"{name} must be non-empty")
    modes = [MixMode.parse(m) for m in modes]
    out: list[MixDesign] = []
    seen: set[str] = set()
    for mode, t, sf, ws in itertools.product(modes, targets, sf_fracs, w_s):
        mid = mix_id(sf, t, mode)
        if len(w_s) > 1:
            mid = f"{mid}@{_fmt_num(ws)}"
        if mid in seen:
            raise DuplicateId(f"mix id {mid!r} generated twice")
        seen.add(mid)
        out.append(MixDesign.create(sf, t, ws, mode, binder_sand, id=mid))
    return out


MIX_TABLE_COLUMNS = ("mix_type", "mix_id", "sf_pct", "ggbfs_pct", "target_naoh_pct",
                     "hl_pct", "sa_pct", "w_s")

_MODE_LABEL = {
    MixMode.SOLID: "solid activators",
    MixMode.CONTROL: "control NaOH solution",
    MixMode.PREMIXED: "pre-mixed soda ash in water",
}


def mix_table_rows(designs: Iterable[MixDesign], digits: int = 2) -> list[dict[str, str]]:
    """Rows laid out like the published mix-proportion table ("-" where not dosed)."""
    rows = []
    for d in designs:
        dosed = d.mode is not MixMode.CONTROL
        rows.append({
            "mix_type": _MODE_LABEL[d.mode],
            "mix_id": d.id,
            "sf_pct": _fmt_num(d.sf_frac),
            "ggbfs_pct": _fmt_num(d.ggbfs_frac),
            "target_naoh_pct": "-" if d.mode is MixMode.PREMIXED else _fmt_num(d.target_naoh),
            "hl_pct": f"{d.hl_dosage:.{digits}f}" if dosed else "-",
            "sa_pct": f"{d.sa_dosage:.{digits}f}" if dosed else "-",
            "w_s": _fmt_num(d.w_s),
        })
    return rows


# -- costing ---------------------------------------------------------------

@dataclass(frozen=True)
class CostLine:
    material_id: str
    dosage_pct: float
    unit_cost: float
    cost_per_m3: float


@dataclass(frozen=True)
class CostBreakdown:
    design_id: str
    pricing: Pricing
    binder_mass: float
    lines: tuple[CostLine, ...] = field(default_factory=tuple)

    @property
    def total(self) -> float:
        return math.fsum(line.cost_per_m3 for line in self.lines)

    def as_dict(self) -> dict:
        return {
            "design_id": self.design_id,
            "pricing": self.pricing.value,
            "binder_mass_kg_m3": self.binder_mass,
            "lines": [vars(line).copy() for line in self.lines],
            "total_per_m3": self.total,
        }


# Registry ids carrying each price set.
PRICE_SETS: Mapping[Pricing, tuple[str, str]] = {
    Pricing.INDUSTRIAL: ("HL", "SA"),
    Pricing.ANALYTICAL: ("CaOH2_AR", "Na2CO3_AR"),
}


def default_pricing(mode: "MixMode | str") -> Pricing:
    return Pricing.CONTROL if MixMode.parse(mode) is MixMode.CONTROL else Pricing.INDUSTRIAL


def activator_cost(design: MixDesign, registry: Registry, binder_mass: float,
                   pricing: "Pricing | str | None" = None) -> CostBreakdown:
    """Activator cost per m3 of mix containing ``binder_mass`` kg of binder."""
    if binder_mass < 0:
        raise ValidationError(f"binder mass must be >= 0, got {binder_mass}")
    pricing = default_pricing(design.mode) if pricing is None else Pricing(pricing)

    if pricing is Pricing.CONTROL:
        doses = [("NaOH_AR", design.target_naoh)]
    else:
        hl, sa = (design.hl_dosage, design.sa_dosage)
        if design.mode is MixMode.CONTROL:
            hl, sa = activator_dosage(design.target_naoh)
        hl_id, sa_id = PRICE_SETS[pricing]
        doses = [(hl_id, hl), (sa_id, sa)]

    lines = []
    for mid, dose in doses:
        try:
            unit = registry[mid].unit_cost
        except KeyError:
            raise MissingUnitCost(mid) from None
        if unit is None:
            raise MissingUnitCost(mid)
        lines.append(CostLine(mid, dose, unit, binder_mass * dose / 100.0 * unit))
    return CostBreakdown(design.id, pricing, binder_mass, tuple(lines))
