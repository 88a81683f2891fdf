"""Raw-material registry: oxide chemistry, physical data, unit costs and
anhydrous TGA references, plus the two precursor-suitability indices.

Registry files are plain text, one ``[material]`` section per entry::

    # comment
    [material]
    id = GGBFS
    role = precursor
    density_kg_m3 = 2890
    CaO = 43.78
    loi = 2.74
    tga_ref = 10945.2253, 10860.1317, 10708.356
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .errors import RegistryError, ValidationError, ZeroAcidicOxides, ZeroSilica

OXIDES = ("CaO", "SiO2", "Al2O3", "MgO", "MnO", "K2O", "Na2O",
          "Fe2O3", "TiO2", "P2O5", "SO3")

CLOSURE_LIMIT = 105.0     # % oxides + LOI; analytical rounding allowance
TARGET_LIME_SILICA = 1.4  # BS 6699 recommendation for slag precursors
BASICITY_TOL = 1e-9

# Pure Na2CO3 -> Na2O + CO2 gives 41.5 % CO2; used when a file omits soda-ash LOI.
SODA_ASH_DEFAULT_LOI = 41.5


class Role(str, enum.Enum):
    PRECURSOR = "precursor"
    MINERAL_ADDITIVE = "mineral_additive"
    ACTIVATOR = "activator"
    AGGREGATE = "aggregate"


@dataclass(frozen=True)
class OxideComposition:
    """Mass percentages of the oxides plus loss on ignition.

    Missing oxides default to 0 (below detection).
    """

    CaO: float = 0.0
    SiO2: float = 0.0
    Al2O3: float = 0.0
    MgO: float = 0.0
    MnO: float = 0.0
    K2O: float = 0.0
    Na2O: float = 0.0
    Fe2O3: float = 0.0
    TiO2: float = 0.0
    P2O5: float = 0.0
    SO3: float = 0.0
    loi: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValidationError(f"{f.name} is not finite: {v!r}")
            if f.name == "loi":
                if v < 0:
                    raise ValidationError(f"loi must be >= 0, got {v}")
            elif not 0.0 <= v <= 100.0:
                raise ValidationError(f"{f.name} must lie in [0, 100], got {v}")
        if self.total > CLOSURE_LIMIT:
            raise ValidationError(
                f"oxides + LOI sum to {self.total:.2f} % (> {CLOSURE_LIMIT} %)")

    @property
    def total(self) -> float:
        return sum(getattr(self, name) for name in OXIDES) + self.loi

    def scaled(self, k: float) -> "OxideComposition":
        return OxideComposition(**{f.name: getattr(self, f.name) * k for f in fields(self)})


@dataclass(frozen=True)
class AnhydrousTGARef:
    """Masses (ug) of an unreacted raw material at 105, 635 and 1000 degC."""

    w105: float
    w635: float
    w1000: float

    def __post_init__(self):
        if not (self.w105 >= self.w635 >= self.w1000 > 0):
            raise ValidationError(
                "anhydrous TGA reference must satisfy w105 >= w635 >= w1000 > 0, got "
                f"({self.w105}, {self.w635}, {self.w1000})")


@dataclass(frozen=True)
class MaterialSpec:
    id: str
    role: Role
    density: float
    composition: OxideComposition | None = None
    blaine_fineness: float | None = None
    unit_cost: float | None = None
    anhydrous_ref: AnhydrousTGARef | None = None
    description: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValidationError("material id must be non-empty")
        object.__setattr__(self, "role", Role(self.role))
        if not self.density > 0:
            raise ValidationError(f"{self.id}: density must be > 0")
        if self.blaine_fineness is not None and not self.blaine_fineness > 0:
            raise ValidationError(f"{self.id}: blaine fineness must be > 0")
        if self.unit_cost is not None and not self.unit_cost >= 0:
            raise ValidationError(f"{self.id}: unit cost must be >= 0")
        if self.composition is None and self.role is not Role.AGGREGATE:
            raise ValidationError(f"{self.id}: composition required for role {self.role.value}")

    @property
    def loi(self) -> float:
        return self.composition.loi if self.composition is not None else 0.0


@dataclass(frozen=True)
class Registry(Mapping[str, MaterialSpec]):
    """Immutable id -> MaterialSpec mapping."""

    _items: Mapping[str, MaterialSpec] = field(default_factory=dict)
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_items", MappingProxyType(dict(self._items)))

    @classmethod
    def from_materials(cls, materials: Iterable[MaterialSpec], source: str = "") -> "Registry":
        items: dict[str, MaterialSpec] = {}
        for m in materials:
            if m.id in items:
                raise RegistryError(f"duplicate material id {m.id!r}")
            items[m.id] = m
        return cls(items, source)

    def __getitem__(self, key: str) -> MaterialSpec:
        try:
            return self._items[key]
        except KeyError:
            raise KeyError(f"material {key!r} not in registry") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def by_role(self, role: Role | str) -> list[MaterialSpec]:
        role = Role(role)
        return [m for m in self._items.values() if m.role is role]


# -- indices ---------------------------------------------------------------

def modulus_of_basicity(comp: OxideComposition) -> float:
    """(CaO + MgO) / (SiO2 + Al2O3)."""
    acidic = comp.SiO2 + comp.Al2O3
    if acidic <= 0:
        raise ZeroAcidicOxides("SiO2 + Al2O3 is zero; modulus of basicity undefined")
    return (comp.CaO + comp.MgO) / acidic


def lime_silica_ratio(comp: OxideComposition) -> float:
    if comp.SiO2 <= 0:
        raise ZeroSilica("SiO2 is zero; CaO/SiO2 undefined")
    return comp.CaO / comp.SiO2


@dataclass(frozen=True)
class PrecursorVerdict:
    suitable: bool
    basicity: float
    lime_silica: float
    notes: tuple[str, ...] = ()

    @property
    def verdict(self) -> str:
        return "suitable" if self.suitable else "unsuitable"


def precursor_check(comp: OxideComposition) -> PrecursorVerdict:
    """Neutral (B = 1) or basic (B > 1) slags qualify for alkali activation."""
    b = modulus_of_basicity(comp)
    cs = lime_silica_ratio(comp)
    notes = []
    suitable = b - 1.0 >= -BASICITY_TOL
    if not suitable:
        notes.append(f"acidic slag: B = {b:.3f} < 1")
    if cs < TARGET_LIME_SILICA:
        notes.append(f"CaO/SiO2 = {cs:.2f} below recommended {TARGET_LIME_SILICA}")
    return PrecursorVerdict(suitable, b, cs, tuple(notes))


# -- registry file I/O -----------------------------------------------------

_SCALAR_KEYS = {"id", "role", "density_kg_m3", "blaine_m2_kg", "unit_cost_per_kg",
                "loi", "tga_ref", "description"}


def _sections(lines: Iterable[str], origin: str) -> Iterator[tuple[int, dict[str, str]]]:
    current: dict[str, str] | None = None
    start = 0
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            if current is not None:
                yield start, current
            if line[1:-1].strip() != "material":
                raise RegistryError(f"{origin}:{lineno}: unknown section {line}")
            current, start = {}, lineno
            continue
        if current is None:
            raise RegistryError(f"{origin}:{lineno}: key outside a [material] section")
        key, sep, value = line.partition("=")
        if not sep:
            raise RegistryError(f"{origin}:{lineno}: expected key = value")
        key = key.strip()
        if key in current:
            raise RegistryError(f"{origin}:{lineno}: duplicate key {key!r}")
        current[key] = value.strip()
    if current is not None:
        yield start, current


def _float(section: dict[str, str], key: str, where: str) -> float | None:
    if key not in section or section[key] in ("", "-"):
        return None
    try:
        return float(section[key])
    except ValueError:
        raise RegistryError(f"{where}: {key} = {section[key]!r} is not a number") from None


def _material_from_section(section: dict[str, str], where: str) -> MaterialSpec:
    unknown = set(section) - _SCALAR_KEYS - set(OXIDES)
    if unknown:
        raise RegistryError(f"{where}: unknown keys {sorted(unknown)}")
    if "id" not in section or "role" not in section:
        raise RegistryError(f"{where}: 'id' and 'role' are required")
    mid = section["id"]
    where = f"{where} ({mid})"
    try:
        role = Role(section["role"])
    except ValueError:
        raise RegistryError(f"{where}: unknown role {section['role']!r}") from None

    oxides = {ox: v for ox in OXIDES if (v := _float(section, ox, where)) is not None}
    loi = _float(section, "loi", where)
    if mid == "SA" and loi is None:
        loi = SODA_ASH_DEFAULT_LOI
    if loi is not None:
        oxides["loi"] = loi

    ref = None
    if "tga_ref" in section:
        parts = [p.strip() for p in section["tga_ref"].split(",")]
        if len(parts) != 3:
            raise RegistryError(f"{where}: tga_ref needs w105,w635,w1000")
        try:
            ref = AnhydrousTGARef(*(float(p) for p in parts))
        except ValueError as exc:
            raise RegistryError(f"{where}: {exc}") from None

    density = _float(section, "density_kg_m3", where)
    if density is None:
        raise RegistryError(f"{where}: density_kg_m3 is required")
    try:
        return MaterialSpec(
            id=mid,
            role=role,
            density=density,
            composition=OxideComposition(**oxides) if oxides else None,
            blaine_fineness=_float(section, "blaine_m2_kg", where),
            unit_cost=_float(section, "unit_cost_per_kg", where),
            anhydrous_ref=ref,
            description=section.get("description", ""),
        )
    except ValidationError as exc:
        raise RegistryError(f"{where}: {exc}") from None


def parse_registry(text: str, origin: str = "<string>") -> Registry:
    materials = [_material_from_section(sec, f"{origin}:{start}")
                 for start, sec in _sections(text.splitlines(), origin)]
    return Registry.from_materials(materials, source=origin)


def load_registry(path: str | Path) -> Registry:
    path = Path(path)
    return parse_registry(path.read_text(encoding="utf-8"), origin=str(path))


def default_registry() -> Registry:
    """Registry bundled with the package (raw materials and Table-1 price set)."""
    text = resources.files("aabinder.data").joinpath("materials.cfg").read_text(encoding="utf-8")
    return parse_registry(text, origin="aabinder/data/materials.cfg")


def dump_registry(registry: Registry) -> str:
    out = []
    for m in registry.values():
        out.append("[material]")
        out.append(f"id = {m.id}")
        out.append(f"role = {m.role.value}")
        out.append(f"density_kg_m3 = {m.density!r}")
        if m.blaine_fineness is not None:
            out.append(f"blaine_m2_kg = {m.blaine_fineness!r}")
        if m.unit_cost is not None:
            out.append(f"unit_cost_per_kg = {m.unit_cost!r}")
        if m.composition is not None:
            for ox in OXIDES:
                out.append(f"{ox} = {getattr(m.composition, ox)!r}")
            out.append(f"loi = {m.composition.loi!r}")
        if m.anhydrous_ref is not None:
            r = m.anhydrous_ref
            out.append(f"tga_ref = {r.w105!r}, {r.w635!r}, {r.w1000!r}")
        if m.description:
            out.append(f"description = {m.description}")
        out.append("")
    return "\n".join(out)
