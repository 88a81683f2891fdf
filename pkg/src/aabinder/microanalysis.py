"""EDS atomic-percent bookkeeping and compressive-strength records."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (MismatchedSample, ValidationError, ZeroDenominator,
                     ZeroEarlyRatio)

ELEMENTS = ("C", "O", "Na", "Mg", "Al", "Si", "Ca", "Mn", "Fe")
STANDARD_AGES = (7, 28, 120)

# Published spot averages overshoot 100 at% (up to ~106); reject only gross errors.
CLOSURE_NOMINAL = 100.0
CLOSURE_LIMIT = 110.0

EDS_CSV_HEADER = ("sample_id", "age_days") + ELEMENTS + ("n_points",)
STRENGTH_CSV_HEADER = ("sample_id", "age_days", "strength_mpa")


@dataclass(frozen=True)
class EdsComposition:
    """Mean atomic percentages over ``n_points`` spot analyses."""

    sample_id: str
    age_days: int
    C: float = 0.0
    O: float = 0.0  # noqa: E741
    Na: float = 0.0
    Mg: float = 0.0
    Al: float = 0.0
    Si: float = 0.0
    Ca: float = 0.0
    Mn: float = 0.0
    Fe: float = 0.0
    n_points: int = 1

    def __post_init__(self):
        for el in ELEMENTS:
            if getattr(self, el) < 0:
                raise ValidationError(f"{self.sample_id}@{self.age_days}d: {el} < 0")
        if self.total > CLOSURE_LIMIT:
            raise ValidationError(
                f"{self.sample_id}@{self.age_days}d: atomic % sum to {self.total:.3f} "
                f"> {CLOSURE_LIMIT:g}")
        if self.n_points < 1:
            raise ValidationError("n_points must be >= 1")

    @property
    def total(self) -> float:
        return sum(getattr(self, el) for el in ELEMENTS)

    @property
    def closure_ok(self) -> bool:
        return self.total <= CLOSURE_NOMINAL + 1e-6

    def __getitem__(self, element: str) -> float:
        if element not in ELEMENTS:
            raise KeyError(f"unknown element {element!r}")
        return getattr(self, element)

    def scaled(self, k: float) -> "EdsComposition":
        vals = {el: getattr(self, el) * k for el in ELEMENTS}
        return EdsComposition(self.sample_id, self.age_days, n_points=self.n_points, **vals)


def parse_pair(pair: str) -> tuple[str, str]:
    """``"Ca/Si"`` -> ("Ca", "Si")."""
    num, sep, den = pair.partition("/")
    num, den = num.strip(), den.strip()
    if not sep or num not in ELEMENTS or den not in ELEMENTS:
        raise ValidationError(f"bad element pair {pair!r}")
    return num, den


def molar_ratio(comp: EdsComposition, num: str, den: str) -> float:
    d = comp[den]
    if d <= 0:
        raise ZeroDenominator(f"{comp.sample_id}@{comp.age_days}d: {den} is zero")
    return comp[num] / d


def ratio_delta(early: EdsComposition, late: EdsComposition, num: str, den: str) -> float:
    """Percentage change of num/den from ``early`` to ``late``."""
    r0 = molar_ratio(early, num, den)
    r1 = molar_ratio(late, num, den)
    if r0 == 0:
        raise ZeroEarlyRatio(f"{num}/{den} is zero at {early.age_days} d")
    return 100.0 * (r1 - r0) / r0


@dataclass(frozen=True)
class StrengthRecord:
    sample_id: str
    age_days: int
    strength: float     # MPa
    n_cubes: int = 3

    def __post_init__(self):
        if not self.strength > 0:
            raise ValidationError(f"{self.sample_id}@{self.age_days}d: strength must be > 0")
        if self.age_days <= 0:
            raise ValidationError("age must be positive")


def strength_increment(early: StrengthRecord, late: StrengthRecord,
                       ages: tuple[int, int] | None = (28, 120)) -> float:
    """Percentage strength gain between two ages of the same sample."""
    if early.sample_id != late.sample_id:
        raise MismatchedSample(f"{early.sample_id} vs {late.sample_id}")
    if ages is not None and (early.age_days, late.age_days) != tuple(ages):
        raise MismatchedSample(
            f"expected ages {ages}, got ({early.age_days}, {late.age_days})")
    return 100.0 * (late.strength - early.strength) / early.strength


@dataclass(frozen=True)
class StrengthSeries:
    sample_id: str
    ages: tuple[int, ...]
    strengths: tuple[float, ...]

    @property
    def monotone(self) -> bool:
        return all(b >= a for a, b in zip(self.strengths, self.strengths[1:]))

    def as_dict(self) -> dict:
        return {"sample_id": self.sample_id, "ages": list(self.ages),
                "strengths_mpa": list(self.strengths), "monotone": self.monotone}


def development_curve(records: Iterable[StrengthRecord]) -> dict[str, StrengthSeries]:
    """Age-sorted strength series per sample, keyed in first-seen order."""
    grouped: dict[str, dict[int, float]] = {}
    for r in records:
        ages = grouped.setdefault(r.sample_id, {})
        if r.age_days in ages:
            raise ValidationError(f"{r.sample_id}: duplicate age {r.age_days} d")
        ages[r.age_days] = r.strength
    out = {}
    for sid, ages in grouped.items():
        ordered = sorted(ages)
        out[sid] = StrengthSeries(sid, tuple(ordered), tuple(ages[a] for a in ordered))
    return out


def increments(records: Sequence[StrengthRecord], early: int = 28, late: int = 120) -> dict[str, float]:
    """Strength increments for every sample having both ages."""
    by = {(r.sample_id, r.age_days): r for r in records}
    out = {}
    for sid in dict.fromkeys(r.sample_id for r in records):
        if (sid, early) in by and (sid, late) in by:
            out[sid] = strength_increment(by[sid, early], by[sid, late], (early, late))
    return out


# -- CSV -------------------------------------------------------------------

def _check_header(reader: csv.DictReader, expected: Sequence[str], path) -> None:
    got = tuple(reader.fieldnames or ())
    if got[:len(expected)] != tuple(expected):
        raise ValidationError(f"{path}: header must be {','.join(expected)}")


def read_eds_csv(path: str | Path) -> list[EdsComposition]:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, EDS_CSV_HEADER, path)
        for i, row in enumerate(reader, 2):
            try:
                out.append(EdsComposition(
                    sample_id=row["sample_id"].strip(),
                    age_days=int(row["age_days"]),
                    n_points=int(row["n_points"]),
                    **{el: float(row[el]) for el in ELEMENTS}))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{i}: {exc}") from None
    return out


def read_strength_csv(path: str | Path) -> list[StrengthRecord]:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, STRENGTH_CSV_HEADER, path)
        for i, row in enumerate(reader, 2):
            try:
                out.append(StrengthRecord(row["sample_id"].strip(), int(row["age_days"]),
                                          float(row["strength_mpa"])))
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{i}: {exc}") from None
    return out


def eds_index(comps: Iterable[EdsComposition]) -> dict[tuple[str, int], EdsComposition]:
    out = {}
    for c in comps:
        key = (c.sample_id, c.age_days)
        if key in out:
            raise ValidationError(f"duplicate EDS row for {c.sample_id} at {c.age_days} d")
        out[key] = c
    return out

