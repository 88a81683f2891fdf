"""Thermogravimetric calculus for hydrated alkali-activated binders.

A thermogram is split into temperature windows: free water, dehydration
(Ldh), dehydroxylation (Ldx) and decarbonation (Ldc). Losses are percentages
of a reference mass: the initial mass for free water and the 105 degC mass
for every later window. From those losses the module estimates bound water
by five published methods and the free hydroxide contents.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import (MissingLOIContext, OutOfRange, UnknownMaterial, ValidationError,
                     WindowTooLarge)
from .materials import AnhydrousTGARef

THERMOGRAM_CSV_HEADER = ("temperature_c", "mass_ug")

MONOTONE_TOL = 0.005      # relative rise tolerated between neighbouring samples
REFERENCE_T = 105.0       # dry-mass reference temperature

# molar masses, g/mol
M_H2O = 18.01
M_CO2 = 44.01
M_CH = 74.09      # Ca(OH)2
M_MH = 58.32      # Mg(OH)2
M_AH = 78.0       # Al(OH)3

H2O_PER_CO2 = 0.41                     # carbonated portlandite / brucite factor
CORRECTION_TOTAL = 0.41 + 0.41 + 0.205  # CH + MH + half-weight MH carbonation = 1.025

DEFAULT_DTG_WINDOW = 10.0


@dataclass(frozen=True)
class Thermogram:
    temperature: tuple[float, ...]
    mass: tuple[float, ...]
    sample_id: str = ""

    def __post_init__(self):
        t = tuple(float(x) for x in self.temperature)
        m = tuple(float(x) for x in self.mass)
        if len(t) != len(m):
            raise ValidationError("temperature and mass differ in length")
        if len(t) < 2:
            raise ValidationError("a thermogram needs at least two samples")
        if not all(math.isfinite(v) for v in t + m):
            raise ValidationError("thermogram contains non-finite values")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValidationError(f"{self.sample_id}: temperatures must be strictly increasing")
        if any(x <= 0 for x in m):
            raise ValidationError(f"{self.sample_id}: masses must be > 0")
        for i, (a, b) in enumerate(zip(m, m[1:])):
            if b - a > MONOTONE_TOL * a:
                raise ValidationError(
                    f"{self.sample_id}: mass rises by more than {MONOTONE_TOL:.1%} at "
                    f"{t[i + 1]:g} degC")
        if m[-1] > m[0]:
            raise ValidationError(f"{self.sample_id}: net mass gain over the run")
        object.__setattr__(self, "temperature", t)
        object.__setattr__(self, "mass", m)

    @classmethod
    def from_arrays(cls, temperature, mass, sample_id: str = "") -> "Thermogram":
        return cls(tuple(np.asarray(temperature, dtype=float)),
                   tuple(np.asarray(mass, dtype=float)), sample_id)

    def __len__(self):
        return len(self.temperature)

    @property
    def span(self) -> tuple[float, float]:
        return self.temperature[0], self.temperature[-1]

    def scaled(self, k: float) -> "Thermogram":
        return replace(self, mass=tuple(k * m for m in self.mass))

    def shifted(self, offset: float) -> "Thermogram":
        return replace(self, mass=tuple(m + offset for m in self.mass))


def read_thermogram_csv(path: str | Path, sample_id: str | None = None) -> Thermogram:
    path = Path(path)
    t, m = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != THERMOGRAM_CSV_HEADER:
            raise ValidationError(f"{path}: header must be {','.join(THERMOGRAM_CSV_HEADER)}")
        for i, row in enumerate(reader, 2):
            try:
                t.append(float(row["temperature_c"]))
                m.append(float(row["mass_ug"]))
            except (TypeError, ValueError):
                raise ValidationError(f"{path}:{i}: non-numeric value") from None
    return Thermogram(tuple(t), tuple(m), sample_id if sample_id is not None else path.stem)


def write_thermogram_csv(path: str | Path, gram: Thermogram) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(THERMOGRAM_CSV_HEADER)
        for t, m in zip(gram.temperature, gram.mass):
            w.writerow([repr(t), repr(m)])


def mass_at(gram: Thermogram, t: float) -> float:
    """Linearly interpolated mass at ``t`` degC."""
    lo, hi = gram.span
    if not lo <= t <= hi:
        raise OutOfRange(f"{t:g} degC outside thermogram span [{lo:g}, {hi:g}]")
    return float(np.interp(t, gram.temperature, gram.mass))


# -- segmentation ----------------------------------------------------------

class Method(str, enum.Enum):
    BHATTY = "bhatty"
    PANE_HANSEN = "pane_hansen"
    MONTEAGUDO = "monteagudo"
    DEBOUCHA = "deboucha"
    PRESENT_STUDY = "present_study"


Range = tuple[float, float]


@dataclass(frozen=True)
class SegmentationScheme:
    name: Method
    ldh_ranges: tuple[Range, ...]
    ldx_ranges: tuple[Range, ...]
    ldc_range: Range
    free_water_range: Range | None = None

    def __post_init__(self):
        object.__setattr__(self, "name", Method(self.name))
        if not 1 <= len(self.ldh_ranges) <= 2 or not 1 <= len(self.ldx_ranges) <= 2:
            raise ValidationError("schemes carry one or two Ldh and Ldx windows")
        ordered = self.all_ranges()
        for lo, hi in ordered:
            if not hi > lo:
                raise ValidationError(f"{self.name.value}: empty range ({lo}, {hi})")
        for (_, a_hi), (b_lo, _) in zip(ordered, ordered[1:]):
            if b_lo < a_hi:
                raise ValidationError(f"{self.name.value}: ranges overlap or are out of order")

    def all_ranges(self) -> list[Range]:
        head = [self.free_water_range] if self.free_water_range else []
        return head + list(self.ldh_ranges) + list(self.ldx_ranges) + [self.ldc_range]


SCHEMES: Mapping[Method, SegmentationScheme] = {
    Method.BHATTY: SegmentationScheme(Method.BHATTY, ((105, 440),), ((440, 580),), (580, 1000)),
    Method.PANE_HANSEN: SegmentationScheme(Method.PANE_HANSEN, ((140, 440),), ((440, 520),), (520, 1100)),
    Method.MONTEAGUDO: SegmentationScheme(Method.MONTEAGUDO, ((105, 410),), ((430, 530),), (530, 1100)),
    Method.DEBOUCHA: SegmentationScheme(Method.DEBOUCHA, ((105, 400),), ((400, 600),), (600, 1000)),
    Method.PRESENT_STUDY: SegmentationScheme(
        Method.PRESENT_STUDY,
        ((105, 150), (150, 230)),
        ((230, 420), (420, 635)),
        (635, 1000),
        free_water_range=(32, 105),
    ),
}


def get_scheme(name: "str | Method | SegmentationScheme") -> SegmentationScheme:
    if isinstance(name, SegmentationScheme):
        return name
    return SCHEMES[Method(name)]


@dataclass(frozen=True)
class MassLossProfile:
    """Window mass losses in percent.

    ``normalization`` maps each field to its reference temperature. With a
    single Ldh window the loss sits in ``ldh_b``; with a single Ldx window
    (portlandite dominated) it sits in ``ldx_b``.
    """

    ldh_a: float
    ldh_b: float
    ldh_c: float
    ldx_a: float
    ldx_b: float
    ldc: float
    scheme: Method = Method.PRESENT_STUDY
    sample_id: str = ""
    reference_masses: Mapping[str, float] = field(default_factory=dict)
    normalization: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("ldh_a", "ldh_b", "ldh_c", "ldx_a", "ldx_b", "ldc"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")

    @property
    def free_water(self) -> float:
        return self.ldh_a

    @property
    def ldh(self) -> float:
        return self.ldh_b + self.ldh_c

    @property
    def ldx(self) -> float:
        return self.ldx_a + self.ldx_b

    def renormalized_sum(self) -> float:
        """Sum of all window losses re-expressed on the 105 degC mass basis."""
        w_init = self.reference_masses.get("initial")
        w_ref = self.reference_masses.get("w105")
        free = self.ldh_a * (w_init / w_ref) if self.ldh_a else 0.0
        return math.fsum([free, self.ldh_b, self.ldh_c, self.ldx_a, self.ldx_b, self.ldc])

    def as_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "scheme": self.scheme.value,
            "ldh_a": self.ldh_a, "ldh_b": self.ldh_b, "ldh_c": self.ldh_c,
            "ldx_a": self.ldx_a, "ldx_b": self.ldx_b, "ldc": self.ldc,
            "ldh": self.ldh, "ldx": self.ldx,
            "normalization": dict(self.normalization),
        }


def _loss(gram: Thermogram, rng: Range, ref: float) -> float:
    lo, hi = rng
    return 100.0 * (mass_at(gram, lo) - mass_at(gram, hi)) / ref


def segment_losses(gram: Thermogram, scheme: "SegmentationScheme | str" = Method.PRESENT_STUDY
                   ) -> MassLossProfile:
    scheme = get_scheme(scheme)
    w105 = mass_at(gram, REFERENCE_T)
    norm: dict[str, float] = {}
    ref_masses = {"w105": w105}

    ldh_a = 0.0
    if scheme.free_water_range:
        w_init = mass_at(gram, scheme.free_water_range[0])
        ref_masses["initial"] = w_init
        ldh_a = _loss(gram, scheme.free_water_range, w_init)
        norm["ldh_a"] = scheme.free_water_range[0]
    else:
        ref_masses["initial"] = w105

    ldh = [_loss(gram, r, w105) for r in scheme.ldh_ranges]
    ldx = [_loss(gram, r, w105) for r in scheme.ldx_ranges]
    ldh_b, ldh_c = (ldh + [0.0])[:2]
    ldx_a, ldx_b = ldx if len(ldx) == 2 else [0.0, ldx[0]]
    ldc = _loss(gram, scheme.ldc_range, w105)
    for name in ("ldh_b", "ldh_c", "ldx_a", "ldx_b", "ldc"):
        norm[name] = REFERENCE_T

    # interpolation noise may push a tiny window marginally negative
    vals = [max(0.0, v) if v > -1e-12 else v for v in (ldh_a, ldh_b, ldh_c, ldx_a, ldx_b, ldc)]
    return MassLossProfile(*vals, scheme=scheme.name, sample_id=gram.sample_id,
                           reference_masses=ref_masses, normalization=norm)


def total_loss(gram: Thermogram, lo: float, hi: float) -> float:
    """Loss between ``lo`` and ``hi`` as % of the 105 degC mass."""
    return _loss(gram, (lo, hi), mass_at(gram, REFERENCE_T))


# -- anhydrous decarbonation correction ------------------------------------

def anhydrous_ldca(ref: AnhydrousTGARef) -> float:
    """Decarbonation loss (635-1000 degC) of an unreacted material, % of W105."""
    return 100.0 * (ref.w635 - ref.w1000) / ref.w105


def mix_ldca(dosages: Mapping[str, float], ldca: Mapping[str, float]) -> float:
    """Weighted Ldc_a of a blend given parts per 100 binder parts.

    Activator parts are counted on top of the 100 binder parts, so the
    result is normalised by 100 rather than by the sum of parts.
    """
    total = 0.0
    for mat, parts in dosages.items():
        if parts < 0:
            raise ValidationError(f"negative parts for {mat}")
        if mat not in ldca:
            raise UnknownMaterial(f"no anhydrous Ldc_a for material {mat!r}")
        total += parts * ldca[mat]
    return total / 100.0


def registry_ldca(registry) -> dict[str, float]:
    """Ldc_a of every registry material that carries an anhydrous TGA reference."""
    return {mid: anhydrous_ldca(m.anhydrous_ref)
            for mid, m in registry.items() if m.anhydrous_ref is not None}


# -- bound water -----------------------------------------------------------

@dataclass(frozen=True)
class LOIContext:
    """Mass-balance inputs of the LOI deduction.

    Masses are fractions of the sample mass ``m_s``; x_* are replacement
    levels (mass fractions); LOIs are in percent.
    """

    m_b: float
    x_ggbfs: float
    x_sf: float
    x_sa: float
    x_hl: float
    w_b: float
    loi_precursor: float
    loi_sf: float
    loi_sa: float
    loi_hl: float
    m_s: float = 1.0
    drift: float = 0.0          # device drift term, % (Deboucha)
    label: str = ""

    @property
    def loi_additives(self) -> float:
        return self.loi_sf + self.loi_sa + self.loi_hl

    @property
    def x_additives(self) -> float:
        return self.x_sf + self.x_sa + self.x_hl

    def m_precursor(self) -> float:
        return ((self.m_s - self.m_b * (self.x_additives + self.w_b))
                / (1.0 + self.loi_precursor / 100.0))

    def m_additive(self) -> float:
        return ((self.m_s - self.m_b * (self.x_ggbfs + self.w_b))
                / (1.0 + self.loi_additives / 100.0))

    def present_study_deduction(self) -> float:
        """LOI deduction (%) of the present-study expression."""
        return (self.m_precursor() * self.loi_precursor
                + self.m_additive() * self.loi_additives) / self.m_s

    def deboucha_deduction(self) -> float:
        """LOI deduction (%) of the Deboucha expression, x = additive level."""
        x = self.x_additives
        m_c = (self.m_s - self.m_b * (x + self.w_b)) / (1.0 + self.loi_precursor / 100.0)
        m_a = (self.m_s - self.m_b * ((1.0 - x) + self.w_b)) / (1.0 + self.loi_additives / 100.0)
        return (m_c * self.loi_precursor + m_a * self.loi_additives) / self.m_s

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "label", "m_s", "m_b", "x_ggbfs", "x_sf", "x_sa", "x_hl", "w_b",
            "loi_precursor", "loi_sf", "loi_sa", "loi_hl", "drift")}


class CarbonationTerms(str, enum.Enum):
    """Which carbonation corrections enter the decarbonation factor."""

    CH = "ch"                   # carbonated portlandite only: 0.41
    CH_MH = "ch_mh"             # plus carbonated brucite: 0.82
    TOTAL = "total"             # plus the half-weight brucite term: 1.025


_TERMS = {
    CarbonationTerms.CH: H2O_PER_CO2,
    CarbonationTerms.CH_MH: 2 * H2O_PER_CO2,
    CarbonationTerms.TOTAL: CORRECTION_TOTAL,
}


def correction_factor(calcite_fraction: float = 0.0,
                      terms: "CarbonationTerms | str" = CarbonationTerms.TOTAL) -> float:
    """Decarbonation factor less the ion-exchange calcite weight fraction."""
    if not 0.0 <= calcite_fraction <= 1.0:
        raise ValidationError(f"calcite fraction must lie in [0, 1], got {calcite_fraction}")
    return _TERMS[CarbonationTerms(terms)] - calcite_fraction


def bound_water(profile: MassLossProfile, ldc_a: float, method: "Method | str",
                loi_ctx: LOIContext | None = None,
                correction: float = CORRECTION_TOTAL) -> float:
    """Bound water W_B (%) by the named method.

    ``correction`` only affects the present-study expression.
    """
    method = Method(method)
    base = profile.ldh + profile.ldx
    dc = profile.ldc - ldc_a
    if method is Method.BHATTY:
        return base + H2O_PER_CO2 * profile.ldc
    if method is Method.PANE_HANSEN:
        return base + dc
    if method is Method.MONTEAGUDO:
        return base + H2O_PER_CO2 * dc
    if loi_ctx is None:
        raise MissingLOIContext(f"{method.value} needs an LOI context")
    if method is Method.DEBOUCHA:
        return base + H2O_PER_CO2 * dc - loi_ctx.deboucha_deduction() + loi_ctx.drift
    return base + correction * dc - loi_ctx.present_study_deduction()


@dataclass(frozen=True)
class BoundWaterReport:
    values: Mapping[str, float]
    ldc_a: float
    correction_factor: float
    loi_deduction: Mapping[str, float] = field(default_factory=dict)
    loi_context: LOIContext | None = None
    skipped: Mapping[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "w_b": dict(self.values),
            "ldc_a": self.ldc_a,
            "correction_factor": self.correction_factor,
            "loi_deduction": dict(self.loi_deduction),
            "loi_context": self.loi_context.as_dict() if self.loi_context else None,
            "skipped": dict(self.skipped),
        }


def bound_water_report(profile: MassLossProfile, ldc_a: float,
                       loi_ctx: LOIContext | None = None,
                       correction: float = CORRECTION_TOTAL,
                       methods: Sequence["Method | str"] = tuple(Method)) -> BoundWaterReport:
    values, skipped, deduction = {}, {}, {}
    for m in map(Method, methods):
        try:
            values[m.value] = bound_water(profile, ldc_a, m, loi_ctx, correction)
        except MissingLOIContext as exc:
            skipped[m.value] = str(exc)
    if loi_ctx is not None:
        deduction = {Method.DEBOUCHA.value: loi_ctx.deboucha_deduction(),
                     Method.PRESENT_STUDY.value: loi_ctx.present_study_deduction()}
    return BoundWaterReport(values, ldc_a, correction, deduction, loi_ctx, skipped)


# -- free hydroxides -------------------------------------------------------

class MHVariant(str, enum.Enum):
    EQ15_LDXA = "eq15_ldxa"     # brucite water from the 230-420 window only
    TOTAL_LDX = "total_ldx"     # brucite water from the whole Ldx window


AH_DIAGNOSTIC = ("gibbsite estimated as (78/18.01) Ldx_a - MH_free; the published "
                 "gibbsite contents do not follow from this balance")


@dataclass(frozen=True)
class HydroxideReport:
    ch_free: float
    mh_free: float
    ah_free: float
    calcite_fraction: float
    mh_variant: MHVariant
    ah_negative: bool
    diagnostics: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "ch_free": self.ch_free, "mh_free": self.mh_free, "ah_free": self.ah_free,
            "calcite_fraction": self.calcite_fraction, "mh_variant": self.mh_variant.value,
            "ah_negative": self.ah_negative, "diagnostics": list(self.diagnostics),
        }


def free_hydroxides(profile: MassLossProfile, ldc_a: float, calcite_fraction: float,
                    mh_variant: "MHVariant | str" = MHVariant.TOTAL_LDX) -> HydroxideReport:
    """Free portlandite, brucite and gibbsite (% of dry mass)."""
    mh_variant = MHVariant(mh_variant)
    dc = profile.ldc - ldc_a
    ch = (M_CH / M_H2O) * profile.ldx_b + (M_CH / M_CO2 - calcite_fraction) * dc
    ldx_mh = profile.ldx_a if mh_variant is MHVariant.EQ15_LDXA else profile.ldx
    mh = (M_MH / M_H2O) * ldx_mh + (M_MH / M_CO2) * dc
    ah = (M_AH / M_H2O) * profile.ldx_a - mh
    diags = [AH_DIAGNOSTIC]
    if ah < 0:
        diags.append(f"negative gibbsite ({ah:.3f} %) with MH variant {mh_variant.value}")
    if dc < 0:
        diags.append("Ldc below the anhydrous Ldc_a; decarbonation terms are negative")
    return HydroxideReport(ch, mh, ah, calcite_fraction, mh_variant, ah < 0, tuple(diags))


# -- derivative thermogravimetry -------------------------------------------

@dataclass(frozen=True)
class DTGCurve:
    temperature: np.ndarray
    rate: np.ndarray            # smoothed dm/dT, ug/degC
    window_points: int


def dtg(gram: Thermogram, window: float = DEFAULT_DTG_WINDOW) -> DTGCurve:
    """Central-difference dm/dT smoothed by a centred moving average."""
    t = np.asarray(gram.temperature)
    m = np.asarray(gram.mass)
    if len(t) < 3:
        raise ValidationError("derivative needs at least 3 samples")
    span = t[-1] - t[0]
    if not window > 0:
        raise ValidationError("window must be > 0")
    if window > span:
        raise WindowTooLarge(f"window {window:g} degC exceeds thermogram span {span:g} degC")
    d = np.gradient(m, t)
    npts = max(1, int(round(window / float(np.median(np.diff(t))))))
    npts |= 1   # odd, so the filter stays centred
    if npts > len(t):
        raise WindowTooLarge(f"window covers {npts} samples, thermogram has {len(t)}")
    if npts > 1:
        d = uniform_filter1d(d, size=npts, mode="nearest")
    return DTGCurve(t, d, npts)


def dtg_peaks(gram: Thermogram, window: float = DEFAULT_DTG_WINDOW,
              min_prominence: float = 0.01) -> list[tuple[float, float]]:
    """Local minima of the smoothed DTG curve as (temperature, dm/dT).

    Minima shallower than ``min_prominence`` times the curve's range are
    discarded, so a straight-line decay yields nothing.
    """
    curve = dtg(gram, window)
    d = curve.rate
    spread = float(np.ptp(d))
    scale = float(np.max(np.abs(d))) or 1.0
    if spread <= 1e-9 * scale:
        return []
    idx, _ = find_peaks(-d, prominence=min_prominence * spread)
    return [(float(curve.temperature[i]), float(d[i])) for i in idx]
