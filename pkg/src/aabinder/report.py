"""Project files, batch analysis and deterministic report emission.

A project file binds a materials registry, a mix table and per-mix data
files. Section syntax follows the registry format::

    [project]
    registry = materials.cfg
    output = out
    binder_kg_m3 = 571.4
    eds = eds.csv
    strength = strength.csv

    [mix_table]
    sf = 10, 20
    naoh = 8, 10
    ws = 0.45
    mode = solid

    [bind]
    id = SF10NH8
    thermogram = thermograms/SF10NH8.csv
    flow_curves = 0.45:rheo/run1.csv, 0.45:rheo/run2.csv

Relative paths resolve against the project file's directory.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Context, Decimal
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from . import __version__
from .calibration import Interpretation, loi_context
from .errors import AABinderError, MissingSection, ProjectValidation, ValidationError
from .materials import Registry, default_registry, load_registry
from .microanalysis import (EdsComposition, StrengthRecord, development_curve,
                            molar_ratio, ratio_delta, read_eds_csv, read_strength_csv,
                            strength_increment)
from .mixdesign import (MixDesign, Pricing, activator_cost, build_mix_table,
                        calcite_fraction, water_mass)
from .rheology import (Branch, FlowCurve, Model, aggregate_fits, fit, hysteresis_area,
                       read_flow_csv, validate_protocol)
from .thermo import (DEFAULT_DTG_WINDOW, Method, bound_water_report, dtg, dtg_peaks,
                     free_hydroxides, mix_ldca, read_thermogram_csv, registry_ldca,
                     segment_losses)

SIG_DIGITS = 6
DEFAULT_PAIRS = ("Ca/Si", "Na/Ca", "Mg/Al", "Al/Si", "Na/Al", "Na/Si", "Mg/Ca")
PLOT_KINDS = ("flow_curve", "strength_dev", "dtg")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


# -- project ---------------------------------------------------------------

@dataclass(frozen=True)
class Binding:
    mix_id: str
    thermogram: Path | None = None
    flow_curves: tuple[tuple[float, Path], ...] = ()


@dataclass(frozen=True)
class Project:
    base_dir: Path
    mixes: tuple[MixDesign, ...]
    bindings: tuple[Binding, ...] = ()
    registry_path: Path | None = None
    output_dir: Path | None = None
    binder_mass: float = 571.4
    eds_path: Path | None = None
    strength_path: Path | None = None
    model: Model = Model.MODIFIED_BINGHAM
    scheme: Method = Method.PRESENT_STUDY
    dtg_window: float = DEFAULT_DTG_WINDOW
    interpretation: Interpretation = Interpretation()
    pairs: tuple[str, ...] = DEFAULT_PAIRS

    def files(self) -> list[Path]:
        out = [p for p in (self.registry_path, self.eds_path, self.strength_path) if p]
        for b in self.bindings:
            if b.thermogram:
                out.append(b.thermogram)
            out.extend(p for _, p in b.flow_curves)
        return out

    def validate(self) -> None:
        problems = []
        for p in self.files():
            if not p.is_file():
                problems.append(f"missing file: {p}")
        ids = {m.id for m in self.mixes}
        seen = set()
        for b in self.bindings:
            if b.mix_id not in ids:
                problems.append(f"bound mix id {b.mix_id!r} not in the mix table")
            if b.mix_id in seen:
                problems.append(f"mix id {b.mix_id!r} bound twice")
            seen.add(b.mix_id)
        if problems:
            raise ProjectValidation(problems)


def _split_sections(text: str, origin: str) -> list[tuple[str, int, dict[str, str]]]:
    out: list[tuple[str, int, dict[str, str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            out.append((line[1:-1].strip(), lineno, {}))
            continue
        if not out:
            raise ProjectValidation([f"{origin}:{lineno}: key outside a section"])
        key, sep, value = line.partition("=")
        if not sep:
            raise ProjectValidation([f"{origin}:{lineno}: expected key = value"])
        out[-1][2][key.strip()] = value.strip()
    return out


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def parse_project(text: str, base_dir: str | Path = ".", origin: str = "<project>") -> Project:
    base = Path(base_dir)

    def path(v: str | None) -> Path | None:
        return None if not v else (base / v)

    settings: dict[str, str] = {}
    mixes: list[MixDesign] = []
    bindings: list[Binding] = []
    try:
        for name, lineno, sec in _split_sections(text, origin):
            where = f"{origin}:{lineno}"
            if name == "project":
                settings.update(sec)
            elif name == "mix_table":
                modes = [m.strip() for m in sec.get("mode", "solid").split(",")]
                mixes.extend(build_mix_table(_floats(sec["sf"]), _floats(sec["naoh"]),
                                             _floats(sec["ws"]), modes,
                                             float(sec.get("binder_sand", 3.0))))
            elif name == "bind":
                curves = []
                for item in filter(None, (s.strip() for s in sec.get("flow_curves", "").split(","))):
                    ws, sep, p = item.partition(":")
                    if not sep:
                        raise ProjectValidation([f"{where}: flow_curves entries are ws:path"])
                    curves.append((float(ws), path(p.strip())))
                bindings.append(Binding(sec["id"], path(sec.get("thermogram")), tuple(curves)))
            else:
                raise ProjectValidation([f"{where}: unknown section [{name}]"])
    except KeyError as exc:
        raise ProjectValidation([f"{origin}: missing key {exc}"]) from None
    except (ValueError, ValidationError) as exc:
        if isinstance(exc, ProjectValidation):
            raise
        raise ProjectValidation([f"{origin}: {exc}"]) from None

    ids = [m.id for m in mixes]
    if len(ids) != len(set(ids)):
        raise ProjectValidation([f"{origin}: duplicate mix ids across mix tables"])
    interp = Interpretation(**dict(
        kv.split("=", 1) for kv in settings.get("interpretation", "").split(",") if "=" in kv))
    try:
        return Project(
            base_dir=base,
            mixes=tuple(mixes),
            bindings=tuple(bindings),
            registry_path=path(settings.get("registry")),
            output_dir=path(settings.get("output")),
            binder_mass=float(settings.get("binder_kg_m3", 571.4)),
            eds_path=path(settings.get("eds")),
            strength_path=path(settings.get("strength")),
            model=Model.parse(settings.get("model", "mb")),
            scheme=Method(settings.get("scheme", "present_study")),
            dtg_window=float(settings.get("dtg_window", DEFAULT_DTG_WINDOW)),
            interpretation=interp,
            pairs=tuple(p.strip() for p in settings.get("pairs", ",".join(DEFAULT_PAIRS)).split(",")),
        )
    except ValueError as exc:
        raise ProjectValidation([f"{origin}: {exc}"]) from None


def load_project(path: str | Path) -> Project:
    path = Path(path)
    if not path.is_file():
        raise ProjectValidation([f"missing file: {path}"])
    project = parse_project(path.read_text(encoding="utf-8"), path.parent, str(path))
    project.validate()
    return project


# -- report ----------------------------------------------------------------

@dataclass
class Report:
    mixes: dict[str, dict[str, Any]] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    def as_dict(self) -> dict:
        return {"metadata": self.metadata, "mixes": self.mixes, "failures": self.failures}

    def to_json(self) -> str:
        return dumps_deterministic(self.as_dict())


def round_sig(x: float, digits: int = SIG_DIGITS) -> float:
    """Round to ``digits`` significant figures, ties to even on the decimal repr."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(Context(prec=digits, rounding=ROUND_HALF_EVEN).plus(Decimal(repr(float(x)))))


def _normalize(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return round_sig(obj)
    if isinstance(obj, Mapping):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, Path):
        return obj.as_posix()
    if hasattr(obj, "item"):        # numpy scalar
        return _normalize(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_deterministic(obj: Any) -> str:
    return json.dumps(_normalize(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _section(report: Report, mix_id: str, name: str, fn: Callable[[], Any]) -> None:
    try:
        report.mixes[mix_id][name] = fn()
    except (AABinderError, ValueError, KeyError, OSError) as exc:
        report.mixes[mix_id][name] = {"error": f"{type(exc).__name__}: {exc}"}
        report.failures.append(f"{mix_id}/{name}: {exc}")


def _design_section(d: MixDesign, binder_mass: float) -> dict:
    return {
        "id": d.id, "mode": d.mode.value, "sf_pct": d.sf_frac, "ggbfs_pct": d.ggbfs_frac,
        "target_naoh_pct": d.target_naoh, "hl_pct": d.hl_dosage, "sa_pct": d.sa_dosage,
        "w_s": d.w_s, "water_binder": d.water_binder, "sand_per_binder": d.binder_sand,
        "water_kg_m3": water_mass(d, binder_mass) if binder_mass > 0 else 0.0,
    }


def _cost_section(d: MixDesign, reg: Registry, binder_mass: float) -> dict:
    return {p.value: activator_cost(d, reg, binder_mass, p).as_dict() for p in Pricing}


def _rheology_section(curves: Iterable[tuple[float, Path]], model: Model) -> dict:
    out: dict[str, Any] = {}
    grouped: dict[float, list[Path]] = {}
    for ws, p in curves:
        grouped.setdefault(ws, []).append(p)
    for ws in sorted(grouped):
        runs, fits = [], []
        for p in grouped[ws]:
            branches = read_flow_csv(p)
            run: dict[str, Any] = {"file": p.name}
            down = branches.get(Branch.DOWN)
            up = branches.get(Branch.UP)
            if down is None:
                raise ValidationError(f"{p.name}: no down branch")
            f = fit(down, model)
            fits.append(f)
            run["fit"] = f.as_dict()
            run["points"] = {b.value: {"shear_rate": list(c.shear_rate),
                                       "shear_stress": list(c.shear_stress)}
                             for b, c in sorted(branches.items(), key=lambda kv: kv[0].value)}
            if up is not None:
                run["protocol_deviations"] = list(validate_protocol(up, down).deviations)
                run["hysteresis"] = hysteresis_area(up, down).as_dict()
            runs.append(run)
        out[f"{ws:g}"] = {"runs": runs, "summary": aggregate_fits(fits).as_dict()}
    return out


def _thermo_section(path: Path, design: MixDesign, reg: Registry, project: Project) -> dict:
    gram = read_thermogram_csv(path, sample_id=design.id)
    profile = segment_losses(gram, project.scheme)
    ldca_table = registry_ldca(reg)
    ldc_a = mix_ldca(design.parts(), ldca_table)
    ctx = loi_context(design, reg, project.interpretation)
    calcite = calcite_fraction(design.target_naoh)
    out: dict[str, Any] = {
        "profile": profile.as_dict(),
        "bound_water": bound_water_report(profile, ldc_a, ctx).as_dict(),
        "hydroxides": free_hydroxides(profile, ldc_a, calcite).as_dict(),
    }
    try:
        curve = dtg(gram, project.dtg_window)
        out["dtg"] = {"temperature": list(curve.temperature), "rate": list(curve.rate),
                      "window_points": curve.window_points,
                      "peaks": [list(p) for p in dtg_peaks(gram, project.dtg_window)]}
    except ValidationError as exc:
        out["dtg"] = {"error": str(exc)}
    return out


def _eds_section(rows: list[EdsComposition], pairs: Iterable[str]) -> dict:
    by_age = {c.age_days: c for c in rows}
    ratios: dict[str, dict[str, Any]] = {}
    deltas: dict[str, Any] = {}
    for pair in pairs:
        num, den = pair.split("/")
        ratios[pair] = {}
        for age in sorted(by_age):
            try:
                ratios[pair][str(age)] = molar_ratio(by_age[age], num, den)
            except ZeroDivisionError:
                ratios[pair][str(age)] = None
        ages = sorted(by_age)
        for a, b in zip(ages, ages[1:]):
            try:
                deltas.setdefault(pair, {})[f"{a}:{b}"] = ratio_delta(by_age[a], by_age[b], num, den)
            except ZeroDivisionError:
                deltas.setdefault(pair, {})[f"{a}:{b}"] = None
    closure = {str(c.age_days): c.total for c in rows if not c.closure_ok}
    return {"ratios": ratios, "deltas_pct": deltas, "closure_over_100": closure}


def _strength_section(rows: list[StrengthRecord]) -> dict:
    series = development_curve(rows)
    (sid, s), = series.items()
    out: dict[str, Any] = s.as_dict()
    by = {r.age_days: r for r in rows}
    if 28 in by and 120 in by:
        out["increment_28_120_pct"] = strength_increment(by[28], by[120])
    return out


def run_project(project: Project) -> Report:
    """Run every bound analysis; section failures are recorded, not raised."""
    project.validate()
    reg = load_registry(project.registry_path) if project.registry_path else default_registry()
    eds = read_eds_csv(project.eds_path) if project.eds_path else []
    strength = read_strength_csv(project.strength_path) if project.strength_path else []
    bindings = {b.mix_id: b for b in project.bindings}

    report = Report()
    for d in sorted(project.mixes, key=lambda m: m.id):
        report.mixes[d.id] = {}
        _section(report, d.id, "design", lambda: _design_section(d, project.binder_mass))
        _section(report, d.id, "cost", lambda: _cost_section(d, reg, project.binder_mass))
        b = bindings.get(d.id)
        if b and b.flow_curves:
            _section(report, d.id, "rheology",
                     lambda: _rheology_section(b.flow_curves, project.model))
        if b and b.thermogram:
            _section(report, d.id, "thermo", lambda: _thermo_section(b.thermogram, d, reg, project))
        rows = [c for c in eds if c.sample_id == d.id]
        if rows:
            _section(report, d.id, "eds", lambda: _eds_section(rows, project.pairs))
        srows = [r for r in strength if r.sample_id == d.id]
        if srows:
            _section(report, d.id, "strength", lambda: _strength_section(srows))

    digests = {}
    for p in sorted(set(project.files()), key=lambda p: p.as_posix()):
        try:
            key = p.relative_to(project.base_dir).as_posix()
        except ValueError:
            key = p.as_posix()
        digests[key] = file_digest(p)
    report.metadata = {
        "tool": "aabinder",
        "version": __version__,
        "input_digests": digests,
        "binder_kg_m3": project.binder_mass,
        "scheme": project.scheme.value,
        "rheology_model": project.model.value,
        "loi_interpretation": project.interpretation.label,
    }
    return report


# -- plot data -------------------------------------------------------------

PLOT_HEADER = ("series", "x", "y")


def plot_rows(report: Report | Mapping, kind: str) -> list[tuple[str, float, float]]:
    """Long-format (series, x, y) rows for ``kind``."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    mixes = report.mixes if isinstance(report, Report) else report["mixes"]
    rows: list[tuple[str, float, float]] = []
    for mid in sorted(mixes):
        sec = mixes[mid]
        if kind == "strength_dev" and "ages" in sec.get("strength", {}):
            s = sec["strength"]
            rows += [(mid, float(a), float(v)) for a, v in zip(s["ages"], s["strengths_mpa"])]
        elif kind == "dtg" and "rate" in sec.get("thermo", {}).get("dtg", {}):
            g = sec["thermo"]["dtg"]
            rows += [(mid, float(t), float(r)) for t, r in zip(g["temperature"], g["rate"])]
        elif kind == "flow_curve" and "error" not in sec.get("rheology", {"error": 1}):
            for ws, block in sec["rheology"].items():
                for i, run in enumerate(block["runs"]):
                    for branch, pts in run["points"].items():
                        name = f"{mid}/ws={ws}/run{i}/{branch}"
                        rows += [(name, float(x), float(y))
                                 for x, y in zip(pts["shear_rate"], pts["shear_stress"])]
    if not rows:
        raise MissingSection(f"no {kind} data in report")
    return rows


def emit_plot_data(report: Report | Mapping, kind: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOT_HEADER)
    for series, x, y in plot_rows(report, kind):
        w.writerow([series, repr(x), repr(y)])
    return buf.getvalue()


def read_plot_csv(text: str) -> dict[str, tuple[list[float], list[float]]]:
    out: dict[str, tuple[list[float], list[float]]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        xs, ys = out.setdefault(row["series"], ([], []))
        xs.append(float(row["x"]))
        ys.append(float(row["y"]))
    return out


def flow_curves_from_plot(text: str) -> dict[str, FlowCurve]:
    """Rebuild flow curves from emitted ``flow_curve`` plot data."""
    out = {}
    for name, (x, y) in read_plot_csv(text).items():
        branch = name.rsplit("/", 1)[-1]
        out[name] = FlowCurve.from_arrays(x, y, branch=branch)
    return out
