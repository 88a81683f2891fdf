"""``aabinder`` command-line front end.

Exit codes: 0 success, 2 validation failure, 3 partial analysis failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .calibration import CalibrationCase, Interpretation, calibrate_present_study, loi_context
from .errors import AABinderError
from .materials import default_registry, load_registry, precursor_check
from .microanalysis import (eds_index, increments, molar_ratio, parse_pair, ratio_delta,
                            read_eds_csv, read_strength_csv)
from .mixdesign import (MIX_TABLE_COLUMNS, MixDesign, Pricing, activator_cost,
                        build_mix_table, calcite_fraction, mix_table_rows, parse_mix_id)
from .report import (EXIT_OK, EXIT_PARTIAL, EXIT_VALIDATION, PLOT_KINDS,
                     dumps_deterministic, emit_plot_data, load_project, run_project)
from .rheology import Branch, fit, hysteresis_area, read_flow_csv, validate_protocol
from .thermo import (MHVariant, Method, bound_water_report, dtg_peaks, free_hydroxides,
                     mix_ldca, read_thermogram_csv, registry_ldca, segment_losses)


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _registry(path):
    return load_registry(path) if path else default_registry()


def _emit(args, payload, rows=None, columns=None):
    """JSON by default; CSV when requested and the payload is tabular."""
    if getattr(args, "csv", False) and rows is not None:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns or list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(dumps_deterministic(payload))


def cmd_materials_check(args):
    reg = _registry(args.registry)
    out = {}
    for mid, m in reg.items():
        if m.composition is None or m.composition.SiO2 + m.composition.Al2O3 <= 0:
            continue
        v = precursor_check(m.composition)
        out[mid] = {"verdict": v.verdict, "basicity": v.basicity,
                    "lime_silica": v.lime_silica, "notes": list(v.notes)}
    rows = [{"id": k, "verdict": v["verdict"], "basicity": f"{v['basicity']:.4g}",
             "lime_silica": f"{v['lime_silica']:.4g}"} for k, v in out.items()]
    _emit(args, out, rows)
    return EXIT_OK


def cmd_mix_table(args):
    designs = build_mix_table(_floats(args.sf), _floats(args.naoh), _floats(args.ws),
                              args.mode.split(","))
    rows = mix_table_rows(designs)
    if args.json:
        _emit(args, [d.__dict__ | {"mode": d.mode.value} for d in designs])
    else:
        args.csv = True
        _emit(args, None, rows, list(MIX_TABLE_COLUMNS))
    return EXIT_OK


def _design_from_id(mid: str, ws: float) -> MixDesign:
    sf, nh, mode = parse_mix_id(mid)
    return MixDesign.create(sf, nh, ws, mode)


def cmd_mix_cost(args):
    design = _design_from_id(args.design, args.ws)
    cost = activator_cost(design, _registry(args.registry), args.binder_kg,
                          Pricing(args.pricing) if args.pricing else None)
    rows = [vars(line) for line in cost.lines]
    _emit(args, cost.as_dict(), rows)
    return EXIT_OK


def cmd_rheo_fit(args):
    branches = read_flow_csv(args.input)
    down = branches.get(Branch.DOWN)
    if down is None:
        raise AABinderError(f"{args.input}: no down branch")
    result = {"fit": fit(down, args.model).as_dict()}
    up = branches.get(Branch.UP)
    if up is not None:
        result["protocol_deviations"] = list(validate_protocol(up, down).deviations)
        result["hysteresis"] = hysteresis_area(up, down).as_dict()
    _emit(args, result, [result["fit"]])
    return EXIT_OK


def cmd_tga_analyze(args):
    reg = _registry(args.ldca_registry)
    gram = read_thermogram_csv(args.input)
    profile = segment_losses(gram, args.scheme)
    result = {"profile": profile.as_dict()}
    if args.mix:
        design = _design_from_id(args.mix, args.ws)
        ldc_a = mix_ldca(design.parts(), registry_ldca(reg))
        calcite = args.calcite if args.calcite is not None else calcite_fraction(design.target_naoh)
        ctx = loi_context(design, reg, Interpretation())
        result["bound_water"] = bound_water_report(profile, ldc_a, ctx).as_dict()
        result["hydroxides"] = free_hydroxides(profile, ldc_a, calcite, args.mh_variant).as_dict()
    if len(gram) >= 3:
        result["dtg_peaks"] = [list(p) for p in dtg_peaks(gram, args.window)]
    _emit(args, result, [profile.as_dict() | {"normalization": ""}])
    return EXIT_OK


def _bundled(name):
    return resources.files("aabinder.data").joinpath(name)


def cmd_tga_calibrate(args):
    reg = _registry(args.registry)
    ref_path = Path(args.reference) if args.reference else _bundled("bound_water_reference.csv")
    with ref_path.open(encoding="utf-8") as fh:
        ref = list(csv.DictReader(fh))
    ldca = registry_ldca(reg)
    cases = {}
    for row in ref:
        mid = row["mix_id"]
        design = _design_from_id(mid, args.ws)
        gpath = (Path(args.data_dir) / f"{mid}.csv" if args.data_dir
                 else _bundled(f"thermograms/{mid}.csv"))
        with resources.as_file(gpath) as p:
            gram = read_thermogram_csv(p, mid)
        cases[mid] = CalibrationCase(design, segment_losses(gram), mix_ldca(design.parts(), ldca),
                                     float(row["present_study"]))
    report = calibrate_present_study(cases, reg, tol=args.tol)
    print(report.summary(), file=sys.stderr)
    _emit(args, report.as_dict(top=args.top))
    return EXIT_OK


def cmd_eds_ratios(args):
    comps = read_eds_csv(args.input)
    pairs = [parse_pair(p) for p in args.pairs.split(",")]
    index = eds_index(comps)
    rows, payload = [], {"ratios": [], "deltas": []}
    for c in comps:
        for num, den in pairs:
            try:
                r = molar_ratio(c, num, den)
            except ZeroDivisionError:
                r = None
            rec = {"sample_id": c.sample_id, "age_days": c.age_days, "pair": f"{num}/{den}", "value": r}
            payload["ratios"].append(rec)
            rows.append(rec | {"kind": "ratio"})
    if args.delta:
        a, b = (int(x) for x in args.delta.split(":"))
        for sid in dict.fromkeys(c.sample_id for c in comps):
            if (sid, a) in index and (sid, b) in index:
                for num, den in pairs:
                    try:
                        v = ratio_delta(index[sid, a], index[sid, b], num, den)
                    except ZeroDivisionError:
                        v = None
                    rec = {"sample_id": sid, "age_days": f"{a}:{b}", "pair": f"{num}/{den}",
                           "value": v}
                    payload["deltas"].append(rec)
                    rows.append(rec | {"kind": "delta_pct"})
    _emit(args, payload, rows, ["kind", "sample_id", "age_days", "pair", "value"])
    return EXIT_OK


def cmd_strength_increments(args):
    inc = increments(read_strength_csv(args.input), args.early, args.late)
    rows = [{"sample_id": k, "increment_pct": v} for k, v in inc.items()]
    _emit(args, inc, rows)
    return EXIT_OK


def cmd_project_run(args):
    project = load_project(args.project)
    report = run_project(project)
    text = report.to_json()
    out = Path(args.out) if args.out else (project.output_dir / "report.json"
                                           if project.output_dir else None)
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        print(f"report written to {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    for f in report.failures:
        print(f"section failed: {f}", file=sys.stderr)
    return EXIT_PARTIAL if report.partial else EXIT_OK


def cmd_plot_emit(args):
    if args.project:
        source = run_project(load_project(args.project))
    else:
        source = json.loads(Path(args.report).read_text(encoding="utf-8"))
    sys.stdout.write(emit_plot_data(source, args.kind))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aabinder", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="group", required=True)

    def fmt(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--json", action="store_true", help="emit JSON (default)")
        g.add_argument("--csv", action="store_true", help="emit CSV where tabular")

    g = sub.add_parser("materials", help="raw-material checks").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("check", help="precursor suitability of registry materials")
    sp.add_argument("--registry")
    fmt(sp)
    sp.set_defaults(func=cmd_materials_check)

    g = sub.add_parser("mix", help="mix design and costing").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("table", help="mix-proportion table (CSV by default)")
    sp.add_argument("--sf", required=True, help="silica fume %% list, e.g. 10,20")
    sp.add_argument("--naoh", required=True, help="target equivalent NaOH %% list")
    sp.add_argument("--ws", default="0.45", help="water/solids ratio list")
    sp.add_argument("--mode", default="solid", help="solid, control, premixed (comma list)")
    fmt(sp)
    sp.set_defaults(func=cmd_mix_table)
    sp = g.add_parser("cost", help="activator cost per m3")
    sp.add_argument("--design", required=True, help="mix id, e.g. SF10NH10 or SF10NH8_C")
    sp.add_argument("--binder-kg", type=float, required=True)
    sp.add_argument("--pricing", choices=[x.value for x in Pricing])
    sp.add_argument("--ws", type=float, default=0.45)
    sp.add_argument("--registry")
    fmt(sp)
    sp.set_defaults(func=cmd_mix_cost)

    g = sub.add_parser("rheo", help="flow-curve fitting").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("fit")
    sp.add_argument("--model", default="mb", choices=["mb", "bingham", "hb"])
    sp.add_argument("--input", required=True)
    fmt(sp)
    sp.set_defaults(func=cmd_rheo_fit)

    g = sub.add_parser("tga", help="thermogravimetric analysis").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("analyze")
    sp.add_argument("--input", required=True)
    sp.add_argument("--scheme", default="present_study", choices=[m.value for m in Method])
    sp.add_argument("--ldca-registry")
    sp.add_argument("--mix", help="mix id giving the activator dosages")
    sp.add_argument("--ws", type=float, default=0.45)
    sp.add_argument("--calcite", type=float, help="calcite weight fraction (default: stoichiometric)")
    sp.add_argument("--mh-variant", default=MHVariant.TOTAL_LDX.value,
                    choices=[v.value for v in MHVariant])
    sp.add_argument("--window", type=float, default=10.0, help="DTG smoothing window, degC")
    fmt(sp)
    sp.set_defaults(func=cmd_tga_analyze)
    sp = g.add_parser("calibrate", help="search LOI-deduction readings against reference W_B")
    sp.add_argument("--reference", help="CSV with mix_id and present_study columns")
    sp.add_argument("--data-dir", help="directory of <mix_id>.csv thermograms")
    sp.add_argument("--registry")
    sp.add_argument("--ws", type=float, default=0.45)
    sp.add_argument("--tol", type=float, default=0.05)
    sp.add_argument("--top", type=int, default=5)
    fmt(sp)
    sp.set_defaults(func=cmd_tga_calibrate)

    g = sub.add_parser("eds", help="EDS molar ratios").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("ratios")
    sp.add_argument("--input", required=True)
    sp.add_argument("--pairs", default="Ca/Si,Na/Ca,Mg/Al")
    sp.add_argument("--delta", help="age pair, e.g. 7:28")
    fmt(sp)
    sp.set_defaults(func=cmd_eds_ratios)

    g = sub.add_parser("strength", help="strength records").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("increments")
    sp.add_argument("--input", required=True)
    sp.add_argument("--early", type=int, default=28)
    sp.add_argument("--late", type=int, default=120)
    fmt(sp)
    sp.set_defaults(func=cmd_strength_increments)

    g = sub.add_parser("project", help="batch project runs").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("run")
    sp.add_argument("project")
    sp.add_argument("--out", help="report path (default: <output>/report.json or stdout)")
    fmt(sp)
    sp.set_defaults(func=cmd_project_run)

    g = sub.add_parser("plot", help="plot-data export").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("emit")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--project")
    src.add_argument("--report", help="report JSON (values carry 6 significant digits)")
    sp.add_argument("--kind", required=True, choices=PLOT_KINDS)
    fmt(sp)
    sp.set_defaults(func=cmd_plot_emit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AABinderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
