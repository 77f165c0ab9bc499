"""Command-line entry point: ingest, scale, fit, report, synth.

Exit codes: 0 success, 1 fatal configuration/input error, 2 not enough data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .aggregate import (
    Dimension,
    RecordColumns,
    attach_flux,
    northerly_fraction,
    ratio_summary,
    read_flux,
    table_from_columns,
)
from .errors import DegenerateDesign, MissingAzimuth, ScintError, ZeroReference, ZeroVariance
from .fitbench import FILTER_SIDES, build_pairs, compare_models, fitted_model
from .ingest import (
    SEPTENTRIO_ISMR,
    GeoFilter,
    ParseReport,
    apply_filter,
    load_column_map,
    parse_ismr,
    parse_ro,
    read_canonical,
    write_canonical,
)
from .scintcore import DEFAULT_CEILING, DNA, Constellation, ExponentModel, ModelKind, get_band, scale_s4_array
from .synthlab import gen_scenario, load_scenario_spec

log = logging.getLogger("scintscale")

EXIT_OK, EXIT_FATAL, EXIT_NO_DATA = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_FATAL):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ helpers

def _write_output(path: str, chunks):
    """Write text chunks to ``path`` atomically (temp file + rename); ``-`` is stdout."""
    if path == "-":
        sys.stdout.writelines(chunks)
        sys.stdout.flush()
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(chunks)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_lines(path: str):
    if path == "-":
        return sys.stdin.read().splitlines()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _load_canonical(paths) -> list:
    records, report = [], ParseReport()
    for path in paths:
        recs, rep = read_canonical(_read_lines(path))
        records.extend(recs)
        report += rep
    if report.skipped:
        log.warning("skipped %d malformed canonical rows", report.skipped)
    return records


def _range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}")
    try:
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numeric MIN:MAX, got {text!r}") from None


def _ceiling(text: str) -> float | None:
    return None if text.lower() == "none" else float(text)


def _load_model(spec: str) -> ExponentModel:
    if spec.lower() == "dna":
        return DNA
    try:
        data = json.loads(Path(spec).read_text(encoding="utf-8"))
        fit = data.get("fitted", data)
        domain = tuple(data.get("domain", (0.3, 1.0)))
        return ExponentModel.fitted(fit["slope"], fit["intercept"], domain)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"--model must be 'dna' or a fit JSON file: {exc}") from None


def _bands(text: str):
    return [get_band(name) for name in text.split(",") if name.strip()]


# ----------------------------------------------------------------- commands

def cmd_ingest(args) -> int:
    geo = None if args.no_filter else GeoFilter(args.min_elevation, args.lon_range, args.lat_range)
    records, report = [], ParseReport()
    for path in args.inputs:
        lines = _read_lines(path)
        if args.format == "ismr":
            if args.station_lat is None or args.station_lon is None:
                raise CliError("--station-lat and --station-lon are required for ISMR input")
            cmap = load_column_map("\n".join(_read_lines(args.map))) if args.map else SEPTENTRIO_ISMR
            recs, rep = parse_ismr(lines, cmap, args.station_lat, args.station_lon, get_band(args.freq))
        elif args.format == "ro":
            recs, rep = parse_ro(lines)
        else:
            recs, rep = read_canonical(lines)
        records.extend(recs)
        report += rep
    kept = apply_filter(records, geo) if geo is not None else records
    summary = report.to_dict()
    summary["filtered_out"] = len(records) - len(kept)
    summary["written"] = len(kept)
    sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")
    _write_output(args.output, write_canonical(kept))
    return EXIT_OK if kept else EXIT_NO_DATA


def cmd_scale(args) -> int:
    band = get_band(args.target_band)
    model = _load_model(args.model)
    records = _load_canonical([args.input])
    cols = RecordColumns.from_records(records, fixed_offset_h=0.0)
    scaled = scale_s4_array(cols.s4, cols.freq_mhz, band, model, args.ceiling).tolist()
    out = [r.with_s4(s, band.freq_mhz) for r, s in zip(records, scaled)]
    _write_output(args.output, write_canonical(out))
    return EXIT_OK


def cmd_fit(args) -> int:
    lo, hi = args.domain
    sides = []
    for path in (args.source, args.target):
        recs = _load_canonical([path])
        if args.constellation != "any":
            recs = [r for r in recs if r.constellation is Constellation[args.constellation]]
        freqs = {r.freq_mhz for r in recs}
        if len(freqs) > 1:
            raise CliError(f"{path}: records at several frequencies {sorted(freqs)}")
        recs.sort(key=lambda r: r.timestamp_utc)
        sides.append((recs, freqs.pop() if freqs else None))
    (src, f1), (dst, f2) = sides
    if f1 is not None and f1 == f2:
        raise CliError("fit inputs must be at two distinct frequencies")
    samples = build_pairs(src, dst, args.max_skew, (lo, hi), args.filter_side)
    if len(samples) < 2:
        raise CliError(f"only {len(samples)} matched pairs in the fit domain; need at least 2", EXIT_NO_DATA)
    try:
        fitted = fitted_model(samples, (lo, hi))
        pairs = [(s.s4_source, s.s4_target) for s in samples]
        rows = dict(compare_models(pairs, f1, f2, [DNA, fitted]))
    except (DegenerateDesign, ZeroVariance) as exc:
        raise CliError(str(exc), EXIT_NO_DATA) from None
    best = rows[ModelKind.FITTED]
    result = {
        "f1_mhz": f1, "f2_mhz": f2, "domain": [lo, hi], "filter_side": args.filter_side,
        "slope": best.slope, "intercept": best.intercept, "rmse": best.rmse, "r2": best.r2,
        "n_samples": len(samples),
        "fitted": best.to_dict(),
        "dna": rows[ModelKind.DNA_LINEAR].to_dict(),
    }
    _write_output(args.output, [_dump_json(result)])
    return EXIT_OK


_KEY_COLUMN = {
    Dimension.HOUR_LT: "hour_lt", Dimension.MONTH: "month",
    Dimension.YEAR: "year", Dimension.AZIMUTH_SECTOR: "azimuth_deg",
}


def cmd_report(args) -> int:
    dimension = Dimension(args.by)
    bands = _bands(args.bands)
    if not bands:
        raise CliError("--bands must name at least one band")
    model = _load_model(args.model)
    records = _load_canonical(args.inputs)
    if not records:
        log.warning("no input records; writing an all-zero report")
    cols = RecordColumns.from_records(records, args.station_lon, args.fixed_offset)
    try:
        keys = cols.keys(dimension)
    except MissingAzimuth as exc:
        raise CliError(f"{exc} (input contains records without azimuth)") from None
    tables = [table_from_columns(cols, dimension, args.threshold, b, model, args.ceiling, keys) for b in bands]

    header = [_KEY_COLUMN[dimension]] + [b.name for b in bands]
    flux_rows = None
    if args.flux and dimension is Dimension.YEAR:
        flux, rep = read_flux(_read_lines(args.flux))
        if rep.skipped:
            log.warning("skipped %d flux rows", rep.skipped)
        flux_rows = attach_flux(tables[0], flux)
        header += ["mean_f107_sfu", "flux_flag"]
    elif args.flux:
        log.warning("--flux only applies to --by year; ignored")

    lines = [",".join(header) + "\n"]
    for i, (key, _) in enumerate(tables[0].bins):
        row = [str(key)] + [str(t.bins[i][1]) for t in tables]
        if flux_rows is not None:
            fr = flux_rows[i]
            row += ["" if fr.mean_f107 is None else f"{fr.mean_f107:.3f}", fr.flag]
        lines.append(",".join(row) + "\n")

    totals = {b.name: t.total for b, t in zip(bands, tables)}
    summary = {
        "by": dimension.value, "bands": [b.name for b in bands], "threshold": args.threshold,
        "model": args.model, "n_records": len(records), "totals": totals,
        "reference": bands[0].name,
    }
    try:
        summary["ratios"] = ratio_summary(totals, bands[0].name)
    except ZeroReference:
        log.warning("reference band %s has no occurrences; ratios omitted", bands[0].name)
        summary["ratios"] = None
    if dimension is Dimension.AZIMUTH_SECTOR:
        summary["northerly_fraction"] = {b.name: northerly_fraction(t)._asdict() for b, t in zip(bands, tables)}
    if flux_rows is not None:
        summary["no_flux_years"] = [r.year for r in flux_rows if r.flag]

    _write_output(args.output, lines)
    summary_path = args.summary or (None if args.output == "-" else str(Path(args.output).with_suffix(".summary.json")))
    if summary_path is None:
        sys.stderr.write(_dump_json(summary))
    else:
        _write_output(summary_path, [_dump_json(summary)])
    return EXIT_OK


def cmd_synth(args) -> int:
    scenario = gen_scenario(load_scenario_spec("\n".join(_read_lines(args.spec))))
    _write_output(args.output, write_canonical(scenario.records))
    truth_path = args.truth or (None if args.output == "-" else str(Path(args.output).with_suffix(".truth.json")))
    if truth_path is None:
        sys.stderr.write(_dump_json(scenario.truth.to_dict()))
    else:
        _write_output(truth_path, [_dump_json(scenario.truth.to_dict())])
    return EXIT_OK


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scintscale", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse ISMR / RO / canonical files into canonical CSV")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=("ismr", "ro", "canonical"), required=True)
    p.add_argument("--map", help="ISMR column map (key=value); default: Septentrio preset")
    p.add_argument("--station-lat", type=float)
    p.add_argument("--station-lon", type=float)
    p.add_argument("--freq", default="L1", help="band of the ISMR S4 column (default L1)")
    p.add_argument("--min-elevation", type=float, default=30.0)
    p.add_argument("--lon-range", type=_range, default=(54.0, 57.0))
    p.add_argument("--lat-range", type=_range, default=(23.0, 27.0))
    p.add_argument("--no-filter", action="store_true", help="skip elevation and region filtering")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("scale", help="scale S4 to another band")
    p.add_argument("input")
    p.add_argument("--target-band", required=True)
    p.add_argument("--model", default="dna", help="'dna' or a JSON file written by 'fit'")
    p.add_argument("--ceiling", type=_ceiling, default=DEFAULT_CEILING, help="scaled S4 cap, or 'none'")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("fit", help="fit the exponent line on dual-frequency records")
    p.add_argument("source", help="canonical CSV at the source frequency")
    p.add_argument("target", help="canonical CSV at the target frequency")
    p.add_argument("--domain", type=_range, default=(0.3, 1.0))
    p.add_argument("--filter-side", choices=FILTER_SIDES, default="both")
    p.add_argument("--max-skew", type=float, default=0.0, help="pairing tolerance in seconds")
    p.add_argument("--constellation", choices=("GPS", "GALILEO", "any"), default="GPS")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="occurrence tables per band")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--by", choices=[d.value for d in Dimension], required=True)
    p.add_argument("--bands", default="L1,LB,N255,N256")
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--model", default="dna")
    p.add_argument("--ceiling", type=_ceiling, default=DEFAULT_CEILING)
    p.add_argument("--flux", help="daily F10.7 CSV (date,f107_sfu) for --by year")
    p.add_argument("--station-lon", type=float, help="longitude for ground-record local time")
    p.add_argument("--fixed-offset", type=float, help="use a fixed UTC offset in hours instead of solar time")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--summary", help="summary JSON path (default: <output>.summary.json)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("spec", help="scenario config (key=value)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--truth", help="ground-truth JSON path (default: <output>.truth.json)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except ScintError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
