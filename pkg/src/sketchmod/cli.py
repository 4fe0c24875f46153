"""Command line entry point: ``sketchmod <command> [options]``.

Commands: stylize, sample-views, sample-labels, propagate, eval-mask,
eval-recon, regloss, report. Every random stream is keyed by
``(--seed, command, shape id)``, so outputs do not depend on ``--jobs`` or
on manifest order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .embedloss import (
    EmbeddingBatch,
    ShapeDistanceMatrix,
    gradient_check,
    regression_loss,
)
from .geometry_io import load_obj, read_points
from .manifest import DatasetManifest, ManifestEntry, ManifestError, load_manifest, read_config
from .maskkit import BinaryMask, SparseLabelSet, mask_metrics, propagate_labels, sample_labels
from .metrics3d import (
    ALIGN_MODES,
    DEFAULT_THRESHOLD,
    EMD_SAMPLES,
    PRED_SAMPLES,
    REDUCE_MODES,
    REF_SAMPLES,
    evaluate_pair,
    reference_cloud,
)
from .pgm import read_mask, write_pgm
from .seeding import derive_seed
from .sketch_svg import StylizeParams, parse_svg, rasterize, stylize_with_record, svg_string
from .viewpoints import ViewpointParams, dataset_viewpoints, select_test_viewpoint

SCHEMA_VERSION = 1
N_VIEWPOINTS = 48
CLOUD_SUFFIXES = {".xyz", ".txt", ".pts", ".bin"}
METRIC_FIELDS = ("chamfer", "emd", "precision", "recall", "fscore")
CSV_FIELDS = ("shape_id", "viewpoint_id") + METRIC_FIELDS

log = logging.getLogger("sketchmod")


class CliError(Exception):
    """Input problem reported to the user with exit status 2."""


# --------------------------------------------------------------------------
# helpers

def _dump_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _write_text(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _run_parallel(fn, tasks: list, jobs: int) -> list:
    """Map ``fn`` over ``tasks`` and return results in task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _manifest(path) -> DatasetManifest:
    try:
        return load_manifest(path)
    except ManifestError as exc:
        raise CliError(str(exc)) from exc


def _out_dir(args) -> Path:
    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# stylize

def stylize_params(args) -> StylizeParams:
    return StylizeParams(
        rot_max=args.rot_max,
        scale_range=(args.scale_lo, args.scale_hi),
        trans_radius=args.trans_radius,
        local_noise_max=args.noise_max,
        max_traces=args.max_traces,
        width_mean=args.width_mean,
        width_var=args.width_var,
        noise_wavelength=args.noise_wavelength,
    )


def _stylize_one(task) -> str | None:
    shape_id, sketch_path, svg_out, seed, params, raster = task
    try:
        if sketch_path is None:
            raise FileNotFoundError("entry has no sketch_path")
        sketch = parse_svg(sketch_path)
        stream = derive_seed(seed, "stylize", shape_id)
        out, records = stylize_with_record(sketch, params, stream)
        sidecar = {
            "schema_version": SCHEMA_VERSION,
            "shape_id": shape_id,
            "source": Path(sketch_path).name,
            "seed": seed,
            "params": {
                "rot_max": params.rot_max,
                "scale_range": list(params.scale_range),
                "trans_radius": params.trans_radius,
                "local_noise_max": params.local_noise_max,
                "max_traces": params.max_traces,
                "width_mean": params.width_mean,
                "width_var": params.width_var,
                "noise_wavelength": params.noise_wavelength,
            },
            "traces": [r.to_dict() for r in records],
        }
        _write_text(svg_out, svg_string(out))
        _write_text(svg_out.with_suffix(".params.json"), _dump_json(sidecar))
        if raster:
            write_pgm(svg_out.with_suffix(".pgm"), rasterize(out))
    except Exception as exc:  # per-entry isolation: report and continue
        return f"{type(exc).__name__}: {exc}"
    return None


def cmd_stylize(args) -> int:
    params = stylize_params(args)
    if args.manifest:
        manifest = _manifest(args.manifest)
        out_dir = _out_dir(args)
        tasks = [
            (e.shape_id, e.sketch_path, out_dir / f"{e.shape_id}.svg", args.seed, params, args.raster)
            for e in manifest.entries
        ]
    elif args.input:
        src = Path(args.input)
        dst = Path(args.output) if args.output else _out_dir(args) / f"{src.stem}.svg"
        tasks = [(src.stem, src, dst, args.seed, params, args.raster)]
    else:
        raise CliError("stylize needs --manifest or --in")
    failures = 0
    for task, err in zip(tasks, _run_parallel(_stylize_one, tasks, args.jobs)):
        if err:
            failures += 1
            log.error("stylize %s failed: %s", task[0], err)
    log.info("stylized %d/%d sketches", len(tasks) - failures, len(tasks))
    return 1 if failures else 0


# --------------------------------------------------------------------------
# sample-views

def _read_shape_list(path) -> list[str]:
    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            ids.append(line)
    if len(set(ids)) != len(ids):
        raise CliError(f"{path}: duplicate shape ids")
    return ids


def cmd_sample_views(args) -> int:
    if args.shapes:
        ids = _read_shape_list(args.shapes)
    elif args.manifest:
        ids = _manifest(args.manifest).ids
    else:
        raise CliError("sample-views needs --shapes or --manifest")
    params = ViewpointParams(
        angle_sigma=args.angle_sigma,
        min_dev=args.min_dev,
        max_dev=args.max_dev,
        distance_sigma=args.distance_sigma,
    )
    cameras, selection = [], []
    for shape_id in ids:
        for vid, v in enumerate(dataset_viewpoints(shape_id, args.seed, params)):
            cameras.append({
                "shape_id": shape_id,
                "viewpoint_id": vid,
                "azimuth_deg": v.azimuth,
                "elevation_deg": v.elevation,
                "distance": v.distance,
                "is_base": v.is_base,
                "base_id": v.base_id,
            })
        selection.append({
            "shape_id": shape_id,
            "viewpoint_id": select_test_viewpoint(shape_id, N_VIEWPOINTS, args.seed),
        })
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "projection": "perspective",
        "cameras": cameras,
        "test_selection": selection,
    }
    out = Path(args.out) if args.out else _out_dir(args) / "cameras.json"
    _write_text(out, _dump_json(doc))
    log.info("wrote %d cameras for %d shapes to %s", len(cameras), len(ids), out)
    return 0


# --------------------------------------------------------------------------
# masks

def _sample_labels_one(task) -> str | None:
    mask_path, out_path, seed = task
    try:
        gt = BinaryMask(read_mask(mask_path))
        labels = sample_labels(gt, derive_seed(seed, "sample-labels", Path(mask_path).stem))
        _write_text(out_path, labels.to_json() + "\n")
    except Exception as exc:
        return f"{type(exc).__name__}: {exc}"
    return None


def cmd_sample_labels(args) -> int:
    out_dir = _out_dir(args)
    tasks = [(Path(m), out_dir / f"{Path(m).stem}.labels.json", args.seed) for m in args.masks]
    failures = 0
    for task, err in zip(tasks, _run_parallel(_sample_labels_one, tasks, args.jobs)):
        if err:
            failures += 1
            log.error("sample-labels %s failed: %s", task[0], err)
    return 1 if failures else 0


def _load_raster(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".svg":
        return rasterize(parse_svg(path))
    return read_mask(path)


def cmd_propagate(args) -> int:
    raster = _load_raster(Path(args.sketch))
    labels = SparseLabelSet.from_json(Path(args.labels).read_text(encoding="utf-8"))
    try:
        mask = propagate_labels(raster, labels, crossing_cost=args.crossing_cost)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = Path(args.out) if args.out else _out_dir(args) / f"{Path(args.sketch).stem}.mask.pgm"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pgm(out, mask.bits)
    return 0


def cmd_eval_mask(args) -> int:
    try:
        report = mask_metrics(BinaryMask(read_mask(args.pred)), BinaryMask(read_mask(args.gt)))
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc = {
        "schema_version": SCHEMA_VERSION,
        "pred": Path(args.pred).name,
        "gt": Path(args.gt).name,
        "iou": report.iou,
        "precision": report.precision,
        "recall": report.recall,
    }
    text = _dump_json(doc)
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# eval-recon

def _load_reference(path: Path, shape_id: str, seed: int, n_ref: int):
    if path.suffix.lower() in CLOUD_SUFFIXES:
        return read_points(path)
    return reference_cloud(load_obj(path), derive_seed(seed, "reference", shape_id), n_ref)


def _eval_one(task):
    pred_entry, ref_entry, viewpoint_id, seed, opts = task
    try:
        if pred_entry.mesh_path is None or ref_entry.mesh_path is None:
            raise FileNotFoundError("missing mesh_path")
        ref = _load_reference(ref_entry.mesh_path, ref_entry.shape_id, seed, opts["n_ref"])
        report = evaluate_pair(
            load_obj(pred_entry.mesh_path),
            ref,
            derive_seed(seed, "eval-recon", pred_entry.shape_id),
            n_pred=opts["n_pred"],
            n_emd=opts["n_emd"],
            threshold=opts["threshold"],
            reduce=opts["reduce"],
            align=opts["align"],
            emd_backend=opts["emd_backend"],
        )
    except Exception as exc:
        return None, f"{type(exc).__name__}: {exc}"
    row = {
        "shape_id": pred_entry.shape_id,
        "category": ref_entry.category or pred_entry.category,
        "viewpoint_id": viewpoint_id,
        **{k: getattr(report, k) for k in METRIC_FIELDS},
        "threshold": report.threshold,
    }
    return row, None


def aggregate(records: list[dict]) -> list[dict]:
    """Per-category means of every metric, categories sorted by name."""
    groups: dict[str, list[dict]] = defaultdict(list)
    for r in records:
        groups[r.get("category", "")].append(r)
    out = []
    for cat in sorted(groups):
        rows = groups[cat]
        agg = {"category": cat, "n": len(rows)}
        for key in METRIC_FIELDS:
            vals = [r[key] for r in rows if r.get(key) is not None]
            agg[key] = math.fsum(vals) / len(vals) if vals else None
        out.append(agg)
    return out


def _fmt_csv(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in records:
        writer.writerow([_fmt_csv(r[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def cmd_eval_recon(args) -> int:
    pred = _manifest(args.pred)
    ref = _manifest(args.ref)
    pred_ids, ref_ids = set(pred.ids), set(ref.ids)
    if pred_ids != ref_ids:
        only_pred = sorted(pred_ids - ref_ids)
        only_ref = sorted(ref_ids - pred_ids)
        raise CliError(f"shape ids differ; only in pred: {only_pred}; only in ref: {only_ref}")
    missing = sorted(set(pred.missing_paths()) | set(ref.missing_paths()))
    if missing:
        raise CliError(f"unresolvable mesh paths for: {missing}")

    opts = {
        "n_pred": args.n_pred,
        "n_ref": args.n_ref,
        "n_emd": args.n_emd,
        "threshold": args.threshold,
        "reduce": args.reduce,
        "align": args.align,
        "emd_backend": args.emd_backend,
    }
    refs = ref.by_id()
    tasks = []
    for p in pred.entries:
        sid = p.shape_id
        vid = p.viewpoint_id
        if vid is None:
            vid = refs[sid].viewpoint_id
        if vid is None:
            vid = select_test_viewpoint(sid, N_VIEWPOINTS, args.seed)
        tasks.append((p, refs[sid], vid, args.seed, opts))

    records, failures = [], []
    for task, (row, err) in zip(tasks, _run_parallel(_eval_one, tasks, args.jobs)):
        if err:
            failures.append({"shape_id": task[0].shape_id, "error": err})
            log.error("eval-recon %s failed: %s", task[0].shape_id, err)
        else:
            records.append(row)

    out_dir = _out_dir(args)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "config": opts,
        "records": records,
        "aggregates": aggregate(records),
        "failures": failures,
    }
    _write_text(out_dir / "metrics.csv", metrics_csv(records))
    _write_text(out_dir / "metrics.json", _dump_json(doc))
    log.info("evaluated %d shapes (%d failed)", len(records), len(failures))
    return 1 if failures else 0


# --------------------------------------------------------------------------
# report

def _report_records(doc) -> tuple[list[dict], list[dict] | None]:
    if isinstance(doc, list):
        return doc, None
    if isinstance(doc, dict) and isinstance(doc.get("records"), list):
        return doc["records"], doc.get("aggregates")
    raise CliError("metric JSON must be an array of records or an object with 'records'")


def check_aggregates(records: list[dict], embedded: list[dict], tol: float = 1e-12) -> list[dict]:
    """Recompute per-category means and compare them with ``embedded``."""
    fresh = aggregate(records)
    if [a["category"] for a in fresh] != [a.get("category") for a in embedded]:
        raise CliError("embedded aggregates do not match the record categories")
    for a, b in zip(fresh, embedded):
        for key in METRIC_FIELDS:
            x, y = a[key], b.get(key)
            if (x is None) != (y is None) or (x is not None and abs(x - y) > tol):
                raise CliError(f"aggregate {key} for {a['category']!r} is inconsistent ({y} vs {x})")
    return fresh


def format_table(aggregates: list[dict]) -> str:
    header = ("category", "n") + METRIC_FIELDS
    rows = [header]
    for a in aggregates:
        rows.append((a["category"] or "-", str(a["n"]),
                     *("-" if a[k] is None else f"{a[k]:.6g}" for k in METRIC_FIELDS)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in rows]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def format_gnuplot(aggregates: list[dict]) -> str:
    lines = ["# " + " ".join(("category", "n") + METRIC_FIELDS)]
    for a in aggregates:
        vals = ["NaN" if a[k] is None else repr(a[k]) for k in METRIC_FIELDS]
        lines.append(" ".join([json.dumps(a["category"] or "-"), str(a["n"]), *vals]))
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    try:
        doc = json.loads(Path(args.metrics).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{args.metrics}: {exc}") from exc
    records, embedded = _report_records(doc)
    for r in records:
        if not isinstance(r, dict) or any(k not in r for k in ("shape_id",) + METRIC_FIELDS):
            raise CliError("metric record is missing fields")
    aggs = check_aggregates(records, embedded) if embedded is not None else aggregate(records)
    table = format_table(aggs)
    if args.out:
        _write_text(Path(args.out), table)
    else:
        sys.stdout.write(table)
    if args.gnuplot:
        _write_text(Path(args.gnuplot), format_gnuplot(aggs))
    return 0


# --------------------------------------------------------------------------
# regloss

def _read_matrix_csv(path, expect: tuple[str, ...]) -> tuple[dict, np.ndarray]:
    """CSV whose first row is ``key=value`` cells (e.g. ``B=4,d=8``) followed by numeric rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise CliError(f"{path}: empty file")
    header = {}
    for cell in rows[0]:
        if "=" not in cell:
            raise CliError(f"{path}: header must be key=value cells, got {rows[0]}")
        k, v = cell.split("=", 1)
        header[k.strip()] = int(v)
    if set(header) != set(expect):
        raise CliError(f"{path}: header needs keys {expect}, got {sorted(header)}")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc
    return header, data


def cmd_regloss(args) -> int:
    hdr, emb = _read_matrix_csv(args.embeddings, ("B", "d"))
    if emb.shape != (hdr["B"], hdr["d"]):
        raise CliError(f"{args.embeddings}: expected {hdr['B']}x{hdr['d']} values, got {emb.shape}")
    dh, dist = _read_matrix_csv(args.distances, ("B",))
    if dist.shape != (dh["B"], dh["B"]):
        raise CliError(f"{args.distances}: expected {dh['B']}x{dh['B']} values, got {dist.shape}")
    sigma = None
    if args.sigmas:
        sh, s = _read_matrix_csv(args.sigmas, ("B",))
        sigma = s.reshape(-1)
        if len(sigma) != sh["B"]:
            raise CliError(f"{args.sigmas}: expected {sh['B']} sigmas")
    try:
        batch = EmbeddingBatch(emb)
        dmat = ShapeDistanceMatrix.from_distances(dist, sigma)
        report = regression_loss(batch, dmat)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc = {
        "schema_version": SCHEMA_VERSION,
        "B": hdr["B"],
        "d": hdr["d"],
        "loss": report.loss,
        "grad": report.grad.tolist(),
    }
    if args.grad_check:
        doc["grad_check"] = {"h": args.h, "max_rel_error": gradient_check(batch, dmat, args.h)}
    text = _dump_json(doc)
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# parser

COMMANDS = {
    "stylize": cmd_stylize,
    "sample-views": cmd_sample_views,
    "sample-labels": cmd_sample_labels,
    "propagate": cmd_propagate,
    "eval-mask": cmd_eval_mask,
    "eval-recon": cmd_eval_recon,
    "regloss": cmd_regloss,
    "report": cmd_report,
}


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sketchmod", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    defaults = StylizeParams()
    p = sub.add_parser("stylize", parents=[common], help="stochastic stroke stylization")
    p.add_argument("--manifest", help="dataset manifest with sketch_path entries")
    p.add_argument("--in", dest="input", help="single input SVG")
    p.add_argument("--out", dest="output", help="single output SVG")
    p.add_argument("--raster", action="store_true", help="also write a PGM raster")
    p.add_argument("--rot-max", type=float, default=defaults.rot_max)
    p.add_argument("--scale-lo", type=float, default=defaults.scale_range[0])
    p.add_argument("--scale-hi", type=float, default=defaults.scale_range[1])
    p.add_argument("--trans-radius", type=float, default=defaults.trans_radius)
    p.add_argument("--noise-max", type=float, default=defaults.local_noise_max)
    p.add_argument("--noise-wavelength", type=_positive_float, default=defaults.noise_wavelength)
    p.add_argument("--max-traces", type=_positive_int, default=defaults.max_traces)
    p.add_argument("--width-mean", type=_positive_float, default=defaults.width_mean)
    p.add_argument("--width-var", type=float, default=defaults.width_var)

    vp = ViewpointParams()
    p = sub.add_parser("sample-views", parents=[common], help="48 camera viewpoints per shape")
    p.add_argument("--shapes", help="text file, one shape id per line")
    p.add_argument("--manifest", help="dataset manifest (alternative to --shapes)")
    p.add_argument("--out", help="output camera JSON")
    p.add_argument("--angle-sigma", type=_positive_float, default=vp.angle_sigma)
    p.add_argument("--min-dev", type=float, default=vp.min_dev)
    p.add_argument("--max-dev", type=float, default=vp.max_dev)
    p.add_argument("--distance-sigma", type=_positive_float, default=vp.distance_sigma)

    p = sub.add_parser("sample-labels", parents=[common], help="sparse labels from GT masks")
    p.add_argument("masks", nargs="+", help="ground-truth masks (PGM)")

    p = sub.add_parser("propagate", parents=[common], help="labels -> foreground mask")
    p.add_argument("--sketch", required=True, help="sketch SVG or PGM raster")
    p.add_argument("--labels", required=True, help="labels JSON")
    p.add_argument("--out", help="output mask PGM")
    p.add_argument("--crossing-cost", type=_positive_float, default=50.0)

    p = sub.add_parser("eval-mask", parents=[common], help="IoU / precision / recall")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out")

    p = sub.add_parser("eval-recon", parents=[common], help="Chamfer / EMD / F-score")
    p.add_argument("--pred", required=True, help="manifest of predicted meshes")
    p.add_argument("--ref", required=True, help="manifest of reference meshes or point files")
    p.add_argument("--threshold", type=_positive_float, default=DEFAULT_THRESHOLD)
    p.add_argument("--reduce", choices=REDUCE_MODES, default="sum")
    p.add_argument("--align", choices=ALIGN_MODES, default="centroid-scale")
    p.add_argument("--n-pred", type=_positive_int, default=PRED_SAMPLES)
    p.add_argument("--n-ref", type=_positive_int, default=REF_SAMPLES)
    p.add_argument("--n-emd", type=int, default=EMD_SAMPLES, help="0 disables EMD")
    p.add_argument("--emd-backend", choices=("scipy", "sap"), default="scipy")

    p = sub.add_parser("regloss", parents=[common], help="embedding regression loss")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--distances", required=True)
    p.add_argument("--sigmas", help="per-shape sigmas; default 0.997/3 * row max")
    p.add_argument("--grad-check", action="store_true")
    p.add_argument("--h", type=_positive_float, default=1e-5, help="finite-difference step")
    p.add_argument("--out")

    p = sub.add_parser("report", parents=[common], help="summary table from metrics JSON")
    p.add_argument("metrics")
    p.add_argument("--gnuplot", help="also write gnuplot data columns")
    p.add_argument("--out")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install values from ``--config`` as defaults of the matching subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = read_config(known.config)
    except (OSError, ManifestError) as exc:
        raise CliError(f"config: {exc}") from exc
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    used = set()
    for sp in subparsers.choices.values():
        values = {}
        for action in sp._actions:
            if action.dest not in cfg:
                continue
            raw = cfg[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                try:
                    value = action.type(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise CliError(f"config {action.dest}: {exc}") from exc
            else:
                value = raw
            if action.choices is not None and value not in action.choices:
                raise CliError(f"config {action.dest}: {value!r} not in {list(action.choices)}")
            values[action.dest] = value
            used.add(action.dest)
        sp.set_defaults(**values)
    unknown = sorted(set(cfg) - used - {"config"})
    if unknown:
        raise CliError(f"unknown config keys: {unknown}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"sketchmod: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
