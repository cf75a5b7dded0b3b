"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data error.  Every subcommand that
draws random numbers takes the seed explicitly (or from the manifest), so runs
are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import npyio, reports
from .analysis import (
    CoverageRecord,
    NoiseReport,
    coverage_table,
    compute_unit_sams,
    image_mu_scores,
    layer_sweep,
    noise_sweep,
    rank_images,
    separableness_sweep,
    unit_heatmap,
    unit_sweep,
)
from .core import protoseg, upsample
from .diffkernel import GradMode, finite_diff_check
from .errors import EmptyInputError, ProtoSegError
from .manifest import load_manifest
from .metrics import sa_score
from .render import render_curve, render_heatmap
from .synthetic import (
    simulated_output,
    synthetic_features,
    synthetic_mask,
)
from .types import FeatureMap, LabelMask

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this surface reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _float_list(text: str, flag: str, parser: argparse.ArgumentParser) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        parser.error(f"argument {flag}: expected comma-separated numbers, got {text!r}")
    if not values:
        parser.error(f"argument {flag}: expected at least one number")
    return values


def _load_mask_arg(path):
    return npyio.load_mask(path, soft_ok=True)


def _mask_dims(mask) -> tuple[int, int]:
    if isinstance(mask, np.ndarray):
        return mask.shape[0], mask.shape[1]
    return mask.spatial_shape


def _aligned_feature(path, mask, mode: str) -> FeatureMap:
    fm = npyio.load_feature(path)
    h, w = _mask_dims(mask)
    if fm.spatial_shape != (h, w):
        fm = upsample(fm, h, w, mode=mode)
    return fm


def _save_or_print(report, out, fmt, lines) -> None:
    if out:
        reports.save_report(report, out, fmt)
        print(f"wrote {out}")
    else:
        for line in lines:
            print(line)


def _fmt_opt(value) -> str:
    return reports.format_float(value) if value is not None else "n/a"


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_sam(args, parser) -> int:
    mask = _load_mask_arg(args.mask)
    fm = _aligned_feature(args.feature, mask, args.mode)
    probs, sam = protoseg(fm, mask)
    npyio.write_mask(args.out, sam)
    if args.probs:
        npyio.write_tensor(args.probs, probs.probs.astype(np.float32))
    if args.truth:
        truth = npyio.load_mask(args.truth)
        score = sa_score(sam, truth, positive_class=args.positive_class)
        print(f"sa_score: {reports.format_float(score.value)}")
    return 0


def _cmd_score(args, parser) -> int:
    pred = npyio.load_mask(args.pred)
    truth = npyio.load_mask(args.truth)
    score = sa_score(pred, truth, positive_class=args.positive_class)
    print(f"sa_score: {reports.format_float(score.value)}")
    return 0


def _cmd_layer_sweep(args, parser) -> int:
    man = load_manifest(args.manifest)
    report = layer_sweep(man, jobs=args.jobs, upsample_mode=args.mode)
    lines = [
        f"layer {s.layer_index}: mean_sa={_fmt_opt(s.mean_sa)} "
        f"std={_fmt_opt(s.std_sa)} n={s.count} errors={s.error_count}"
        for s in report.layers
    ]
    _save_or_print(report, args.out, args.format, lines)
    for entry in report.entries:
        if entry.error:
            print(f"warning: {entry.image_id}/layer{entry.layer_index}: {entry.error}",
                  file=sys.stderr)
    return 0


def _cmd_unit_sweep(args, parser) -> int:
    mask = _load_mask_arg(args.mask)
    truth = npyio.load_mask(args.truth)
    fm = _aligned_feature(args.feature, mask, args.mode)
    sams = compute_unit_sams(fm, mask, jobs=args.jobs)
    report = unit_sweep(fm, mask, truth, positive_class=args.positive_class, sams=sams)
    if args.heatmap:
        render_heatmap(unit_heatmap(sams, positive_class=args.positive_class), args.heatmap)
        print(f"wrote {args.heatmap}")
    lines = [f"boundary_index: {report.boundary_index}"]
    lines += [
        f"rank {i}: unit {u.unit_id} sa={_fmt_opt(u.sa)} group={report.group_of(i)}"
        for i, u in enumerate(report.units)
    ]
    _save_or_print(report, args.out, args.format, lines)
    return 0


def _mu_records(args, parser):
    man = load_manifest(args.manifest)
    records, errors = image_mu_scores(
        man, jobs=args.jobs, upsample_mode=args.mode, last_n_layers=args.last_layers
    )
    for err in errors:
        print(f"warning: {err}", file=sys.stderr)
    return man, records


def _cmd_rank(args, parser) -> int:
    _, records = _mu_records(args, parser)
    report = rank_images(records)
    lines = [
        f"rank {e.rank}: {e.image_id} mu={reports.format_float(e.mu)}"
        for e in report.entries
    ]
    _save_or_print(report, args.out, args.format, lines)
    return 0


def _cmd_coverage(args, parser) -> int:
    coverages = _float_list(args.coverages, "--coverages", parser)
    man, records = _mu_records(args, parser)
    by_id = {img.image_id: img for img in man.images}
    cov_records = []
    for rec in records:
        image = by_id[rec.image_id]
        dice = None
        if image.ground_truth is not None:
            truth = npyio.load_mask(image.ground_truth)
            output = npyio.load_mask(image.output, soft_ok=True)
            if isinstance(output, np.ndarray):
                output = LabelMask((output >= 0.5).astype(np.int64))
            dice = sa_score(output, truth).value
        cov_records.append(CoverageRecord(rec.image_id, rec.mu, dice))
    report = coverage_table(cov_records, coverages)
    lines = [
        f"coverage {reports.format_float(r.coverage_pct)}%: retained={r.retained_count} "
        f"mean_dice={_fmt_opt(r.mean_dice)} std={_fmt_opt(r.std_dice)}"
        for r in report.rows
    ]
    _save_or_print(report, args.out, args.format, lines)
    return 0


def _cmd_separableness(args, parser) -> int:
    man = load_manifest(args.manifest)
    report = separableness_sweep(man, jobs=args.jobs)
    for err in report.errors:
        print(f"warning: {err}", file=sys.stderr)
    lines = [f"mean_gain: {_fmt_opt(report.mean_gain)}"]
    lines += [
        f"{r.image_id}: sa_input={reports.format_float(r.sa_input)} "
        f"dice_output={reports.format_float(r.dice_output)} "
        f"gain={reports.format_float(r.d)}"
        for r in report.records
    ]
    _save_or_print(report, args.out, args.format, lines)
    return 0


def _cmd_noise(args, parser) -> int:
    levels = _float_list(args.levels, "--levels", parser)
    man = load_manifest(args.manifest)
    report: NoiseReport = noise_sweep(
        man, levels, jobs=args.jobs, upsample_mode=args.mode, global_seed=args.seed
    )
    for err in report.errors:
        print(f"warning: {err}", file=sys.stderr)
    lines = [
        f"layer {e.layer_index} level {reports.format_float(e.level)}: "
        f"mean_sa_diff={_fmt_opt(e.mean_sa_diff)} n={e.count}"
        for e in report.entries
    ]
    _save_or_print(report, args.out, args.format, lines)
    return 0


def _cmd_gradcheck(args, parser) -> int:
    rng = np.random.default_rng(args.seed)
    values = rng.standard_normal((args.height, args.width, args.channels))
    init = (rng.random((args.height, args.width)) < 0.5).astype(np.int64)
    init.flat[0] = 0
    init.flat[-1] = 1
    truth = (rng.random((args.height, args.width)) < 0.5).astype(np.int64)
    mode = GradMode.THROUGH_PROTOTYPES if args.grad_mode == "through" else GradMode.DETACHED_PROTOTYPES
    err = finite_diff_check(
        FeatureMap(values), LabelMask(init), LabelMask(truth), mode=mode, step=args.step
    )
    print(f"max relative error: {err:.3e}")
    return 0 if err < args.tol else DATA_ERROR


def _cmd_synth(args, parser) -> int:
    separations = _float_list(args.separations, "--separations", parser)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    output_separation = float(np.mean(separations))
    images = []
    for i in range(args.count):
        image_id = f"img{i:03d}"
        img_dir = out_dir / image_id
        img_dir.mkdir(exist_ok=True)
        image_seed = int(np.random.SeedSequence([args.seed, i]).generate_state(1)[0])
        rng = np.random.default_rng(image_seed)
        gt = synthetic_mask(rng, args.height, args.width, args.object_fraction)
        x = synthetic_features(rng, gt, 1, args.input_separation, args.sigma)
        layers = []
        for j, sep in enumerate(separations):
            feat = synthetic_features(rng, gt, args.channels, sep, args.sigma)
            rel = f"{image_id}/layer{j}.npy"
            npyio.write_tensor(out_dir / rel, feat.astype(np.float32))
            layers.append({"layer_index": j, "channels": args.channels, "feature": rel})
        output = simulated_output(rng, gt, output_separation)
        npyio.write_tensor(img_dir / "input.npy", x.astype(np.float32))
        npyio.write_tensor(img_dir / "gt.npy", gt)
        npyio.write_tensor(img_dir / "output.npy", output)
        images.append(
            {
                "id": image_id,
                "input": f"{image_id}/input.npy",
                "ground_truth": f"{image_id}/gt.npy",
                "output": f"{image_id}/output.npy",
                "layers": layers,
            }
        )
    manifest = {"version": 1, "global_seed": args.seed, "images": images}
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(reports.to_json_text(manifest))
    print(f"wrote {manifest_path}")
    return 0


def _read_curve_csv(path, x_col: str, y_col: str, series_col: str | None):
    series: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInputError(f"{path}: empty CSV")
        for col in filter(None, (x_col, y_col, series_col)):
            if col not in reader.fieldnames:
                raise ProtoSegError(f"{path}: no column named {col!r}")
        for row in reader:
            if row[x_col] == "" or row[y_col] == "":
                continue
            name = row[series_col] if series_col else y_col
            series.setdefault(name, []).append((float(row[x_col]), float(row[y_col])))
    return series


def _cmd_render(args, parser) -> int:
    if args.heatmap:
        arr = npyio.read_tensor(args.heatmap)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        render_heatmap(arr.astype(np.float64), args.out, lo=args.lo, hi=args.hi)
    else:
        series = _read_curve_csv(args.curve, args.x, args.y, args.series)
        render_curve(series, args.out, x_label=args.x_label or args.x,
                     y_label=args.y_label or args.y)
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_common(sub, manifest=False, out=True, jobs=False, mode=False):
    if manifest:
        sub.add_argument("--manifest", required=True, help="analysis manifest JSON")
    if out:
        sub.add_argument("--out", help="report output path (.json or .csv)")
        sub.add_argument("--format", choices=["json", "csv"], help="override format inferred from --out suffix")
    if jobs:
        sub.add_argument("--jobs", type=int, help="worker threads (default: PROTOSEG_JOBS or logical cores)")
    if mode:
        sub.add_argument("--mode", choices=["bilinear", "nearest"], default="bilinear",
                         help="upsampling mode")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="protoseg", description="Prototype-based segmentation ability analysis.")
    subs = parser.add_subparsers(dest="command", metavar="command")

    p = subs.add_parser("sam", parents=[], help="segment one feature dump with an initial mask",
                        description="Segment a feature dump, writing the resulting mask.")
    p.add_argument("--feature", required=True)
    p.add_argument("--mask", required=True, help="initial mask dump (uint8 labels or float32 soft)")
    p.add_argument("--out", required=True, help="output mask dump path")
    p.add_argument("--probs", help="optional float32 probability dump path")
    p.add_argument("--truth", help="ground-truth dump; prints the overlap score when given")
    p.add_argument("--positive-class", type=int, default=1)
    p.add_argument("--mode", choices=["bilinear", "nearest"], default="bilinear")
    p.set_defaults(handler=_cmd_sam)

    p = subs.add_parser("score", help="overlap score between two mask dumps")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--positive-class", type=int, default=1)
    p.set_defaults(handler=_cmd_score)

    p = subs.add_parser("layer-sweep", help="per-layer scores over a manifest")
    _add_common(p, manifest=True, jobs=True, mode=True)
    p.set_defaults(handler=_cmd_layer_sweep)

    p = subs.add_parser("unit-sweep", help="per-unit scores for one layer dump")
    p.add_argument("--feature", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--heatmap", help="write the mean unit-map heatmap to this PGM path")
    p.add_argument("--positive-class", type=int, default=1)
    _add_common(p, jobs=True, mode=True)
    p.set_defaults(handler=_cmd_unit_sweep)

    p = subs.add_parser("rank", help="rank manifest images by mean unit score")
    _add_common(p, manifest=True, jobs=True, mode=True)
    p.add_argument("--last-layers", type=int, default=2,
                   help="how many trailing layers contribute units (default 2)")
    p.set_defaults(handler=_cmd_rank)

    p = subs.add_parser("coverage", help="retained-set quality at given coverage rates")
    _add_common(p, manifest=True, jobs=True, mode=True)
    p.add_argument("--coverages", default="100,90,70,50",
                   help="comma-separated coverage percentages")
    p.add_argument("--last-layers", type=int, default=2)
    p.set_defaults(handler=_cmd_coverage)

    p = subs.add_parser("separableness", help="input-separability gain per manifest image")
    _add_common(p, manifest=True, jobs=True)
    p.set_defaults(handler=_cmd_separableness)

    p = subs.add_parser("noise", help="score change under uniform feature noise")
    _add_common(p, manifest=True, jobs=True, mode=True)
    p.add_argument("--levels", default="0,0.1,0.2,0.5,1",
                   help="comma-separated noise magnitudes")
    p.add_argument("--seed", type=int, help="override the manifest's global seed")
    p.set_defaults(handler=_cmd_noise)

    p = subs.add_parser("gradcheck", help="finite-difference check of the analytic gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grad-mode", dest="grad_mode", choices=["through", "detached"],
                   default="through")
    p.add_argument("--height", type=int, default=4)
    p.add_argument("--width", type=int, default=4)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(handler=_cmd_gradcheck)

    p = subs.add_parser("synth", help="generate a synthetic manifest with dumps")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=1, help="number of images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--channels", type=int, default=1, help="channels per layer dump")
    p.add_argument("--separations", default="0.5,2,6",
                   help="per-layer class separations, one layer per value")
    p.add_argument("--input-separation", type=float, default=1.0,
                   help="class separation of the raw input dump")
    p.add_argument("--object-fraction", type=float, default=0.3)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(handler=_cmd_synth)

    p = subs.add_parser("render", help="render a heatmap dump to PGM or a report CSV to SVG")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--heatmap", help="2-D dump to render as PGM")
    group.add_argument("--curve", help="report CSV to render as an SVG line chart")
    p.add_argument("--out", required=True)
    p.add_argument("--lo", type=float, default=0.0, help="heatmap range minimum")
    p.add_argument("--hi", type=float, default=1.0, help="heatmap range maximum")
    p.add_argument("--x", help="CSV column for the x axis")
    p.add_argument("--y", help="CSV column for the y axis")
    p.add_argument("--series", help="CSV column naming the line each row belongs to")
    p.add_argument("--x-label")
    p.add_argument("--y-label")
    p.set_defaults(handler=_cmd_render)

    return parser


def cli_dispatch(argv=None) -> int:
    """Run one command line; always returns the exit code instead of raising."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return USAGE_ERROR
        if args.command == "render" and args.curve and not (args.x and args.y):
            parser.error("--curve requires --x and --y")
        return args.handler(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ProtoSegError, OSError, ValueError) as exc:
        print(f"protoseg: error: {exc}", file=sys.stderr)
        return DATA_ERROR


def entrypoint() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))
