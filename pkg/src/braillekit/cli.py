"""Command-line entry point wiring the library into user workflows.

Subcommands: detect, deskew, decode, evaluate, train, synth, annotate.
Exit codes: 0 success, 1 internal failure, 2 usage/input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annotation import (
    DatasetManifest,
    ManifestEntry,
    load_manifest,
    read_annotation,
    write_annotation,
    write_manifest,
)
from .cascade import harvest_samples, load_cascade, save_cascade, train_cascade
from .deskew import deskew_page
from .dots import DotSet, Side
from .errors import BrailleKitError, InvalidImageError
from .evaluation import evaluate_method, render_report, write_report
from .geometry import GridGeometry
from .grid import decode_cells
from .pipeline import auto_annotate, make_detector
from .raster import load_gray, save_image
from .service import AnnotationService, serve_forever
from .synth import SynthSpec, random_patterns, render_double_sided

log = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad paths, missing models, empty inputs: exit code 2."""


def _geometry(args) -> GridGeometry:
    return GridGeometry.at_dpi(args.dpi)


def _detector(args, geometry: GridGeometry, side: Side = Side.RECTO):
    if args.detector == "cascade":
        if not args.model:
            raise UsageError("--model is required with --detector cascade")
        if not Path(args.model).is_file():
            raise UsageError(f"cascade model not found: {args.model}")
        model = load_cascade(args.model)
        return make_detector("cascade", model=model, geometry=geometry, side=side)
    return make_detector("segmentation", geometry=geometry, side=side)


def _load_input_gray(path: str):
    try:
        return load_gray(path)
    except InvalidImageError as err:
        raise UsageError(str(err)) from err


def _overlay(img, dot_sets: list[DotSet]):
    """RGB copy of the page with detected dot sites marked."""
    rgb = np.stack([img, img, img], axis=-1)
    colors = {Side.RECTO: (230, 40, 40), Side.VERSO: (40, 90, 230)}
    for dots in dot_sets:
        color = colors[dots.side]
        for x, y in dots.xy:
            xi, yi = int(round(x)), int(round(y))
            x0, x1 = max(0, xi - 3), min(img.shape[1], xi + 4)
            y0, y1 = max(0, yi - 3), min(img.shape[0], yi + 4)
            rgb[yi, x0:x1] = color
            rgb[y0:y1, xi] = color
    return rgb


# ---------------------------------------------------------------------------
# Subcommands


def cmd_detect(args) -> int:
    geometry = _geometry(args)
    img = _load_input_gray(args.input)
    detector = _detector(args, geometry)
    result = auto_annotate(img, detector, geometry, image_path=args.input)
    annotation = result.annotation
    if args.side == "both":
        verso_detector = _detector(args, geometry, side=Side.VERSO)
        verso = verso_detector(img)
        # Report verso dots in the same (deskewed) frame as the recto list.
        if result.estimate is not None:
            from .raster import image_center, rotate_points

            xy = rotate_points(
                verso.xy, -result.estimate.angle, image_center(verso.width, verso.height)
            )
            inside = (
                (xy[:, 0] >= -0.5)
                & (xy[:, 0] <= verso.width - 0.5)
                & (xy[:, 1] >= -0.5)
                & (xy[:, 1] <= verso.height - 0.5)
            )
            verso = verso.take(np.nonzero(inside)[0]).replace_xy(xy[inside])
        annotation.verso = verso.xy
    write_annotation(annotation, args.output)
    if args.overlay:
        sets = [
            DotSet(annotation.recto, Side.RECTO, np.ones(len(annotation.recto)), "out",
                   annotation.width, annotation.height)
        ]
        if len(annotation.verso):
            sets.append(
                DotSet(annotation.verso, Side.VERSO, np.ones(len(annotation.verso)), "out",
                       annotation.width, annotation.height)
            )
        save_image(args.overlay, _overlay(result.deskewed_image, sets))
    print(
        f"{args.input}: {len(annotation.recto)} recto"
        + (f" + {len(annotation.verso)} verso" if args.side == "both" else "")
        + f" dots -> {args.output}"
    )
    return 0


def cmd_deskew(args) -> int:
    geometry = _geometry(args)
    img = _load_input_gray(args.input)
    detector = _detector(args, geometry)
    dots = detector(img)
    try:
        rotated, moved, estimate = deskew_page(img, dots)
    except BrailleKitError as err:
        raise UsageError(f"cannot estimate skew: {err}") from err
    save_image(args.output, rotated)
    if args.annotation:
        from .annotation import PageAnnotation

        write_annotation(
            PageAnnotation(
                image_path=args.output,
                width=moved.width,
                height=moved.height,
                frame="deskewed",
                skew_degrees=estimate.angle,
                recto=moved.xy,
                meta={"detector": dots.source},
            ),
            args.annotation,
        )
    print(f"{args.input}: skew {estimate.angle:+.3f} deg -> {args.output}")
    return 0


def cmd_decode(args) -> int:
    geometry = _geometry(args)
    img = _load_input_gray(args.input)
    detector = _detector(args, geometry)
    result = auto_annotate(img, detector, geometry, image_path=args.input)
    if result.grid is None:
        raise UsageError(f"no cell grid found: {'; '.join(result.notes)}")
    text = decode_cells(result.annotation.cells).text
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_evaluate(args) -> int:
    geometry = _geometry(args)
    try:
        manifest = load_manifest(args.manifest)
    except BrailleKitError as err:
        raise UsageError(str(err)) from err
    pages = manifest.select(split=args.split)
    if not pages:
        raise UsageError(f"manifest has no pages in split {args.split!r}")
    detector = _detector(args, geometry)
    tolerance = args.tolerance if args.tolerance else geometry.match_tolerance
    name = (
        "Based on Image segmentation"
        if args.detector == "segmentation"
        else "Based on Haar+Adaboost"
    )
    report = evaluate_method(detector, manifest, args.split, tolerance, method=name)
    print(render_report(report, per_book=args.per_book))
    if args.json:
        write_report(report, args.json)
    return 0


def cmd_train(args) -> int:
    geometry = _geometry(args)
    try:
        manifest = load_manifest(args.manifest)
    except BrailleKitError as err:
        raise UsageError(str(err)) from err
    entries = manifest.select(split="train")
    if not entries:
        raise UsageError("manifest has no pages in split 'train'")
    from .pipeline import prepare_page

    pages = []
    for e in entries:
        img = prepare_page(load_gray(e.image))
        pages.append((img, read_annotation(e.annotation)))
    pos, neg = harvest_samples(pages, geometry, neg_ratio=args.neg_ratio, seed=args.seed)
    if not len(pos) or not len(neg):
        raise UsageError("no training patches could be harvested")
    print(f"harvested {len(pos)} positive / {len(neg)} negative patches")
    cascade = train_cascade(
        pos,
        neg,
        stage_targets=(args.detection_rate, args.fp_rate),
        max_stages=args.stages,
    )
    save_cascade(cascade, args.output)
    stumps = sum(len(s.stumps) for s in cascade.stages)
    print(f"trained cascade: {len(cascade.stages)} stages, {stumps} stumps -> {args.output}")
    return 0


def cmd_synth(args) -> int:
    geometry = _geometry(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    entries = []
    for i in range(args.pages):
        skew = float(rng.uniform(-args.skew_max, args.skew_max)) if args.skew_max else 0.0
        front = SynthSpec(
            rows=args.rows,
            cols=args.cols,
            geometry=geometry,
            recto_patterns=random_patterns(args.rows, args.cols, rng, nonempty_margins=True),
            skew_degrees=skew,
            noise_sigma=args.noise,
            seed=int(rng.integers(0, 2**31)),
        )
        back = SynthSpec(
            rows=args.rows,
            cols=args.cols,
            geometry=geometry,
            recto_patterns=random_patterns(args.rows, args.cols, rng, nonempty_margins=True),
            skew_degrees=-skew,
            noise_sigma=args.noise,
            seed=int(rng.integers(0, 2**31)),
        )
        sheet = render_double_sided(front, back)
        for side_name, img, annotation in (
            (f"p{i:03d}_front", sheet.front_image, sheet.front_annotation),
            (f"p{i:03d}_back", sheet.back_image, sheet.back_annotation),
        ):
            image_path = out / f"{side_name}.png"
            annotation_path = out / f"{side_name}.json"
            save_image(image_path, img)
            annotation.image_path = image_path.name
            write_annotation(annotation, annotation_path)
            split = "train" if i < args.train else "test"
            entries.append(ManifestEntry(image_path, annotation_path, "synthetic", split))
    write_manifest(entries, out / "manifest.csv")
    print(f"wrote {len(entries)} pages + manifest to {out}")
    return 0


def cmd_annotate(args) -> int:
    geometry = _geometry(args)
    input_path = Path(args.input)
    if input_path.is_dir():
        images = sorted(
            p for p in input_path.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
        )
        if not images:
            raise UsageError(f"no images found in {input_path}")
        manifest = DatasetManifest(
            [
                ManifestEntry(p, p.with_suffix(".edited.json"), input_path.name, "test")
                for p in images
            ]
        )
    elif input_path.is_file():
        manifest = load_manifest(input_path)
        if not manifest.entries:
            raise UsageError(f"manifest {input_path} lists no pages")
    else:
        raise UsageError(f"input not found: {input_path}")
    detector = _detector(args, geometry)
    ui_dir = args.ui_dir
    if ui_dir is None:
        default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = default_ui if default_ui.is_dir() else None
    service = AnnotationService(manifest, detector, geometry, ui_dir=ui_dir)
    host, _, port = args.listen.partition(":")
    try:
        serve_forever(service, host or "127.0.0.1", int(port or "8750"))
    except OSError as err:
        raise UsageError(f"cannot listen on {args.listen}: {err}") from err
    return 0


# ---------------------------------------------------------------------------
# Argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braillekit",
        description="Optical Braille recognition toolkit for double-sided scans",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        p.add_argument("--detector", choices=("segmentation", "cascade"), default="segmentation")
        if model:
            p.add_argument("--model", help="trained cascade model path")
        p.add_argument("--dpi", type=float, default=200.0, help="scan resolution (default 200)")

    p = sub.add_parser("detect", help="detect Braille dots on one page")
    p.add_argument("--input", required=True, help="page image (PNG/JPEG)")
    p.add_argument("--output", required=True, help="annotation JSON to write")
    p.add_argument("--side", choices=("recto", "both"), default="recto")
    p.add_argument("--overlay", help="optional overlay PNG of detections")
    add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("deskew", help="estimate and remove page skew")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="rotated image to write")
    p.add_argument("--annotation", help="optional annotation JSON with the dots")
    add_common(p)
    p.set_defaults(func=cmd_deskew)

    p = sub.add_parser("decode", help="detect, grid, and decode a page to Braille text")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="text file (default: stdout)")
    add_common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", help="score a detector against a manifest split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--tolerance", type=float, help="match tolerance px (default pitch/3)")
    p.add_argument("--json", help="also write a JSON report")
    p.add_argument("--per-book", action="store_true")
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", help="train a cascade from the manifest's train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--stages", type=int, default=5)
    p.add_argument("--detection-rate", type=float, default=0.995)
    p.add_argument("--fp-rate", type=float, default=0.5)
    p.add_argument("--neg-ratio", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dpi", type=float, default=200.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", help="render synthetic double-sided pages + manifest")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--pages", type=int, default=10, help="number of sheets (2 scans each)")
    p.add_argument("--rows", type=int, default=6)
    p.add_argument("--cols", type=int, default=11)
    p.add_argument("--noise", type=float, default=8.0)
    p.add_argument("--skew-max", type=float, default=3.0)
    p.add_argument("--train", type=int, default=0, help="first N sheets go to the train split")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dpi", type=float, default=200.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("annotate", help="serve the interactive annotation editor")
    p.add_argument("--input", required=True, help="manifest CSV or image directory")
    p.add_argument("--listen", default="127.0.0.1:8750")
    p.add_argument("--ui-dir", help="editor UI bundle directory (default: frontend/dist)")
    add_common(p)
    p.set_defaults(func=cmd_annotate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except BrailleKitError as err:
        print(f"failed: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
