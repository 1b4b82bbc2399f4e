"""Benchmark both detectors on a synthetic double-sided test set.

Builds a small dataset on disk (images + annotations + manifest), trains a
cascade on its train split, and scores both detectors on the test split with
pooled precision / recall / F1, printed in the usual comparison-table form.
"""

from pathlib import Path

import numpy as np

from braillekit import load_manifest, read_annotation
from braillekit.cascade import harvest_samples, train_cascade
from braillekit.cli import main as braillekit_cli
from braillekit.evaluation import evaluate_method, render_report, write_report
from braillekit.pipeline import make_detector, prepare_page
from braillekit.raster import load_gray

out = Path(__file__).parent / "output" / "benchmark"

# the CLI does the rendering: 8 sheets (16 pages), first 3 sheets are train
braillekit_cli(
    [
        "synth", "--output", str(out), "--pages", "8", "--rows", "5", "--cols", "9",
        "--noise", "8", "--skew-max", "2", "--train", "3", "--seed", "42",
    ]
)
manifest = load_manifest(out / "manifest.csv")
print(f"dataset: {manifest.split_counts} pages in {out}")

train_pages = [
    (prepare_page(load_gray(e.image)), read_annotation(e.annotation))
    for e in manifest.select(split="train")
]
pos, neg = harvest_samples(train_pages, seed=0)
cascade_model = train_cascade(pos, neg, stage_targets=(0.995, 0.5), max_stages=5)

reports = []
for name, detector in (
    ("Based on Image segmentation", make_detector("segmentation")),
    ("Based on Haar+Adaboost", make_detector("cascade", model=cascade_model)),
):
    reports.append(
        evaluate_method(detector, manifest, split="test", tolerance=6.6, method=name)
    )

print()
print(render_report(reports))
write_report(reports[0], out / "segmentation-report.json")
print(f"\nmachine-readable report: {out / 'segmentation-report.json'}")
