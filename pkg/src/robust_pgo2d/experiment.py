"""Monte Carlo outlier-rate experiments.

Usage::

    python -m robust_pgo2d.experiment --synthetic grid:20x20 --rates 0.1,0.3,0.5 \\
        --runs 10 --seed 7 --out results/

For every (rate, run) cell the graph is loaded or generated, outliers are
injected, the robust pipeline runs and one CSV row is written.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .g2o import G2oParseError, read_g2o, read_trajectory, write_g2o
from .graph import GraphValidationError
from .metrics import compute_are, compute_ate, precision_recall
from .pipeline import C1_SQUARED, C2_SQUARED, degnc_laf
from .synthetic import Grid, InjectionSpec, RandomWalk, SyntheticSpec, generate_synthetic, inject_outliers

logger = logging.getLogger(__name__)

CSV_VERSION = 1
CSV_FIELDS = (
    "rate", "seed", "ate_pos", "ate_rot_deg", "are_deg", "precision", "recall",
    "t_reg_s", "t_ara_s", "t_ta_s", "t_refine_s", "converged",
)
TIMING_FIELDS = {
    "t_reg_s": "regularization", "t_ara_s": "ara", "t_ta_s": "ta", "t_refine_s": "refine",
}


def parse_layout(text):
    """``grid:RxC[:step]`` or ``walk:N[:step]``."""
    kind, _, rest = text.partition(":")
    parts = rest.split(":")
    try:
        step = float(parts[1]) if len(parts) > 1 else 1.0
        if kind == "grid":
            rows, cols = (int(v) for v in parts[0].lower().split("x"))
            return Grid(rows, cols, step)
        if kind == "walk":
            return RandomWalk(int(parts[0]), step)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad layout {text!r}; expected grid:RxC[:step] or walk:N[:step]")


def parse_rates(text):
    try:
        rates = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate list {text!r}") from None
    if not rates or any(not 0.0 <= r < 1.0 for r in rates):
        raise argparse.ArgumentTypeError("rates must lie in [0, 1)")
    return rates


def build_parser():
    p = argparse.ArgumentParser(prog="pgo-bench", description=__doc__.split("\n\n")[0])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="g2o file with the (outlier-free) pose graph")
    src.add_argument("--synthetic", type=parse_layout, help="grid:RxC[:step] or walk:N[:step]")
    p.add_argument("--gt", help="ground-truth trajectory (VERTEX_SE2 records)")
    p.add_argument("--rates", type=parse_rates, default=[0.0])
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c1sq", type=float, default=C1_SQUARED)
    p.add_argument("--c2sq", type=float, default=C2_SQUARED)
    p.add_argument("--gnc-factor", type=float, default=1.4)
    p.add_argument("--sigma-theta", type=float, default=0.01, help="synthetic rotation noise (rad)")
    p.add_argument("--sigma-t", type=float, default=0.05, help="synthetic translation noise")
    p.add_argument("--lc-prob", type=float, default=0.2, help="synthetic loop-closure probability")
    p.add_argument("--out", default=".")
    p.add_argument("--emit-trajectories", action="store_true")
    p.add_argument("--no-timing", action="store_true", help="write zero timings (byte-stable CSV)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _injection_seed(base_seed, rate_index, run):
    return int(np.random.SeedSequence([base_seed, rate_index, run]).generate_state(1)[0])


def run_cell(args, rate, rate_index, run, source):
    seed = args.seed + run
    inject_seed = _injection_seed(args.seed, rate_index, run)
    if args.synthetic is not None:
        # the same graph for every rate of a given run
        spec = SyntheticSpec(args.synthetic, args.sigma_theta, args.sigma_t, args.lc_prob, seed)
        graph, gt = generate_synthetic(spec)
    else:
        graph, gt = source
    extent = None if gt is None else gt.t
    noisy, injected = inject_outliers(graph, InjectionSpec(rate, inject_seed), extent)
    report = degnc_laf(noisy, args.c1sq, args.c2sq, args.gnc_factor)

    row = {"rate": rate, "seed": seed, "converged": int(report.converged)}
    if gt is not None:
        ate_pos, ate_rot = compute_ate(report.estimate, gt)
        row["ate_pos"], row["ate_rot_deg"] = ate_pos, ate_rot
    row["are_deg"] = compute_are(report.ara_estimate, report.estimate.theta)
    rejected = set(noisy.loop_indices.tolist()) - report.inlier_set
    row["precision"], row["recall"] = precision_recall(rejected, injected)
    for col, stage in TIMING_FIELDS.items():
        row[col] = 0.0 if args.no_timing else report.timings[stage]
    return row, noisy, report


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summarize(rows):
    by_rate = {}
    for row in rows:
        by_rate.setdefault(row["rate"], []).append(row)
    summary = {"csv_version": CSV_VERSION, "rates": {}}
    for rate, group in sorted(by_rate.items()):
        entry = {"runs": len(group), "converged": sum(r["converged"] for r in group)}
        for col in CSV_FIELDS:
            if col in ("rate", "seed", "converged"):
                continue
            vals = [r[col] for r in group if r.get(col) is not None]
            entry[f"mean_{col}"] = float(np.mean(vals)) if vals else None
        summary["rates"][repr(rate)] = entry
    return summary


def run_experiment(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    source = None
    try:
        if args.input is not None:
            graph, _initial = read_g2o(args.input)
            gt = read_trajectory(args.gt) if args.gt else None
            if gt is not None and len(gt) != graph.num_vertices:
                raise GraphValidationError(
                    f"ground truth has {len(gt)} poses, graph has {graph.num_vertices}"
                )
            source = (graph, gt)
    except (OSError, G2oParseError, GraphValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    rows = []
    for ri, rate in enumerate(args.rates):
        for run in range(args.runs):
            row, noisy, report = run_cell(args, rate, ri, run, source)
            rows.append(row)
            if args.emit_trajectories:
                path = os.path.join(args.out, f"est_{rate:g}_{row['seed']}.g2o")
                with open(path, "w") as fh:
                    write_g2o(noisy, report.estimate, fh)
            logger.info("rate %.2f run %d: %s", rate, run, row)

    rows.sort(key=lambda r: (r["rate"], r["seed"]))
    with open(os.path.join(args.out, "results.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in CSV_FIELDS])
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summarize(rows), fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return 0


def main():
    sys.exit(run_experiment())


if __name__ == "__main__":
    main()
