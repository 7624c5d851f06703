"""Command-line surface: fit, score, eval, sweep, hist, synth.

Exit codes are a stable contract: 0 success, 1 computation error
(bad data, parse failure, diverged training), 2 usage error (bad flags,
missing files). Every subcommand is deterministic given its inputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io as oodio
from . import synth
from .core import CrlParams, LogitsMatrix, score_crl, score_maxlogits, score_msp, fit_crm
from .errors import InvalidInputError, OodkitError
from .metrics import EvalReport, evaluate

DEFAULT_ALPHA = 5.0
DEFAULT_BETA = 5.0
DEFAULT_BINS = 50


class UsageError(OodkitError):
    """Bad flag combination or missing input path; maps to exit code 2."""


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _float_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty value list")
    try:
        values = [float(t) for t in items]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if any(v < 0 or not np.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("values must be finite and nonnegative")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oodkit",
        description="Post-hoc OOD detection on classifier logits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="build a class relevance matrix from training logits")
    p_fit.add_argument("--train-logits", required=True, help="binary logits file (OODL)")
    p_fit.add_argument("--train-labels", required=True, help="binary labels file (OODY)")
    p_fit.add_argument("--out-crm", required=True, help="output matrix path (JSON)")
    p_fit.set_defaults(func=cmd_fit)

    p_score = sub.add_parser("score", help="score test logits with one method")
    p_score.add_argument("--logits", required=True, help="binary logits file (OODL)")
    p_score.add_argument("--method", required=True, choices=["crl", "maxlogits", "msp"])
    p_score.add_argument("--crm", help="fitted matrix (required for crl)")
    p_score.add_argument("--alpha", type=float, default=None)
    p_score.add_argument("--beta", type=float, default=None)
    p_score.add_argument("--out", required=True, help="output scores CSV")
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("eval", help="FPR95/AUROC for an (ID, OOD) score pair")
    p_eval.add_argument("--id-scores", required=True, help="scores CSV of ID samples")
    p_eval.add_argument("--ood-scores", required=True, help="scores CSV of OOD samples")
    p_eval.add_argument("--out", help="write the JSON report here instead of stdout")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="evaluate crl over an (alpha, beta) grid")
    p_sweep.add_argument("--crm", required=True)
    p_sweep.add_argument("--id-logits", required=True)
    p_sweep.add_argument("--ood-logits", required=True, nargs="+")
    p_sweep.add_argument("--alphas", required=True, type=_float_list, help="comma-separated")
    p_sweep.add_argument("--betas", required=True, type=_float_list, help="comma-separated")
    p_sweep.add_argument("--out", help="write the JSON table here")
    p_sweep.set_defaults(func=cmd_sweep)

    p_hist = sub.add_parser("hist", help="shared-bin score histograms as plot-ready CSV")
    p_hist.add_argument("--scores", required=True, nargs="+", help="one or more scores CSVs")
    p_hist.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p_hist.add_argument("--out", required=True, help="output CSV")
    p_hist.set_defaults(func=cmd_hist)

    p_synth = sub.add_parser("synth", help="write a synthetic train/test-ID/test-OOD fixture")
    p_synth.add_argument("--classes", type=_positive_int, default=5)
    p_synth.add_argument("--dim", type=_positive_int, default=10)
    p_synth.add_argument("--stddev", type=float, default=1.0)
    p_synth.add_argument("--n-per-class", type=_positive_int, default=500)
    p_synth.add_argument("--n-test-per-class", type=_positive_int, default=200)
    p_synth.add_argument("--n-ood", type=_positive_int, default=1000)
    p_synth.add_argument("--ood-offset", type=float, default=5.0)
    p_synth.add_argument("--mean-spread", type=float, default=3.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--epochs", type=_positive_int, default=400)
    p_synth.add_argument("--lr", type=float, default=0.5)
    p_synth.add_argument("--out-dir", required=True)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def cmd_fit(args) -> int:
    matrix = fit_crm(oodio.read_logits(args.train_logits), oodio.read_labels(args.train_labels))
    oodio.write_crm(matrix, args.out_crm)
    counts = " ".join(str(int(v)) for v in matrix.per_class_counts)
    print(f"n_classes: {matrix.n_classes}")
    print(f"per_class_counts: {counts}")
    print(f"wrote {args.out_crm}")
    return 0


def _score_one(method: str, test_logits: LogitsMatrix, crm_path, alpha, beta):
    if method == "crl":
        if crm_path is None:
            raise UsageError("--crm is required when method is crl")
        crm = oodio.read_crm(crm_path)
        try:
            params = CrlParams(
                alpha=DEFAULT_ALPHA if alpha is None else alpha,
                beta=DEFAULT_BETA if beta is None else beta,
            )
        except InvalidInputError as exc:
            # bad flag values, not bad data
            raise UsageError(str(exc)) from None
        return score_crl(crm, test_logits, params)
    if alpha is not None or beta is not None:
        print(f"warning: --alpha/--beta are ignored for method={method}", file=sys.stderr)
    if crm_path is not None:
        print(f"warning: --crm is ignored for method={method}", file=sys.stderr)
    return score_maxlogits(test_logits) if method == "maxlogits" else score_msp(test_logits)


def cmd_score(args) -> int:
    scores = _score_one(
        args.method, oodio.read_logits(args.logits), args.crm, args.alpha, args.beta
    )
    oodio.write_scores_csv(scores, args.out)
    print(f"scored {scores.n_samples} samples with {args.method}; wrote {args.out}")
    return 0


def _format_report_table(reports: list[tuple[str, EvalReport]]) -> str:
    header = f"{'set':<16} {'method':<10} {'n_id':>6} {'n_ood':>6} {'FPR95↓':>8} {'AUROC↑':>8}"
    lines = [header, "-" * len(header)]
    for name, report in reports:
        lines.append(
            f"{name:<16} {report.method:<10} {report.n_id:>6} {report.n_ood:>6} "
            f"{100.0 * report.fpr95:>8.2f} {100.0 * report.auroc:>8.2f}"
        )
    return "\n".join(lines)


def cmd_eval(args) -> int:
    id_scores = oodio.read_scores_csv(args.id_scores)
    ood_scores = oodio.read_scores_csv(args.ood_scores)
    report = evaluate(id_scores, ood_scores)
    print(_format_report_table([(Path(args.ood_scores).stem, report)]))
    payload = json.dumps(report.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(payload + "\n")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return 0


def cmd_sweep(args) -> int:
    crm = oodio.read_crm(args.crm)
    id_logits = oodio.read_logits(args.id_logits)
    set_names = _unique_stems([Path(p) for p in args.ood_logits])
    ood_logits = [oodio.read_logits(p) for p in args.ood_logits]
    rows = []
    for alpha in args.alphas:
        for beta in args.betas:
            params = CrlParams(alpha=alpha, beta=beta)
            id_scored = score_crl(crm, id_logits, params)
            results = []
            for name, matrix in zip(set_names, ood_logits):
                report = evaluate(id_scored, score_crl(crm, matrix, params))
                results.append({"set": name, "auroc": report.auroc, "fpr95": report.fpr95})
            rows.append(
                {
                    "alpha": alpha,
                    "beta": beta,
                    "results": results,
                    "mean_auroc": sum(r["auroc"] for r in results) / len(results),
                }
            )
    best = max(range(len(rows)), key=lambda i: rows[i]["mean_auroc"])
    for i, row in enumerate(rows):
        row["best"] = i == best

    name_width = max(9, max(len(n) for n in set_names))
    header = f"{'alpha':>7} {'beta':>7} " + " ".join(
        f"{n + ' AUROC↑':>{name_width + 7}}" for n in set_names
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        cells = " ".join(f"{100.0 * r['auroc']:>{name_width + 7}.2f}" for r in row["results"])
        flag = "  <- best" if row["best"] else ""
        lines.append(f"{row['alpha']:>7.2f} {row['beta']:>7.2f} {cells}{flag}")
    print("\n".join(lines))

    payload = json.dumps({"sets": set_names, "rows": rows}, indent=1)
    if args.out:
        Path(args.out).write_text(payload + "\n")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return 0


def _unique_stems(paths: list[Path]) -> list[str]:
    stems = []
    for path in paths:
        stem = path.stem
        if stem in stems:
            suffix = 2
            while f"{stem}_{suffix}" in stems:
                suffix += 1
            stem = f"{stem}_{suffix}"
        stems.append(stem)
    return stems


def cmd_hist(args) -> int:
    if args.bins < 2:
        raise UsageError(f"--bins must be at least 2, got {args.bins}")
    names = _unique_stems([Path(p) for p in args.scores])
    score_sets = [oodio.read_scores_csv(p) for p in args.scores]
    pooled_min = min(float(s.scores.min()) for s in score_sets)
    pooled_max = max(float(s.scores.max()) for s in score_sets)
    if pooled_min == pooled_max:
        # single-valued scores: widen the range so counts land somewhere
        pooled_min -= 0.5
        pooled_max += 0.5
    edges = np.linspace(pooled_min, pooled_max, args.bins + 1)
    counts = [np.histogram(s.scores, bins=edges)[0] for s in score_sets]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right"] + names)
        for i in range(args.bins):
            writer.writerow(
                [repr(float(edges[i])), repr(float(edges[i + 1]))]
                + [int(c[i]) for c in counts]
            )
    print(f"wrote {args.out} ({args.bins} bins over [{pooled_min:g}, {pooled_max:g}])")
    return 0


def cmd_synth(args) -> int:
    if args.stddev < 0 or not np.isfinite(args.stddev):
        raise UsageError("--stddev must be finite and nonnegative")
    if args.ood_offset <= 0 or not np.isfinite(args.ood_offset):
        raise UsageError("--ood-offset must be positive")
    if not (0 <= args.seed < 2**64):
        raise UsageError("--seed must fit in an unsigned 64-bit integer")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = oodio.default_paths(out_dir)

    means = synth.sample_means(args.classes, args.dim, args.mean_spread, args.seed)
    spec = synth.GaussianMixtureSpec(
        n_classes=args.classes,
        dim=args.dim,
        means=means,
        stddev=args.stddev,
        n_per_class=args.n_per_class,
        seed=args.seed,
    )
    train_x, train_y = synth.generate(spec, stream=synth.STREAM_TRAIN)
    test_spec = dataclasses.replace(spec, n_per_class=args.n_test_per_class)
    test_x, test_y = synth.generate(test_spec, stream=synth.STREAM_TEST_ID)
    ood_x = synth.make_ood(spec, offset=args.ood_offset, n=args.n_ood)

    model = synth.train(train_x, train_y, epochs=args.epochs, lr=args.lr)
    train_acc = synth.accuracy(model, train_x, train_y)

    oodio.write_logits(synth.logits(model, train_x), paths["train_logits"])
    oodio.write_labels(train_y, paths["train_labels"])
    oodio.write_logits(synth.logits(model, test_x), paths["test_id_logits"])
    oodio.write_labels(test_y, paths["test_id_labels"])
    oodio.write_logits(synth.logits(model, ood_x), paths["test_ood_logits"])

    manifest = {
        "generator": "philox4x64",
        "seed": args.seed,
        "n_classes": args.classes,
        "dim": args.dim,
        "stddev": args.stddev,
        "n_per_class": args.n_per_class,
        "n_test_per_class": args.n_test_per_class,
        "n_ood": args.n_ood,
        "ood_offset": args.ood_offset,
        "mean_spread": args.mean_spread,
        "epochs": args.epochs,
        "lr": args.lr,
        "train_accuracy": train_acc,
        "files": {key: path.name for key, path in paths.items() if key != "manifest"},
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=1) + "\n")
    print(f"train accuracy: {train_acc:.4f}")
    print(f"wrote fixture to {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage/help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except OodkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
