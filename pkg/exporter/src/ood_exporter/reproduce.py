"""End-to-end benchmark reproduction: export logits, then drive the
scoring toolkit's CLI over them and compare against the reference
results.

The toolkit is consumed strictly through its external surfaces (the
``oodkit`` command plus the binary/CSV/JSON file formats). Reference
numbers are approximate targets: the original checkpoint is not
published, so the tolerance bands absorb checkpoint variance.

Run as:  python -m ood_exporter.reproduce --checkpoint ck.pt \
             --data-root /data --out-dir runs/repro
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

from .export import ExportJob, export

ID_TRAIN = "cifar10-train"
ID_TEST = "cifar10-test"
NEAR_OOD = ("cifar100", "tinyimagenet")
FAR_OOD = ("mnist", "svhn", "texture", "places365")

# reference results being approximated, in percent (FPR95, AUROC)
REFERENCE_CRL = {
    "cifar100": (46.47, 88.77),
    "tinyimagenet": (38.22, 90.63),
    "mnist": (29.10, 91.87),
    "svhn": (27.72, 91.96),
    "texture": (28.40, 92.07),
    "places365": (41.84, 90.00),
    "near_avg": (42.34, 89.70),
    "far_avg": (31.77, 91.48),
}
AUROC_BAND = 3.0
FPR_BAND = 8.0
SWEEP_BETAS = "0.5,0.7,1.0,3.0,5.0"
HIST_BINS = 50
OVERLAP_GAP = 0.05


def run_oodkit(*args: str) -> None:
    command = [sys.executable, "-m", "oodkit.cli", *args]
    proc = subprocess.run(command, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(
            f"oodkit {' '.join(args[:1])} failed ({proc.returncode}):\n{proc.stderr}"
        )


def export_all(checkpoint: Path, data_root: Path, out_dir: Path, batch_size: int) -> dict:
    paths = {}
    for name in (ID_TRAIN, ID_TEST, *NEAR_OOD, *FAR_OOD):
        logits_path = out_dir / f"{name}.oodl"
        result = export(
            ExportJob(
                checkpoint=checkpoint,
                dataset=name,
                data_root=data_root,
                out_logits=logits_path,
                batch_size=batch_size,
            )
        )
        paths[name] = result
        print(f"exported {name}: {result.n_samples} samples")
    return paths


def overlap_coefficient(hist_csv: Path) -> float:
    """Shared-bin overlap between the two score sets in a hist CSV."""
    lines = hist_csv.read_text().splitlines()
    counts_a, counts_b = [], []
    for line in lines[1:]:
        cells = line.split(",")
        counts_a.append(int(cells[2]))
        counts_b.append(int(cells[3]))
    total_a, total_b = sum(counts_a), sum(counts_b)
    return sum(min(a / total_a, b / total_b) for a, b in zip(counts_a, counts_b))


def run_benchmark(out_dir: Path) -> dict:
    """Fit, score, evaluate and sweep over already-exported logits."""
    crm = out_dir / "crm.json"
    run_oodkit(
        "fit",
        "--train-logits", str(out_dir / f"{ID_TRAIN}.oodl"),
        "--train-labels", str(out_dir / f"{ID_TRAIN}.oody"),
        "--out-crm", str(crm),
    )

    reports: dict[str, dict[str, dict]] = {"crl": {}, "maxlogits": {}}
    for method in reports:
        method_args = ["--method", method]
        if method == "crl":
            method_args += ["--crm", str(crm), "--alpha", "5.0", "--beta", "5.0"]
        id_csv = out_dir / f"id_{method}.csv"
        run_oodkit(
            "score", "--logits", str(out_dir / f"{ID_TEST}.oodl"),
            *method_args, "--out", str(id_csv),
        )
        for name in (*NEAR_OOD, *FAR_OOD):
            ood_csv = out_dir / f"{name}_{method}.csv"
            report_path = out_dir / f"report_{name}_{method}.json"
            run_oodkit(
                "score", "--logits", str(out_dir / f"{name}.oodl"),
                *method_args, "--out", str(ood_csv),
            )
            run_oodkit(
                "eval", "--id-scores", str(id_csv), "--ood-scores", str(ood_csv),
                "--out", str(report_path),
            )
            reports[method][name] = json.loads(report_path.read_text())

    sweep_path = out_dir / "sweep.json"
    run_oodkit(
        "sweep", "--crm", str(crm),
        "--id-logits", str(out_dir / f"{ID_TEST}.oodl"),
        "--ood-logits", *[str(out_dir / f"{n}.oodl") for n in (*NEAR_OOD, *FAR_OOD)],
        "--alphas", "5.0", "--betas", SWEEP_BETAS,
        "--out", str(sweep_path),
    )

    for method in ("crl", "maxlogits"):
        run_oodkit(
            "hist",
            "--scores", str(out_dir / f"id_{method}.csv"),
            str(out_dir / f"tinyimagenet_{method}.csv"),
            "--bins", str(HIST_BINS),
            "--out", str(out_dir / f"hist_tinyimagenet_{method}.csv"),
        )

    return {"reports": reports, "sweep": json.loads(sweep_path.read_text())}


def group_mean(reports: dict, names: tuple, field: str) -> float:
    return sum(reports[n][field] for n in names) / len(names)


def evaluate_checks(out_dir: Path, results: dict) -> list[tuple[str, bool, str]]:
    crl = results["reports"]["crl"]
    ml = results["reports"]["maxlogits"]
    checks = []

    auroc_c100 = 100.0 * crl["cifar100"]["auroc"]
    fpr_c100 = 100.0 * crl["cifar100"]["fpr95"]
    ref_fpr, ref_auroc = REFERENCE_CRL["cifar100"]
    checks.append((
        "cifar100 auroc band",
        abs(auroc_c100 - ref_auroc) <= AUROC_BAND,
        f"{auroc_c100:.2f} vs {ref_auroc} +/- {AUROC_BAND}",
    ))
    checks.append((
        "cifar100 fpr95 band",
        abs(fpr_c100 - ref_fpr) <= FPR_BAND,
        f"{fpr_c100:.2f} vs {ref_fpr} +/- {FPR_BAND}",
    ))

    far_auroc = 100.0 * group_mean(crl, FAR_OOD, "auroc")
    checks.append((
        "far-ood auroc band",
        abs(far_auroc - REFERENCE_CRL["far_avg"][1]) <= AUROC_BAND,
        f"{far_auroc:.2f} vs {REFERENCE_CRL['far_avg'][1]} +/- {AUROC_BAND}",
    ))

    for group_name, names in (("near", NEAR_OOD), ("far", FAR_OOD)):
        crl_auroc = group_mean(crl, names, "auroc")
        ml_auroc = group_mean(ml, names, "auroc")
        crl_fpr = group_mean(crl, names, "fpr95")
        ml_fpr = group_mean(ml, names, "fpr95")
        checks.append((
            f"{group_name}-ood crl beats maxlogits",
            crl_auroc > ml_auroc and crl_fpr < ml_fpr,
            f"auroc {100 * crl_auroc:.2f} vs {100 * ml_auroc:.2f}, "
            f"fpr {100 * crl_fpr:.2f} vs {100 * ml_fpr:.2f}",
        ))

    rows = results["sweep"]["rows"]
    sets = results["sweep"]["sets"]
    for group_name, names in (("near", NEAR_OOD), ("far", FAR_OOD)):
        indexes = [sets.index(n) for n in names]
        curve = [
            sum(row["results"][i]["auroc"] for i in indexes) / len(indexes) for row in rows
        ]
        checks.append((
            f"{group_name}-ood auroc nondecreasing in beta",
            all(a <= b + 1e-12 for a, b in zip(curve, curve[1:])),
            " -> ".join(f"{100 * v:.2f}" for v in curve),
        ))

    overlap_crl = overlap_coefficient(out_dir / "hist_tinyimagenet_crl.csv")
    overlap_ml = overlap_coefficient(out_dir / "hist_tinyimagenet_maxlogits.csv")
    checks.append((
        "tinyimagenet histogram overlap gap",
        overlap_crl <= overlap_ml - OVERLAP_GAP,
        f"crl {overlap_crl:.3f} vs maxlogits {overlap_ml:.3f} (need gap >= {OVERLAP_GAP})",
    ))
    return checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--data-root", required=True)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument(
        "--reuse-exports", action="store_true",
        help="skip inference and reuse .oodl files already in --out-dir",
    )
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if not args.reuse_exports:
        export_all(Path(args.checkpoint), Path(args.data_root), out_dir, args.batch_size)
    results = run_benchmark(out_dir)
    checks = evaluate_checks(out_dir, results)

    print(f"\n{'dataset':<14} {'method':<10} {'FPR95':>7} {'AUROC':>7}")
    for method in ("crl", "maxlogits"):
        for name in (*NEAR_OOD, *FAR_OOD):
            report = results["reports"][method][name]
            print(
                f"{name:<14} {method:<10} {100 * report['fpr95']:>7.2f} "
                f"{100 * report['auroc']:>7.2f}"
            )
    print()
    failed = 0
    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += 0 if ok else 1
    summary = {
        "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks],
        "reports": results["reports"],
    }
    (out_dir / "reproduction_summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
