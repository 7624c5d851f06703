"""Smoke test for the reproduction driver over fake datasets.

Random weights obviously cannot hit the reference bands; this verifies
the machinery end to end: eight exports, the toolkit CLI invocations,
aggregation, and the check report structure.
"""

import dataclasses

from torchvision import datasets as tvd

from ood_exporter import datasets as ds
from ood_exporter import reproduce


def test_driver_runs_end_to_end(monkeypatch, checkpoint_path, fake_id_root,
                                fake_data_root, tmp_path):
    def folder_builder(root_dir):
        return lambda root, t: tvd.ImageFolder(str(root_dir), transform=t)

    id_folder = fake_id_root / "fake_id"
    ood_folder = fake_data_root / "tinyimagenet"
    for name in ds.DATASET_NAMES:
        folder = id_folder if name.startswith("cifar10-") else ood_folder
        entry = dataclasses.replace(
            ds.REGISTRY[name], builder=folder_builder(folder), source=f"fake:{folder.name}"
        )
        monkeypatch.setitem(ds.REGISTRY, name, entry)

    out_dir = tmp_path / "repro"
    out_dir.mkdir()
    exported = reproduce.export_all(checkpoint_path, fake_data_root, out_dir, batch_size=16)
    assert set(exported) == set(ds.DATASET_NAMES)
    assert exported["cifar10-train"].labels_path is not None

    results = reproduce.run_benchmark(out_dir)
    assert set(results["reports"]) == {"crl", "maxlogits"}
    assert set(results["reports"]["crl"]) == set(reproduce.NEAR_OOD + reproduce.FAR_OOD)
    assert len(results["sweep"]["rows"]) == 5

    checks = reproduce.evaluate_checks(out_dir, results)
    assert len(checks) == 8
    for name, ok, detail in checks:
        assert isinstance(name, str) and isinstance(ok, bool) and detail
