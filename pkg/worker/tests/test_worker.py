"""Protocol conformance against a real corpus built by the pipeline CLI.

The bundle is produced by `cadastre generate` + `cadastre assemble`
(synthetic experiment, three separable texture classes at 50 images
each), and the worker's output is validated by the pipeline's own ingest
entry point, so these tests exercise both sides of the file contract.
"""

import shutil
import subprocess
import sys
import textwrap
from pathlib import Path

import pytest

from cadastre.classifier import TrainConfig, ingest_external_predictions, write_worker_bundle
from cadastre.manifest import load_manifest

from facade_worker.bundle import BundleError, load_bundle
from facade_worker.cli import main
from facade_worker.model import _load_images

CONFIG = textwrap.dedent("""\
    [pipeline]
    seed = 606
    out_dir = "out"

    [irrelevance]
    overall = 0.0
    [irrelevance.overrides]

    [corpus]
    manual_per_label = 1
    synthetic_per_label = 1

    [corpus.synthetic_counts]
    stone = 50
    curtain_wall = 50
    concrete_panels = 50

    [classifier]
    resolution = 192

    [[experiments]]
    kind = "synthetic"
    train_per_class = 40
    test_per_class = 10
""")


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "cadastre", *args],
                          cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    (root / "study.toml").write_text(CONFIG, encoding="utf-8")
    for step in ("generate", "assemble"):
        proc = _cli([step, "--config", "study.toml"], cwd=root)
        assert proc.returncode == 0, proc.stderr
    return root / "out"


@pytest.fixture(scope="module")
def manifest(corpus):
    return load_manifest(corpus / "experiments" / "synthetic" / "manifest.txt")


def _make_bundle(corpus, manifest, target: Path, seed: int = 77) -> Path:
    config = TrainConfig(backend="builtin", input_resolution=384,
                         epochs=10, seed=seed)
    return write_worker_bundle(manifest, config, corpus / "store", target)


@pytest.fixture(scope="module")
def solved_bundle(corpus, manifest, tmp_path_factory):
    """One trained run shared by the conformance assertions."""
    bundle_dir = _make_bundle(corpus, manifest,
                              tmp_path_factory.mktemp("bundle") / "b")
    proc = subprocess.run(["facade-worker", str(bundle_dir)],
                          capture_output=True, text=True)
    return bundle_dir, proc


def test_worker_exits_zero_and_reports(solved_bundle):
    bundle_dir, proc = solved_bundle
    assert proc.returncode == 0, proc.stderr
    assert "predictions.csv" in proc.stdout
    assert (bundle_dir / "predictions.csv").is_file()
    assert not (bundle_dir / "diagnostics.txt").exists()


def test_output_passes_ingest_with_zero_rejected_rows(solved_bundle, manifest):
    bundle_dir, _ = solved_bundle
    predictions = ingest_external_predictions(
        bundle_dir / "predictions.csv", manifest.schema,
        expected_ids=tuple(r.id for r in manifest.test),
    )
    assert len(predictions.image_ids) == len(manifest.test)


def test_accuracy_on_separable_textures(solved_bundle, manifest):
    bundle_dir, _ = solved_bundle
    predictions = ingest_external_predictions(
        bundle_dir / "predictions.csv", manifest.schema,
        expected_ids=tuple(r.id for r in manifest.test),
    )
    truth = {r.id: r.label for r in manifest.test}
    hits = sum(1 for image_id, label in zip(predictions.image_ids,
                                            predictions.predicted_labels)
               if truth[image_id] == label)
    assert hits / len(manifest.test) >= 0.95


def test_fixed_seed_reproduces_predicted_labels(corpus, manifest, tmp_path):
    labels = []
    for name in ("first", "second"):
        bundle_dir = _make_bundle(corpus, manifest, tmp_path / name)
        assert main([str(bundle_dir)]) == 0
        predictions = ingest_external_predictions(
            bundle_dir / "predictions.csv", manifest.schema)
        labels.append(predictions.predicted_labels)
    assert labels[0] == labels[1]


def _copy_bundle(solved_bundle, tmp_path) -> Path:
    source, _ = solved_bundle
    target = tmp_path / "bundle"
    shutil.copytree(source, target)
    (target / "predictions.csv").unlink()
    return target


def test_malformed_manifest_exits_3_naming_the_line(solved_bundle, tmp_path):
    bundle_dir = _copy_bundle(solved_bundle, tmp_path)
    path = bundle_dir / "train_manifest.csv"
    lines = path.read_text().splitlines()
    lines[2] = lines[2].rsplit(",", 1)[0]  # line 3 loses its label field
    path.write_text("\n".join(lines) + "\n")

    proc = subprocess.run(["facade-worker", str(bundle_dir)],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    diagnostics = (bundle_dir / "diagnostics.txt").read_text()
    assert "train_manifest.csv line 3" in diagnostics
    assert "line 3" in proc.stderr
    assert not (bundle_dir / "predictions.csv").exists()


def test_unknown_label_exits_3_naming_the_line(solved_bundle, tmp_path):
    bundle_dir = _copy_bundle(solved_bundle, tmp_path)
    path = bundle_dir / "test_manifest.csv"
    lines = path.read_text().splitlines()
    lines[4] = lines[4].rsplit(",", 1)[0] + ",granite"
    path.write_text("\n".join(lines) + "\n")

    proc = subprocess.run(["facade-worker", str(bundle_dir)],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    assert "test_manifest.csv line 5" in (bundle_dir / "diagnostics.txt").read_text()
    assert "granite" in proc.stderr


def test_unsupported_resolution_exits_2(solved_bundle, tmp_path):
    bundle_dir = _copy_bundle(solved_bundle, tmp_path)
    config_path = bundle_dir / "config.json"
    config_path.write_text(config_path.read_text().replace("384", "100"))
    assert main([str(bundle_dir)]) == 2
    assert "resolution" in (bundle_dir / "diagnostics.txt").read_text()


def test_missing_bundle_and_usage_errors():
    assert main(["/nonexistent/bundle"]) == 2
    assert main([]) == 2
    assert main(["a", "b"]) == 2


def test_duplicate_image_id_rejected(solved_bundle, tmp_path):
    bundle_dir = _copy_bundle(solved_bundle, tmp_path)
    path = bundle_dir / "test_manifest.csv"
    lines = path.read_text().splitlines()
    lines.append(lines[1])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(BundleError, match=f"line {len(lines)}.*duplicate"):
        load_bundle(bundle_dir)


def test_configured_resolution_reaches_the_tensors(solved_bundle):
    bundle_dir, _ = solved_bundle
    bundle = load_bundle(bundle_dir)
    for resolution in (192, 384):
        batch = _load_images(bundle.test[:3], resolution, bundle.root)
        assert tuple(batch.shape) == (3, 3, resolution, resolution)
