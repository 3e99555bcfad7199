from __future__ import annotations

import json
import subprocess
import sys

import pytest

from cadastre.cli import main

CONFIG_BODY = """\
[pipeline]
seed = 99
out_dir = "out"

[corpus]
manual_per_label = 6
synthetic_per_label = 4

[irrelevance]
overall = 0.0
overrides = {}

[classifier]
resolution = 192
temperature = 0.05

[[experiments]]
kind = "baseline"
label_of_interest = "stucco"

[[experiments]]
kind = "mixed"
label_of_interest = "stucco"
train_per_class = 2
test_per_class = 1
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A config file plus a generated corpus, shared across CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "run.toml"
    cfg.write_text(CONFIG_BODY)
    rc = main(["generate", "--config", str(cfg)])
    assert rc == 0
    return root, cfg


def test_generate_populates_the_store(workspace, capsys):
    root, cfg = workspace
    store = root / "out" / "store"
    assert (store / "records.csv").is_file()
    assert (store / "prompts.csv").is_file()
    assert list((store / "images").glob("*.png"))
    assert (store / "decisions.jsonl").is_file()  # oracle review ran


def test_generate_is_idempotent_via_the_cache(workspace, capsys):
    root, cfg = workspace
    rc = main(["generate", "--config", str(cfg)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "0 backend calls" in out
    assert "0 failures" in out


def test_assemble_writes_experiment_artifacts(workspace, capsys):
    root, cfg = workspace
    rc = main(["assemble", "--config", str(cfg), "mixed-stucco"])
    out = capsys.readouterr().out
    assert rc == 0
    exp = root / "out" / "experiments" / "mixed-stucco"
    assert (exp / "manifest.txt").is_file()
    assert (exp / "assembly_report.json").is_file()
    assert (exp / "predictions.csv").is_file()
    assert "mixed-stucco" in out
    report = json.loads((exp / "assembly_report.json").read_text())
    assert report["per_class"]["stucco"]["train"]["synthetic"] == 2
    assert report["per_class"]["stucco"]["test"]["manual"] == 1


def test_assemble_unknown_tag_is_a_usage_error(workspace, capsys):
    root, cfg = workspace
    rc = main(["assemble", "--config", str(cfg), "ablation-stucco"])
    err = capsys.readouterr().err
    assert rc == 2
    assert "unknown experiment tags" in err
    assert "ablation-stucco" in err


def test_run_selected_experiment_end_to_end(workspace, capsys):
    root, cfg = workspace
    rc = main(["run", "--config", str(cfg), "baseline-stucco"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "baseline-stucco: weighted F1" in out
    metrics = json.loads(
        (root / "out" / "report" / "metrics.json").read_text())
    tags = [e["experiment"] for e in metrics["experiments"]]
    assert tags == ["baseline-stucco"]


def test_report_reemits_from_saved_artifacts(workspace, capsys):
    root, cfg = workspace
    rc = main(["report", "--config", str(cfg)])
    out = capsys.readouterr().out
    assert rc == 0
    assert str(root / "out" / "report" / "metrics.json") in out
    metrics = json.loads(
        (root / "out" / "report" / "metrics.json").read_text())
    # both experiments have artifacts on disk by now
    tags = {e["experiment"] for e in metrics["experiments"]}
    assert tags == {"baseline-stucco", "mixed-stucco"}


def test_commands_fail_cleanly_without_a_corpus(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG_BODY)
    rc = main(["assemble", "--config", str(cfg)])
    err = capsys.readouterr().err
    assert rc == 1
    assert "run `cadastre generate` first" in err
    rc = main(["report", "--config", str(cfg)])
    err = capsys.readouterr().err
    assert rc == 1
    assert "run `cadastre run` first" in err


def test_missing_config_file_is_a_usage_error(tmp_path, capsys):
    rc = main(["generate", "--config", str(tmp_path / "nope.toml")])
    err = capsys.readouterr().err
    assert rc == 2
    assert "not found" in err


def test_no_subcommand_exits_with_usage(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_out_override_redirects_artifacts(workspace, tmp_path, capsys):
    root, cfg = workspace
    rc = main(["generate", "--config", str(cfg),
               "--out", str(tmp_path / "elsewhere")])
    assert rc == 0
    assert (tmp_path / "elsewhere" / "store" / "records.csv").is_file()


def test_console_script_is_installed():
    proc = subprocess.run([sys.executable, "-m", "cadastre", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("generate", "serve", "assemble", "run", "report"):
        assert name in proc.stdout
