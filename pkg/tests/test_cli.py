import csv
import hashlib
import json
import re
import shutil
import subprocess

import pytest

from hypercell.cli import main
from hypercell.config import ExperimentConfig, load, parse_text, validate
from hypercell.errors import ConfigError
from hypercell.output import dumps

ISO_TOML = """
experiment = "complementary"
dim = 2
gamma = 1.0
n_samples = 1500
seed = 7
chunk_size = 500
[dist]
type = "isotropic"
"""

AXES_ATOMS = """
experiment = "atoms"
a_grid = [0.2, 0.1]
[dist]
type = "discrete"
atoms = [{dir = [1.0, 0.0], mass = 0.5}, {dir = [0.0, 1.0], mass = 0.5}]
"""

MIX_ATOMS = """
experiment = "atoms"
a_grid = [0.4, 0.2]
n_samples = 300
window_R = 20.0
seed = 3
[dist]
type = "mixture"
parts = [{weight = 0.5, dist = {type = "isotropic"}},
         {weight = 0.5, dist = {type = "discrete", atoms = [{dir = [1.0, 0.0], mass = 1.0}]}}]
"""


def write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_outputs(out):
    return {name: (out / name).read_bytes() for name in ("samples.jsonl", "estimates.csv", "ratefit.json")}


# --- config --------------------------------------------------------------------------


def test_config_round_trip_toml_and_json(tmp_path):
    cfg = load(write(tmp_path, ISO_TOML))
    again = parse_text(cfg.canonical_json(), "json")
    assert again == cfg and again.hash() == cfg.hash()
    assert load(write(tmp_path, cfg.canonical_json(), "exp.json")) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        parse_text('experiment = "complementary"\nsamples = 3\n', "toml")


def test_unknown_distribution_key_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_text(ISO_TOML + "ks_tolerance = 2.0\n", "toml")


def test_incompatible_experiments():
    with pytest.raises(ConfigError, match="supp_condition_atoms|half sphere"):
        parse_text(AXES_ATOMS, "toml")
    with pytest.raises(ConfigError):
        parse_text(AXES_ATOMS.replace('"atoms"', '"limit_shape"'), "toml")
    with pytest.raises(ConfigError):
        parse_text('experiment = "speed"\na_grid = [0.1, 0.05]\n', "toml")


def test_hash_ignores_workers_and_output_dir():
    cfg = ExperimentConfig("complementary")
    assert cfg.hash() == cfg.replace(workers=3, output_dir="elsewhere").hash()
    assert cfg.hash() != cfg.replace(seed=1).hash()


# --- validate -----------------------------------------------------------------------------


def test_validate_reports_n_min(tmp_path, capsys):
    assert main(["validate", "--config", str(write(tmp_path, ISO_TOML))]) == 0
    out = capsys.readouterr().out
    assert "n_min: 3" in out and "supp_condition_atoms: True" in out


def test_validate_discrete_axes_3d(tmp_path, capsys):
    text = """experiment = "sample_dump"
dim = 3
[dist]
type = "discrete"
atoms = [{dir = [1.0, 0.0, 0.0], mass = 0.4}, {dir = [0.0, 1.0, 0.0], mass = 0.3}, {dir = [0.0, 0.0, 1.0], mass = 0.3}]
"""
    assert main(["validate", "--config", str(write(tmp_path, text))]) == 0
    out = capsys.readouterr().out
    assert "n_min: 6" in out
    # the sample_dump with a 3D discrete law is itself not runnable and is reported, not raised
    assert "[error] config" in out


def test_validate_reports_invalid_atoms_config(tmp_path, capsys):
    assert main(["validate", "--config", str(write(tmp_path, AXES_ATOMS))]) == 0
    out = capsys.readouterr().out
    assert "[error] config" in out and "n_min: 4" in out


def test_validate_warns_on_non_rare_grid(tmp_path):
    cfg = load(write(tmp_path, 'experiment = "small_cells"\na_grid = [1.5, 0.1]\n'))
    diags = validate(cfg)
    warn = [d for d in diags if d.level == "warning"]
    assert len(warn) == 1 and "1.5" in warn[0].message and "truncation disabled" in warn[0].message


# --- run ------------------------------------------------------------------------------------


def test_run_outputs_and_manifest(tmp_path, capsys):
    cfg_path = write(tmp_path, ISO_TOML)
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg_path), "--output-dir", str(out)])
    printed = capsys.readouterr().out
    assert code == 0 and "PASS ks_gamma_f3" in printed and "PASS ks_gamma_f4" in printed
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["all_passed"]
    names = {c["name"] for c in manifest["checks"]}
    assert {"ks_gamma_f3", "ks_gamma_f4", "drop_rate"} <= names
    for f in manifest["files"]:
        assert hashlib.sha256((out / f["name"]).read_bytes()).hexdigest() == f["sha256"]
    assert json.loads((out / "ratefit.json").read_text())["config_hash"] == manifest["config_hash"]

    lines = (out / "samples.jsonl").read_text().splitlines()
    assert len(lines) == 1500
    rec = json.loads(lines[0])
    assert list(rec) == ["origin", "seed", "stream", "slot", "fcount", "inball_r", "functionals", "summary",
                         "conditioned_a", "dropped"]
    assert rec["seed"] == 7 and rec["dropped"] is False

    with open(out / "estimates.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["experiment_id", "theorem_tag", "sigma", "a", "n", "p_hat", "ci_low", "ci_high",
                             "n_samples", "seed"]


def test_floats_have_17_significant_digits(tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", str(write(tmp_path, ISO_TOML)), "--output-dir", str(out), "--n-samples", "20"])
    text = (out / "samples.jsonl").read_text()
    for tok in re.findall(r"-?\d+\.\d+(?:e[-+]\d+)?", text)[:200]:
        x = float(tok)
        assert format(x, ".17g") == tok
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(float("nan")) == "null"


def test_deterministic_across_runs_and_workers(tmp_path):
    cfg_path = write(tmp_path, ISO_TOML.replace("n_samples = 1500", "n_samples = 1200"))
    outs = []
    for i, workers in enumerate(("1", "1", "2")):
        out = tmp_path / f"out{i}"
        main(["run", "--config", str(cfg_path), "--output-dir", str(out), "--workers", workers])
        outs.append(read_outputs(out))
    assert outs[0] == outs[1] == outs[2]


def test_seed_flag_changes_output(tmp_path):
    cfg_path = write(tmp_path, ISO_TOML)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", str(cfg_path), "--output-dir", str(a), "--n-samples", "50"])
    main(["run", "--config", str(cfg_path), "--output-dir", str(b), "--n-samples", "50", "--seed", "8"])
    assert read_outputs(a)["samples.jsonl"] != read_outputs(b)["samples.jsonl"]


def test_window_experiment_runs_deterministically(tmp_path):
    cfg_path = write(tmp_path, MIX_ATOMS)
    outs = []
    for i, workers in enumerate(("1", "2")):
        out = tmp_path / f"w{i}"
        main(["run", "--config", str(cfg_path), "--output-dir", str(out), "--workers", workers])
        outs.append(read_outputs(out))
    assert outs[0] == outs[1]
    assert len(outs[0]["samples.jsonl"].splitlines()) == 300


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", str(write(tmp_path, AXES_ATOMS))]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    # an absurd KS tolerance makes the registered check fail
    strict = "ks_tolerance = 1e-6\n" + ISO_TOML.replace("n_samples = 1500", "n_samples = 300")
    assert main(["run", "--config", str(write(tmp_path, strict)), "--output-dir", str(tmp_path / "o")]) == 1
    assert "FAIL ks_gamma_f3" in capsys.readouterr().out


@pytest.mark.skipif(shutil.which("hypercell") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg_path = write(tmp_path, ISO_TOML)
    res = subprocess.run(["hypercell", "validate", "--config", str(cfg_path)], capture_output=True, text=True)
    assert res.returncode == 0 and "n_min: 3" in res.stdout
