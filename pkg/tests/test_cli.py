"""End-to-end tests of the command-line interface via main()."""

import json
import os

import numpy as np
import pytest

from fractalflow import cli, measures


def run_cli(argv):
    return cli.main(argv)


def read_manifest(outdir, command="attractor"):
    name = command.replace(" ", "_") + "_manifest.json"
    with open(os.path.join(outdir, name)) as f:
        return json.load(f)


def test_attractor_command(tmp_path):
    out = str(tmp_path)
    code = run_cli(["attractor", "--alpha", "0.6", "--depth", "4", "--out", out])
    assert code == cli.EXIT_OK
    man = read_manifest(out)
    assert man["command"] == "attractor"
    assert man["checks"]["separation"]["passed"]
    assert os.path.exists(os.path.join(out, "attractor.csv"))
    assert os.path.exists(os.path.join(out, "attractor.json"))
    # manifest records digests for every output it wrote
    assert any(name.endswith("attractor.csv") for name in man["outputs"])


def test_attractor_dimension_flag_overrides_alpha(tmp_path):
    out = str(tmp_path)
    code = run_cli(["attractor", "--h", "1.3569", "--depth", "3", "--out", out])
    assert code == cli.EXIT_OK
    man = read_manifest(out)
    assert abs(man["config"]["alpha_resolved"] - 0.6) < 1e-3


def test_attractor_resource_cap(tmp_path):
    code = run_cli(["attractor", "--depth", "30", "--out", str(tmp_path)])
    assert code == cli.EXIT_RESOURCE


def test_bad_alpha_is_config_error(tmp_path):
    code = run_cli(["attractor", "--alpha", "0.9", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG


def test_config_file_merging(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"depth": 3, "note": "from-file"}))
    out = str(tmp_path / "run")
    os.makedirs(out)
    code = run_cli(
        ["attractor", "--config", str(cfgfile), "--alpha", "0.6", "--out", out]
    )
    assert code == cli.EXIT_OK
    man = read_manifest(out)
    assert man["config"]["note"] == "from-file"


def test_flow_contraction_command(tmp_path):
    out = str(tmp_path)
    code = run_cli(
        ["flow", "verify-contraction", "--depth", "1", "--dt", "1e-3", "--out", out]
    )
    assert code == cli.EXIT_OK
    man = read_manifest(out, "flow verify-contraction")
    assert man["checks"]["contraction"]["passed"]


def test_flow_verify_failure_exit_code(tmp_path):
    # an unreachable tolerance turns the same run into a verification failure
    code = run_cli(
        [
            "flow",
            "verify-contraction",
            "--depth",
            "1",
            "--dt",
            "1e-2",
            "--tol",
            "1e-18",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == cli.EXIT_VERIFY


def test_slit_command(tmp_path):
    out = str(tmp_path)
    code = run_cli(
        ["slit", "--N", "40", "--eps", "1e-2", "--dt", "5e-3", "--T", "0.4", "--out", out]
    )
    assert code == cli.EXIT_OK
    man = read_manifest(out, "slit")
    assert man["checks"]["collapse_bound"]["passed"]
    assert os.path.exists(os.path.join(out, "slit_history.csv"))


def test_slit_rejects_odd_marker_count(tmp_path):
    code = run_cli(["slit", "--N", "41", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG


def test_dimension_command_with_input_csv(tmp_path):
    rng = np.random.default_rng(0)
    pts = np.stack([rng.uniform(0, 1, 3000), np.zeros(3000)], axis=-1)
    csv = tmp_path / "pts.csv"
    np.savetxt(csv, pts, delimiter=",", header="x,y", comments="")
    out = str(tmp_path / "run")
    os.makedirs(out)
    code = run_cli(
        [
            "dimension",
            "--input",
            str(csv),
            "--scales",
            "6",
            "--expect",
            "1.0",
            "--tol",
            "0.1",
            "--out",
            out,
        ]
    )
    assert code == cli.EXIT_OK
    man = read_manifest(out, "dimension")
    assert abs(man["checks"]["dimension"]["slope"] - 1.0) < 0.1


def test_dimension_missing_input(tmp_path):
    code = run_cli(
        ["dimension", "--input", "/nonexistent.csv", "--out", str(tmp_path)]
    )
    assert code == cli.EXIT_CONFIG


def test_field_sample_binary_output(tmp_path):
    from fractalflow import fields

    out = str(tmp_path)
    code = run_cli(
        [
            "field-sample",
            "--field",
            "fundamental-u",
            "--t",
            "0.0",
            "--h",
            "0.5",
            "--extent",
            "2.0",
            "--out",
            out,
        ]
    )
    assert code == cli.EXIT_OK
    gs = fields.GridSample.from_binary(os.path.join(out, "field.bin"))
    assert gs.values.shape[-1] == 2


def test_field_sample_unknown_kind(tmp_path):
    code = run_cli(["field-sample", "--field", "bogus", "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG


def test_manifest_has_timing_and_config_echo(tmp_path):
    out = str(tmp_path)
    run_cli(["attractor", "--depth", "2", "--out", out])
    man = read_manifest(out)
    assert man["wall_clock_s"] >= 0.0
    assert man["config"]["depth"] == 2
