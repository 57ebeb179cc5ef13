import csv
import json

import pytest

from sigmavqls.cli import CONFIG_SCHEMA, DEFAULTS, config_hash, load_config, main


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_json(path):
    return json.loads(path.read_text())


def test_defaults_satisfy_schema():
    import jsonschema

    jsonschema.validate(DEFAULTS, CONFIG_SCHEMA)


def test_decompose_default(tmp_path):
    assert main(["decompose", "--out", str(tmp_path)]) == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["sigma_count_merged"] <= 19
    assert summary["sigma_count_raw"] == summary["closed_form_count"] == 17
    assert summary["reconstruction_residual"] <= 1e-12
    assert (tmp_path / "terms.txt").read_text().splitlines()[0] == "1.0 0.0 : I I I I"
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["command"] == "decompose"
    assert manifest["seed"] == 0
    assert set(manifest["versions"]) >= {"python", "numpy", "scipy"}


def test_decompose_largest_table_row(tmp_path):
    cfg = write_config(tmp_path, {"heat": {"n_x": 8, "n_t": 16}})
    assert main(["decompose", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    assert read_json(tmp_path / "o" / "summary.json")["sigma_count_merged"] <= 27


def test_command_from_config(tmp_path):
    cfg = write_config(tmp_path, {"command": "decompose", "output_dir": str(tmp_path / "o")})
    assert main(["--config", cfg]) == 0
    assert (tmp_path / "o" / "summary.json").exists()


def test_missing_command_is_config_error(tmp_path, capsys):
    assert main(["--out", str(tmp_path)]) == 2
    assert "no command" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg, message",
    [
        ({"heat": {"nx": 4}}, "'nx' was unexpected"),
        ({"bogus": 1}, "'bogus' was unexpected"),
        ({"optimizer": {"method": "adam"}}, "optimizer/method"),
        ({"heat": {"n_x": 6}}, "power of two"),
        ({"heat": {"bc": {"kind": "robin", "w1": 1.0, "w2": -0.25}}}, "Robin"),
    ],
)
def test_malformed_config(tmp_path, capsys, cfg, message):
    path = write_config(tmp_path, cfg)
    assert main(["decompose", "--config", path, "--out", str(tmp_path / "o")]) == 2
    assert message in capsys.readouterr().err


def test_invalid_json_and_missing_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["decompose", "--config", str(bad)]) == 2
    assert main(["decompose", "--config", str(tmp_path / "absent.json")]) == 2
    err = capsys.readouterr().err
    assert "not valid JSON" in err and "cannot read" in err


def test_overrides():
    cfg = load_config(None, {"seed": 9, "shots": 100})
    assert cfg["seed"] == 9 and cfg["optimizer"]["shots"] == 100


def test_config_hash_ignores_output_dir():
    a = load_config(None)
    b = dict(a, output_dir="elsewhere")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, seed=1))


def test_compare_rows(tmp_path):
    cfg = write_config(tmp_path, {"compare": {"sizes": [[2, 2], [4, 4], [8, 8]]}})
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    with open(tmp_path / "o" / "compare.csv") as fh:
        rows = {int(r["N"]): r for r in csv.DictReader(fh)}
    assert int(rows[16]["pauli_count"]) == 26
    assert int(rows[64]["pauli_count"]) == 102
    small = rows[4]
    assert int(small["sigma_count_raw"]) == 12 and int(small["sigma_count_merged"]) == 11
    assert float(small["sigma_residual"]) <= 1e-12 and float(small["pauli_residual"]) <= 1e-12


def test_compare_beyond_oracle_limit(tmp_path, capsys):
    cfg = write_config(tmp_path, {"compare": {"sizes": [[64, 128]]}})
    assert main(["compare", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "oracle limit" in capsys.readouterr().err


def test_verify_default_passes(tmp_path):
    assert main(["verify", "--out", str(tmp_path)]) == 0
    report = read_json(tmp_path / "verify.json")
    assert report["passed"]
    assert not any(c["skipped"] for c in report["checks"])


def test_verify_injected_fault_fails(tmp_path):
    cfg = write_config(tmp_path, {"heat": {"n_x": 2, "n_t": 2}, "verify": {"inject_fault": True}})
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    report = read_json(tmp_path / "o" / "verify.json")
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert failed == ["completion_block_form"]
    assert read_json(tmp_path / "o" / "manifest.json")["exit_code"] == 1


def test_verify_skips_beyond_oracle_limit(tmp_path, capsys):
    cfg = write_config(
        tmp_path, {"heat": {"n_x": 64, "n_t": 128}, "verify": {"exhaustive_qubits": 1, "dilation_qubits": 1}}
    )
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    report = read_json(tmp_path / "o" / "verify.json")
    skipped = {c["name"] for c in report["checks"] if c["skipped"]}
    assert skipped == {"hadamard_oracle", "heat_reconstruction"}
    assert "SKIP" in capsys.readouterr().out


SMALL_SOLVE = {
    "heat": {"n_x": 2, "n_t": 2},
    "ansatz": {"layers": 2, "entangler": "cz"},
    "optimizer": {"cost_kind": "global", "cost_tolerance": 1e-6, "max_iters": 3000},
}


def test_solve_small_instance(tmp_path):
    cfg = write_config(tmp_path, SMALL_SOLVE)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    out = tmp_path / "o"
    result = read_json(out / "result.json")
    assert result["converged"]
    assert result["fidelity"] > 0.999
    with open(out / "trace.csv") as fh:
        trace = list(csv.DictReader(fh))
    assert len(trace) == result["iterations"]
    with open(out / "solution.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 4


def test_exact_rerun_is_bit_identical(tmp_path):
    cfg = write_config(tmp_path, SMALL_SOLVE)
    for sub in ("a", "b"):
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / sub)]) == 0
    for name in ("result.json", "trace.csv", "solution.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma, mb = read_json(tmp_path / "a" / "manifest.json"), read_json(tmp_path / "b" / "manifest.json")
    assert ma["config_hash"] == mb["config_hash"]


def test_sampled_solve_is_deterministic(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "heat": {"n_x": 2, "n_t": 2},
            "ansatz": {"layers": 1},
            "optimizer": {"method": "spsa", "max_iters": 2, "cost_kind": "global"},
        },
    )
    for sub in ("a", "b"):
        # not converged after two sampled steps, so the exit code is 1
        assert main(["solve", "--config", cfg, "--shots", "100000", "--seed", "4", "--out", str(tmp_path / sub)]) == 1
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    assert read_json(tmp_path / "a" / "manifest.json")["config"]["optimizer"]["shots"] == 100000
