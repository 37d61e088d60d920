import csv
import json
import math

import numpy as np
import pytest

from qbcsim import cli, protocol, qmath

SQ2 = math.sqrt(2.0)


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_json(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.fixture
def honest_config(tmp_path):
    return write_json(
        tmp_path / "honest.json",
        {
            "rounds": 100,
            "seed": 7,
            "basis_source": {"type": "full_bloch"},
            "quadruple": "reference",
            "chi": 0,
            "alice": {"kind": "honest"},
        },
    )


@pytest.fixture
def cheat_config(tmp_path):
    hadamard = qmath.matrix_to_pairs(qmath.HADAMARD)
    return write_json(
        tmp_path / "cheat.json",
        {
            "rounds": 30,
            "seed": 11,
            "basis_source": {"type": "full_bloch"},
            "quadruple": "reference",
            "chi": 0,
            "alice": {"kind": "delayed", "S": hadamard, "declared": 1, "actual": 0},
        },
    )


# ---------------------------------------------------------------------------
# simulate


def test_simulate_honest_accepts(honest_config, tmp_path, capsys):
    out = tmp_path / "transcript.json"
    code, stdout, _ = run_cli(["simulate", "--config", honest_config, "--out", str(out)], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["verdict"] == "accept"
    assert summary["pass_rate"] == 1.0
    assert summary["empirical_detection_rate"] == 0.0
    transcript = json.loads(out.read_text())
    assert len(transcript["rounds"]) == 100
    manifest = json.loads((tmp_path / "transcript.json.manifest.json").read_text())
    assert manifest["outputs"] == [str(out)]
    assert manifest["seed"] == 7
    assert manifest["tool_version"]


def test_simulate_summary_recomputable_from_transcript(honest_config, tmp_path, capsys):
    out = tmp_path / "t.json"
    code, stdout, _ = run_cli(["simulate", "--config", honest_config, "--out", str(out)], capsys)
    summary = json.loads(stdout)
    transcript = json.loads(out.read_text())
    verified = [r["verified"] for r in transcript["rounds"]]
    assert summary["pass_rate"] == sum(verified) / len(verified)
    assert (summary["verdict"] == "accept") == all(verified)
    assert summary["first_failed_round"] == transcript["verdict"]["first_failed_round"]


def test_simulate_reproducible_bytes(honest_config, tmp_path, capsys):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(["simulate", "--config", honest_config, "--out", str(out1)], capsys)
    run_cli(["simulate", "--config", honest_config, "--out", str(out2)], capsys)
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_overrides(honest_config, capsys):
    code, stdout, _ = run_cli(["simulate", "--config", honest_config, "--rounds", "17", "--seed", "123"], capsys)
    assert code == 0
    assert json.loads(stdout)["rounds"] == 17


def test_simulate_cheat_run_is_detected(cheat_config, capsys):
    # 30 rounds at 2/3 per-round survival: acceptance chance ~ 5e-6
    code, stdout, _ = run_cli(["simulate", "--config", cheat_config], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["verdict"] == "reject"
    assert summary["first_failed_round"] is not None


def test_simulate_repeat_trials(cheat_config, tmp_path, capsys):
    out = tmp_path / "trials.json"
    code, stdout, _ = run_cli(
        ["simulate", "--config", cheat_config, "--rounds", "5", "--repeat", "200", "--out", str(out)],
        capsys,
    )
    assert code == 0
    summary = json.loads(stdout)
    assert summary["trials"] == 200
    expected = (2 / 3) ** 5
    sigma = math.sqrt(expected * (1 - expected) / 200)
    assert abs(summary["accepted_fraction"] - expected) < 4 * sigma
    payload = json.loads(out.read_text())
    assert len(payload["trials"]) == 200
    fraction = sum(1 for t in payload["trials"] if t["accepted"]) / 200
    assert fraction == summary["accepted_fraction"]


def test_simulate_malformed_config(tmp_path, capsys):
    path = write_json(tmp_path / "bad.json", {"rounds": 10})
    code, _, err = run_cli(["simulate", "--config", str(path)], capsys)
    assert code == 2
    assert "seed" in err
    path2 = tmp_path / "not_json.json"
    path2.write_text("{", encoding="utf-8")
    code, _, err = run_cli(["simulate", "--config", str(path2)], capsys)
    assert code == 2


def test_simulate_non_unitary_operator_exits_3(tmp_path, capsys):
    quad_spec = protocol.quadruple_to_json(qmath.reference_quadruple())
    quad_spec["m"] = [[[1, 0], [0.5, 0]], [[0, 0], [1, 0]]]
    path = write_json(tmp_path / "bad_ops.json", {"rounds": 5, "seed": 1, "quadruple": quad_spec})
    code, _, err = run_cli(["simulate", "--config", str(path)], capsys)
    assert code == 3
    assert "unitary" in err


def test_simulate_abort_exit_code(tmp_path, capsys):
    path = write_json(
        tmp_path / "abort.json",
        {
            "rounds": 5,
            "seed": 2,
            "basis_source": {"type": "full_bloch"},
            "chi": 0,
            "alice": {"kind": "per_state_optimal", "declared": 1, "actual": 0},
        },
    )
    code, stdout, _ = run_cli(["simulate", "--config", str(path)], capsys)
    assert code == 4
    assert json.loads(stdout)["aborted"] is True


def test_simulate_sampler_override(honest_config, capsys):
    code, stdout, _ = run_cli(
        ["simulate", "--config", honest_config, "--sampler", "subcircle-k:4", "--rounds", "20"], capsys
    )
    assert code == 0
    assert json.loads(stdout)["verdict"] == "accept"


# ---------------------------------------------------------------------------
# audit


def test_audit_reference_fails_with_witness(tmp_path, capsys):
    path = write_json(tmp_path / "ops.json", "reference")
    code, stdout, _ = run_cli(["audit", "--operators", str(path)], capsys)
    assert code == 0
    payload = json.loads(stdout)
    assert not payload["concealment"]["passes"]
    assert payload["witness"]["trace_distance"] == pytest.approx(1 / SQ2, abs=1e-12)
    state = qmath.vector_from_pairs(payload["witness"]["state"], 2)
    assert not qmath.on_subcircle(state)


def test_audit_concealing_quadruple_synthesizes(tmp_path, capsys):
    m = qmath.ID2.copy()
    n = -1j * qmath.PAULI_Y
    quad = qmath.OperatorQuadruple(m, n, (m + n) / SQ2, (m - n) / SQ2)
    path = write_json(tmp_path / "ops.json", protocol.quadruple_to_json(quad))
    code, stdout, _ = run_cli(["audit", "--operators", str(path), "--out", str(tmp_path / "report.json")], capsys)
    assert code == 0
    payload = json.loads(stdout)
    assert payload["concealment"]["passes"]
    coeffs = qmath.matrix_from_pairs(payload["attack"]["coefficients"])
    np.testing.assert_allclose(coeffs, qmath.HADAMARD, atol=1e-10)
    assert payload["attack"]["residual_j"] <= 1e-10
    assert payload["attack"]["residual_k"] <= 1e-10
    assert (tmp_path / "report.json.manifest.json").exists()


def test_audit_identity_quadruple_flagged(tmp_path, capsys):
    same = qmath.matrix_to_pairs(np.eye(2))
    path = write_json(tmp_path / "ops.json", {"m": same, "n": same, "j": same, "k": same})
    code, stdout, _ = run_cli(["audit", "--operators", str(path)], capsys)
    assert code == 0
    payload = json.loads(stdout)
    assert payload["concealment"]["passes"]
    assert payload["attack"] is None
    assert "proportional" in payload["proportional_operators"]


def test_audit_non_unitary_exits_3(tmp_path, capsys):
    spec = protocol.quadruple_to_json(qmath.reference_quadruple())
    spec["j"] = [[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]
    path = write_json(tmp_path / "ops.json", spec)
    code, _, err = run_cli(["audit", "--operators", str(path)], capsys)
    assert code == 3
    assert "j" in err and "residual" in err.lower()


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_detection_csv(tmp_path, capsys):
    out = tmp_path / "det.csv"
    code, _, _ = run_cli(
        ["sweep", "detection", "--range", "10:10", "--trials", "60", "--seed", "3", "--out", str(out)],
        capsys,
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1
    assert int(rows[0]["n_rounds"]) == 10
    assert float(rows[0]["analytic_detection"]) == pytest.approx(1 - (2 / 3) ** 10, abs=1e-9)
    assert 0.0 <= float(rows[0]["empirical_detection"]) <= 1.0
    assert (tmp_path / "det.csv.manifest.json").exists()


def test_sweep_detection_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "detection", "--range", "1:3", "--trials", "40", "--seed", "5"]
    run_cli(args + ["--out", str(a)], capsys)
    run_cli(args + ["--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_sweep_fidelity_csv(tmp_path, capsys):
    out = tmp_path / "fid.csv"
    code, _, _ = run_cli(
        ["sweep", "fidelity", "--amp-points", "21", "--phase-points", "8", "--out", str(out)], capsys
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 21 * 8
    closed = [float(r["closed_form"]) for r in rows]
    assert max(closed) == pytest.approx(2 / 3, abs=1e-9)
    assert max(closed) <= 2 / 3 + 1e-12
    assert all(r["mc_mean"] == "" for r in rows)


def test_sweep_detection_rejects_empty_range(tmp_path, capsys):
    code, _, err = run_cli(
        ["sweep", "detection", "--range", "5:4", "--trials", "10", "--out", str(tmp_path / "x.csv")], capsys
    )
    assert code == 2
    assert "range" in err


# ---------------------------------------------------------------------------
# fidelity


def test_fidelity_presets(capsys):
    code, stdout, _ = run_cli(["fidelity", "--preset", "identity"], capsys)
    assert code == 0
    assert json.loads(stdout)["closed_form"] == 0.5
    code, stdout, _ = run_cli(["fidelity", "--preset", "hadamard"], capsys)
    assert json.loads(stdout)["closed_form"] == pytest.approx(2 / 3, abs=1e-15)


def test_fidelity_with_mc(capsys):
    code, stdout, _ = run_cli(
        ["fidelity", "--preset", "hadamard", "--samples", "20000", "--sampler", "bloch", "--seed", "9"],
        capsys,
    )
    assert code == 0
    payload = json.loads(stdout)
    mc = payload["mc"]
    assert abs(mc["mean"] - 2 / 3) < 3 * mc["stderr"]
    assert mc["sampler"] == "full_bloch"


def test_fidelity_subcircle_sampler(capsys):
    code, stdout, _ = run_cli(
        ["fidelity", "--preset", "hadamard", "--samples", "20000", "--sampler", "subcircle", "--seed", "4"],
        capsys,
    )
    payload = json.loads(stdout)
    assert abs(payload["mc"]["mean"] - 0.75) < 3 * payload["mc"]["stderr"]


def test_fidelity_coeffs_file(tmp_path, capsys):
    path = write_json(tmp_path / "coeffs.json", qmath.matrix_to_pairs(qmath.HADAMARD))
    code, stdout, _ = run_cli(["fidelity", "--coeffs", str(path)], capsys)
    assert code == 0
    assert json.loads(stdout)["closed_form"] == pytest.approx(2 / 3, abs=1e-15)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
