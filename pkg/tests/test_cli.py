import json

import pytest

from p3fusion.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_systems_list(capsys):
    code, out, _ = run(capsys, "systems", "list")
    assert code == 0
    assert "2F4(2)'" in out
    assert "J4" in out
    assert "Th" in out
    assert out.count("exotic") == 3


def test_minimal_table_and_exit(capsys):
    code, out, _ = run(capsys, "minimal", "--system", "j4", "--no-certify")
    assert code == 0
    assert "1936" in out


def test_minimal_json_bound(capsys):
    code, out, _ = run(capsys, "minimal", "--system", "rv48", "--format", "json",
                       "--no-certify")
    assert code == 0
    data = json.loads(out)
    assert data["exoticity_bound"] == 425744
    assert data["e"] == 134448
    assert data["exotic"] is True


def test_minimal_deterministic(capsys):
    _, out1, _ = run(capsys, "minimal", "--system", "d8", "--format", "json",
                     "--no-certify")
    _, out2, _ = run(capsys, "minimal", "--system", "d8", "--format", "json",
                     "--no-certify")
    assert out1 == out2


def test_minimal_json_roundtrip(capsys):
    from p3fusion.biset import FormalBiset

    _, out, _ = run(capsys, "minimal", "--system", "d8", "--format", "json",
                    "--no-certify")
    data = json.loads(out)
    biset = FormalBiset.from_json(data["biset"])
    assert biset.to_json(data["system"]) == data["biset"]
    assert biset.e() == data["e"]


def test_unknown_system_exit_2(capsys):
    code, _, err = run(capsys, "minimal", "--system", "nope")
    assert code == 2
    assert "unknown system" in err


def test_missing_selector_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["minimal"])
    assert exc.value.code == 2


def test_idempotent_output(capsys):
    code, out, _ = run(capsys, "idempotent", "--system", "d8")
    assert code == 0
    assert "c0 = 1/8" in out
    assert "c2_z = 3/26" in out
    assert "layer 1 coefficient sum = 0" in out
    code, out, _ = run(capsys, "idempotent", "--system", "d8", "--format", "json")
    data = json.loads(out)
    assert data["coefficients"]["c0"] == "1/8"
    assert data["ok"] is True


def test_realize_p3(capsys):
    code, out, _ = run(capsys, "realize", "--system", "d8", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["J_size"] == 968
    assert data["orbit_count"] == 1


def test_realize_p7_gated(capsys):
    code, _, err = run(capsys, "realize", "--system", "rv96")
    assert code == 2
    assert "--big" in err


def test_verify_table(capsys):
    code, out, _ = run(capsys, "verify", "--table", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["ok"] is True
    suite = data["results"][0]
    assert suite["suite"] == "table"
    assert [row["e"] for row in suite["rows"]] == [968, 1936, 74976, 134448,
                                                   201672, 268896]


def test_verify_nothing_selected(capsys):
    code, _, err = run(capsys, "verify")
    assert code == 2


def test_verify_single_system_suites(capsys):
    code, out, _ = run(capsys, "verify", "--stability", "--idempotent",
                       "--system", "d8", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert {r["suite"] for r in data["results"]} == {"stability", "idempotent"}
    assert data["ok"] is True


def test_verify_marks_sampled(capsys):
    code, out, _ = run(capsys, "verify", "--marks", "--system", "d8",
                       "--oracle", "sampled", "--format", "json")
    assert code == 0
    data = json.loads(out)
    marks = data["results"][0]
    assert marks["pairs_checked"] == 200
    assert marks["ok"] is True


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "sys.json"
    cfg.write_text(json.dumps({
        "prime": 3,
        "name": "custom-d8",
        "classes": [{"lines": [0, 3], "r": 2}, {"lines": [1, 2], "r": 2}],
    }))
    code, out, _ = run(capsys, "minimal", "--config", str(cfg), "--format", "json",
                       "--no-certify")
    assert code == 0
    data = json.loads(out)
    assert data["e"] == 968
    assert data["system"] == "custom-d8"
