import json

import pytest

from bcsl.cli import main
from conftest import REGULATION_CONFIGS, TWO_SITE_MODEL


@pytest.fixture()
def model_path(tmp_path):
    path = tmp_path / "model.bcsl"
    path.write_text(TWO_SITE_MODEL, encoding="utf-8")
    return str(path)


def run_cli(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_regulation(tmp_path, name) -> str:
    path = tmp_path / f"reg_{name}.json"
    path.write_text(json.dumps(REGULATION_CONFIGS[name]), encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# parse / ground
# ---------------------------------------------------------------------------

def test_parse_json(capsys, model_path):
    code, out, _ = run_cli(capsys, "parse", model_path)
    assert code == 0
    obj = json.loads(out)
    assert [r["label"] for r in obj["rules"]] == ["r1_S", "r1_T", "r2"]
    assert obj["atomic_signature"] == {"S": ["a", "i"], "T": ["a", "i"]}
    assert obj["structure_signature"] == {"P": ["S", "T"]}
    assert obj["init"] == {"P(S{i},T{i})::cell": 1}


def test_parse_text_roundtrips(capsys, model_path, tmp_path):
    code, out, _ = run_cli(capsys, "parse", model_path, "--format", "text")
    assert code == 0
    echoed = tmp_path / "echo.bcsl"
    echoed.write_text(out, encoding="utf-8")
    code2, out2, _ = run_cli(capsys, "parse", str(echoed), "--format", "text")
    assert code2 == 0
    assert out2 == out


def test_ground_json(capsys, model_path):
    code, out, _ = run_cli(capsys, "ground", model_path)
    assert code == 0
    obj = json.loads(out)
    assert len(obj["elements"]) == 8
    assert obj["elements"] == sorted(obj["elements"])
    assert len(obj["rules"]) == 8
    assert obj["init"] == {"P(S{i},T{i})::cell": 1}
    assert {r["label"] for r in obj["rules"]} == {"r1_S", "r1_T", "r2"}


# ---------------------------------------------------------------------------
# lts
# ---------------------------------------------------------------------------

def test_lts_dot(capsys, model_path):
    code, out, _ = run_cli(capsys, "lts", model_path, "--format", "dot")
    assert code == 0
    assert out.count(" -> ") == 8
    assert out.count("peripheries=2") == 1


def test_lts_json(capsys, model_path):
    code, out, _ = run_cli(capsys, "lts", model_path)
    assert code == 0
    obj = json.loads(out)
    assert len(obj["states"]) == 8
    assert len(obj["transitions"]) == 8
    assert obj["truncated"] is False


def test_lts_unroll_tree(capsys, model_path):
    code, out, _ = run_cli(
        capsys, "lts", model_path, "--unroll", "--max-depth", "4", "--format", "dot"
    )
    assert code == 0
    assert out.count(" -> ") == 9
    assert out.count("[label=") == 10 + 9  # nodes + edges


def test_lts_regulated_tree(capsys, model_path, tmp_path):
    reg = write_regulation(tmp_path, "regular")
    code, out, _ = run_cli(
        capsys,
        "lts",
        model_path,
        "--regulation",
        reg,
        "--unroll",
        "--max-depth",
        "4",
        "--format",
        "dot",
    )
    assert code == 0
    assert out.count(" -> ") == 5


def test_lts_regulated_graph_json(capsys, model_path, tmp_path):
    reg = write_regulation(tmp_path, "concurrent-free")
    code, out, _ = run_cli(capsys, "lts", model_path, "--regulation", reg)
    assert code == 0
    obj = json.loads(out)
    labels = {edge[1] for edge in obj["transitions"]}
    assert "ε" in labels  # regulation deadlocks stutter
    assert obj["states"] == sorted(obj["states"])


def test_lts_text_summary(capsys, model_path):
    code, out, _ = run_cli(capsys, "lts", model_path, "--format", "text")
    assert code == 0
    assert "states: 8" in out
    assert "transitions: 8" in out


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_deterministic(capsys, model_path):
    code, first, _ = run_cli(capsys, "simulate", model_path, "--steps", "3", "--seed", "7")
    code2, second, _ = run_cli(capsys, "simulate", model_path, "--steps", "3", "--seed", "7")
    assert code == code2 == 0
    assert first == second
    obj = json.loads(first)
    assert len(obj["labels"]) == 3
    assert len(obj["states"]) == 4


def test_simulate_regulated(capsys, model_path, tmp_path):
    reg = write_regulation(tmp_path, "regular")
    code, out, _ = run_cli(
        capsys, "simulate", model_path, "--steps", "4", "--seed", "1", "--regulation", reg
    )
    assert code == 0
    labels = tuple(json.loads(out)["labels"])
    assert labels in {
        ("r1_S", "r1_T", "r2", "ε"),
        ("r1_T", "r1_S", "ε", "ε"),
    }


def test_simulate_text(capsys, model_path):
    code, out, _ = run_cli(
        capsys, "simulate", model_path, "--steps", "2", "--seed", "0", "--format", "text"
    )
    assert code == 0
    assert out.startswith("step 0: 1 P(S{i},T{i})::cell")


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def test_check_passes(capsys, model_path):
    code, out, _ = run_cli(capsys, "check", model_path)
    assert code == 0
    assert "verdict: pass" in out


def test_check_json(capsys, model_path):
    code, out, _ = run_cli(capsys, "check", model_path, "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["verdict"] == "pass"
    assert obj["counterexample"] is None
    assert obj["direct"] == obj["grounded"] == {"states": 8, "transitions": 12}


def test_check_truncation_exit_code(capsys, model_path):
    code, out, _ = run_cli(capsys, "check", model_path, "--max-states", "3")
    assert code == 2
    assert "truncated" in out


# ---------------------------------------------------------------------------
# error handling and exit codes
# ---------------------------------------------------------------------------

def test_usage_error_exit_code(capsys):
    assert main(["lts"]) == 2  # missing model argument
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.bcsl"
    bad.write_text("#! rules\nr ~ P(T{i},S{i})::c => P()::c\n#! inits\n", encoding="utf-8")
    code, _, err = run_cli(capsys, "parse", str(bad))
    assert code == 3
    assert "alphanumerically sorted" in err


def test_missing_file_exit_code(capsys):
    code, _, err = run_cli(capsys, "parse", "/nonexistent/model.bcsl")
    assert code == 2
    assert "error" in err


def test_grounding_cap_exit_code(capsys, tmp_path):
    names = [f"a{i:02d}" for i in range(20)]
    u_comp = ",".join(f"{n}{{u}}" for n in names)
    v_comp = ",".join(f"{n}{{v}}" for n in names)
    text = (
        "#! rules\n"
        f"r1 ~ X({u_comp})::c => X()::c\n"
        f"r2 ~ X({v_comp})::c => X()::c\n"
        "#! inits\n"
        f"1 X({u_comp})::c\n"
    )
    big = tmp_path / "big.bcsl"
    big.write_text(text, encoding="utf-8")
    code, _, err = run_cli(capsys, "ground", str(big))
    assert code == 4
    assert "cap" in err


def test_bad_regulation_exit_code(capsys, model_path, tmp_path):
    reg = tmp_path / "reg.json"
    reg.write_text('{"type": "regular", "expression": "nope"}', encoding="utf-8")
    code, _, err = run_cli(capsys, "lts", model_path, "--regulation", str(reg))
    assert code == 2
    assert "unknown rule label" in err
    reg.write_text("not json", encoding="utf-8")
    code, _, err = run_cli(capsys, "lts", model_path, "--regulation", str(reg))
    assert code == 2


def test_output_file(capsys, model_path, tmp_path):
    out_path = tmp_path / "out.json"
    code, out, _ = run_cli(capsys, "ground", model_path, "-o", str(out_path))
    assert code == 0
    assert out == ""
    assert json.loads(out_path.read_text(encoding="utf-8"))["init"] == {
        "P(S{i},T{i})::cell": 1
    }
