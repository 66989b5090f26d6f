"""
Test cases for the command-line interface and its exit codes
"""

import sys
import os
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import orjson

from cli import EXIT_CONTRACT, EXIT_INVALID_INPUT, EXIT_OK, EXIT_USAGE, main

ROOT = os.path.dirname(os.path.abspath(__file__))
SAMPLES = os.path.join(ROOT, "samples")


def _sample(name):
    return os.path.join(SAMPLES, name)


def test_run_writes_report(tmp_path):
    out = tmp_path / "report.jsonl"
    assert main(["run", _sample("scenario_benign.json"), "--out", str(out)]) == EXIT_OK
    lines = out.read_bytes().splitlines()
    assert len(lines) == 13
    assert "aggregates" in orjson.loads(lines[-1])
    print("✓ run command")


def test_run_is_reproducible(tmp_path):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["run", _sample("scenario_faults.json"), "--mode", "single-scale"]
    assert main(args + ["--out", str(first)]) == EXIT_OK
    assert main(args + ["--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_run_seed_override_changes_report(tmp_path):
    base, seeded = tmp_path / "base.jsonl", tmp_path / "seeded.jsonl"
    main(["run", _sample("scenario_benign.json"), "--out", str(base)])
    main(["run", _sample("scenario_benign.json"), "--seed", "7", "--out", str(seeded)])
    assert base.read_bytes() != seeded.read_bytes()


def test_run_csv_to_stdout(capsys):
    assert main(["run", _sample("scenario_benign.json"), "--csv"]) == EXIT_OK
    rows = capsys.readouterr().out.splitlines()
    assert rows[0].startswith("step,active,messages")
    assert len(rows) == 13


def test_gain_and_overhead(tmp_path, capsys):
    assert main(["gain", "--depth", "3", "--trials", "100", "--csv"]) == EXIT_OK
    gain_rows = capsys.readouterr().out.splitlines()
    assert gain_rows[0].startswith("depth,unconstrained_median")
    assert len(gain_rows) == 4

    out = tmp_path / "overhead.csv"
    assert main(["overhead", "--n-max", "4", "--csv", "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert "4,ctha,7,5" in text and "4,unconstrained,12,22" in text


def test_validate_command(capsys):
    assert main(["validate", _sample("summary_valid.json"), "--kind", "summary"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "valid"

    assert main(["validate", _sample("summary_invalid.json"), "--kind", "summary"]) == EXIT_INVALID_INPUT
    captured = capsys.readouterr()
    assert captured.out.startswith("repaired")
    assert "mood" not in captured.out


def test_activation_command(capsys):
    assert main(["activation", _sample("scenario_benign.json")]) == EXIT_OK
    rows = [orjson.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert rows == [{"active_layers": 1, "steps": 8}, {"active_layers": 2, "steps": 4}]


def test_exit_codes(tmp_path):
    assert main(["run", _sample("scenario_benign.json"), "--mode", "chaos"]) == EXIT_USAGE
    assert main(["gain", "--depth", "0"]) == EXIT_USAGE
    assert main(["gain", "--depth", "2", "--low", "2", "--high", "1"]) == EXIT_USAGE
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_INVALID_INPUT

    broken = tmp_path / "broken.json"
    broken.write_text('{"horizon": 3,')
    assert main(["run", str(broken)]) == EXIT_INVALID_INPUT
    assert main(["validate", str(broken), "--kind", "plan"]) == EXIT_INVALID_INPUT


def test_contract_exit_code_is_distinct():
    assert len({EXIT_OK, EXIT_USAGE, EXIT_INVALID_INPUT, EXIT_CONTRACT}) == 4


if __name__ == "__main__":
    print("Testing CLI...")
    import tempfile
    from pathlib import Path
    with tempfile.TemporaryDirectory() as tmp:
        test_run_writes_report(Path(tmp))
    print("\n✅ CLI tests passed!")
