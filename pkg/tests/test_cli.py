import json

import pytest

from eilearn.cli import main

DIABETES_FLAGS = ["--data", "data/diabetes.csv", "--label", "class", "--holdout", "400",
                  "--phases", "4", "--train-frac", "0.66", "--clusters", "3",
                  "--clusterer", "em", "--seed", "7", "--shuffle-seed", "0"]


def test_run_writes_three_files(repo_root, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", *DIABETES_FLAGS, "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["report.csv", "report.json", "report.md"]
    stdout = capsys.readouterr().out
    assert stdout.count("| Dataset/Incremental Training |") == 1
    assert stdout == (out / "report.md").read_text()


def test_run_single_format(repo_root, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", *DIABETES_FLAGS, "--out", str(out), "--format", "json"]) == 0
    assert [p.name for p in out.iterdir()] == ["report.json"]
    json.loads((out / "report.json").read_text())


def test_out_defaults_to_environment(repo_root, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EILEARN_OUT", str(tmp_path / "env"))
    assert main(["run", *DIABETES_FLAGS, "--format", "md"]) == 0
    assert (tmp_path / "env" / "report.md").exists()


def test_identical_flags_give_identical_files(repo_root, tmp_path, capsys):
    for name in ("a", "b"):
        assert main(["run", "@configs/diabetes.flags", "--out", str(tmp_path / name)]) == 0
    for f in ("report.json", "report.csv", "report.md"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_missing_data_flag_exits_2(repo_root, capsys):
    flags = DIABETES_FLAGS[2:]
    with pytest.raises(SystemExit) as exc:
        main(["run", *flags])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "usage" in err and "--data" in err


def test_zero_phases_exits_2(repo_root, capsys):
    flags = list(DIABETES_FLAGS)
    flags[flags.index("--phases") + 1] = "0"
    with pytest.raises(SystemExit) as exc:
        main(["run", *flags])
    assert exc.value.code == 2
    assert "phases must be ≥ 1" in capsys.readouterr().err


def test_validate_config_diabetes(repo_root, capsys):
    assert main(["validate-config", "@configs/diabetes.flags"]) == 0
    out = capsys.readouterr().out
    assert "T=400 V=368; per-phase 100 = 66 train + 34 test" in out
    assert "768 instances" in out


def test_validate_config_chess(repo_root, capsys):
    assert main(["validate-config", "@configs/krkp.flags"]) == 0
    assert "per-phase 500 = 333 train + 167 test" in capsys.readouterr().out


def test_validate_config_empty_validation(repo_root, capsys):
    flags = list(DIABETES_FLAGS)
    flags[flags.index("--holdout") + 1] = "768"
    assert main(["validate-config", *flags]) == 1
    assert "empty validation set" in capsys.readouterr().err


def test_runtime_error_exit_1_with_phase_context(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    rows = ["x,y"] + [f"{i},lo" for i in range(10)] + [f"{i},hi" for i in range(10, 25)]
    p.write_text("\n".join(rows) + "\n")
    code = main(["run", "--data", str(p), "--label", "y", "--holdout", "20", "--phases", "1",
                 "--train-frac", "0.5", "--clusters", "1", "--seed", "0"])
    assert code == 1
    assert "phase 1" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path, capsys):
    code = main(["run", "--data", str(tmp_path / "none.csv"), "--label", "y", "--holdout", "2",
                 "--phases", "1", "--train-frac", "0.5", "--clusters", "1", "--seed", "0"])
    assert code == 1


def test_module_entry_point(repo_root):
    import subprocess
    import sys

    ok = subprocess.run([sys.executable, "-m", "eilearn", "validate-config",
                         "@configs/diabetes.flags"], capture_output=True, text=True)
    assert ok.returncode == 0 and "T=400 V=368" in ok.stdout
    bad = subprocess.run([sys.executable, "-m", "eilearn", "run", "--phases", "0"],
                         capture_output=True, text=True)
    assert bad.returncode == 2 and "usage" in bad.stderr
