import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import DATA

from bcsc.cli import main
from bcsc.harness import read_csv

CONFIGS = Path(__file__).parent.parent / "configs"

SMALL = """
method = BCSC
M = 3
batch_size = 20
epochs = 4
model = logistic
dataset = synth
synth_n = 200
synth_test_n = 100
separation = 4
lr = 0.1
"""


@pytest.fixture
def small_conf(tmp_path):
    p = tmp_path / "small.conf"
    p.write_text(SMALL)
    return p


def test_train_writes_csv(small_conf, tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["train", "--config", str(small_conf), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r.epoch for r in rows] == [1, 2, 3, 4]
    assert "all_acc=" in capsys.readouterr().out


def test_train_seed_flag_overrides(small_conf, tmp_path):
    a, b, c = (tmp_path / f"{k}.csv" for k in "abc")
    main(["train", "--config", str(small_conf), "--out", str(a)])
    main(["train", "--config", str(small_conf), "--seed", "0", "--out", str(b)])
    main(["train", "--config", str(small_conf), "--seed", "5", "--out", str(c)])
    strip = lambda p: [line.rsplit(",", 1)[0] for line in p.read_text().splitlines()]
    assert strip(a) == strip(b) != strip(c)


def test_train_set_override(small_conf, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["train", "--config", str(small_conf), "--set", "epochs=2", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 2


def test_train_config_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("method = SGD\nM = 4\nlr = 0.1\n")
    assert main(["train", "--config", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["train", "--config", str(tmp_path / "missing.conf")]) == 2
    assert main(["train", "--config", str(bad), "--set", "nonsense"]) == 2


def test_train_divergence_exit(small_conf, capsys):
    args = ["train", "--config", str(small_conf), "--set", "lr=1e6", "--set", "separation=50",
            "--set", "momentum=0.99", "--set", "epochs=20"]
    assert main(args) == 3
    assert "diverged" in capsys.readouterr().err


def test_compare(small_conf, tmp_path, capsys):
    other = tmp_path / "sgd.conf"
    other.write_text(SMALL.replace("method = BCSC", "method = SGD").replace("M = 3", "M = 1"))
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--config", str(small_conf), "--config", str(other), "--repeats", "2",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3 and "BCSC(M=3)" in lines[1] and "SGD(M=1)" in lines[2]
    assert "[1] SGD(M=1)" in capsys.readouterr().out


def test_compare_divergence_exit(small_conf, tmp_path):
    args = ["compare", "--config", str(small_conf), "--repeats", "1", "--out", str(tmp_path / "c.csv"),
            "--set", "lr=1e6", "--set", "separation=50", "--set", "momentum=0.99", "--set", "epochs=20"]
    assert main(args) == 3


@pytest.mark.parametrize("model", ["logistic", "mlp"])
def test_gradcheck(model, capsys):
    assert main(["gradcheck", "--model", model]) == 0
    assert "max relative error" in capsys.readouterr().out


def test_gradcheck_impossible_tolerance():
    assert main(["gradcheck", "--model", "logistic", "--tol", "0"]) == 1


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_shipped_configs_validate(monkeypatch):
    from bcsc.harness import load_config

    monkeypatch.setenv("BCSC_DATA_DIR", str(DATA))
    for conf in sorted(CONFIGS.glob("*.conf")):
        load_config(conf).validate()


@pytest.mark.skipif(shutil.which("bcsc") is None, reason="console script not installed")
def test_console_script(small_conf, tmp_path):
    out = tmp_path / "m.csv"
    res = subprocess.run(["bcsc", "train", "--config", str(small_conf), "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert out.is_file()


def test_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "bcsc.cli", "selftest"], capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout
