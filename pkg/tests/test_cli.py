"""Command-line interface: exit codes, config precedence, output determinism."""

import subprocess
import sys

import numpy as np
import pytest

from gnmlab.cli import main
from gnmlab.config import ConfigError, parse_config_file, parse_float_list, parse_int_list
from gnmlab.learn import load_weights

TINY = [
    "--channels", "20", "--pattern-bins", "10", "--episode-length", "150",
    "--spike-prob", "0.02",
]


def run_cli(args, capsys=None):
    code = main(args)
    return code


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("epochs=12\nspike-prob = 0.01  # inline comment\n\n# full comment\nseed=4\n")
    assert parse_config_file(path) == {"epochs": "12", "spike_prob": "0.01", "seed": "4"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("epochs\n")
    with pytest.raises(ConfigError):
        parse_config_file(bad)
    dup = tmp_path / "dup.cfg"
    dup.write_text("epochs=1\nepochs=2\n")
    with pytest.raises(ConfigError):
        parse_config_file(dup)
    with pytest.raises(ConfigError):
        parse_config_file(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        parse_float_list("1.0,zap")
    with pytest.raises(ConfigError):
        parse_int_list("1,2.5")


def test_train_writes_weights_and_history(tmp_path):
    wpath = tmp_path / "w.txt"
    hpath = tmp_path / "h.csv"
    code = main(["train", *TINY, "--epochs", "10", "--weights-out", str(wpath),
                 "--history-out", str(hpath)])
    assert code == 0
    weights, meta = load_weights(wpath)
    assert weights.shape == (20,)
    assert meta["epochs"] == "10"
    assert meta["algorithm"] == "ALL"
    lines = hpath.read_text().splitlines()
    assert lines[0] == "epoch,target,actual"
    assert len(lines) == 11


def test_train_rerun_is_byte_identical(tmp_path):
    w1, w2 = tmp_path / "a.txt", tmp_path / "b.txt"
    args = ["train", *TINY, "--epochs", "10", "--seed", "3"]
    assert main([*args, "--weights-out", str(w1)]) == 0
    assert main([*args, "--weights-out", str(w2)]) == 0
    assert w1.read_bytes() == w2.read_bytes()


def test_bad_flag_and_bad_value_exit_1(tmp_path, capsys):
    assert main(["train", "--no-such-flag"]) == 1
    assert main(["train", "--epochs", "ten"]) == 1
    assert main(["train", "--algorithm", "SGD"]) == 1
    assert main(["train", *TINY, "--alpha", "1.5",
                 "--weights-out", str(tmp_path / "w.txt")]) == 1
    assert main(["no-such-command"]) == 1
    capsys.readouterr()


def test_eval_missing_weights_file_exits_2(tmp_path, capsys):
    assert main(["eval", "--weights", str(tmp_path / "absent.txt")]) == 2
    err = capsys.readouterr().err
    assert "runtime failure" in err


def test_eval_requires_weights_flag(capsys):
    assert main(["eval"]) == 1
    capsys.readouterr()


def test_eval_uses_weight_metadata_and_flags_win(tmp_path, capsys):
    wpath = tmp_path / "w.txt"
    assert main(["train", *TINY, "--epochs", "10", "--weights-out", str(wpath)]) == 0
    # metadata carries channels=20 etc., so eval needs no geometry flags
    assert main(["eval", "--weights", str(wpath), "--cap", "100", "--reps", "4"]) == 0
    out = capsys.readouterr().out
    assert "noisy_performance=" in out and "reps=4" in out
    # a contradictory explicit flag beats the stored metadata and is caught
    assert main(["eval", "--weights", str(wpath), "--channels", "10"]) == 1
    capsys.readouterr()


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epochs=10\nseed=5\nchannels=20\npattern-bins=10\n"
                   "episode-length=150\nspike-prob=0.02\n")
    w_file, w_flag = tmp_path / "f.txt", tmp_path / "g.txt"
    assert main(["train", "--config", str(cfg), "--weights-out", str(w_file)]) == 0
    _, meta = load_weights(w_file)
    assert meta["epochs"] == "10" and meta["seed"] == "5"
    # explicit flag overrides the file value
    assert main(["train", "--config", str(cfg), "--epochs", "3",
                 "--weights-out", str(w_flag)]) == 0
    _, meta2 = load_weights(w_flag)
    assert meta2["epochs"] == "3" and meta2["seed"] == "5"
    unknown = tmp_path / "u.cfg"
    unknown.write_text("not_an_option=1\n")
    assert main(["train", "--config", str(unknown)]) == 1


def test_sweep_rerun_is_byte_identical(tmp_path, capsys):
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    args = ["sweep", *TINY, "--epochs", "5", "--alphas", "0.3,0.6",
            "--etas", "0,0.5", "--seeds", "0", "--cap", "80", "--reps", "3"]
    assert main([*args, "--out", str(out1)]) == 0
    assert main([*args, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    header = [l for l in lines if l.startswith("alpha,")]
    data = [l for l in lines if l and not l.startswith("#") and not l.startswith("alpha,")]
    assert header == ["alpha,eta,seed,noisy_perf,cap"]
    assert len(data) == 4
    capsys.readouterr()


def test_compare_command_writes_csv(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    args = ["compare", *TINY, "--epochs", "5", "--models", "gnm-all,lif",
            "--seeds", "0,1", "--cap", "80", "--reps", "3", "--out", str(out)]
    assert main(args) == 0
    stdout = capsys.readouterr().out
    assert "lif/gnm noisy performance ratio=" in stdout
    lines = out.read_text().splitlines()
    data = [l for l in lines if l and not l.startswith("#") and not l.startswith("model,")]
    assert len(data) == 4
    assert main(["compare", *TINY, "--epochs", "5", "--models", "gnm-all,mystery",
                 "--out", str(out)]) == 1
    capsys.readouterr()


def test_crn_command_outputs(tmp_path, capsys):
    args = ["crn", "--channels", "5", "--pattern-bins", "6", "--spike-prob", "0.1",
            "--n-mol", "10,30", "--runs", "3", "--keep-trajectories", "2",
            "--horizon", "4", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert out.count("rmse=") == 2
    for n_mol in (10, 30):
        assert (tmp_path / f"crn_summary_{n_mol}.csv").exists()
        assert (tmp_path / f"crn_trajectories_{n_mol}.csv").exists()
    # reruns are byte-identical too
    before = (tmp_path / "crn_summary_10.csv").read_bytes()
    assert main(args) == 0
    capsys.readouterr()
    assert (tmp_path / "crn_summary_10.csv").read_bytes() == before


def test_bp_train_writes_net(tmp_path, capsys):
    npath = tmp_path / "net.txt"
    args = ["bp-train", *TINY, "--epochs", "4", "--n-hidden", "3",
            "--lambda", "0.001", "--net-out", str(npath)]
    assert main(args) == 0
    capsys.readouterr()
    from gnmlab.deepnet import load_net

    net, meta = load_net(npath)
    assert net.w_hidden.shape == (3, 20)
    assert meta["epochs"] == "4"


def test_console_script_entry_point(tmp_path):
    # the installed `gnmlab` script must behave like main()
    proc = subprocess.run(
        [sys.executable, "-m", "gnmlab.cli", "train", *TINY, "--epochs", "3",
         "--weights-out", str(tmp_path / "w.txt")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "trained epochs=3" in proc.stdout
