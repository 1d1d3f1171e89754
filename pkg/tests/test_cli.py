import numpy as np
import pytest

from gaincast.checkpoint import save_tensors
from gaincast.autoencoder import AeModel
from gaincast.cli import (EXIT_AUDIT, EXIT_OK, EXIT_VALIDATION, main)


TINY_INI = """
[data]
n_trajectories = 10
steps = 30
diversity = 0.4

[training]
max_iterations = 40
eval_interval = 20
val_cap = 32

[predictor]
forward_hidden = 6
backward_hidden = 6
placement = none
"""


@pytest.fixture
def tiny_config(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(TINY_INI)
    return p


@pytest.fixture
def tiny_dataset(tmp_path, tiny_config):
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--out-dir", str(out),
                 "generate"]) == EXIT_OK
    return out / "dataset.ldat"


def test_audit_params_passes(capsys):
    assert main(["audit-params"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all 57 cells match" in out
    assert "50.66" in out


def test_generate_writes_artifacts(tmp_path, tiny_config, capsys):
    out = tmp_path / "out"
    code = main(["--config", str(tiny_config), "--out-dir", str(out),
                 "generate"])
    assert code == EXIT_OK
    assert (out / "dataset.ldat").exists()
    assert (out / "dataset.ldat.manifest").exists()
    assert (out / "stepwise_correlation.csv").exists()
    assert "pearson diversity" in capsys.readouterr().out


def test_generate_n_override(tmp_path, tiny_config):
    out = tmp_path / "out"
    assert main(["--config", str(tiny_config), "--out-dir", str(out),
                 "generate", "--n", "5"]) == EXIT_OK
    from gaincast.dataio import load_dataset
    assert len(load_dataset(out / "dataset.ldat").trajectories) == 5


def test_train_baseline(tmp_path, tiny_config, tiny_dataset, capsys):
    out = tmp_path / "train-out"
    code = main(["--config", str(tiny_config), "--out-dir", str(out),
                 "train", "--dataset", str(tiny_dataset),
                 "--strategy", "baseline-no-ae"])
    assert code == EXIT_OK
    assert (out / "metrics.csv").exists()
    runs = list(out.glob("run-baseline-no-ae-*"))
    assert len(runs) == 1
    assert (runs[0] / "predictor.ckpt").exists()
    assert (runs[0] / "report.txt").exists()
    assert (runs[0] / "config.digest").exists()
    assert "validation RMSE" in capsys.readouterr().out


def test_train_missing_dataset_is_validation_error(tmp_path, tiny_config, capsys):
    code = main(["--config", str(tiny_config), "--out-dir", str(tmp_path),
                 "train", "--dataset", str(tmp_path / "nope.ldat"),
                 "--strategy", "baseline-no-ae"])
    assert code == EXIT_VALIDATION
    assert "generate" in capsys.readouterr().err


def test_compression_aware_requires_ae_checkpoint(tmp_path, tiny_config,
                                                  tiny_dataset, capsys):
    code = main(["--config", str(tiny_config), "--out-dir", str(tmp_path),
                 "train", "--dataset", str(tiny_dataset),
                 "--strategy", "compression-aware"])
    assert code == EXIT_VALIDATION
    assert "--ae-checkpoint" in capsys.readouterr().err


def test_compression_aware_with_checkpoint(tmp_path, tiny_config, tiny_dataset):
    ckpt = tmp_path / "ae.ckpt"
    save_tensors(ckpt, AeModel(seed=0).state())
    out = tmp_path / "ca-out"
    code = main(["--config", str(tiny_config), "--out-dir", str(out),
                 "train", "--dataset", str(tiny_dataset),
                 "--strategy", "compression-aware",
                 "--ae-checkpoint", str(ckpt)])
    assert code == EXIT_OK
    runs = list(out.glob("run-compression-aware-*"))
    assert (runs[0] / "ae.ckpt").exists()


def test_unknown_config_key_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[data]\nwibble = 3\n")
    assert main(["--config", str(p), "generate"]) == EXIT_VALIDATION
    assert "wibble" in capsys.readouterr().err


def test_same_seed_same_digest(tmp_path, tiny_config, tiny_dataset):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["--config", str(tiny_config), "--out-dir", str(out),
                     "--seed", "5", "train", "--dataset", str(tiny_dataset),
                     "--strategy", "baseline-no-ae"]) == EXIT_OK
        (run,) = out.glob("run-*")
        outs.append((run / "config.digest").read_text())
    assert outs[0] == outs[1]


def test_sweep_n_ae_only(tmp_path, tiny_config, capsys):
    out = tmp_path / "sweep"
    code = main(["--config", str(tiny_config), "--out-dir", str(out),
                 "sweep-n", "--sizes", "6,10", "--ae-only"])
    assert code == EXIT_OK
    csv_text = (out / "sweep_n.csv").read_text()
    lines = csv_text.strip().splitlines()
    assert lines[0].startswith("N,pearson_mean")
    assert len(lines) == 3


def test_sweep_n_rejects_degenerate_sizes(tmp_path, tiny_config, capsys):
    code = main(["--config", str(tiny_config), "--out-dir", str(tmp_path),
                 "sweep-n", "--sizes", "1,5", "--ae-only"])
    assert code == EXIT_VALIDATION


def test_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "bench"
    code = main(["--out-dir", str(out), "bench", "--batch", "4",
                 "--repetitions", "3"])
    assert code == EXIT_OK
    text = (out / "bench.csv").read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "model,optimized,batch,ls_ms,qps,improvement_pct"
    assert len(lines) == 5  # 2 models x {plain, optimized}
    assert any(line.startswith("bilstm,") for line in lines[1:])
    assert any(line.startswith("se-bilstm,") for line in lines[1:])


def test_bench_missing_checkpoint(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "bench",
                 "--bilstm-checkpoint", str(tmp_path / "none.ckpt")])
    assert code == EXIT_VALIDATION
    assert "checkpoint not found" in capsys.readouterr().err


def test_report_prints_logged_tables(tmp_path, capsys):
    (tmp_path / "metrics.csv").write_text("strategy,rmse\nbaseline-no-ae,0.1\n")
    assert main(["--out-dir", str(tmp_path), "report"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "metrics.csv" in out and "baseline-no-ae" in out


def test_report_empty_dir_fails(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path / "empty"), "report"]) \
        == EXIT_VALIDATION


def test_audit_exit_code_on_forced_mismatch(monkeypatch, capsys):
    from gaincast import cli, predictor

    broken = {(32, 32): {"before": (11298, 97.94)}}
    monkeypatch.setattr(predictor, "REFERENCE_COMPLEXITY_TABLE", broken)
    assert main(["audit-params"]) == EXIT_AUDIT
    assert "AUDIT FAILED" in capsys.readouterr().out
