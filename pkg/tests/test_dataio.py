import numpy as np
import pytest

from gaincast.data import GeneratorConfig, generate_trajectories
from gaincast.dataio import (DatasetFormatError, import_csv, load_dataset,
                             save_dataset)


@pytest.fixture(scope="module")
def dataset():
    cfg = GeneratorConfig(n_trajectories=10, steps=30, master_seed=4,
                          diversity=0.4)
    return generate_trajectories(cfg, window=19)


def test_round_trip_bit_exact(tmp_path, dataset):
    path = tmp_path / "d.ldat"
    save_dataset(path, dataset)
    back = load_dataset(path)
    assert len(back.trajectories) == 10
    assert back.n_ap == 8
    assert back.window == 19
    for a, b in zip(dataset.trajectories, back.trajectories):
        np.testing.assert_array_equal(a.steps, b.steps)


def test_manifest_restores_split_and_normalization(tmp_path, dataset):
    path = tmp_path / "d.ldat"
    save_dataset(path, dataset)
    assert (tmp_path / "d.ldat.manifest").exists()
    back = load_dataset(path)
    assert back.train_ids == dataset.train_ids
    assert back.val_ids == dataset.val_ids
    np.testing.assert_allclose(back.norm_mean, dataset.norm_mean, rtol=1e-12)
    np.testing.assert_allclose(back.norm_std, dataset.norm_std, rtol=1e-12)
    assert back.config.master_seed == 4
    assert back.config.diversity == 0.4


def test_windows_identical_after_reload(tmp_path, dataset):
    path = tmp_path / "d.ldat"
    save_dataset(path, dataset)
    back = load_dataset(path)
    xa, ya = dataset.windows("train")
    xb, yb = back.windows("train")
    np.testing.assert_array_equal(xa, xb)
    np.testing.assert_array_equal(ya, yb)


def test_missing_manifest_falls_back_to_fresh_split(tmp_path, dataset):
    path = tmp_path / "d.ldat"
    save_dataset(path, dataset)
    (tmp_path / "d.ldat.manifest").unlink()
    back = load_dataset(path)
    assert len(back.train_ids) == 9
    assert back.norm_mean is not None


def test_magic_and_version_checked(tmp_path, dataset):
    path = tmp_path / "d.ldat"
    save_dataset(path, dataset)
    assert path.read_bytes()[:4] == b"LDAT"
    bad = tmp_path / "bad.ldat"
    bad.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(DatasetFormatError, match="magic"):
        load_dataset(bad)
    buf = bytearray(path.read_bytes())
    buf[4] = 42
    bad.write_bytes(bytes(buf))
    with pytest.raises(DatasetFormatError, match="version"):
        load_dataset(bad)


def test_truncated_file_rejected(tmp_path, dataset):
    path = tmp_path / "d.ldat"
    save_dataset(path, dataset)
    truncated = tmp_path / "t.ldat"
    truncated.write_bytes(path.read_bytes()[:-100])
    with pytest.raises(DatasetFormatError, match="truncated"):
        load_dataset(truncated)


def test_import_csv(tmp_path):
    rng = np.random.default_rng(0)
    paths = []
    for i in range(10):
        steps = rng.standard_normal((25, 8)).astype(np.float32)
        p = tmp_path / f"trace{i}.csv"
        np.savetxt(p, steps, delimiter=",")
        paths.append(p)
    ds = import_csv(paths, window=19)
    assert ds.n_ap == 8
    assert len(ds.trajectories) == 10
    assert len(ds.train_ids) == 9
    x, y = ds.windows("train")
    assert x.shape[1:] == (19, 8)


def test_import_csv_rejects_inconsistent_columns(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    np.savetxt(a, np.zeros((5, 8)), delimiter=",")
    np.savetxt(b, np.zeros((5, 6)), delimiter=",")
    with pytest.raises(DatasetFormatError, match="columns"):
        import_csv([a, b], window=3)
