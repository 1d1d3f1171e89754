"""Dataset persistence: binary trajectory container plus audit manifest.

Binary layout (little-endian):
    magic "LDAT" | version u8 | n_ap u16 | W u16 | N u32 | T u32
    then N gain matrices, each [T, n_ap] f32 row-major.

A sidecar ``<file>.manifest`` (INI text) records the generator config,
seed, split and normalization stats so a run can be audited or replayed
without regenerating.
"""
from __future__ import annotations

import configparser
import struct
from pathlib import Path

import numpy as np

from .data import GeneratorConfig, Trajectory, TrajectoryDataset

MAGIC = b"LDAT"
VERSION = 1


class DatasetFormatError(ValueError):
    pass


def save_dataset(path, ds: TrajectoryDataset):
    path = Path(path)
    n = len(ds.trajectories)
    T = ds.trajectories[0].steps.shape[0]
    for t in ds.trajectories:
        if t.steps.shape != (T, ds.n_ap):
            raise DatasetFormatError(
                f"trajectory {t.id} shape {t.steps.shape} != ({T}, {ds.n_ap})"
            )
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BHHII", VERSION, ds.n_ap, ds.window, n, T))
        for t in ds.trajectories:
            f.write(np.ascontiguousarray(t.steps, dtype="<f4").tobytes())
    _write_manifest(path.with_suffix(path.suffix + ".manifest"), ds)


def _write_manifest(path: Path, ds: TrajectoryDataset):
    cp = configparser.ConfigParser()
    cfg = ds.config
    if cfg is not None:
        cp["generator"] = {
            "master_seed": str(cfg.master_seed),
            "room": f"{cfg.room[0]},{cfg.room[1]}",
            "n_ap": str(cfg.n_ap),
            "n_trajectories": str(cfg.n_trajectories),
            "steps": str(cfg.steps),
            "speed_range": f"{cfg.speed_range[0]},{cfg.speed_range[1]}",
            "step_seconds": str(cfg.step_seconds),
            "path_loss_exponent": str(cfg.path_loss_exponent),
            "ref_gain_db": str(cfg.ref_gain_db),
            "shadowing_sigma_db": str(cfg.shadowing_sigma_db),
            "decorrelation_distance": str(cfg.decorrelation_distance),
            "diversity": str(cfg.diversity),
            "n_anchors": str(cfg.n_anchors),
        }
    cp["dataset"] = {
        "window": str(ds.window),
        "horizon": str(ds.horizon),
        "train_ids": ",".join(map(str, ds.train_ids)),
        "val_ids": ",".join(map(str, ds.val_ids)),
    }
    cp["normalization"] = {
        "mean": ",".join(repr(float(v)) for v in ds.norm_mean),
        "std": ",".join(repr(float(v)) for v in ds.norm_std),
    }
    with path.open("w") as f:
        cp.write(f)


def load_dataset(path) -> TrajectoryDataset:
    path = Path(path)
    with path.open("rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, n_ap, window, n, T = struct.unpack("<BHHII", f.read(13))
        if version != VERSION:
            raise DatasetFormatError(f"unsupported dataset version {version}")
        trajectories = []
        per = T * n_ap * 4
        for i in range(n):
            raw = f.read(per)
            if len(raw) != per:
                raise DatasetFormatError(f"truncated dataset at trajectory {i}")
            steps = np.frombuffer(raw, dtype="<f4").reshape(T, n_ap).copy()
            trajectories.append(Trajectory(id=i, waypoints=[], speed=float("nan"),
                                           steps=steps, rng_seed=0))
    ds = TrajectoryDataset(trajectories=trajectories, n_ap=n_ap, window=window)
    mpath = path.with_suffix(path.suffix + ".manifest")
    if mpath.exists():
        _apply_manifest(mpath, ds)
    else:
        ds.finalize(0)
    return ds


def _apply_manifest(path: Path, ds: TrajectoryDataset):
    cp = configparser.ConfigParser()
    cp.read(path)
    sec = cp["dataset"]
    ds.horizon = int(sec.get("horizon", "1"))
    ds.train_ids = [int(v) for v in sec["train_ids"].split(",") if v]
    ds.val_ids = [int(v) for v in sec["val_ids"].split(",") if v]
    norm = cp["normalization"]
    ds.norm_mean = np.array([float(v) for v in norm["mean"].split(",")])
    ds.norm_std = np.array([float(v) for v in norm["std"].split(",")])
    if cp.has_section("generator"):
        g = cp["generator"]
        room = tuple(float(v) for v in g["room"].split(","))
        speed = tuple(float(v) for v in g["speed_range"].split(","))
        ds.config = GeneratorConfig(
            room=room, n_ap=int(g["n_ap"]),
            n_trajectories=int(g["n_trajectories"]), steps=int(g["steps"]),
            speed_range=speed, step_seconds=float(g["step_seconds"]),
            path_loss_exponent=float(g["path_loss_exponent"]),
            ref_gain_db=float(g["ref_gain_db"]),
            shadowing_sigma_db=float(g["shadowing_sigma_db"]),
            decorrelation_distance=float(g["decorrelation_distance"]),
            diversity=float(g["diversity"]), n_anchors=int(g["n_anchors"]),
            master_seed=int(g["master_seed"]),
        )


def import_csv(paths, window: int, split_seed: int = 0) -> TrajectoryDataset:
    """Build a dataset from plain CSV traces (one row per timestep, one
    column per AP). Each file becomes one trajectory."""
    trajectories = []
    n_ap = None
    for i, p in enumerate(paths):
        steps = np.loadtxt(p, delimiter=",", dtype=np.float32, ndmin=2)
        if n_ap is None:
            n_ap = steps.shape[1]
        elif steps.shape[1] != n_ap:
            raise DatasetFormatError(
                f"{p}: {steps.shape[1]} columns, expected {n_ap}"
            )
        trajectories.append(Trajectory(id=i, waypoints=[], speed=float("nan"),
                                       steps=steps, rng_seed=0))
    ds = TrajectoryDataset(trajectories=trajectories, n_ap=n_ap, window=window)
    return ds.finalize(split_seed)
