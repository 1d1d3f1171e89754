"""Synthetic per-AP channel-gain trajectories and dataset assembly.

A trajectory is a user walking through a rectangular room past a set of
fixed access points. Per-step gains combine log-distance path loss with
spatially correlated (exponential-autocorrelation) shadowing. A single
``diversity`` knob controls how much trajectories differ from each other:
it scales both the waypoint jitter around shared anchor paths and the
weight of each trajectory's private shadowing stream relative to a
shared one. ``diversity=0`` collapses the dataset onto one trajectory;
``diversity=1`` makes trajectories fully independent.

Every trajectory draws from its own RNG stream derived from
(master seed, trajectory id), so generation is order-independent and
bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GenerationError(ValueError):
    pass


@dataclass
class ChannelSnapshot:
    """One CSI instant: either a raw complex tensor or an aggregated gain vector."""

    timestamp: int
    gains_complex: np.ndarray | None = None  # [N_AP, N_ant, N_sb] complex
    gains_beta: np.ndarray | None = None     # [N_AP] real

    def __post_init__(self):
        if (self.gains_complex is None) == (self.gains_beta is None):
            raise GenerationError(
                "snapshot must carry exactly one of gains_complex / gains_beta"
            )


def aggregate_csi(snapshot: ChannelSnapshot, db: bool = False) -> np.ndarray:
    """Reduce a complex CSI tensor to per-AP mean power |h|^2 over antennas
    and subcarriers; optionally convert to dB."""
    h = snapshot.gains_complex
    if h is None:
        raise GenerationError("aggregate_csi requires a complex CSI tensor")
    if h.ndim != 3 or h.shape[1] == 0 or h.shape[2] == 0:
        raise GenerationError(
            f"expected non-empty [N_AP, N_ant, N_sb] tensor, got shape {h.shape}"
        )
    beta = (np.abs(h) ** 2).mean(axis=(1, 2))
    if db:
        beta = 10.0 * np.log10(beta)
    return beta


@dataclass
class Trajectory:
    id: int
    waypoints: list[tuple[float, float]]
    speed: float
    steps: np.ndarray  # [T, n_ap] gains in dB
    rng_seed: int


@dataclass
class GeneratorConfig:
    room: tuple[float, float] = (20.0, 20.0)
    n_ap: int = 8
    ap_positions: np.ndarray | None = None
    n_trajectories: int = 2500
    steps: int = 60                      # T
    speed_range: tuple[float, float] = (0.5, 1.5)
    step_seconds: float = 0.5
    path_loss_exponent: float = 2.5
    ref_gain_db: float = -30.0
    min_distance: float = 0.5
    shadowing_sigma_db: float = 4.0
    decorrelation_distance: float = 2.0
    diversity: float = 1.0
    n_anchors: int = 6
    master_seed: int = 0

    def resolved_ap_positions(self) -> np.ndarray:
        if self.ap_positions is not None:
            pos = np.asarray(self.ap_positions, dtype=np.float64)
            if pos.shape != (self.n_ap, 2):
                raise GenerationError(
                    f"ap_positions shape {pos.shape} != ({self.n_ap}, 2)"
                )
            return pos
        return _default_ap_grid(self.n_ap, self.room)


def _default_ap_grid(n_ap: int, room) -> np.ndarray:
    cols = int(math.ceil(math.sqrt(n_ap)))
    rows = int(math.ceil(n_ap / cols))
    xs = (np.arange(cols) + 0.5) / cols * room[0]
    ys = (np.arange(rows) + 0.5) / rows * room[1]
    grid = [(x, y) for y in ys for x in xs]
    return np.asarray(grid[:n_ap], dtype=np.float64)


def _ar1_sequence(rng, T, sigma, rho):
    """Stationary AR(1) with std sigma and one-step correlation rho (scalar or [T-1])."""
    eps = rng.standard_normal(T)
    out = np.empty(T)
    out[0] = sigma * eps[0]
    rho = np.broadcast_to(np.asarray(rho, dtype=np.float64), (T - 1,)) if T > 1 else rho
    for t in range(1, T):
        r = rho[t - 1]
        out[t] = r * out[t - 1] + sigma * math.sqrt(max(0.0, 1.0 - r * r)) * eps[t]
    return out


def _walk(start, waypoints, speed, dt, T, room):
    """Constant-speed walk through a waypoint list, ping-ponging when exhausted."""
    pos = np.array(start, dtype=np.float64)
    targets = list(waypoints)
    out = np.empty((T, 2))
    ti = 0
    direction = 1
    for t in range(T):
        out[t] = pos
        remaining = speed * dt
        stalls = 0
        while remaining > 1e-12 and targets:
            tgt = np.asarray(targets[ti])
            vec = tgt - pos
            dist = float(np.hypot(*vec))
            if dist <= remaining:
                pos = tgt.copy()
                remaining -= dist
                # coincident targets consume no distance; give up after a
                # full lap of zero-length hops instead of spinning forever
                stalls = stalls + 1 if dist == 0.0 else 0
                if stalls > len(targets):
                    break
                nxt = ti + direction
                if nxt < 0 or nxt >= len(targets):
                    direction = -direction
                    nxt = ti + direction
                if nxt == ti:
                    break
                ti = min(max(nxt, 0), len(targets) - 1)
            else:
                pos = pos + vec / dist * remaining
                remaining = 0.0
        pos[0] = min(max(pos[0], 0.0), room[0])
        pos[1] = min(max(pos[1], 0.0), room[1])
    return out


def _shared_streams(cfg: GeneratorConfig):
    """Anchor path and shared shadowing derived from the master seed alone."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(0,)))
    anchors = rng.uniform((0, 0), cfg.room, size=(cfg.n_anchors, 2))
    v_mean = 0.5 * (cfg.speed_range[0] + cfg.speed_range[1])
    rho = math.exp(-v_mean * cfg.step_seconds / cfg.decorrelation_distance)
    shared_shadow = np.stack(
        [_ar1_sequence(rng, cfg.steps, cfg.shadowing_sigma_db, rho)
         for _ in range(cfg.n_ap)],
        axis=1,
    )  # [T, n_ap]
    return anchors, shared_shadow


def generate_trajectory(cfg: GeneratorConfig, traj_id: int,
                        shared=None) -> Trajectory:
    if cfg.decorrelation_distance <= 0:
        raise GenerationError("decorrelation distance must be > 0")
    if shared is None:
        shared = _shared_streams(cfg)
    anchors, shared_shadow = shared
    ap_pos = cfg.resolved_ap_positions()
    seed_seq = np.random.SeedSequence(cfg.master_seed, spawn_key=(1 + traj_id,))
    rng = np.random.default_rng(seed_seq)

    speed = rng.uniform(*cfg.speed_range)
    jitter = cfg.diversity * np.asarray(cfg.room) * 0.5
    points = anchors + rng.uniform(-1, 1, size=anchors.shape) * jitter
    points = np.clip(points, 0, np.asarray(cfg.room))
    path = _walk(points[0], [tuple(p) for p in points[1:]], speed,
                 cfg.step_seconds, cfg.steps, cfg.room)

    d = np.maximum(
        np.linalg.norm(path[:, None, :] - ap_pos[None, :, :], axis=2),
        cfg.min_distance,
    )  # [T, n_ap]
    det = cfg.ref_gain_db - 10.0 * cfg.path_loss_exponent * np.log10(d)

    step_dist = np.linalg.norm(np.diff(path, axis=0), axis=1)  # [T-1]
    rho = np.exp(-step_dist / cfg.decorrelation_distance)
    own = np.stack(
        [_ar1_sequence(rng, cfg.steps, cfg.shadowing_sigma_db, rho)
         for _ in range(cfg.n_ap)],
        axis=1,
    )
    lam = min(max(cfg.diversity, 0.0), 1.0)
    shadow = math.sqrt(1.0 - lam) * shared_shadow + math.sqrt(lam) * own

    gains = (det + shadow).astype(np.float32)
    return Trajectory(
        id=traj_id,
        waypoints=[tuple(p) for p in points],
        speed=float(speed),
        steps=gains,
        rng_seed=cfg.master_seed,
    )


@dataclass
class TrajectoryDataset:
    trajectories: list[Trajectory]
    n_ap: int
    window: int
    horizon: int = 1
    config: GeneratorConfig | None = None
    train_ids: list[int] = field(default_factory=list)
    val_ids: list[int] = field(default_factory=list)
    norm_mean: np.ndarray | None = None  # per-AP, from training portion
    norm_std: np.ndarray | None = None
    skipped_short: int = 0

    def finalize(self, split_seed: int | None = None):
        """Assign the 9:1 trajectory split and compute normalization stats."""
        n = len(self.trajectories)
        if split_seed is None:
            split_seed = self.config.master_seed if self.config else 0
        rng = np.random.default_rng(np.random.SeedSequence(split_seed, spawn_key=(0xA11,)))
        order = rng.permutation(n)
        # 9:1 split, but never leave the validation side empty
        n_train = min(math.ceil(0.9 * n), n - 1) if n > 1 else n
        ids = [t.id for t in self.trajectories]
        self.train_ids = sorted(ids[i] for i in order[:n_train])
        self.val_ids = sorted(ids[i] for i in order[n_train:])
        train = np.concatenate(
            [t.steps for t in self.trajectories if t.id in set(self.train_ids)], axis=0
        )
        self.norm_mean = train.mean(axis=0).astype(np.float64)
        self.norm_std = train.std(axis=0).astype(np.float64)
        if np.any(self.norm_std == 0):
            self.norm_std = np.where(self.norm_std == 0, 1.0, self.norm_std)
        return self

    def normalize(self, gains: np.ndarray) -> np.ndarray:
        return ((gains - self.norm_mean) / self.norm_std).astype(np.float32)

    def denormalize(self, gains: np.ndarray) -> np.ndarray:
        return gains * self.norm_std + self.norm_mean

    def windows(self, subset: str = "train"):
        """Sliding windows with stride 1, z-scored per AP.

        Returns (X, Y): X [n, W, n_ap] inputs, Y [n, n_ap] next-step targets,
        both in normalized space.
        """
        if self.norm_mean is None:
            raise RuntimeError("dataset not finalized: normalization stats missing")
        wanted = {"train": set(self.train_ids), "val": set(self.val_ids),
                  "all": None}[subset]
        W = self.window
        xs, ys = [], []
        self.skipped_short = 0
        for t in self.trajectories:
            if wanted is not None and t.id not in wanted:
                continue
            g = self.normalize(t.steps)
            T = g.shape[0]
            if T < W + self.horizon:
                self.skipped_short += 1
                continue
            n_win = T - W - self.horizon + 1
            idx = np.arange(W)[None, :] + np.arange(n_win)[:, None]
            xs.append(g[idx])
            ys.append(g[np.arange(n_win) + W + self.horizon - 1])
        if not xs:
            return (np.zeros((0, W, self.n_ap), np.float32),
                    np.zeros((0, self.n_ap), np.float32))
        return np.concatenate(xs), np.concatenate(ys)


def generate_trajectories(cfg: GeneratorConfig, window: int = 19) -> TrajectoryDataset:
    if cfg.n_trajectories < 1:
        raise GenerationError("need at least one trajectory")
    if cfg.decorrelation_distance <= 0:
        raise GenerationError("decorrelation distance must be > 0")
    ap_pos = cfg.resolved_ap_positions()
    room = np.asarray(cfg.room)
    if np.any(ap_pos < 0) or np.any(ap_pos > room):
        raise GenerationError("AP positions must lie inside the room")
    shared = _shared_streams(cfg)
    trajectories = [generate_trajectory(cfg, i, shared)
                    for i in range(cfg.n_trajectories)]
    ds = TrajectoryDataset(trajectories=trajectories, n_ap=cfg.n_ap,
                           window=window, config=cfg)
    return ds.finalize(cfg.master_seed)


def flatten_windows(x: np.ndarray) -> np.ndarray:
    """[n, W, n_ap] predictor windows -> [n, 1, n_ap*W] AP-major flat vectors."""
    n, W, n_ap = x.shape
    return np.ascontiguousarray(x.transpose(0, 2, 1)).reshape(n, 1, n_ap * W)


def unflatten_windows(flat: np.ndarray, n_ap: int) -> np.ndarray:
    """Inverse of :func:`flatten_windows`."""
    n, one, L = flat.shape
    W = L // n_ap
    return np.ascontiguousarray(flat.reshape(n, n_ap, W).transpose(0, 2, 1))
