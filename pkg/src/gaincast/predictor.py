"""Channel-gain predictor: asymmetric BiLSTM with optional SE gating.

The model consumes a normalized gain window [B, W, 8] and emits the
next-step gain vector [B, 8]. Forward and backward recurrent paths may
have different hidden sizes (f, b); the regression head consumes the
concatenated final hidden states of the two directions. An SE gate can
sit in one of three places: on the 8 AP input channels (squeeze over
time), on the concatenated (f+b) hidden features, or on the 8 outputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .layers import Dense, LSTMDirection, SEBlock

INPUT_DIM = 8
OUTPUT_DIM = 8
SE_REDUCTION = 8


class SEPlacement(str, Enum):
    BEFORE = "before"       # on AP input channels
    PRE_FC = "pre-fc"       # on concatenated final hidden features
    AFTER_FC = "after-fc"   # on outputs
    NONE = "none"

    @classmethod
    def parse(cls, s: str) -> "SEPlacement":
        try:
            return cls(s.lower())
        except ValueError:
            raise ValueError(
                f"unknown SE placement {s!r}; expected one of "
                f"{[p.value for p in cls]}"
            ) from None


@dataclass(frozen=True)
class PredictorConfig:
    forward_hidden: int
    backward_hidden: int
    placement: SEPlacement = SEPlacement.BEFORE

    def __post_init__(self):
        if self.forward_hidden < 1 or self.backward_hidden < 1:
            raise ValueError("hidden sizes must be >= 1")


def _se_channels(cfg: PredictorConfig) -> int:
    if cfg.placement is SEPlacement.BEFORE:
        return INPUT_DIM
    if cfg.placement is SEPlacement.PRE_FC:
        return cfg.forward_hidden + cfg.backward_hidden
    if cfg.placement is SEPlacement.AFTER_FC:
        return OUTPUT_DIM
    return 0


def param_count(cfg: PredictorConfig) -> int:
    """Closed-form parameter count for a configuration."""
    f, b = cfg.forward_hidden, cfg.backward_hidden
    total = 4 * (INPUT_DIM * f + f * f + 2 * f)
    total += 4 * (INPUT_DIM * b + b * b + 2 * b)
    total += (f + b) * OUTPUT_DIM + OUTPUT_DIM
    C = _se_channels(cfg)
    if C:
        d = max(1, C // SE_REDUCTION)
        total += C * d + d + d * C + C
    return total


BASELINE_CONFIG = PredictorConfig(256, 256, SEPlacement.NONE)
BASELINE_PARAM_COUNT = param_count(BASELINE_CONFIG)  # 548872


def param_reduction(cfg: PredictorConfig) -> float:
    """Percent reduction vs the symmetric (256,256) no-SE reference."""
    return 100.0 * (1.0 - param_count(cfg) / BASELINE_PARAM_COUNT)


class PredictorModel:
    def __init__(self, cfg: PredictorConfig, seed: int = 0, dtype=np.float32):
        self.cfg = cfg
        self.dtype = dtype
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5E,)))
        C = _se_channels(cfg)
        self.se = SEBlock(C, SE_REDUCTION, rng, dtype) if C else None
        self.fwd = LSTMDirection(INPUT_DIM, cfg.forward_hidden, False, rng, dtype)
        self.bwd = LSTMDirection(INPUT_DIM, cfg.backward_hidden, True, rng, dtype)
        self.head = Dense(cfg.forward_hidden + cfg.backward_hidden, OUTPUT_DIM,
                          rng, dtype)

    def predict(self, x) -> Tensor:
        """Forward pass on [B, W, 8] -> [B, 8]."""
        x = ad.as_tensor(x)
        if x.data.ndim != 3 or x.shape[2] != INPUT_DIM:
            raise ad.ShapeMismatchError(
                f"predict expects [B,W,{INPUT_DIM}], got {x.shape}"
            )
        if self.cfg.placement is SEPlacement.BEFORE:
            xc = ad.transpose(x, (0, 2, 1))           # [B, 8, T]
            xc = self.se.forward(xc)
            x = ad.transpose(xc, (0, 2, 1))
        hf = ad.index_time(self.fwd.forward(x), x.shape[1] - 1)
        hb = ad.index_time(self.bwd.forward(x), 0)
        h = ad.concat([hf, hb], axis=1)
        if self.cfg.placement is SEPlacement.PRE_FC:
            h = self.se.forward(h)
        out = self.head.forward(h)
        if self.cfg.placement is SEPlacement.AFTER_FC:
            out = self.se.forward(out)
        return out

    def predict_fast(self, x: np.ndarray) -> np.ndarray:
        """Tape-free batched inference path (same numerics, raw numpy)."""
        x = np.asarray(x, dtype=self.dtype)
        cfg = self.cfg
        if cfg.placement is SEPlacement.BEFORE:
            x = x * _se_gate_np(self.se, x.mean(axis=1))[:, None, :]
        hf = _lstm_last_np(self.fwd, x, reverse=False)
        hb = _lstm_last_np(self.bwd, x, reverse=True)
        h = np.concatenate([hf, hb], axis=1)
        if cfg.placement is SEPlacement.PRE_FC:
            h = h * _se_gate_np(self.se, h)
        out = h @ self.head.weight.data + self.head.bias.data
        if cfg.placement is SEPlacement.AFTER_FC:
            out = out * _se_gate_np(self.se, out)
        return out

    def params(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        if self.se is not None:
            out.update(self.se.params("pred.se"))
        out.update(self.fwd.params("pred.fwd"))
        out.update(self.bwd.params("pred.bwd"))
        out.update(self.head.params("pred.head"))
        return out

    def param_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params().items()}

    def load_state(self, state: dict[str, np.ndarray]):
        for k, p in self.params().items():
            arr = np.asarray(state[k], dtype=p.dtype)
            if arr.shape != p.data.shape:
                raise ad.ShapeMismatchError(
                    f"{k}: checkpoint shape {arr.shape} != model shape {p.data.shape}"
                )
            p.data[...] = arr


def _se_gate_np(se: SEBlock, s: np.ndarray) -> np.ndarray:
    a = np.maximum(s @ se.w1.data + se.b1.data, 0)
    z = a @ se.w2.data + se.b2.data
    return ad._sigmoid(z)


def _lstm_last_np(direction: LSTMDirection, x: np.ndarray, reverse: bool) -> np.ndarray:
    B, T, _ = x.shape
    h = direction.hidden
    wi, wh = direction.wi.data, direction.wh.data
    bias = direction.bi.data + direction.bh.data
    hs = np.zeros((B, h), dtype=x.dtype)
    cs = np.zeros((B, h), dtype=x.dtype)
    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in order:
        z = x[:, t, :] @ wi + hs @ wh + bias
        ig = ad._sigmoid(z[:, :h])
        fg = ad._sigmoid(z[:, h:2 * h])
        gg = np.tanh(z[:, 2 * h:3 * h])
        og = ad._sigmoid(z[:, 3 * h:])
        cs = fg * cs + ig * gg
        hs = og * np.tanh(cs)
    return hs


# Published reference counts for the complexity audit: for each (f, b)
# row, parameter count and percent reduction under each SE placement.
# The input-side and output-side placements coincide because the model
# has 8 inputs and 8 outputs.
REFERENCE_COMPLEXITY_TABLE = {
    (32, 32): {"before": (11297, 97.94), "pre-fc": (12368, 97.75), "after-fc": (11297, 97.94)},
    (32, 64): {"before": (25121, 95.42), "pre-fc": (27508, 94.99), "after-fc": (25121, 95.42)},
    (64, 32): {"before": (25121, 95.42), "pre-fc": (27508, 94.99), "after-fc": (25121, 95.42)},
    (64, 64): {"before": (38945, 92.90), "pre-fc": (43160, 92.14), "after-fc": (38945, 92.90)},
    (64, 96): {"before": (60961, 88.89), "pre-fc": (67516, 87.70), "after-fc": (60961, 88.89)},
    (96, 64): {"before": (60961, 88.89), "pre-fc": (67516, 87.70), "after-fc": (60961, 88.89)},
    (64, 128): {"before": (91169, 83.39), "pre-fc": (100576, 81.68), "after-fc": (91169, 83.39)},
    (128, 64): {"before": (91169, 83.39), "pre-fc": (100576, 81.68), "after-fc": (91169, 83.39)},
    (96, 128): {"before": (113185, 79.38), "pre-fc": (125956, 77.05), "after-fc": (113185, 79.38)},
    (128, 96): {"before": (113185, 79.38), "pre-fc": (125956, 77.05), "after-fc": (113185, 79.38)},
    (128, 128): {"before": (143393, 73.87), "pre-fc": (160040, 70.84), "after-fc": (143393, 73.87)},
    (128, 160): {"before": (181793, 66.88), "pre-fc": (202828, 63.05), "after-fc": (181793, 66.88)},
    (160, 128): {"before": (181793, 66.88), "pre-fc": (202828, 63.05), "after-fc": (181793, 66.88)},
    (160, 160): {"before": (220193, 59.88), "pre-fc": (246128, 55.16), "after-fc": (220193, 59.88)},
    (128, 192): {"before": (228385, 58.39), "pre-fc": (254320, 53.66), "after-fc": (228385, 58.39)},
    (192, 128): {"before": (228385, 58.39), "pre-fc": (254320, 53.66), "after-fc": (228385, 58.39)},
    (192, 192): {"before": (313377, 42.91), "pre-fc": (350648, 36.11), "after-fc": (313377, 42.91)},
    (128, 256): {"before": (346145, 36.94), "pre-fc": (383416, 30.14), "after-fc": (346145, 36.94)},
    (256, 128): {"before": (346145, 36.94), "pre-fc": (383416, 30.14), "after-fc": (346145, 36.94)},
}


@dataclass
class AuditCell:
    config: PredictorConfig
    expected_params: int
    computed_params: int
    expected_reduction: float
    computed_reduction: float

    @property
    def params_ok(self) -> bool:
        return self.expected_params == self.computed_params

    @property
    def reduction_ok(self) -> bool:
        return abs(self.expected_reduction - self.computed_reduction) <= 0.01 + 1e-9


@dataclass
class AuditReport:
    cells: list[AuditCell]

    @property
    def mismatches(self) -> list[AuditCell]:
        return [c for c in self.cells if not (c.params_ok and c.reduction_ok)]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def complexity_audit() -> AuditReport:
    """Recompute every reference (params, reduction) cell from the closed form."""
    cells = []
    for (f, b), per_placement in REFERENCE_COMPLEXITY_TABLE.items():
        for placement, (exp_params, exp_red) in per_placement.items():
            cfg = PredictorConfig(f, b, SEPlacement.parse(placement))
            cells.append(AuditCell(
                config=cfg,
                expected_params=exp_params,
                computed_params=param_count(cfg),
                expected_reduction=exp_red,
                computed_reduction=round(param_reduction(cfg), 2),
            ))
    return AuditReport(cells)
