"""Symmetric 1-D convolutional autoencoder for gain-window compression.

The encoder runs at the simulated DU side and maps a flattened, normalized
gain window [B,1,152] down to a [B,15,5] latent block (75 features, a
~50% payload reduction); the mirrored transposed-convolution decoder runs
at the simulated RIC side and restores [B,1,152].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .layers import Conv1d, ConvTranspose1d

INPUT_LEN = 152
LATENT_CHANNELS = 15
LATENT_LEN = 5
LATENT_SIZE = LATENT_CHANNELS * LATENT_LEN  # 75

# (name, cin, cout, kernel, stride, padding, activation)
ENCODER_STAGES = [
    ("E1", 1, 64, 5, 2, 2, "relu"),
    ("E2", 64, 512, 3, 2, 1, "relu"),
    ("E3", 512, 256, 3, 2, 1, "relu"),
    ("E4", 256, 128, 3, 2, 1, "relu"),
    ("E5", 128, 15, 3, 2, 1, "linear"),
]

# (name, cin, cout, kernel, stride, padding, output_padding, activation)
DECODER_STAGES = [
    ("D1", 15, 128, 3, 2, 1, 1, "relu"),
    ("D2", 128, 256, 3, 2, 1, 0, "relu"),
    ("D3", 256, 512, 3, 2, 1, 1, "relu"),
    ("D4", 512, 64, 3, 2, 1, 1, "relu"),
    ("D5", 64, 1, 5, 2, 2, 1, "linear"),
]


@dataclass
class ReconstructionMetrics:
    mse: float
    rmse: float
    r2: float


class AeModel:
    def __init__(self, seed: int = 0, dtype=np.float32):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xAE,)))
        self.dtype = dtype
        self.encoder = [Conv1d(ci, co, k, s, p, act, rng, dtype)
                        for (_, ci, co, k, s, p, act) in ENCODER_STAGES]
        self.decoder = [ConvTranspose1d(ci, co, k, s, p, op, act, rng, dtype)
                        for (_, ci, co, k, s, p, op, act) in DECODER_STAGES]

    # -- forward passes --------------------------------------------------

    def encode(self, x) -> Tensor:
        x = ad.as_tensor(x)
        if x.data.ndim != 3 or x.shape[1] != 1 or x.shape[2] != INPUT_LEN:
            raise ad.ShapeMismatchError(
                f"encode expects [B,1,{INPUT_LEN}], got {x.shape}"
            )
        for layer in self.encoder:
            x = layer.forward(x)
        return x

    def decode(self, latent) -> Tensor:
        latent = ad.as_tensor(latent)
        if (latent.data.ndim != 3 or latent.shape[1] != LATENT_CHANNELS
                or latent.shape[2] != LATENT_LEN):
            raise ad.ShapeMismatchError(
                f"decode expects [B,{LATENT_CHANNELS},{LATENT_LEN}], got {latent.shape}"
            )
        x = latent
        for layer in self.decoder:
            x = layer.forward(x)
        return x

    def reconstruct(self, x) -> Tensor:
        return self.decode(self.encode(x))

    # -- bookkeeping -----------------------------------------------------

    def stage_table(self):
        """Introspectable stage metadata (type, channels, kernel, stride, activation)."""
        rows = []
        for (name, ci, co, k, s, p, act), layer in zip(ENCODER_STAGES, self.encoder):
            rows.append((name, "Conv1d", layer.cin, layer.cout, layer.kernel,
                         layer.stride, layer.activation))
        for (name, ci, co, k, s, p, op, act), layer in zip(DECODER_STAGES, self.decoder):
            rows.append((name, "ConvT1d", layer.cin, layer.cout, layer.kernel,
                         layer.stride, layer.activation))
        return rows

    def encoder_lengths(self, L: int = INPUT_LEN) -> list[int]:
        out = [L]
        for layer in self.encoder:
            L = layer.out_length(L)
            out.append(L)
        return out

    def decoder_lengths(self, L: int = LATENT_LEN) -> list[int]:
        out = [L]
        for layer in self.decoder:
            L = layer.out_length(L)
            out.append(L)
        return out

    def params(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for (name, *_), layer in zip(ENCODER_STAGES, self.encoder):
            out.update(layer.params(f"ae.enc.{name}"))
        for (name, *_), layer in zip(DECODER_STAGES, self.decoder):
            out.update(layer.params(f"ae.dec.{name}"))
        return out

    def encoder_param_count(self) -> int:
        return sum(l.param_count() for l in self.encoder)

    def decoder_param_count(self) -> int:
        return sum(l.param_count() for l in self.decoder)

    def param_count(self) -> int:
        return self.encoder_param_count() + self.decoder_param_count()

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params().items()}

    def load_state(self, state: dict[str, np.ndarray]):
        params = self.params()
        for k, p in params.items():
            arr = np.asarray(state[k], dtype=p.dtype)
            if arr.shape != p.data.shape:
                raise ad.ShapeMismatchError(
                    f"{k}: checkpoint shape {arr.shape} != model shape {p.data.shape}"
                )
            p.data[...] = arr


def compression_ratio() -> tuple[float, float]:
    """(retained fraction, reduction percent) of the 152 -> 75 design point."""
    retained = LATENT_SIZE / INPUT_LEN
    return retained, 100.0 * (1.0 - retained)


def regression_metrics(pred: np.ndarray, target: np.ndarray) -> ReconstructionMetrics:
    """MSE / RMSE / R^2 between two arrays; R^2 about the target mean."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.size == 0:
        raise ValueError(f"metrics need matching non-empty arrays, got "
                         f"{pred.shape} vs {target.shape}")
    ss_res = float(((pred - target) ** 2).sum())
    ss_tot = float(((target - target.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ValueError("R^2 undefined: zero-variance target set")
    mse = ss_res / target.size
    return ReconstructionMetrics(mse=mse, rmse=float(np.sqrt(mse)),
                                 r2=1.0 - ss_res / ss_tot)


def reconstruction_metrics(model: AeModel, windows_flat: np.ndarray) -> ReconstructionMetrics:
    """MSE / RMSE / R^2 of reconstructions over a window set [n,1,152]
    in normalized space."""
    if windows_flat.shape[0] == 0:
        raise ValueError("reconstruction metrics need at least one window")
    with ad.no_grad():
        preds = []
        for i in range(0, windows_flat.shape[0], 256):
            preds.append(model.reconstruct(windows_flat[i:i + 256]).data)
    return regression_metrics(np.concatenate(preds), windows_flat)
