"""Parameterized layers built on the autodiff kernels.

Every layer owns named parameter tensors, initialized uniformly in
+/- 1/sqrt(fan_in) from a caller-supplied RNG so whole models are
reproducible from a single seed.
"""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


def _init(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype),
                  requires_grad=True)


class Conv1d:
    def __init__(self, cin, cout, kernel, stride, padding, activation, rng,
                 dtype=np.float32):
        self.cin, self.cout = cin, cout
        self.kernel, self.stride, self.padding = kernel, stride, padding
        self.activation = activation  # "relu" or "linear"
        fan_in = cin * kernel
        self.weight = _init(rng, (cout, cin, kernel), fan_in, dtype)
        self.bias = _init(rng, (cout,), fan_in, dtype)

    def forward(self, x: Tensor) -> Tensor:
        y = ad.conv1d(x, self.weight, self.bias, self.stride, self.padding)
        return ad.relu(y) if self.activation == "relu" else y

    def out_length(self, L: int) -> int:
        return (L + 2 * self.padding - self.kernel) // self.stride + 1

    def param_count(self) -> int:
        return self.cin * self.cout * self.kernel + self.cout

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}


class ConvTranspose1d:
    def __init__(self, cin, cout, kernel, stride, padding, output_padding,
                 activation, rng, dtype=np.float32):
        self.cin, self.cout = cin, cout
        self.kernel, self.stride = kernel, stride
        self.padding, self.output_padding = padding, output_padding
        self.activation = activation
        fan_in = cin * kernel
        self.weight = _init(rng, (cin, cout, kernel), fan_in, dtype)
        self.bias = _init(rng, (cout,), fan_in, dtype)

    def forward(self, x: Tensor) -> Tensor:
        y = ad.conv_transpose1d(x, self.weight, self.bias, self.stride,
                                self.padding, self.output_padding)
        return ad.relu(y) if self.activation == "relu" else y

    def out_length(self, L: int) -> int:
        return ((L - 1) * self.stride - 2 * self.padding + self.kernel
                + self.output_padding)

    def param_count(self) -> int:
        return self.cin * self.cout * self.kernel + self.cout

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}


class LSTMDirection:
    """One direction of a (possibly asymmetric) bidirectional LSTM.

    Uses the two-bias convention: separate input-side and hidden-side
    bias vectors, giving 4*(I*h + h^2 + 2h) parameters per direction.
    """

    def __init__(self, input_dim, hidden, reverse, rng, dtype=np.float32):
        self.input_dim = input_dim
        self.hidden = hidden
        self.reverse = reverse
        self.wi = _init(rng, (input_dim, 4 * hidden), hidden, dtype)
        self.wh = _init(rng, (hidden, 4 * hidden), hidden, dtype)
        self.bi = _init(rng, (4 * hidden,), hidden, dtype)
        self.bh = _init(rng, (4 * hidden,), hidden, dtype)

    def forward(self, x: Tensor) -> Tensor:
        return ad.lstm_direction(x, self.wi, self.wh, self.bi, self.bh,
                                 reverse=self.reverse)

    def param_count(self) -> int:
        I, h = self.input_dim, self.hidden
        return 4 * (I * h + h * h + 2 * h)

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.wi": self.wi, f"{prefix}.wh": self.wh,
                f"{prefix}.bi": self.bi, f"{prefix}.bh": self.bh}


class SEBlock:
    """Squeeze-and-excitation gate over the channel axis.

    Bottleneck width d = max(1, C // reduction).
    """

    def __init__(self, channels, reduction, rng, dtype=np.float32):
        self.channels = channels
        self.reduction = reduction
        self.bottleneck = max(1, channels // reduction)
        d = self.bottleneck
        self.w1 = _init(rng, (channels, d), channels, dtype)
        self.b1 = _init(rng, (d,), channels, dtype)
        self.w2 = _init(rng, (d, channels), d, dtype)
        self.b2 = _init(rng, (channels,), d, dtype)

    def forward(self, x: Tensor) -> Tensor:
        return ad.se_gate(x, self.w1, self.b1, self.w2, self.b2)

    def param_count(self) -> int:
        C, d = self.channels, self.bottleneck
        return C * d + d + d * C + C

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.w1": self.w1, f"{prefix}.b1": self.b1,
                f"{prefix}.w2": self.w2, f"{prefix}.b2": self.b2}


class Dense:
    def __init__(self, fin, fout, rng, dtype=np.float32):
        self.fin, self.fout = fin, fout
        self.weight = _init(rng, (fin, fout), fin, dtype)
        self.bias = _init(rng, (fout,), fin, dtype)

    def forward(self, x: Tensor) -> Tensor:
        return ad.dense(x, self.weight, self.bias)

    def param_count(self) -> int:
        return self.fin * self.fout + self.fout

    def params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}
