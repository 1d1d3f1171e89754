"""Dense-tensor numerics with reverse-mode automatic differentiation.

All kernels are numpy-backed. float32 is the working precision for
training and inference; float64 is selectable for gradient verification,
where central finite differences need the extra headroom.

A forward pass builds an implicit tape: every op node remembers its
parents and a closure that scatters the upstream gradient back to them.
``Tensor.backward()`` walks that tape once in reverse topological order.
"""
from __future__ import annotations

import contextlib
from typing import Iterable

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (pure inference)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


class ShapeMismatchError(ValueError):
    """Raised when operand shapes do not conform; message carries both shapes."""


class Tensor:
    """A dense n-d array plus the bookkeeping needed for backprop."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None, name=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(parents)
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"

    # -- graph walk ------------------------------------------------------

    def backward(self):
        if self._backward is None and not self._parents:
            raise RuntimeError(
                "backward() called on a tensor with no recorded forward graph"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- arithmetic sugar (scalars and same-shape tensors) ---------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return scale(self, other) if np.isscalar(other) else hadamard(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return add(self, -other if isinstance(other, Tensor) else Tensor(-np.asarray(other)))

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, *axes):
        return transpose(self, axes)


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _node(data: np.ndarray, parents: Iterable[Tensor], backward) -> Tensor:
    parents = tuple(parents)
    if _GRAD_ENABLED and any(p.requires_grad or p._parents for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward=backward)
    return Tensor(data)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


# -- elementwise / structural ops ---------------------------------------


def add(a: Tensor, b) -> Tensor:
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"add: shapes {a.shape} and {b.shape} differ")
    out_data = a.data + b.data

    def bw(g, a=a, b=b):
        _accum(a, g)
        _accum(b, g)

    return _node(out_data, (a, b), bw)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out_data = a.data * c

    def bw(g, a=a, c=c):
        _accum(a, g * c)

    return _node(out_data, (a,), bw)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mul: shapes {a.shape} and {b.shape} differ")
    out_data = a.data * b.data

    def bw(g, a=a, b=b):
        _accum(a, g * b.data)
        _accum(b, g * a.data)

    return _node(out_data, (a, b), bw)


def reshape(a: Tensor, shape) -> Tensor:
    out_data = a.data.reshape(shape)

    def bw(g, a=a):
        _accum(a, g.reshape(a.shape))

    return _node(out_data, (a,), bw)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    out_data = np.transpose(a.data, axes)
    inv = np.argsort(axes)

    def bw(g, a=a, inv=inv):
        _accum(a, np.transpose(g, inv))

    return _node(out_data, (a,), bw)


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g, tensors=tuple(tensors), splits=splits, axis=axis):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _node(out_data, tensors, bw)


def index_time(a: Tensor, t: int) -> Tensor:
    """Select time step ``t`` from a [B, T, F] sequence -> [B, F]."""
    out_data = a.data[:, t, :]

    def bw(g, a=a, t=t):
        full = np.zeros_like(a.data)
        full[:, t, :] = g
        _accum(a, full)

    return _node(out_data, (a,), bw)


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0)

    def bw(g, a=a):
        _accum(a, g * (a.data > 0))

    return _node(out_data, (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    out_data = _sigmoid(a.data)

    def bw(g, a=a, y=out_data):
        _accum(a, g * y * (1.0 - y))

    return _node(out_data, (a,), bw)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def bw(g, a=a, y=out_data):
        _accum(a, g * (1.0 - y * y))

    return _node(out_data, (a,), bw)


def tensor_sum(a: Tensor) -> Tensor:
    out_data = np.asarray(a.data.sum(), dtype=a.dtype)

    def bw(g, a=a):
        _accum(a, np.broadcast_to(g, a.shape).astype(a.dtype, copy=True))

    return _node(out_data, (a,), bw)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# -- dense / loss -------------------------------------------------------


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map [B,F] @ [F,O] + [O]."""
    if x.data.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ShapeMismatchError(
            f"dense: input {x.shape} does not conform with weight {w.shape}"
        )
    out_data = x.data @ w.data + b.data

    def bw(g, x=x, w=w, b=b):
        _accum(x, g @ w.data.T)
        _accum(w, x.data.T @ g)
        _accum(b, g.sum(axis=0))

    return _node(out_data, (x, w, b), bw)


def mse(pred: Tensor, target) -> Tensor:
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeMismatchError(
            f"mse: prediction {pred.shape} vs target {target.shape}"
        )
    if pred.size == 0:
        raise ValueError("mse: empty tensors")
    diff = pred.data - target.data
    out_data = np.asarray((diff * diff).mean(), dtype=pred.dtype)

    def bw(g, pred=pred, target=target, diff=diff):
        scale_ = 2.0 / diff.size
        _accum(pred, g * scale_ * diff)
        if target.requires_grad or target._parents:
            _accum(target, -g * scale_ * diff)

    return _node(out_data, (pred, target), bw)


# -- 1-D convolutions ---------------------------------------------------


def _col_index(L_out: int, K: int, stride: int) -> np.ndarray:
    return stride * np.arange(L_out)[:, None] + np.arange(K)[None, :]


def conv1d(x: Tensor, w: Tensor, b: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Strided cross-correlation: [B,Cin,L] * [Cout,Cin,K] -> [B,Cout,Lout]."""
    B, Cin, L = x.shape
    Cout, Cw, K = w.shape
    if Cin != Cw:
        raise ShapeMismatchError(
            f"conv1d: input channels {Cin} (input {x.shape}) != weight channels {Cw} "
            f"(weight {w.shape})"
        )
    if stride < 1:
        raise ValueError("conv1d: stride must be >= 1")
    if K > L + 2 * padding:
        raise ValueError(f"conv1d: kernel {K} exceeds padded length {L + 2 * padding}")
    L_out = (L + 2 * padding - K) // stride + 1
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding))) if padding else x.data
    idx = _col_index(L_out, K, stride)
    cols = xp[:, :, idx]  # [B, Cin, Lout, K]
    out_data = np.einsum("bclk,ock->bol", cols, w.data, optimize=True) + b.data[:, None]

    def bw(g, x=x, w=w, b=b, cols=cols, idx=idx, padding=padding, L=L):
        _accum(w, np.einsum("bol,bclk->ock", g, cols, optimize=True))
        _accum(b, g.sum(axis=(0, 2)))
        dcols = np.einsum("bol,ock->bclk", g, w.data, optimize=True)
        Bc, Cc = dcols.shape[0], dcols.shape[1]
        Lp = L + 2 * padding
        dxp = np.zeros((Lp, Bc, Cc), dtype=g.dtype)
        np.add.at(
            dxp,
            idx.ravel(),
            dcols.transpose(2, 3, 0, 1).reshape(-1, Bc, Cc),
        )
        dxp = dxp.transpose(1, 2, 0)
        _accum(x, dxp[:, :, padding:Lp - padding] if padding else dxp)

    return _node(out_data, (x, w, b), bw)


def conv_transpose1d(
    x: Tensor,
    w: Tensor,
    b: Tensor,
    stride: int = 1,
    padding: int = 0,
    output_padding: int = 0,
) -> Tensor:
    """Transposed convolution: [B,Cin,L] * [Cin,Cout,K] -> [B,Cout,Lout]."""
    B, Cin, L = x.shape
    Cw, Cout, K = w.shape
    if Cin != Cw:
        raise ShapeMismatchError(
            f"conv_transpose1d: input channels {Cin} (input {x.shape}) != weight "
            f"channels {Cw} (weight {w.shape})"
        )
    if output_padding >= stride:
        raise ValueError(
            f"conv_transpose1d: output_padding {output_padding} must be < stride {stride}"
        )
    L_out = (L - 1) * stride - 2 * padding + K + output_padding
    if L_out < 1:
        raise ValueError("conv_transpose1d: non-positive output length")
    full_len = (L - 1) * stride + K + output_padding
    idx = _col_index(L, K, stride)  # scatter targets before padding crop
    contrib = np.einsum("bcl,cok->bolk", x.data, w.data, optimize=True)
    full = np.zeros((full_len, B, Cout), dtype=contrib.dtype)
    np.add.at(
        full,
        idx.ravel(),
        contrib.transpose(2, 3, 0, 1).reshape(-1, B, Cout),
    )
    out_data = full[padding:padding + L_out].transpose(1, 2, 0) + b.data[:, None]

    def bw(g, x=x, w=w, b=b, idx=idx, full_len=full_len, padding=padding, L_out=L_out):
        Bc, Cc = g.shape[0], g.shape[1]
        dfull = np.zeros((Bc, Cc, full_len), dtype=g.dtype)
        dfull[:, :, padding:padding + L_out] = g
        dcols = dfull[:, :, idx]  # [B, Cout, L, K]
        _accum(x, np.einsum("bolk,cok->bcl", dcols, w.data, optimize=True))
        _accum(w, np.einsum("bcl,bolk->cok", x.data, dcols, optimize=True))
        _accum(b, g.sum(axis=(0, 2)))

    return _node(out_data, (x, w, b), bw)


# -- LSTM direction -----------------------------------------------------


def lstm_direction(
    x: Tensor,
    wi: Tensor,
    wh: Tensor,
    bi: Tensor,
    bh: Tensor,
    reverse: bool = False,
) -> Tensor:
    """One LSTM direction over [B,T,I] -> [B,T,h], zero initial state.

    Gate layout along the 4h axis is (input, forget, cell, output); the
    recurrence carries two bias vectors (input-side and hidden-side).
    When ``reverse`` is set the sequence is processed last-to-first and
    the outputs are returned in original time order.
    """
    B, T, I = x.shape
    if T < 1:
        raise ValueError("lstm_direction: empty sequence")
    if not np.all(np.isfinite(x.data)):
        raise ValueError("lstm_direction: non-finite input")
    h4 = wi.shape[1]
    if wi.shape[0] != I:
        raise ShapeMismatchError(
            f"lstm_direction: input width {I} != weight input dim {wi.shape[0]}"
        )
    h = h4 // 4
    order = range(T - 1, -1, -1) if reverse else range(T)
    dtype = x.dtype
    hs = np.zeros((B, h), dtype=dtype)
    cs = np.zeros((B, h), dtype=dtype)
    bias = bi.data + bh.data
    cache = []
    out_data = np.zeros((B, T, h), dtype=dtype)
    for t in order:
        xt = x.data[:, t, :]
        z = xt @ wi.data + hs @ wh.data + bias
        ig = _sigmoid(z[:, :h])
        fg = _sigmoid(z[:, h:2 * h])
        gg = np.tanh(z[:, 2 * h:3 * h])
        og = _sigmoid(z[:, 3 * h:])
        c_prev = cs
        h_prev = hs
        cs = fg * c_prev + ig * gg
        tc = np.tanh(cs)
        hs = og * tc
        out_data[:, t, :] = hs
        cache.append((t, xt, h_prev, c_prev, ig, fg, gg, og, tc))

    def bw(g, x=x, wi=wi, wh=wh, bi=bi, bh=bh, cache=cache, h=h):
        dwi = np.zeros_like(wi.data)
        dwh = np.zeros_like(wh.data)
        db = np.zeros_like(bi.data)
        dx = np.zeros_like(x.data)
        dh_next = np.zeros((g.shape[0], h), dtype=g.dtype)
        dc_next = np.zeros_like(dh_next)
        for (t, xt, h_prev, c_prev, ig, fg, gg, og, tc) in reversed(cache):
            dh = g[:, t, :] + dh_next
            do = dh * tc
            dtc = dh * og * (1.0 - tc * tc) + dc_next
            dc_next = dtc * fg
            di = dtc * gg
            df = dtc * c_prev
            dg_ = dtc * ig
            dz = np.concatenate(
                [
                    di * ig * (1.0 - ig),
                    df * fg * (1.0 - fg),
                    dg_ * (1.0 - gg * gg),
                    do * og * (1.0 - og),
                ],
                axis=1,
            )
            dwi += xt.T @ dz
            dwh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, t, :] = dz @ wi.data.T
            dh_next = dz @ wh.data.T
        _accum(x, dx)
        _accum(wi, dwi)
        _accum(wh, dwh)
        _accum(bi, db)
        _accum(bh, db.copy())

    return _node(out_data, (x, wi, wh, bi, bh), bw)


# -- squeeze-and-excitation gate ----------------------------------------


def se_gate(x: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Tensor:
    """Channel gating for [B,C,T] (squeeze = mean over T) or [B,C] (identity squeeze)."""
    if x.data.ndim not in (2, 3):
        raise ShapeMismatchError(f"se_gate: expected [B,C] or [B,C,T], got {x.shape}")
    C = x.shape[1]
    if w1.shape[0] != C:
        raise ShapeMismatchError(
            f"se_gate: channel count {C} != bottleneck input dim {w1.shape[0]}"
        )
    has_time = x.data.ndim == 3
    s = x.data.mean(axis=2) if has_time else x.data
    a = s @ w1.data + b1.data
    ar = np.maximum(a, 0)
    z = ar @ w2.data + b2.data
    gate = _sigmoid(z)
    out_data = x.data * gate[:, :, None] if has_time else x.data * gate

    def bw(g, x=x, w1=w1, b1=b1, w2=w2, b2=b2, s=s, a=a, ar=ar, gate=gate,
           has_time=has_time):
        if has_time:
            dgate = (g * x.data).sum(axis=2)
            dx = g * gate[:, :, None]
        else:
            dgate = g * x.data
            dx = g * gate
        dz = dgate * gate * (1.0 - gate)
        _accum(w2, ar.T @ dz)
        _accum(b2, dz.sum(axis=0))
        dar = dz @ w2.data.T
        da = dar * (a > 0)
        _accum(w1, s.T @ da)
        _accum(b1, da.sum(axis=0))
        ds = da @ w1.data.T
        if has_time:
            dx = dx + ds[:, :, None] / x.shape[2]
        else:
            dx = dx + ds
        _accum(x, dx)

    return _node(out_data, (x, w1, b1, w2, b2), bw)


# -- optimizer ----------------------------------------------------------


class Adam:
    """Adam with bias correction over a named parameter set."""

    def __init__(self, params: dict[str, Tensor], lr: float = 0.01,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(
                    f"Adam: non-finite gradient for parameter {k!r} at step {t}"
                )
            if g.shape != p.data.shape:
                raise ShapeMismatchError(
                    f"Adam: gradient shape {g.shape} != parameter shape {p.data.shape}"
                )
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** t)
            vhat = v / (1 - b2 ** t)
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(p.dtype)
