"""Differentiable layers: 2-D convolution, max pooling, affine maps, and a
stacked LSTM built from the autodiff primitives.

Convolution and pooling accept either a single image (C, H, W) or a batch
(N, C, H, W); the batched path exists because the pipeline encodes 12
frames per sketch and mini-batches of 8 sketches, and per-sample graphs
were measured to be far too slow for the training harness.
"""

from __future__ import annotations

import numpy as np

from .autodiff import (
    Tensor,
    _make,
    add,
    matmul,
    mul,
    reshape,
    sigmoid,
    slice_axis,
    stack,
    tanh,
)
from .errors import ShapeMismatch


def _as_batch(x: Tensor) -> tuple[Tensor, bool]:
    if x.data.ndim == 3:
        return reshape(x, (1, *x.shape)), True
    if x.data.ndim == 4:
        return x, False
    raise ShapeMismatch(f"expected (C,H,W) or (N,C,H,W), got {x.shape}")


def _conv_out_size(size: int, kernel: int, stride: int, padding: int) -> int:
    # floor semantics, as in standard frameworks (96 -> 48 under k3 s2 p1)
    span = size + 2 * padding - kernel
    if span < 0:
        raise ShapeMismatch(
            f"kernel {kernel} larger than padded input {size + 2 * padding}"
        )
    return span // stride + 1


def _pool_out_size(size: int, kernel: int, stride: int) -> int:
    span = size - kernel
    if span < 0 or span % stride != 0:
        raise ShapeMismatch(
            f"pool kernel {kernel}, stride {stride} does not tile size {size}"
        )
    return span // stride + 1


def _im2col(x: np.ndarray, kernel: int, stride: int, padding: int):
    n, c, h, w = x.shape
    out_h = _conv_out_size(h, kernel, stride, padding)
    out_w = _conv_out_size(w, kernel, stride, padding)
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cols = np.empty((n, c, kernel, kernel, out_h, out_w), dtype=x.dtype)
    for ki in range(kernel):
        for kj in range(kernel):
            cols[:, :, ki, kj] = x[
                :, :, ki : ki + stride * out_h : stride, kj : kj + stride * out_w : stride
            ]
    return cols.reshape(n, c * kernel * kernel, out_h * out_w), out_h, out_w


def _col2im(gcols: np.ndarray, x_shape, kernel: int, stride: int, padding: int):
    n, c, h, w = x_shape
    out_h = _conv_out_size(h, kernel, stride, padding)
    out_w = _conv_out_size(w, kernel, stride, padding)
    gcols = gcols.reshape(n, c, kernel, kernel, out_h, out_w)
    gx = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=gcols.dtype)
    for ki in range(kernel):
        for kj in range(kernel):
            gx[
                :, :, ki : ki + stride * out_h : stride, kj : kj + stride * out_w : stride
            ] += gcols[:, :, ki, kj]
    if padding:
        gx = gx[:, :, padding:-padding, padding:-padding]
    return gx


def conv2d(
    x: Tensor,
    weights: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """Cross-correlation of (N,C,H,W) input with (C_out,C_in,K,K) kernels."""
    xb, squeeze = _as_batch(x)
    n = xb.shape[0]
    c_out, c_in, k, k2 = weights.shape
    if k != k2 or c_in != xb.shape[1]:
        raise ShapeMismatch(
            f"kernel {weights.shape} incompatible with input {xb.shape}"
        )
    cols, out_h, out_w = _im2col(xb.data, k, stride, padding)
    w2 = weights.data.reshape(c_out, -1)
    out = np.matmul(w2, cols).reshape(n, c_out, out_h, out_w)
    if bias is not None:
        out = out + bias.data.reshape(1, c_out, 1, 1)

    parents = (xb, weights) if bias is None else (xb, weights, bias)

    def backward_fn(g):
        g2 = g.reshape(n, c_out, out_h * out_w)
        if weights.requires_grad:
            gw = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0)
            weights.accumulate_grad(gw.reshape(weights.shape))
        if bias is not None and bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=(0, 2, 3)))
        if xb.requires_grad:
            gcols = np.matmul(w2.T, g2)
            xb.accumulate_grad(_col2im(gcols, xb.shape, k, stride, padding))

    result = _make(out, parents, backward_fn)
    if squeeze:
        return reshape(result, result.shape[1:])
    return result


def max_pool2d(x: Tensor, kernel: int, stride: int) -> Tensor:
    """Per-window maximum; the gradient routes to the first argmax in
    row-major window order, so tie-breaking is deterministic."""
    xb, squeeze = _as_batch(x)
    n, c, h, w = xb.shape
    out_h = _pool_out_size(h, kernel, stride)
    out_w = _pool_out_size(w, kernel, stride)
    windows = np.empty((n, c, kernel * kernel, out_h, out_w), dtype=xb.dtype)
    for ki in range(kernel):
        for kj in range(kernel):
            windows[:, :, ki * kernel + kj] = xb.data[
                :, :, ki : ki + stride * out_h : stride, kj : kj + stride * out_w : stride
            ]
    argmax = windows.argmax(axis=2)  # first max wins on ties
    out = np.take_along_axis(windows, argmax[:, :, None], axis=2)[:, :, 0]

    def backward_fn(g):
        gx = np.zeros_like(xb.data)
        ni, ci, hi, wi = np.indices((n, c, out_h, out_w), sparse=False)
        rows = hi * stride + argmax // kernel
        cols_ = wi * stride + argmax % kernel
        np.add.at(gx, (ni, ci, rows, cols_), g)
        xb.accumulate_grad(gx)

    result = _make(out, (xb,), backward_fn)
    if squeeze:
        return reshape(result, result.shape[1:])
    return result


def linear(x: Tensor, weights: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map on the trailing axis: x (..., N) with weights (M, N)."""
    if x.shape[-1] != weights.shape[1]:
        raise ShapeMismatch(f"linear input {x.shape} vs weights {weights.shape}")
    wt = _make(
        weights.data.T,
        (weights,),
        lambda g: weights.accumulate_grad(g.T),
    )
    out = matmul(x, wt)
    if bias is not None:
        if bias.shape != (weights.shape[0],):
            raise ShapeMismatch(f"bias {bias.shape} vs weights {weights.shape}")
        out = add(out, bias)
    return out


def lstm_cell(
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    w_ih: Tensor,
    w_hh: Tensor,
    bias: Tensor,
    hidden_size: int,
) -> tuple[Tensor, Tensor]:
    """One step of the standard gate recurrence; gate order i, f, g, o."""
    z = add(add(linear(x, w_ih), linear(h_prev, w_hh)), bias)
    i_gate = sigmoid(slice_axis(z, -1, 0, hidden_size))
    f_gate = sigmoid(slice_axis(z, -1, hidden_size, hidden_size))
    g_gate = tanh(slice_axis(z, -1, 2 * hidden_size, hidden_size))
    o_gate = sigmoid(slice_axis(z, -1, 3 * hidden_size, hidden_size))
    c_new = add(mul(f_gate, c_prev), mul(i_gate, g_gate))
    h_new = mul(o_gate, tanh(c_new))
    return h_new, c_new


def lstm_forward(inputs: Tensor, layer_params: list[dict], hidden_size: int) -> Tensor:
    """Stacked LSTM over (T, D) or (B, T, D) inputs; zero initial states.

    layer_params holds one dict per layer with keys w_ih (4H, D_layer),
    w_hh (4H, H) and bias (4H,).  Returns the top layer's hidden sequence,
    shape (T, H) or (B, T, H).
    """
    if inputs.data.ndim == 2:
        out = lstm_forward(reshape(inputs, (1, *inputs.shape)), layer_params, hidden_size)
        return reshape(out, out.shape[1:])
    if inputs.data.ndim != 3:
        raise ShapeMismatch(f"expected (T,D) or (B,T,D), got {inputs.shape}")
    batch, steps, _ = inputs.shape
    seq = inputs
    for params in layer_params:
        w_ih, w_hh, bias = params["w_ih"], params["w_hh"], params["bias"]
        if w_ih.shape[0] != 4 * hidden_size or w_hh.shape != (4 * hidden_size, hidden_size):
            raise ShapeMismatch(
                f"layer weights {w_ih.shape}/{w_hh.shape} do not match hidden {hidden_size}"
            )
        h = Tensor(np.zeros((batch, hidden_size), dtype=inputs.dtype))
        c = Tensor(np.zeros((batch, hidden_size), dtype=inputs.dtype))
        outputs = []
        for t in range(steps):
            x_t = reshape(slice_axis(seq, 1, t, 1), (batch, seq.shape[-1]))
            h, c = lstm_cell(x_t, h, c, w_ih, w_hh, bias, hidden_size)
            outputs.append(h)
        seq = stack(outputs, axis=1)
    return seq


# --- parameter initialization ----------------------------------------------


def uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = float(np.sqrt(1.0 / fan_in))
    data = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True)


def zeros_param(shape, dtype) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def lstm_layer_init(
    rng: np.random.Generator, input_dim: int, hidden_size: int, dtype
) -> dict:
    """Weights uniform in +/-sqrt(1/fan_in); forget-gate bias starts at 1."""
    w_ih = uniform_init(rng, (4 * hidden_size, input_dim), input_dim, dtype)
    w_hh = uniform_init(rng, (4 * hidden_size, hidden_size), hidden_size, dtype)
    bias = np.zeros(4 * hidden_size, dtype=dtype)
    bias[hidden_size : 2 * hidden_size] = 1.0
    return {"w_ih": w_ih, "w_hh": w_hh, "bias": Tensor(bias, requires_grad=True)}
