"""Layers with explicit forward/backward passes.

Activations are float64 ``numpy`` arrays shaped ``(C, H, W)`` for feature
maps and ``(F,)`` for vectors; one sample at a time.  Each layer caches what
its backward pass needs during ``forward``.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    pass


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def output_shape(self, shape):
        return tuple(shape)

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def zero_grad(self):
        for k, p in self.params.items():
            g = self.grads.get(k)
            if g is None or g.shape != p.shape:
                self.grads[k] = np.zeros_like(p)
            else:
                g.fill(0.0)

    def describe(self) -> dict:
        return {"kind": self.kind}


class Embed(Layer):
    """Fixed right multiplication ``A' = A @ D``; ``D`` is never trained."""

    kind = "embed"

    def __init__(self, D):
        super().__init__()
        D = np.asarray(D, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ShapeError(f"embedding matrix must be square, got {D.shape}")
        self.D = D

    def output_shape(self, shape):
        if len(shape) != 3 or shape[-1] != self.D.shape[0]:
            raise ShapeError(f"embed expects (C, H, {self.D.shape[0]}), got {shape}")
        return tuple(shape)

    def forward(self, x):
        return x @ self.D

    def backward(self, dout):
        return dout @ self.D.T

    def describe(self):
        return {"kind": self.kind, "n": int(self.D.shape[0])}


def _pad(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (p, p), (p, p)))


def _correlate_same(x, w, b=None, scale=1.0):
    """Zero-padded 'same' cross-correlation ``scale * (w * x) + b``.

    Returns the output and the ``(c_in*kh*kw, H*W)`` patch matrix.
    """
    c_out, c_in, kh, kw = w.shape
    _, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # (c_in, h, wd, kh, kw)
    # kernel offsets outermost: each copied block is a contiguous-row image slice
    cols = win.transpose(0, 3, 4, 1, 2).reshape(c_in * kh * kw, h * wd)
    out = w.reshape(c_out, -1) @ cols
    if scale != 1.0:
        out *= scale
    if b is not None:
        out += b[:, None]
    return out.reshape(c_out, h, wd), cols


class Conv2D(Layer):
    """Stride-1 convolution with zero 'same' padding (odd kernels only)."""

    kind = "conv"

    def __init__(self, c_in, c_out, kernel, rng=None, input_grad=True, equalized=False):
        super().__init__()
        if kernel % 2 != 1:
            raise ShapeError(f"kernel size must be odd, got {kernel}")
        self.c_in, self.c_out, self.kernel = int(c_in), int(c_out), int(kernel)
        self.input_grad = input_grad
        rng = np.random.default_rng(0) if rng is None else rng
        fan_in = c_in * kernel * kernel
        self.scale = math.sqrt(2.0 / fan_in) if equalized else 1.0
        init = 1.0 if equalized else math.sqrt(2.0 / fan_in)
        self.params["W"] = rng.standard_normal((c_out, c_in, kernel, kernel)) * init
        self.params["b"] = np.zeros(c_out)
        self.zero_grad()
        self._cols = None
        self._shape = None

    def output_shape(self, shape):
        if len(shape) != 3 or shape[0] != self.c_in:
            raise ShapeError(f"conv expects ({self.c_in}, H, W), got {shape}")
        return (self.c_out, shape[1], shape[2])

    def forward(self, x):
        if x.ndim != 3 or x.shape[0] != self.c_in:
            raise ShapeError(f"conv expects ({self.c_in}, H, W), got {x.shape}")
        out, self._cols = _correlate_same(x, self.params["W"], self.params["b"], self.scale)
        self._shape = x.shape
        return out

    def backward(self, dout):
        c_out = self.c_out
        d2 = dout.reshape(c_out, -1)
        self.grads["W"] += self.scale * (d2 @ self._cols.T).reshape(self.params["W"].shape)
        self.grads["b"] += d2.sum(axis=1)
        if not self.input_grad:
            return None
        # full correlation with the flipped, channel-swapped kernel
        wt = self.params["W"][:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
        dx, _ = _correlate_same(dout, np.ascontiguousarray(wt), scale=self.scale)
        return dx

    def weight(self):
        w = self.params["W"]
        return w if self.scale == 1.0 else w * self.scale

    def describe(self):
        return {"kind": self.kind, "c_in": self.c_in, "c_out": self.c_out, "kernel": self.kernel, "scale": self.scale}


class ReLU(Layer):
    """``max(0, x)``; the derivative at exactly 0 is taken as 0."""

    kind = "relu"

    def forward(self, x):
        # out > 0 exactly where x > 0, so the output doubles as the mask
        self._out = np.maximum(x, 0.0)
        return self._out

    def backward(self, dout):
        return np.where(self._out > 0, dout, 0.0)


def pooled_size(h, stride=2):
    return -(-h // stride)


class MaxPool(Layer):
    """Ceil-mode max pooling with stride 2.

    Window cells that fall off the bottom/right edge are ignored.  The
    backward pass routes each gradient to the first row-major maximum.
    """

    kind = "maxpool"

    def __init__(self, window, stride=2):
        super().__init__()
        self.window = int(window)
        self.stride = int(stride)

    def output_shape(self, shape):
        if len(shape) != 3:
            raise ShapeError(f"maxpool expects (C, H, W), got {shape}")
        return (shape[0], pooled_size(shape[1], self.stride), pooled_size(shape[2], self.stride))

    def _offsets(self):
        return [(i, j) for i in range(self.window) for j in range(self.window)]

    def forward(self, x):
        c, h, w = x.shape
        k, s = self.window, self.stride
        ho, wo = pooled_size(h, s), pooled_size(w, s)
        hp, wp = max(h, s * (ho - 1) + k), max(w, s * (wo - 1) + k)
        if (hp, wp) == (h, w):
            xp = x
        else:
            xp = np.full((c, hp, wp), -np.inf)
            xp[:, :h, :w] = x
        out = None
        for i, j in self._offsets():
            view = xp[:, i : i + s * (ho - 1) + 1 : s, j : j + s * (wo - 1) + 1 : s]
            out = view.copy() if out is None else np.maximum(out, view, out=out)
        self._xp = xp
        self._out = out
        self._in_shape = x.shape
        return out

    def _windows(self):
        _, ho, wo = self._out.shape
        s = self.stride
        for i, j in self._offsets():
            yield slice(i, i + s * (ho - 1) + 1, s), slice(j, j + s * (wo - 1) + 1, s)

    def winners(self):
        """Row-major window offset of the (first) maximum for every output cell."""
        win = np.full(self._out.shape, -1, dtype=np.int64)
        for k, (rows, cols) in enumerate(self._windows()):
            win[(win < 0) & (self._xp[:, rows, cols] == self._out)] = k
        return win

    def backward(self, dout):
        h, w = self._in_shape[1:]
        win = self.winners()
        dxp = np.zeros(self._xp.shape)
        for k, (rows, cols) in enumerate(self._windows()):
            dxp[:, rows, cols] += np.where(win == k, dout, 0.0)
        return dxp[:, :h, :w]

    def describe(self):
        return {"kind": self.kind, "window": self.window, "stride": self.stride}


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(-1)

    def backward(self, dout):
        return dout.reshape(self._in_shape)


class Dense(Layer):
    """Affine map ``W @ x + b``."""

    kind = "dense"

    def __init__(self, n_in, n_out, rng=None, gain=2.0, equalized=False):
        super().__init__()
        self.n_in, self.n_out = int(n_in), int(n_out)
        rng = np.random.default_rng(0) if rng is None else rng
        self.scale = math.sqrt(gain / n_in) if equalized else 1.0
        init = 1.0 if equalized else math.sqrt(gain / n_in)
        self.params["W"] = rng.standard_normal((n_out, n_in)) * init
        self.params["b"] = np.zeros(n_out)
        self.zero_grad()

    def output_shape(self, shape):
        if tuple(shape) != (self.n_in,):
            raise ShapeError(f"dense expects ({self.n_in},), got {shape}")
        return (self.n_out,)

    def forward(self, x):
        if x.shape != (self.n_in,):
            raise ShapeError(f"dense expects ({self.n_in},), got {x.shape}")
        self._x = x
        y = self.params["W"] @ x
        if self.scale != 1.0:
            y *= self.scale
        return y + self.params["b"]

    def backward(self, dout):
        self.grads["W"] += self.scale * np.outer(dout, self._x)
        self.grads["b"] += dout
        dx = self.params["W"].T @ dout
        return dx * self.scale if self.scale != 1.0 else dx

    def weight(self):
        w = self.params["W"]
        return w if self.scale == 1.0 else w * self.scale

    def describe(self):
        return {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out, "scale": self.scale}


class Sequential:
    def __init__(self, layers):
        self.layers = list(layers)

    def infer_shapes(self, shape):
        shapes = [tuple(shape)]
        for layer in self.layers:
            shapes.append(layer.output_shape(shapes[-1]))
        return shapes

    def forward(self, x):
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
            if dout is None:
                break
        return dout

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def named_params(self):
        """``(name, param, grad)`` triples in a fixed order."""
        out = []
        for i, layer in enumerate(self.layers):
            for key in sorted(layer.params):
                out.append((f"{i}.{layer.kind}.{key}", layer.params[key], layer.grads[key]))
        return out


def conv2d(x, kernels, bias):
    """Functional same-padded stride-1 convolution of ``x`` (C_in, H, W)."""
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim != 4 or kernels.shape[1] != x.shape[0]:
        raise ShapeError(f"kernels {kernels.shape} do not match input {x.shape}")
    if kernels.shape[2] % 2 != 1 or kernels.shape[3] % 2 != 1:
        raise ShapeError("kernel dims must be odd")
    return _correlate_same(np.asarray(x, dtype=np.float64), kernels, np.asarray(bias, dtype=np.float64))[0]


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def maxpool(x, window, stride=2):
    return MaxPool(window, stride).forward(np.asarray(x, dtype=np.float64))


def dense(x, W, b):
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != x.shape[0] or np.shape(b) != (W.shape[0],):
        raise ShapeError(f"dense shapes do not conform: W {W.shape}, x {x.shape}, b {np.shape(b)}")
    return W @ x + b
