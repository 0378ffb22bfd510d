"""Curve losses and the Adam optimizer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOSSES = ("l1", "l2")


def curve_loss(pv, tv, kind="l1"):
    """Loss between a predicted and a true curve, plus its gradient wrt ``pv``.

    ``l1`` is the mean absolute deviation ``mean |pv - tv|``; ``l2`` is the
    mean squared deviation.  ``sign(0)`` is 0, so a perfect fit has zero
    gradient under either variant.
    """
    pv = np.asarray(pv, dtype=np.float64)
    tv = np.asarray(tv, dtype=np.float64)
    if pv.shape != tv.shape:
        raise ValueError(f"curve length mismatch: {pv.shape} vs {tv.shape}")
    d = pv - tv
    n = d.size
    if kind == "l1":
        return float(np.abs(d).sum() / n), np.sign(d) / n
    if kind == "l2":
        return float((d * d).sum() / n), 2.0 * d / n
    raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


@dataclass
class Adam:
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    def __post_init__(self):
        self.m: list[np.ndarray] = []
        self.v: list[np.ndarray] = []

    def step(self, params, grads):
        """Update ``params`` in place from ``grads`` (matching lists of arrays)."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(params) != len(self.m):
            raise ValueError("parameter list changed between Adam steps")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"adam.m.{i}"] = m
            out[f"adam.v.{i}"] = v
        return out

    def load_state_arrays(self, arrays, count):
        self.m = [np.array(arrays[f"adam.m.{i}"]) for i in range(count) if f"adam.m.{i}" in arrays]
        self.v = [np.array(arrays[f"adam.v.{i}"]) for i in range(count) if f"adam.v.{i}" in arrays]
