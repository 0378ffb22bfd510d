"""Small numpy deep-learning engine: the layers, loss and optimizer the CNN needs."""
from .layers import (
    Conv2D,
    Dense,
    Embed,
    Flatten,
    Layer,
    MaxPool,
    ReLU,
    Sequential,
    ShapeError,
    conv2d,
    dense,
    maxpool,
    pooled_size,
    relu,
)
from .optim import LOSSES, Adam, curve_loss

__all__ = [
    "Adam",
    "Conv2D",
    "Dense",
    "Embed",
    "Flatten",
    "LOSSES",
    "Layer",
    "MaxPool",
    "ReLU",
    "Sequential",
    "ShapeError",
    "conv2d",
    "curve_loss",
    "dense",
    "maxpool",
    "pooled_size",
    "relu",
]
