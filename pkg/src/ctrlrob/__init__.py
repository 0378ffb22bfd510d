"""Controllability robustness of directed networks.

Exact node-removal attack simulation and a convolutional network that
predicts the resulting controllability curves from adjacency images.
"""
__version__ = "0.1.0"
