"""Composite Gauss-Legendre rules on finite intervals."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gl_panels(a: float, b: float, panel_width: float, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    if b <= a:
        return np.empty(0), np.empty(0)
    n = max(1, math.ceil((b - a) / panel_width))
    edges = np.linspace(a, b, n + 1)
    x, w = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def cell_rule(edges: np.ndarray, order: int = 8):
    """Per-cell Gauss-Legendre nodes/weights, shape (n_cells, order)."""
    x, w = _gauss_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]
