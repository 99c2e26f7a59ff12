"""Deterministic low-discrepancy sample sets.

Every check in the package draws its points from an unscrambled Halton
sequence, so results depend only on the sample count and index offset.
Index 0 of the sequence is the origin; the default offset skips it.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc
from scipy.special import ndtri

DEFAULT_OFFSET = 1


def halton(dim: int, count: int, offset: int = DEFAULT_OFFSET) -> np.ndarray:
    """``count`` points of the unscrambled Halton sequence in ``[0, 1)^dim``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    seq = qmc.Halton(d=dim, scramble=False)
    if offset:
        seq.fast_forward(offset)
    return seq.random(count)


def unit_vectors(u: np.ndarray, n: int) -> np.ndarray:
    """Map uniform samples to unit Euclidean vectors in R^n.

    Two dimensions use the angle directly; higher dimensions normalise a
    Gaussian vector obtained by inverse-CDF transform.
    """
    if n == 2:
        theta = 2.0 * np.pi * u[:, 0]
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    g = ndtri(np.clip(u[:, :n], 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def region_points(u: np.ndarray, region: tuple[str, float], n: int) -> np.ndarray:
    """Map uniform samples in ``[0,1)^n`` into a box or a ball."""
    shape, size = region
    if shape == "box":
        return size * (2.0 * u[:, :n] - 1.0)
    if shape == "ball":
        if n == 2:
            radius = size * np.sqrt(u[:, 0])
            return radius[:, None] * unit_vectors(u[:, 1:], 2)
        # inscribed cube keeps every point inside the ball
        return size / np.sqrt(n) * (2.0 * u[:, :n] - 1.0)
    raise ValueError(f"unknown sampling region {shape!r}")


def tangent_samples(
    region: tuple[str, float], n: int, count: int, offset: int = DEFAULT_OFFSET
) -> tuple[np.ndarray, np.ndarray]:
    """Base points in ``region`` and unit Euclidean tangent vectors."""
    ydims = 1 if n == 2 else n
    u = halton(n + ydims, count, offset)
    x = region_points(u[:, :n], region, n)
    y = unit_vectors(u[:, n:], n)
    return x, y


def transverse_samples(y: np.ndarray, offset: int = DEFAULT_OFFSET) -> np.ndarray:
    """Unit vectors making an angle of at least 30 degrees with each row of ``y``."""
    count, n = y.shape
    u = halton(max(n, 2), count, offset + 7919)
    if n == 2:
        angle = np.pi / 6 + (2 * np.pi / 3) * u[:, 0]
        c, s = np.cos(angle), np.sin(angle)
        v = np.stack([c * y[:, 0] - s * y[:, 1], s * y[:, 0] + c * y[:, 1]], axis=-1)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)
    v = unit_vectors(u, n)
    yn = y / np.linalg.norm(y, axis=-1, keepdims=True)
    v = v - 0.5 * np.sum(v * yn, axis=-1, keepdims=True) * yn
    bad = np.abs(np.sum(v * yn, axis=-1)) / np.linalg.norm(v, axis=-1) > np.cos(np.pi / 6)
    v[bad] = v[bad] - np.sum(v[bad] * yn[bad], axis=-1, keepdims=True) * yn[bad]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
