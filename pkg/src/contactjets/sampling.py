"""Deterministic randomness and low-discrepancy sphere designs.

Every random draw in the package goes through :func:`make_rng`, which keys a
counter-based Philox generator on ``(seed, *stream)``. Two checks that use
different stream ids never share state, so running them in any order (or in
parallel) yields the same numbers.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFF, *[int(s) & 0xFFFFFFFF for s in stream]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@lru_cache(maxsize=64)
def _halton_sphere_cached(dim: int, count: int) -> np.ndarray:
    # skip the origin-adjacent first points, they map to degenerate gaussians
    sampler = qmc.Halton(d=dim, scramble=False)
    sampler.fast_forward(1)
    pts = sampler.random(count)
    pts = np.clip(pts, 1e-12, 1 - 1e-12)
    g = ndtri(pts)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g.setflags(write=False)
    return g


def halton_sphere(dim: int, count: int) -> np.ndarray:
    """``count`` deterministic points on the unit sphere in R^dim."""
    if dim == 1:
        base = np.array([[1.0], [-1.0]])
        return np.resize(base, (count, 1)).copy()
    if dim == 2:
        # golden-angle spiral: better angular spread than Halton in the plane
        k = np.arange(count)
        theta = 2 * np.pi * ((k * 0.6180339887498949) % 1.0)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return np.array(_halton_sphere_cached(dim, count))


def sphere_directions(n: int, count: int) -> np.ndarray:
    """Sphere samples used by the radii schedules.

    ``count`` low-discrepancy points plus the ``2n`` signed coordinate
    directions, duplicates removed (for n = 1 the sphere is just {+1, -1}).
    """
    coords = np.concatenate([np.eye(n), -np.eye(n)])
    pts = np.concatenate([halton_sphere(n, count), coords])
    keep: list[np.ndarray] = []
    for p in pts:
        if not any(np.linalg.norm(p - q) < 1e-12 for q in keep):
            keep.append(p)
    return np.array(keep)


def random_unit(rng: np.random.Generator, dim: int, size: int | None = None) -> np.ndarray:
    shape = (dim,) if size is None else (size, dim)
    v = rng.standard_normal(shape)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    norm = np.where(norm < 1e-300, 1.0, norm)
    return v / norm


def random_psd(rng: np.random.Generator, n: int, norm: float) -> np.ndarray:
    """A = B^T B with Gaussian B, rescaled to Frobenius norm ``norm``."""
    if norm == 0:
        return np.zeros((n, n))
    b = rng.standard_normal((n, n))
    a = b.T @ b
    return a * (norm / np.linalg.norm(a))


def random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    b = rng.standard_normal((n, n))
    return scale * 0.5 * (b + b.T)
