"""Portable seeded random numbers.

Every draw is keyed by ``(seed, stream, block)``: a ``SeedSequence`` with
that spawn key seeds a PCG64 generator whose raw 64-bit output is turned
into 53-bit uniforms ``(k + 0.5) / 2**53`` in (0, 1). Normals use the
inverse CDF (``scipy.special.ndtri``). Both the raw PCG64 stream and
``SeedSequence`` are stable across numpy releases, so draws are
reproducible bit for bit. Arrays are filled in row-major order.
"""
import numpy as np
from scipy.special import ndtri

__all__ = ["uniform_matrix", "gaussian_matrix"]


def uniform_matrix(seed, stream, block, shape):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(block)))
    raw = np.random.PCG64(ss).random_raw(int(np.prod(shape)))
    return (((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53).reshape(shape)


def gaussian_matrix(seed, stream, block, shape):
    """Standard normal draws for ``(seed, stream, block)``."""
    return ndtri(uniform_matrix(seed, stream, block, shape))
