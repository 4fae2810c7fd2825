"""Single-view randomized low-rank approximation with streaming updates.

The snapshot matrix ``S`` is never stored. Only the range sketch
``Y1 = S Omega`` and the co-range sketch ``Y2 = S^T Psi`` are kept, and both
can be updated one block of columns at a time. The approximation is

    S ~ Q (Psi^T Q)^+ Y2^T,    Y1 = Q R.

Test matrices come from :mod:`fracrom.rng`. ``Psi`` uses stream 0; the
block ``Omega_j`` for the ``j``-th update uses stream 1, block ``j``, so the
blocks of ``Omega`` can be drawn without knowing block sizes in advance.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import DimensionError, pinv_solve, thin_qr, thin_svd
from .rng import gaussian_matrix

__all__ = [
    "SketchConfig",
    "SketchState",
    "SketchBasis",
    "omega_block",
    "sketch_init",
    "sketch_update",
    "sketch_update_factored",
    "sketch_finalize",
    "low_rank_factors",
]

PSI_STREAM = 0
OMEGA_STREAM = 1


def omega_block(seed, block, nrows, l1):
    """The ``block``-th row block of the column-space test matrix ``Omega``."""
    return gaussian_matrix(seed, OMEGA_STREAM, block, (nrows, l1))


@dataclass(frozen=True)
class SketchConfig:
    rank: int
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"target rank must be >= 1, got {self.rank}")

    @property
    def l1(self):
        return 2 * self.rank + 1

    @property
    def l2(self):
        return 2 * self.l1 + 1


class SketchState:
    """Accumulated sketches; mutated in place by :func:`sketch_update`."""

    def __init__(self, psi, l1, seed):
        self.psi = psi
        self.seed = seed
        self.y1 = np.zeros((psi.shape[0], l1))
        self._y2_blocks = []
        self.cols_seen = 0
        self.n_blocks = 0

    @property
    def n_dof(self):
        return self.psi.shape[0]

    @property
    def l1(self):
        return self.y1.shape[1]

    @property
    def l2(self):
        return self.psi.shape[1]

    @property
    def y2(self):
        if not self._y2_blocks:
            return np.zeros((0, self.l2))
        if len(self._y2_blocks) > 1:
            self._y2_blocks = [np.vstack(self._y2_blocks)]
        return self._y2_blocks[0]


def sketch_init(n_dof, cfg):
    if n_dof < 1:
        raise ValueError("n_dof must be positive")
    psi = gaussian_matrix(cfg.seed, PSI_STREAM, 0, (n_dof, cfg.l2))
    return SketchState(psi, cfg.l1, cfg.seed)


def sketch_update(state, Zj):
    """Add the column block ``Zj`` of the snapshot matrix to the sketches."""
    Zj = np.asarray(Zj, dtype=np.float64)
    if Zj.ndim != 2 or Zj.shape[0] != state.n_dof:
        raise DimensionError(f"block has shape {Zj.shape}, expected ({state.n_dof}, k)")
    omega = omega_block(state.seed, state.n_blocks, Zj.shape[1], state.l1)
    state.y1 += Zj @ omega
    state._y2_blocks.append(Zj.T @ state.psi)
    state.cols_seen += Zj.shape[1]
    state.n_blocks += 1
    return state


def sketch_update_factored(state, Zj, Cj):
    """Add the block ``Zj @ Cj`` without forming it.

    ``Omega_j`` has ``Cj.shape[1]`` rows, so the result matches
    ``sketch_update(state, Zj @ Cj)`` up to rounding.
    """
    Zj = np.asarray(Zj, dtype=np.float64)
    Cj = np.asarray(Cj, dtype=np.float64)
    if Zj.ndim != 2 or Zj.shape[0] != state.n_dof or Cj.shape[0] != Zj.shape[1]:
        raise DimensionError(f"factors {Zj.shape} x {Cj.shape} do not fit n_dof={state.n_dof}")
    omega = omega_block(state.seed, state.n_blocks, Cj.shape[1], state.l1)
    state.y1 += Zj @ (Cj @ omega)
    state._y2_blocks.append(Cj.T @ (Zj.T @ state.psi))
    state.cols_seen += Cj.shape[1]
    state.n_blocks += 1
    return state


def low_rank_factors(state):
    """``(Q, W)`` with ``S ~ Q @ W``, ``Q`` orthonormal and ``W = (Psi^T Q)^+ Y2^T``.

    ``Q`` has ``min(n_dof, l1)`` columns.
    """
    y1 = state.y1
    if y1.shape[1] > y1.shape[0]:
        # sketch wider than the space: Q spans all of R^n_dof
        Q = np.linalg.qr(y1, mode="reduced")[0]
    else:
        Q, _ = thin_qr(y1)
    W = pinv_solve(state.psi.T @ Q, state.y2.T)
    return Q, W


class SketchBasis(NamedTuple):
    basis: np.ndarray
    singular_values: np.ndarray  # all of Sigma_W, descending
    rank_deficient: bool

    @property
    def sigma_est(self):
        return self.singular_values[: self.basis.shape[1]]


def sketch_finalize(state, K):
    """Rank-``K`` orthonormal basis for the range of the sketched matrix.

    Returns ``SketchBasis(V, Sigma_W, rank_deficient)``; ``V = Q U_W[:, :K]``
    and the first ``K`` entries of ``Sigma_W`` estimate the leading singular
    values of ``S``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if state.cols_seen < K:
        raise ValueError(f"only {state.cols_seen} columns seen, cannot extract rank {K}")
    if K > min(state.l1, state.n_dof):
        raise ValueError(f"K={K} exceeds the range sketch size {min(state.l1, state.n_dof)}")
    if not np.any(state.y1):
        raise ValueError("sketch is identically zero; no basis can be extracted")
    Q, W = low_rank_factors(state)
    PQ = state.psi.T @ Q
    s_pq = np.linalg.svd(PQ, compute_uv=False)
    rank_deficient = bool(s_pq[-1] <= max(PQ.shape) * np.finfo(float).eps * s_pq[0])
    Uw, Sw, _ = thin_svd(W)
    V = Q @ Uw[:, :K]
    return SketchBasis(V, Sw, rank_deficient)
