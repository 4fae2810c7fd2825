"""Multipreconditioned GMRES for shifted families (MPGMRES-Sh).

Solves ``(C1 + sigma_k C2) x_k = b`` for many shifts ``sigma_k`` from one
search space built with shift-and-invert preconditioners
``P_i = C1 + tau_i C2``. Because ``C1 P_i^{-1} = I - tau_i C2 P_i^{-1}``,
every column ``w = P_i^{-1} v`` of the search space satisfies

    (C1 + sigma C2) w = v + (sigma - tau_i) C2 w,

so with the orthonormal basis ``V`` of the Arnoldi-like relation
``C2 Z = V H`` the shifted operator restricted to ``Z`` is
``V (E + H diag(sigma - tau))``, where ``E`` picks the vector each column
was generated from. All shifts share ``Z``; each shift only costs a small
least-squares solve.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import DimensionError, as_csr, sparse_add_scaled, sparse_cholesky, thin_qr

logger = logging.getLogger(__name__)

__all__ = [
    "ShiftedFamily",
    "Preconditioners",
    "SearchBasis",
    "MPGMRESResult",
    "build_preconditioners",
    "mpgmres_sh",
    "solve_projected",
    "solve_family_rhs_scaled",
]

DEFAULT_TAUS = (1e-8, 1e-4, 1e-2)
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 60
BREAKDOWN_RTOL = 1e-14
_SHIFT_CHUNK = 256


@dataclass
class ShiftedFamily:
    C1: object
    C2: object
    shifts: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        self.C1 = as_csr(self.C1)
        self.C2 = as_csr(self.C2)
        self.shifts = np.atleast_1d(np.asarray(self.shifts, dtype=np.float64))
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        n = self.C1.shape[0]
        if self.C1.shape != (n, n) or self.C2.shape != (n, n):
            raise DimensionError(f"C1 {self.C1.shape} and C2 {self.C2.shape} must be square and equal")
        if self.rhs.shape != (n,):
            raise DimensionError(f"rhs has shape {self.rhs.shape}, expected ({n},)")
        if not np.all(np.isfinite(self.shifts)) or np.any(self.shifts < 0):
            raise ValueError("shifts must be finite and nonnegative")

    @property
    def n(self):
        return self.C1.shape[0]


@dataclass
class Preconditioners:
    taus: np.ndarray
    factors: list

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=np.float64)
        if self.taus.size < 1 or len(self.factors) != self.taus.size:
            raise ValueError("need one factorization per tau and at least one tau")
        if np.any(np.diff(self.taus) <= 0):
            raise ValueError("taus must be strictly increasing")

    @property
    def n_p(self):
        return self.taus.size


def build_preconditioners(C1, C2, taus=DEFAULT_TAUS):
    """Factorize ``C1 + tau C2`` for each ``tau``."""
    taus = np.asarray(taus, dtype=np.float64)
    factors = [sparse_cholesky(sparse_add_scaled(C1, C2, 1.0, t)) for t in taus]
    return Preconditioners(taus, factors)


@dataclass
class SearchBasis:
    """Search space ``Z`` plus the data of the relation ``C2 Z = V H``.

    ``V`` has orthonormal columns; ``E`` marks, for each column of ``Z``,
    the column of ``V`` it was generated from; ``col_taus`` the
    preconditioner shift used for it.
    """

    Z: np.ndarray
    k_m: int
    n_p: int
    V: np.ndarray
    H: np.ndarray
    E: np.ndarray
    col_taus: np.ndarray
    beta: float
    breakdown: bool = False

    @property
    def n_m(self):
        return self.Z.shape[1]

    def small_matrix(self, sigma):
        """Coordinates of ``(C1 + sigma C2) Z`` in ``V``."""
        return self.E + self.H * (sigma - self.col_taus)


@dataclass
class MPGMRESResult:
    basis: SearchBasis
    solutions: np.ndarray = None
    coefficients: np.ndarray = None
    residual_history: np.ndarray = None
    final_residuals: np.ndarray = None
    converged: bool = False
    iterations: int = 0
    info: dict = field(default_factory=dict)


def _small_lstsq(H, E, col_taus, beta, shifts):
    """Solve ``min ||beta e1 - (E + H diag(s - tau)) p||`` for every shift.

    Returns the coefficients (n x n_shifts) and relative residuals.
    """
    m, n = H.shape
    P = np.empty((n, shifts.size))
    res = np.empty(shifts.size)
    for lo in range(0, shifts.size, _SHIFT_CHUNK):
        s = shifts[lo:lo + _SHIFT_CHUNK]
        A = E[None] + H[None] * (s[:, None, None] - col_taus[None, None, :])
        Q, R = np.linalg.qr(A, mode="complete")
        c = beta * Q[:, 0, :]  # Q^T (beta e1)
        p = np.linalg.solve(R[:, :n, :], c[:, :n, None])[..., 0]
        P[:, lo:lo + s.size] = p.T
        res[lo:lo + s.size] = np.linalg.norm(c[:, n:], axis=1) / beta
    return P, res


def mpgmres_sh(family, precs, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, return_solutions=True):
    """Build the shared search space for all shifts of ``family``.

    Iterates until the relative residual of every shifted system is at most
    ``tol`` or ``max_iter`` iterations have been done. Non-convergence is
    reported in the result, not raised.

    Parameters
    ----------
    family : ShiftedFamily
    precs : Preconditioners
        Factorizations of ``C1 + tau_i C2``.
    tol : float
        Relative residual target, ``||b - (C1 + sigma C2) x|| / ||b||``.
    max_iter : int
    return_solutions : bool
        Also form ``x_k = Z p_k`` and check the residuals explicitly.

    Returns
    -------
    MPGMRESResult
    """
    b = family.rhs
    beta = float(np.linalg.norm(b))
    if beta == 0.0:
        raise ValueError("mpgmres_sh: right-hand side is zero")
    if not np.isfinite(beta):
        raise ValueError("mpgmres_sh: right-hand side is not finite")
    n_p = precs.n_p
    N = family.n
    shifts = family.shifts

    cap = 1 + max_iter * n_p
    V = np.empty((N, cap))
    V[:, 0] = b / beta
    blocks = [(0, 1)]  # column ranges of the V^(k) blocks
    Zcols = []
    H = np.zeros((cap, max_iter * n_p))
    E = np.zeros((cap, max_iter * n_p))
    col_taus = np.tile(precs.taus, max_iter)
    history = []
    converged = False
    breakdown = False
    k = 0
    P = None
    for k in range(1, max_iter + 1):
        lo, hi = blocks[-1]
        src = hi - 1  # last column of the newest block
        v = V[:, src]
        W = np.column_stack([F.solve(v) for F in precs.factors])
        What = family.C2 @ W
        wnorm = np.linalg.norm(What)
        c0 = (k - 1) * n_p
        cols = slice(c0, c0 + n_p)
        used = hi
        # block modified Gram-Schmidt, two passes
        for _ in range(2):
            for jlo, jhi in blocks:
                Vj = V[:, jlo:jhi]
                h = Vj.T @ What
                What -= Vj @ h
                H[jlo:jhi, cols] += h
        Q, R = thin_qr(What)
        H[used:used + n_p, cols] = R
        E[src, cols] = 1.0
        V[:, used:used + n_p] = Q
        blocks.append((used, used + n_p))
        Zcols.append(W)
        rdiag = np.abs(np.diag(R))
        if wnorm == 0.0 or rdiag.min() < BREAKDOWN_RTOL * wnorm:
            breakdown = True
            logger.info("mpgmres_sh: QR breakdown at iteration %d (min |R_ii| = %.3e)", k, rdiag.min())
        m, n = used + n_p, c0 + n_p
        if breakdown:
            Z = np.hstack(Zcols)
            P, res = _explicit_lstsq(family, Z, shifts)
        else:
            P, res = _small_lstsq(H[:m, :n], E[:m, :n], col_taus[:n], beta, shifts)
        history.append(res)
        if np.all(res <= tol):
            converged = True
            break
        if breakdown:
            break
    m = blocks[-1][1]
    n = k * n_p
    basis = SearchBasis(
        Z=np.hstack(Zcols),
        k_m=k,
        n_p=n_p,
        V=V[:, :m].copy(),
        H=H[:m, :n].copy(),
        E=E[:m, :n].copy(),
        col_taus=col_taus[:n].copy(),
        beta=beta,
        breakdown=breakdown,
    )
    result = MPGMRESResult(basis=basis, coefficients=P, residual_history=np.array(history),
                           converged=converged, iterations=k)
    if not converged:
        logger.warning("mpgmres_sh: not converged after %d iterations (max rel. residual %.3e)",
                       k, history[-1].max())
    if return_solutions:
        X = basis.Z @ P
        result.solutions = X
        result.final_residuals = _explicit_residuals(family, X)
    return result


def _explicit_residuals(family, X, rhs=None):
    b = family.rhs if rhs is None else rhs
    R = b[:, None] - family.C1 @ X - (family.C2 @ X) * family.shifts[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(b)


def _explicit_lstsq(family, Z, shifts):
    """Per-shift least squares on the full-length matrices (breakdown fallback)."""
    C1Z = family.C1 @ Z
    C2Z = family.C2 @ Z
    b = family.rhs
    beta = np.linalg.norm(b)
    P = np.empty((Z.shape[1], shifts.size))
    res = np.empty(shifts.size)
    for i, s in enumerate(shifts):
        A = C1Z + s * C2Z
        p = np.linalg.lstsq(A, b, rcond=None)[0]
        P[:, i] = p
        res[i] = np.linalg.norm(b - A @ p) / beta
    return P, res


def solve_projected(basis, family, sigma):
    """Coefficients ``p`` minimizing ``||b - (C1 + sigma C2) Z p||``.

    Computed from a thin QR of the explicitly formed ``(C1 + sigma C2) Z``;
    the approximate solution is ``basis.Z @ p``.
    """
    Z = basis.Z
    A = family.C1 @ Z + sigma * (family.C2 @ Z)
    Q, R = thin_qr(A)
    d = np.abs(np.diag(R))
    if d.size and d.min() > BREAKDOWN_RTOL * d.max():
        return scipy.linalg.solve_triangular(R, Q.T @ family.rhs)
    return np.linalg.lstsq(A, family.rhs, rcond=None)[0]


def coefficients(basis, shifts):
    """Projected least-squares coefficients for many shifts via the small relation."""
    P, _ = _small_lstsq(basis.H, basis.E, basis.col_taus, basis.beta,
                        np.asarray(shifts, dtype=np.float64))
    return P


def solve_family_rhs_scaled(basis, family, f=None):
    """Solutions of ``(K + e^{z_k} M) u_k = f`` from a basis built on ``(M, K)``.

    ``family`` has ``C1 = M``, ``C2 = K`` and shifts ``sigma_k = e^{-z_k}``.
    Multiplying ``(K + e^{z_k} M) u = f`` by ``sigma_k`` gives
    ``(M + sigma_k K) u = sigma_k f``, so ``u_k = sigma_k Z p_k`` where
    ``p_k`` solves the projected problem for right-hand side ``f``.
    Returns an ``N x n_shifts`` array.
    """
    if f is not None and not np.array_equal(np.asarray(f, dtype=np.float64), family.rhs):
        raise ValueError("basis was built for a different right-hand side")
    if basis.breakdown:
        P, _ = _explicit_lstsq(family, basis.Z, family.shifts)
    else:
        P = coefficients(basis, family.shifts)
    return (basis.Z @ P) * family.shifts[None, :]
