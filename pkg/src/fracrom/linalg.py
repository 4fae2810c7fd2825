"""Dense and sparse numeric kernels.

Sparse matrices are ``scipy.sparse.csr_matrix`` instances and dense
matrices/vectors are ``numpy.ndarray``. The functions here add the dimension
checks, tolerances and error reporting the rest of the package relies on.
"""
import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
from scipy.linalg import lapack
from scipy.sparse.csgraph import reverse_cuthill_mckee

__all__ = [
    "DimensionError",
    "NotPositiveDefiniteError",
    "SparseCholesky",
    "as_csr",
    "spmv",
    "sparse_add_scaled",
    "thin_qr",
    "thin_svd",
    "sym_generalized_eig",
    "pinv_solve",
    "sparse_cholesky",
    "is_symmetric",
    "read_matrix_market",
    "write_matrix_market",
]

SYMMETRY_RTOL = 1e-10


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky factorization hit a non-positive pivot.

    ``pivot`` is the 0-based row index, in the caller's ordering, at which
    the leading minor stopped being positive definite.
    """

    def __init__(self, pivot, what="matrix"):
        self.pivot = int(pivot)
        super().__init__(
            f"{what} is not positive definite: factorization failed at pivot {self.pivot}"
        )


def as_csr(A):
    """Return ``A`` as a canonical CSR matrix of float64 (sorted indices)."""
    A = sp.csr_matrix(A, dtype=np.float64)
    if not A.has_sorted_indices:
        A = A.sorted_indices()
    return A


def spmv(A, x):
    """Sparse matrix-vector product ``A @ x``."""
    x = np.asarray(x, dtype=np.float64)
    if A.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} matrix with vector of length {x.shape[0]}")
    return A @ x


def sparse_add_scaled(A, B, c1, c2):
    """Return ``c1*A + c2*B`` on the union of both sparsity patterns.

    Unlike ``c1*A + c2*B`` in scipy, entries that cancel to zero are kept as
    explicit zeros, so the result pattern does not depend on the values.
    """
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    A = A.tocoo()
    B = B.tocoo()
    rows = np.concatenate([A.row, B.row])
    cols = np.concatenate([A.col, B.col])
    vals = np.concatenate([c1 * A.data, c2 * B.data])
    # coo -> csr sums duplicates in input order and keeps explicit zeros
    C = sp.csr_matrix((vals, (rows, cols)), shape=A.shape)
    C.sum_duplicates()
    return C


def is_symmetric(A, rtol=SYMMETRY_RTOL):
    """Check ``A == A.T`` to a relative tolerance (dense or sparse)."""
    if A.shape[0] != A.shape[1]:
        return False
    if sp.issparse(A):
        D = abs(A - A.T)
        scale = abs(A).max() if A.nnz else 0.0
        diff = D.max() if D.nnz else 0.0
    else:
        A = np.asarray(A)
        scale = np.abs(A).max() if A.size else 0.0
        diff = np.abs(A - A.T).max() if A.size else 0.0
    return diff <= rtol * max(scale, np.finfo(float).tiny)


def thin_qr(A):
    """Economy QR factorization ``A = Q @ R`` of a tall matrix.

    Rank-deficient input is not an error: the corresponding diagonal entries
    of ``R`` are simply (close to) zero.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise DimensionError(f"thin_qr needs a tall 2-D matrix, got shape {A.shape}")
    return np.linalg.qr(A, mode="reduced")


def thin_svd(A):
    """Economy SVD; singular values are returned in nonincreasing order."""
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise ValueError("thin_svd: input has non-finite entries")
    return scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesdd")


def cholesky_lower(M, what="matrix"):
    """Dense lower Cholesky factor; raises :class:`NotPositiveDefiniteError`."""
    M = np.asarray(M, dtype=np.float64)
    L, info = lapack.dpotrf(M, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(info - 1, what)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return L


def sym_generalized_eig(K, M):
    """Generalized eigendecomposition of the symmetric-definite pencil ``(K, M)``.

    Computes ``M = L L^T`` and the eigendecomposition
    ``L^{-1} K L^{-T} = U diag(lam) U^T``. The generalized eigenvectors are
    ``Phi = L^{-T} U``, which satisfy ``K Phi = M Phi diag(lam)`` and
    ``Phi^T M Phi = I``.

    Returns
    -------
    lam : ndarray, ascending eigenvalues
    U : ndarray, orthonormal eigenvectors of the transformed matrix
    L : ndarray, lower Cholesky factor of ``M``
    """
    K = np.asarray(K, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if K.shape != M.shape or K.shape[0] != K.shape[1]:
        raise DimensionError(f"pencil shapes differ or not square: {K.shape}, {M.shape}")
    if not is_symmetric(K):
        raise ValueError("sym_generalized_eig: K is not symmetric")
    if not is_symmetric(M):
        raise ValueError("sym_generalized_eig: M is not symmetric")
    L = cholesky_lower(M, "M")
    X = scipy.linalg.solve_triangular(L, K, lower=True)
    C = scipy.linalg.solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    lam, U = scipy.linalg.eigh(C)
    return lam, U, L


def pinv_solve(B, C):
    """Minimum-norm least-squares solution ``X = B^+ C``.

    Singular values below ``max(m, n) * eps * s_max`` are treated as zero.
    """
    B = np.asarray(B, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if B.shape[0] != C.shape[0]:
        raise DimensionError(f"row mismatch: {B.shape} vs {C.shape}")
    U, s, Vt = scipy.linalg.svd(B, full_matrices=False, lapack_driver="gesdd")
    if s.size == 0 or s[0] == 0.0:
        shape = (B.shape[1],) + C.shape[1:]
        return np.zeros(shape)
    cutoff = max(B.shape) * np.finfo(np.float64).eps * s[0]
    r = int(np.sum(s > cutoff))
    Y = U[:, :r].T @ C
    Y = Y / s[:r].reshape((r,) + (1,) * (C.ndim - 1))
    return Vt[:r].T @ Y


class SparseCholesky:
    """Cholesky factorization of a sparse SPD matrix.

    The matrix is reordered with reverse Cuthill-McKee and factorized in
    LAPACK band storage (``dpbtrf``). On the structured grids used here the
    ordering keeps the band at roughly one grid row, so the factor has the
    same order of fill as a nested-dissection factor for desk-sized grids.

    Use :func:`sparse_cholesky` to construct.
    """

    def __init__(self, band, perm, n):
        self._band = band  # lower band storage of L, shape (bw+1, n)
        self.perm = perm
        self.n = n
        self._iperm = np.empty_like(perm)
        self._iperm[perm] = np.arange(n)
        self._Lcsr = None

    @property
    def bandwidth(self):
        return self._band.shape[0] - 1

    def solve(self, b):
        """Solve ``A x = b`` for a vector or a matrix of right-hand sides."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs has {b.shape[0]} rows, factor has {self.n}")
        x, info = lapack.dpbtrs(self._band, b[self.perm], lower=1)
        if info != 0:
            raise ValueError(f"dpbtrs failed with info={info}")
        return x[self._iperm]

    def factor_matvec(self, w):
        """Return ``F w`` where ``F`` is a square factor with ``A = F F^T``.

        ``F = P^T L`` with ``P`` the fill-reducing permutation, so it is a
        row-permuted lower-triangular matrix.
        """
        if self._Lcsr is None:
            bw = self.bandwidth
            offsets = -np.arange(bw + 1)
            # dia_matrix stores diagonal k at data[k, j] for column j
            self._Lcsr = sp.dia_matrix((self._band, offsets), shape=(self.n, self.n)).tocsr()
        w = np.asarray(w, dtype=np.float64)
        return (self._Lcsr @ w)[self._iperm]


def sparse_cholesky(A):
    """Factorize a sparse SPD matrix; see :class:`SparseCholesky`.

    Raises :class:`NotPositiveDefiniteError` with the failing pivot given as
    a row index of ``A`` (original ordering).
    """
    A = as_csr(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionError(f"matrix must be square, got {A.shape}")
    perm = np.asarray(reverse_cuthill_mckee(A, symmetric_mode=True), dtype=np.intp)
    Ap = A[perm][:, perm].tocoo()
    lower = Ap.row >= Ap.col
    r, c, v = Ap.row[lower], Ap.col[lower], Ap.data[lower]
    bw = int((r - c).max()) if r.size else 0
    band = np.zeros((bw + 1, n))
    band[r - c, c] = v
    cb, info = lapack.dpbtrf(band, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(perm[info - 1])
    if info < 0:
        raise ValueError(f"dpbtrf: illegal argument {-info}")
    return SparseCholesky(cb, perm, n)


def read_matrix_market(path):
    """Read a coordinate MatrixMarket file into CSR."""
    return as_csr(scipy.io.mmread(path))


def write_matrix_market(path, A):
    scipy.io.mmwrite(path, sp.coo_matrix(A), precision=17)
