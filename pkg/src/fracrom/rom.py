"""Reduced-order model for parametric fractional elliptic problems.

Offline: for every training parameter, the shifted systems
``(K(mu) + e^{z_k} M) u = f(mu)`` over the ``alpha = 1/2`` node set are handed
to MPGMRES-Sh, and its search space (not the solutions) is streamed into a
randomized sketch. The compressed basis ``V`` is used to project every
affine term once.

Online: for a new ``(mu, alpha)`` the reduced pencil ``(K_hat, M_hat)`` is
diagonalized once and the sinc sum is applied to the eigenvalues, so the
cost does not grow with the number of quadrature nodes beyond ``O(K Z)``.
"""
import hashlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import problems as _problems
from .fem import materialize
from .linalg import sparse_cholesky, sparse_add_scaled, sym_generalized_eig, thin_svd
from .quadrature import build_rule, resolvent_sum, training_rule
from .shifted import (
    DEFAULT_MAX_ITER,
    DEFAULT_TAUS,
    DEFAULT_TOL,
    ShiftedFamily,
    build_preconditioners,
    mpgmres_sh,
)
from .sketch import (
    SketchConfig,
    sketch_finalize,
    sketch_init,
    sketch_update,
    sketch_update_factored,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ConvergenceError",
    "TrainingPlan",
    "RomArtifact",
    "TrainingReport",
    "offline_train",
    "online_solve",
    "online_solve_shiftwise",
    "fom_solve",
    "spectral_oracle",
    "naive_snapshots",
    "naive_offline",
    "project",
]

DENSE_ORACLE_MAX = 5000
NAIVE_MAX_ENTRIES = 10**8
FOM_REFERENCE_TOL = 1e-10
# "search_space" streams the MPGMRES-Sh bases Z^(j); "solutions" streams the
# implicit per-shift solutions Z^(j) P^(j) diag(sigma) instead
SNAPSHOT_KINDS = ("search_space", "solutions")


class ConvergenceError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class TrainingPlan:
    problem_id: str
    samples: np.ndarray
    rank: int
    h: float = None
    sketch_seed: int = 0
    tol: float = DEFAULT_TOL
    taus: tuple = DEFAULT_TAUS
    max_iter: int = DEFAULT_MAX_ITER
    snapshot: str = "search_space"

    def __post_init__(self):
        if self.snapshot not in SNAPSHOT_KINDS:
            raise ValueError(f"snapshot must be one of {SNAPSHOT_KINDS}, got {self.snapshot!r}")
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape[0] < 1:
            raise ValueError("training set is empty")
        self.samples = s
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")

    def digest(self):
        return hashlib.sha256(np.ascontiguousarray(self.samples).tobytes()).hexdigest()


@dataclass
class RomArtifact:
    V: np.ndarray
    A_hat: list
    M_hat: np.ndarray
    g_hat: list
    meta: dict

    @property
    def problem_id(self):
        return self.meta["problem"]

    @property
    def rank(self):
        return self.V.shape[1]

    @property
    def h(self):
        return float(self.meta["h"])

    def coefficient_functions(self):
        return _problems.coefficient_functions(self.problem_id)

    def reduced_system(self, mu):
        ca, cg = self.coefficient_functions()
        mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        a = ca(mu)
        g = cg(mu)
        K = sum(c * A for c, A in zip(a, self.A_hat))
        f = sum(c * v for c, v in zip(g, self.g_hat))
        return K, f

    def orthonormality_error(self):
        return float(np.abs(self.V.T @ self.V - np.eye(self.rank)).max())


@dataclass
class TrainingReport:
    samples: list = field(default_factory=list)
    singular_values: np.ndarray = None
    rank_deficient: bool = False
    timings: dict = field(default_factory=dict)
    snapshots: list = None

    def to_dict(self):
        return {
            "samples": self.samples,
            "singular_values": [float(s) for s in self.singular_values],
            "rank_deficient": self.rank_deficient,
            "timings": self.timings,
        }


def project(problem, V):
    """Galerkin projections ``V^T A_t V``, ``V^T M V`` and ``V^T g_t``."""
    def sym(X):
        return 0.5 * (X + X.T)

    A_hat = [sym(V.T @ (A @ V)) for A in problem.A]
    M_hat = sym(V.T @ (problem.M @ V))
    g_hat = [V.T @ g for g in problem.g]
    return A_hat, M_hat, g_hat


def _artifact_meta(plan, problem, h, K):
    mesh = problem.mesh
    return {
        "problem": plan.problem_id,
        "nx": mesh.nx,
        "ny": mesh.ny,
        "domain": [mesh.ax, mesh.bx, mesh.ay, mesh.by],
        "bc": problem.bc.value,
        "n_dofs": problem.n_dofs,
        "h": h,
        "rank": K,
        "n_a": problem.n_a,
        "n_g": problem.n_g,
        "n_params": problem.n_params,
        "sketch_seed": plan.sketch_seed,
        "taus": [float(t) for t in plan.taus],
        "tol": plan.tol,
        "max_iter": plan.max_iter,
        "snapshot": plan.snapshot,
        "n_samples": int(plan.samples.shape[0]),
        "training_digest": plan.digest(),
        "options": dict(problem.options),
        "created": None,
    }


def offline_train(plan, problem, keep_snapshots=False):
    """Train the reduced basis; returns ``(RomArtifact, TrainingReport)``.

    ``keep_snapshots`` retains the search-space blocks (for the SVD baseline
    in benchmarks); the proposed path itself never stores them.
    """
    h = plan.h if plan.h is not None else problem.mesh.h
    rule = training_rule(h)
    shifts = rule.shifts()
    cfg = SketchConfig(plan.rank, plan.sketch_seed)
    state = sketch_init(problem.n_dofs, cfg)
    report = TrainingReport(snapshots=[] if keep_snapshots else None)
    t_snap = 0.0
    t_sketch = 0.0
    for j, mu in enumerate(plan.samples):
        t0 = time.perf_counter()
        K, f = materialize(problem, mu)
        family = ShiftedFamily(problem.M, K, shifts, f)
        precs = build_preconditioners(problem.M, K, plan.taus)
        res = mpgmres_sh(family, precs, plan.tol, plan.max_iter, return_solutions=False)
        t1 = time.perf_counter()
        Z = res.basis.Z
        if plan.snapshot == "solutions":
            sketch_update_factored(state, Z, res.coefficients * shifts[None, :])
        else:
            sketch_update(state, Z)
        t2 = time.perf_counter()
        t_snap += t1 - t0
        t_sketch += t2 - t1
        if not res.converged:
            logger.warning("training sample %d (mu=%s) did not converge; basis kept", j, mu.tolist())
        report.samples.append({
            "index": j,
            "mu": mu.tolist(),
            "iterations": res.iterations,
            "n_m": int(Z.shape[1]),
            "converged": bool(res.converged),
            "max_residual": float(res.residual_history[-1].max()),
            "breakdown": bool(res.basis.breakdown),
        })
        if keep_snapshots:
            report.snapshots.append(Z)
    t0 = time.perf_counter()
    sb = sketch_finalize(state, plan.rank)
    t1 = time.perf_counter()
    V = sb.basis
    A_hat, M_hat, g_hat = project(problem, V)
    t2 = time.perf_counter()
    report.singular_values = sb.singular_values
    report.rank_deficient = sb.rank_deficient
    report.timings = {"snapshot_s": t_snap, "sketch_update_s": t_sketch,
                      "compression_s": t1 - t0, "projection_s": t2 - t1}
    artifact = RomArtifact(V, A_hat, M_hat, g_hat, _artifact_meta(plan, problem, h, plan.rank))
    return artifact, report


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def online_solve(rom, mu, alpha, h=None, return_reduced=False):
    """Evaluate the reduced fractional solution at ``(mu, alpha)``.

    With ``M_hat = L L^T`` and ``L^{-1} K_hat L^{-T} = U diag(lam) U^T``,

        y_hat = (L^{-T} U) diag(sum_k w_k / (lam + e^{z_k})) U^T L^{-1} g_hat,

    and the full-order approximation is ``V y_hat``. ``h`` defaults to the
    training mesh parameter stored in the artifact.
    """
    _check_alpha(alpha)
    rule = build_rule(alpha, rom.h if h is None else h)
    K, g = rom.reduced_system(mu)
    lam, U, L = sym_generalized_eig(K, rom.M_hat)
    c = U.T @ scipy.linalg.solve_triangular(L, g, lower=True)
    c = resolvent_sum(rule, lam) * c
    y_hat = scipy.linalg.solve_triangular(L, U @ c, lower=True, trans="T")
    if return_reduced:
        return y_hat
    return rom.V @ y_hat


def online_solve_shiftwise(rom, mu, alpha, h=None, return_reduced=False):
    """Same as :func:`online_solve`, solving each projected shifted system separately."""
    _check_alpha(alpha)
    rule = build_rule(alpha, rom.h if h is None else h)
    K, g = rom.reduced_system(mu)
    y_hat = np.zeros(rom.rank)
    for z, w in zip(rule.nodes, rule.weights):
        if z <= 0:
            u = scipy.linalg.solve(K + np.exp(z) * rom.M_hat, g, assume_a="pos")
            y_hat += w * u
        else:
            # (e^{-z} K + M) u' = g,  u = e^{-z} u'
            u = scipy.linalg.solve(np.exp(-z) * K + rom.M_hat, g, assume_a="pos")
            y_hat += np.exp(np.log(w) - z) * u
    if return_reduced:
        return y_hat
    return rom.V @ y_hat


def fom_solve(problem, mu, alpha, h=None, tol=FOM_REFERENCE_TOL, taus=DEFAULT_TAUS,
              max_iter=DEFAULT_MAX_ITER, full_output=False):
    """Full-order fractional solution ``sum_k w_k u_k`` via MPGMRES-Sh.

    Raises :class:`ConvergenceError` if some shifted system misses ``tol``.
    """
    _check_alpha(alpha)
    rule = build_rule(alpha, problem.mesh.h if h is None else h)
    K, f = materialize(problem, mu)
    if not np.any(f):
        y = np.zeros(problem.n_dofs)
        return (y, None) if full_output else y
    shifts = rule.shifts()
    family = ShiftedFamily(problem.M, K, shifts, f)
    precs = build_preconditioners(problem.M, K, taus)
    res = mpgmres_sh(family, precs, tol, max_iter, return_solutions=False)
    if not res.converged:
        raise ConvergenceError(
            f"fom_solve: {int(np.sum(res.residual_history[-1] > tol))} of {shifts.size} shifted "
            f"systems above tol={tol:g} after {res.iterations} iterations "
            f"(max residual {res.residual_history[-1].max():.3e})",
            residuals=res.residual_history[-1],
        )
    # u_k = sigma_k Z p_k, so y = Z P (w * sigma)
    y = res.basis.Z @ (res.coefficients @ (rule.weights * shifts))
    return (y, res) if full_output else y


def spectral_oracle(problem, mu, alpha):
    """Dense reference ``Phi diag(lam^{-alpha}) Phi^T f`` with ``K Phi = M Phi diag(lam)``."""
    n = problem.n_dofs
    if n > DENSE_ORACLE_MAX:
        raise ValueError(f"spectral_oracle: {n} dofs exceeds dense limit {DENSE_ORACLE_MAX}")
    K, f = materialize(problem, mu)
    lam, Phi = scipy.linalg.eigh(K.toarray(), problem.M.toarray())
    return Phi @ (lam ** (-alpha) * (Phi.T @ f))


def naive_snapshots(problem, samples, h=None):
    """Snapshot matrix of explicit solutions over all training shifts (dense)."""
    rule = training_rule(problem.mesh.h if h is None else h)
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[1] != problem.n_params:
        samples = samples.T
    ncols = samples.shape[0] * len(rule)
    if problem.n_dofs * ncols > NAIVE_MAX_ENTRIES:
        raise MemoryError(f"naive snapshot matrix {problem.n_dofs} x {ncols} exceeds the dense limit")
    S = np.empty((problem.n_dofs, ncols))
    col = 0
    for mu in samples:
        K, f = materialize(problem, mu)
        for ez in rule.exp_nodes():
            S[:, col] = sparse_cholesky(sparse_add_scaled(K, problem.M, 1.0, ez)).solve(f)
            col += 1
    return S


def naive_offline(plan, problem):
    """Reference offline stage: explicit snapshots compressed with a full SVD."""
    h = plan.h if plan.h is not None else problem.mesh.h
    S = naive_snapshots(problem, plan.samples, h)
    U, s, _ = thin_svd(S)
    V = U[:, : plan.rank]
    A_hat, M_hat, g_hat = project(problem, V)
    meta = _artifact_meta(plan, problem, h, plan.rank)
    meta["method"] = "naive"
    return RomArtifact(V, A_hat, M_hat, g_hat, meta)
