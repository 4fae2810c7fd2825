import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from fracrom.fem import BC, assemble_mass, assemble_stiffness, materialize
from fracrom.linalg import is_symmetric, sparse_cholesky
from fracrom.problems import (
    PROBLEM_IDS,
    CookiesSpec,
    build_problem,
    coefficient_functions,
    default_mesh,
    gp_alpha,
    white_noise_load,
)
from fracrom.rng import gaussian_matrix


@pytest.fixture(scope="module", params=PROBLEM_IDS)
def problem(request):
    return build_problem(request.param, 9)


def test_affine_invariants(problem):
    n = problem.n_dofs
    M = problem.M.toarray()
    assert is_symmetric(problem.M) and np.linalg.eigvalsh(M).min() > 0
    for A in problem.A:
        assert A.shape == (n, n) and is_symmetric(A)
    for g in problem.g:
        assert g.shape == (n,) and np.all(np.isfinite(g))
    assert len(problem.a_names) == problem.n_a
    if problem.name != "aniso":
        # the xy term of the anisotropic family is indefinite on its own
        for A in problem.A:
            assert np.linalg.eigvalsh(A.toarray()).min() >= -1e-12 * abs(A).max()


def test_shifted_systems_spd_across_box(problem):
    rng = np.random.default_rng(0)
    lo, hi = problem.param_box.T
    for _ in range(5):
        K, _ = materialize(problem, lo + rng.random(lo.size) * (hi - lo))
        for eps in (1e-6, 1.0):
            sparse_cholesky(K + eps * problem.M)


def test_dimensions():
    assert build_problem("gp", 9).n_dofs == 81
    assert build_problem("cookies-a", 9).n_dofs == 49
    assert build_problem("aniso", 9, 7).n_dofs == 35
    assert build_problem("cookies-b", 9).n_params == 4


def test_domains():
    assert default_mesh("cookies-a", 5).ax == -1.0
    assert default_mesh("aniso", 5).bx == 1.0


def test_unknown_problem():
    with pytest.raises(KeyError):
        build_problem("heat", 5)
    with pytest.raises(KeyError):
        coefficient_functions("heat")
    with pytest.raises(ValueError):
        CookiesSpec("C")


def test_gp_alpha():
    assert gp_alpha(1.0) == 1.0
    assert gp_alpha(0.2) == pytest.approx(0.6)
    assert gp_alpha(0.5, 1) == 0.5


def test_gp_affine_linearity():
    p = build_problem("gp", 9, rhs="constant_one")
    K200, _ = materialize(p, [200.0])
    K10, _ = materialize(p, [10.0])
    D = (K200 - K10).toarray()
    assert np.abs(D - 190 * p.M.toarray()).max() <= 1e-12 * np.abs(D).max()
    assert abs(np.linalg.norm(D, 1) - 190 * sp.linalg.norm(p.M, 1)) <= 1e-12 * np.linalg.norm(D, 1)


def test_gp_zero_kappa_singular():
    p = build_problem("gp", 9, rhs="constant_one")
    K, _ = materialize(p, [0.0])
    assert np.abs(K @ np.ones(p.n_dofs)).max() <= 1e-12
    with pytest.raises(np.linalg.LinAlgError):
        sparse_cholesky(K)


def test_gp_loads():
    a = build_problem("gp", 9, seed=3).g[0]
    assert np.array_equal(a, build_problem("gp", 9, seed=3).g[0])
    assert not np.array_equal(a, build_problem("gp", 9, seed=4).g[0])
    g1 = build_problem("gp", 9, rhs="constant_one").g[0]
    assert g1.sum() == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        build_problem("gp", 5, rhs="pink")


def test_white_noise_covariance():
    mesh = default_mesh("gp", 9)
    M = assemble_mass(mesh)
    F = sparse_cholesky(M)
    G = np.column_stack([F.factor_matvec(gaussian_matrix(s, 7, 0, (M.shape[0],))) for s in range(500)])
    assert np.array_equal(G[:, 0], white_noise_load(M, 0))
    C = G @ G.T / G.shape[1]
    Md = M.toarray()
    for i, j in [(0, 1), (40, 41), (40, 49), (10, 20), (79, 80)]:
        idx = np.ix_([i, j], [i, j])
        assert np.linalg.norm(C[idx] - Md[idx]) <= 0.1 * np.linalg.norm(Md[idx])


def test_cookies_zero_mu_global_only():
    p = build_problem("cookies-b", 9)
    K, f = materialize(p, np.zeros(4))
    assert abs(K - p.A[-1]).max() == 0.0
    assert p.a_names == ("region_1", "region_2", "region_3", "region_4", "global")


def test_cookies_region_trace():
    p = build_problem("cookies-a", 17)
    assert 0 < p.A[0].diagonal().sum() < p.A[1].diagonal().sum()


def _node_map(nx, f):
    """Permutation of interior dofs induced by a lattice map ``(i, j) -> f(i, j)``."""
    m = nx - 2
    perm = np.empty(m * m, dtype=int)
    for j in range(m):
        for i in range(m):
            ii, jj = f(i, j, m - 1)
            perm[j * m + i] = jj * m + ii
    return perm


def test_cookies_b_symmetry():
    # discs are ordered (-,-), (-,+), (+,+), (+,-); the diagonal split makes
    # the 180-degree rotation and the y = x reflection exact mesh symmetries
    nx = 17
    p = build_problem("cookies-b", nx)
    A = [a.toarray() for a in p.A[:4]]
    rot = _node_map(nx, lambda i, j, n: (n - i, n - j))
    swap = _node_map(nx, lambda i, j, n: (j, i))
    for perm, pairs in ((rot, [(0, 2), (1, 3)]), (swap, [(1, 3), (0, 0), (2, 2)])):
        for s, t in pairs:
            assert np.abs(A[s][np.ix_(perm, perm)] - A[t]).max() <= 1e-12
            assert np.abs(A[t][np.ix_(perm, perm)] - A[s]).max() <= 1e-12


def test_aniso_axis_aligned():
    p = build_problem("aniso", 9)
    K, _ = materialize(p, [1.5, 3.0, 0.0])
    assert abs(K - (1.5 * p.A[0] + 3.0 * p.A[2])).max() <= 1e-15


@settings(max_examples=20, deadline=None)
@given(d1=st.floats(0.5, 4.5), d2=st.floats(0.5, 4.5))
def test_aniso_quarter_turn_swaps(d1, d2):
    p = build_problem("aniso", 9)
    K1, _ = materialize(p, [d1, d2, math.pi / 2])
    K2, _ = materialize(p, [d2, d1, 0.0])
    # cos(pi/2) is 6e-17 in floating point, so equality holds to rounding only
    assert abs(K1 - K2).max() <= 1e-14 * abs(K2).max()


def test_aniso_matches_rotated_tensor():
    # the coefficient functions equal R(-theta) diag(D1, D2) R(-theta)^T,
    # with R the counterclockwise rotation
    p = build_problem("aniso", 9)
    d1, d2, th = 1.0, 4.0, 0.6
    K, _ = materialize(p, [d1, d2, th])
    c, s = math.cos(-th), math.sin(-th)
    R = np.array([[c, -s], [s, c]])
    T = R @ np.diag([d1, d2]) @ R.T
    ref = assemble_stiffness(p.mesh, BC.DIRICHLET, T)
    assert abs(K - ref).max() <= 1e-13 * abs(ref).max()
