import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from fracrom.fem import BC, StructuredMesh, assemble_load, assemble_mass, assemble_stiffness, materialize
from fracrom.problems import build_problem, disc_indicator


def test_mesh_basics():
    mesh = StructuredMesh(4, 3, 0.0, 3.0, 0.0, 1.0)
    assert mesh.n_nodes == 12 and mesh.n_triangles == 12
    assert np.allclose(mesh.nodes[:4], [[0, 0], [1, 0], [2, 0], [3, 0]])  # x fastest
    assert np.allclose(mesh.element_areas, 0.25 * 1.0)
    assert mesh.n_dofs(BC.DIRICHLET) == 2 and mesh.n_dofs(BC.NEUMANN) == 12
    # lower-left to upper-right diagonal: first triangle uses nodes 0, 1, 5
    assert set(mesh.triangles[0]) == {0, 1, 5}
    with pytest.raises(ValueError):
        StructuredMesh(1, 4)


@pytest.mark.parametrize("n", [2, 5, 17])
def test_mass_partition_of_unity(n):
    M = assemble_mass(StructuredMesh(n, n))
    one = np.ones(M.shape[0])
    assert abs(one @ M @ one - 1.0) <= 1e-12


def test_mass_single_cell_by_hand():
    M = assemble_mass(StructuredMesh(2, 2)).toarray()
    loc = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 12.0 * 0.5
    ref = np.zeros((4, 4))
    for tri in ([0, 1, 3], [0, 3, 2]):
        ref[np.ix_(tri, tri)] += loc
    assert np.allclose(M, ref, atol=1e-16)


def test_mass_spd():
    M = assemble_mass(StructuredMesh(5, 5)).toarray()
    assert np.linalg.eigvalsh(M).min() > 0


def test_neumann_stiffness_kills_constants():
    A = assemble_stiffness(StructuredMesh(9, 6))
    assert np.abs(A @ np.ones(A.shape[0])).max() <= 1e-12 * abs(A).max()


def test_dirichlet_laplace_eigenvalue():
    mesh = StructuredMesh(33, 33)
    A = assemble_stiffness(mesh, BC.DIRICHLET).toarray()
    M = assemble_mass(mesh, BC.DIRICHLET).toarray()
    lam = scipy.linalg.eigh(A, M, eigvals_only=True, subset_by_index=[0, 0])[0]
    assert abs(lam - 2 * math.pi ** 2) <= 0.02 * 2 * math.pi ** 2


def test_indicator_stiffness_matches_element_loop():
    mesh = StructuredMesh(9, 9, -1.0, 1.0, -1.0, 1.0)
    chi = disc_indicator(mesh, (0.0, 0.0), 0.5)
    A = assemble_stiffness(mesh, BC.NEUMANN, chi).toarray()
    ref = np.zeros((mesh.n_nodes, mesh.n_nodes))
    for e, tri in enumerate(mesh.triangles):
        if not chi[e]:
            continue
        P = mesh.nodes[tri]
        B = np.array([P[1] - P[0], P[2] - P[0]]).T
        area = 0.5 * abs(np.linalg.det(B))
        G = np.linalg.solve(B.T, np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]]))
        ref[np.ix_(tri, tri)] += area * G.T @ G
    assert 0 < chi.sum() < chi.size
    assert np.abs(A - ref).max() <= 1e-13


def test_stiffness_rejects_nonsymmetric_tensor():
    with pytest.raises(ValueError):
        assemble_stiffness(StructuredMesh(3, 3), BC.NEUMANN, [[1.0, 0.5], [0.0, 1.0]])


def test_load_vectors():
    mesh = StructuredMesh(7, 5)
    assert abs(assemble_load(mesh, BC.NEUMANN, 1.0).sum() - 1.0) <= 1e-14
    assert not np.any(assemble_load(mesh, BC.NEUMANN, 0.0))
    f = np.random.default_rng(0).standard_normal(mesh.n_nodes)
    g = assemble_load(mesh, BC.NEUMANN, f)
    assert np.abs(g - assemble_mass(mesh) @ f).max() <= 1e-14
    # constant source through both paths agrees
    assert np.allclose(assemble_load(mesh, BC.DIRICHLET, np.full(mesh.n_nodes, 2.0)),
                       assemble_load(mesh, BC.DIRICHLET, 2.0), atol=1e-15)


def test_dirichlet_dimensions():
    mesh = StructuredMesh(6, 5)
    assert assemble_mass(mesh, BC.DIRICHLET).shape == (12, 12)
    assert assemble_stiffness(mesh, BC.NEUMANN).shape == (30, 30)
    assert assemble_load(mesh, BC.DIRICHLET).shape == (12,)


def test_assembly_deterministic():
    mesh = StructuredMesh(11, 9)
    a, b = assemble_stiffness(mesh, BC.DIRICHLET), assemble_stiffness(mesh, BC.DIRICHLET)
    assert np.array_equal(a.data, b.data) and np.array_equal(a.indices, b.indices)


def test_materialize_gp_bookkeeping(gp17):
    K, f = materialize(gp17, [1.0])
    ref = gp17.A[0] + gp17.M
    assert abs(K - ref).max() <= 1e-15
    assert np.array_equal(f, gp17.g[0])


def test_materialize_cookies_zero(cookies_a17):
    K, _ = materialize(cookies_a17, [0.0])
    assert abs(K - cookies_a17.A[-1]).max() == 0.0


@settings(max_examples=20, deadline=None)
@given(d=st.floats(0.5, 4.5), theta=st.floats(0.0, math.pi / 2))
def test_materialize_aniso_isotropic(aniso17, d, theta):
    K, _ = materialize(aniso17, [d, d, theta])
    full = assemble_stiffness(aniso17.mesh, BC.DIRICHLET)
    assert abs(K - d * full).max() <= 1e-12 * d * abs(full).max()


@settings(max_examples=20, deadline=None)
@given(k=st.floats(10.0, 100.0))
def test_materialize_linear_in_coefficients(cookies_a17, k):
    mu = np.array([k / 100.0])
    K1, _ = materialize(cookies_a17, mu)
    K2, _ = materialize(cookies_a17, 2 * mu)
    # the global term has a constant coefficient, the region term scales
    diff = K2 - K1
    assert abs(diff - mu[0] * cookies_a17.A[0]).max() <= 1e-13


def test_materialize_out_of_box_warns(gp17, caplog):
    with caplog.at_level("WARNING", logger="fracrom.fem"):
        materialize(gp17, [0.0])
    assert "outside parameter box" in caplog.text


def test_materialize_wrong_length(gp17):
    with pytest.raises(ValueError):
        materialize(gp17, [1.0, 2.0])


def test_aniso_trace_identity():
    ca = build_problem("aniso", 5).a_coeffs
    rng = np.random.default_rng(1)
    for _ in range(50):
        d1, d2, th = rng.uniform(0.5, 4.5), rng.uniform(0.5, 4.5), rng.uniform(0, math.pi / 2)
        c = ca([d1, d2, th])
        assert abs(c[0] + c[2] - (d1 + d2)) <= 4 * np.finfo(float).eps * (d1 + d2)
