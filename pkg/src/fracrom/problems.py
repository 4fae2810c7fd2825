"""Benchmark problem families: Gaussian process SPDE, cookies, anisotropic diffusion."""
import math
from dataclasses import dataclass

import numpy as np

from .fem import BC, AffineProblem, StructuredMesh, assemble_load, assemble_mass, assemble_stiffness
from .linalg import sparse_cholesky
from .rng import gaussian_matrix

__all__ = [
    "PROBLEM_IDS",
    "GpSpec",
    "CookiesSpec",
    "AnisoSpec",
    "build_gp",
    "build_cookies",
    "build_aniso",
    "build_problem",
    "coefficient_functions",
    "default_mesh",
    "gp_alpha",
    "white_noise_load",
]

PROBLEM_IDS = ("gp", "cookies-a", "cookies-b", "aniso")

# random stream reserved for white-noise loads (sketches use 0 and 1)
WHITE_NOISE_STREAM = 7

COOKIE_DISCS = {
    "A": [((0.0, 0.0), 0.5)],
    "B": [((-0.5, -0.5), 0.3), ((-0.5, 0.5), 0.3), ((0.5, 0.5), 0.3), ((0.5, -0.5), 0.3)],
}


def gp_alpha(nu, d=2):
    """Fractional exponent ``(nu + d/2) / 2`` of the Matern SPDE."""
    return (nu + d / 2.0) / 2.0


def _gp_a(mu):
    return np.array([1.0, mu[0]])


def _one(mu):
    return np.array([1.0])


def _cookies_a(mu):
    return np.concatenate([np.asarray(mu, dtype=np.float64), [1.0]])


def _aniso_a(mu):
    d1, d2, theta = mu
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * c * d1 + s * s * d2, s * c * (d2 - d1), c * c * d2 + s * s * d1])


def coefficient_functions(problem_id):
    """``(a_coeffs, g_coeffs)`` for a problem identifier."""
    if problem_id == "gp":
        return _gp_a, _one
    if problem_id in ("cookies-a", "cookies-b"):
        return _cookies_a, _one
    if problem_id == "aniso":
        return _aniso_a, _one
    raise KeyError(f"unknown problem {problem_id!r}; expected one of {PROBLEM_IDS}")


def default_mesh(problem_id, nx, ny=None):
    ny = nx if ny is None else ny
    if problem_id.startswith("cookies"):
        return StructuredMesh(nx, ny, -1.0, 1.0, -1.0, 1.0)
    return StructuredMesh(nx, ny)


def white_noise_load(M, seed):
    """``g = L_M w`` with ``M = L_M L_M^T`` and ``w`` i.i.d. standard normal.

    ``g`` then has covariance ``M``, the Gram matrix of white noise tested
    against the P1 basis.
    """
    w = gaussian_matrix(seed, WHITE_NOISE_STREAM, 0, (M.shape[0],))
    return sparse_cholesky(M).factor_matvec(w)


@dataclass(frozen=True)
class GpSpec:
    rhs: str = "white_noise"  # or "constant_one"
    seed: int = 0


@dataclass(frozen=True)
class CookiesSpec:
    case: str = "A"

    def __post_init__(self):
        if self.case not in COOKIE_DISCS:
            raise ValueError(f"cookies case must be 'A' or 'B', got {self.case!r}")

    @property
    def p(self):
        return len(COOKIE_DISCS[self.case])


@dataclass(frozen=True)
class AnisoSpec:
    pass


def build_gp(spec, mesh):
    """Matern SPDE operator ``kappa^2 - Laplace`` with Neumann conditions."""
    bc = BC.NEUMANN
    M = assemble_mass(mesh, bc)
    A1 = assemble_stiffness(mesh, bc)
    if spec.rhs == "white_noise":
        g = white_noise_load(M, spec.seed)
    elif spec.rhs == "constant_one":
        g = assemble_load(mesh, bc, 1.0)
    else:
        raise ValueError(f"unknown GP rhs mode {spec.rhs!r}")
    return AffineProblem(
        name="gp", mesh=mesh, bc=bc, A=[A1, M.copy()], a_coeffs=_gp_a, M=M, g=[g],
        g_coeffs=_one, param_box=np.array([[10.0, 200.0]]), a_names=("stiffness", "mass"),
        options={"rhs": spec.rhs, "seed": spec.seed},
    )


def disc_indicator(mesh, center, radius):
    """1 on elements whose centroid lies in the closed disc, else 0."""
    d = mesh.centroids - np.asarray(center)
    return (np.einsum("ij,ij->i", d, d) <= radius * radius).astype(np.float64)


def build_cookies(spec, mesh):
    """``-div((1 + sum_t mu_t chi_t) grad)`` with Dirichlet conditions."""
    bc = BC.DIRICHLET
    discs = COOKIE_DISCS[spec.case]
    A = [assemble_stiffness(mesh, bc, disc_indicator(mesh, c, r)) for c, r in discs]
    A.append(assemble_stiffness(mesh, bc))
    names = tuple(f"region_{t + 1}" for t in range(len(discs))) + ("global",)
    return AffineProblem(
        name=f"cookies-{spec.case.lower()}", mesh=mesh, bc=bc, A=A, a_coeffs=_cookies_a,
        M=assemble_mass(mesh, bc), g=[assemble_load(mesh, bc, 1.0)], g_coeffs=_one,
        param_box=np.array([[0.0, 1.0]] * len(discs)), a_names=names,
    )


def build_aniso(spec, mesh):
    """``-div(Theta(D1, D2, theta) grad)`` with Dirichlet conditions."""
    bc = BC.DIRICHLET
    xx = np.array([[1.0, 0.0], [0.0, 0.0]])
    xy = np.array([[0.0, 1.0], [1.0, 0.0]])
    yy = np.array([[0.0, 0.0], [0.0, 1.0]])
    A = [assemble_stiffness(mesh, bc, T) for T in (xx, xy, yy)]
    return AffineProblem(
        name="aniso", mesh=mesh, bc=bc, A=A, a_coeffs=_aniso_a, M=assemble_mass(mesh, bc),
        g=[assemble_load(mesh, bc, 1.0)], g_coeffs=_one,
        param_box=np.array([[0.5, 4.5], [0.5, 4.5], [0.0, math.pi / 2]]),
        a_names=("xx", "xy", "yy"),
    )


def build_problem(problem_id, nx, ny=None, rhs="white_noise", seed=0):
    """Build a benchmark problem on an ``nx x ny`` grid by identifier."""
    mesh = default_mesh(problem_id, nx, ny)
    if problem_id == "gp":
        return build_gp(GpSpec(rhs, seed), mesh)
    if problem_id == "cookies-a":
        return build_cookies(CookiesSpec("A"), mesh)
    if problem_id == "cookies-b":
        return build_cookies(CookiesSpec("B"), mesh)
    if problem_id == "aniso":
        return build_aniso(AnisoSpec(), mesh)
    raise KeyError(f"unknown problem {problem_id!r}; expected one of {PROBLEM_IDS}")
