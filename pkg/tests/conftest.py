import numpy as np
import pytest

from fracrom.problems import build_problem


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)


@pytest.fixture(scope="session")
def gp17():
    return build_problem("gp", 17)


@pytest.fixture(scope="session")
def gp33():
    return build_problem("gp", 33)


@pytest.fixture(scope="session")
def cookies_a17():
    return build_problem("cookies-a", 17)


@pytest.fixture(scope="session")
def aniso17():
    return build_problem("aniso", 17)


def random_spd(rng, n, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * np.geomspace(1.0, cond, n)) @ Q.T
