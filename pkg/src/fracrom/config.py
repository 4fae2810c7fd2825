"""JSON run configuration and parameter-sample generators.

Example::

    {
      "problem": "gp",
      "nx": 65,
      "rhs": {"mode": "white_noise", "seed": 0},
      "training": {"generator": "grid-sweep", "step": [5.0]},
      "rank": 60,
      "taus": [1e-8, 1e-4, 1e-2],
      "tol": 1e-8,
      "sketch_seed": 0,
      "test": {"samples": {"generator": "grid-sweep", "count": [20]},
               "alphas": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]},
      "output_dir": "runs/gp65"
    }

Sample sets are either explicit lists (one row per sample) or generator
objects; generators draw inside the problem's parameter box unless
``lo``/``hi`` are given:

``grid-sweep``
    Cartesian grid with either ``step`` or ``count`` per dimension.
``latin-hypercube``
    ``count`` stratified samples, ``seed`` required.
``uniform``
    ``count`` i.i.d. uniform samples, ``seed`` required.
"""
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .problems import PROBLEM_IDS, build_problem
from .rng import uniform_matrix
from .shifted import DEFAULT_MAX_ITER, DEFAULT_TAUS, DEFAULT_TOL

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "generate_samples",
           "latin_hypercube"]

LHS_STREAM = 11
UNIFORM_STREAM = 12


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"config field {field_name!r}: {message}")


def latin_hypercube(count, dim, seed):
    """Points in ``[0, 1)^dim``, one per stratum in every coordinate."""
    u = uniform_matrix(seed, LHS_STREAM, 0, (dim, 2, count))
    out = np.empty((count, dim))
    for d in range(dim):
        perm = np.argsort(u[d, 0], kind="stable")
        out[:, d] = (perm + u[d, 1]) / count
    return out


def _box(spec, box, name):
    lo = np.asarray(spec.get("lo", box[:, 0]), dtype=np.float64).ravel()
    hi = np.asarray(spec.get("hi", box[:, 1]), dtype=np.float64).ravel()
    if lo.shape != (box.shape[0],) or hi.shape != lo.shape or np.any(hi < lo):
        raise ConfigError(name, "lo/hi must have one entry per parameter with lo <= hi")
    return lo, hi


def generate_samples(spec, box, name="samples"):
    """Return an ``(n, p)`` array of parameter samples from a sample spec."""
    p = box.shape[0]
    if isinstance(spec, list):
        arr = np.asarray(spec, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None] if p == 1 else arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != p:
            raise ConfigError(name, f"explicit samples must have {p} column(s)")
        return arr
    if not isinstance(spec, dict) or "generator" not in spec:
        raise ConfigError(name, "expected a list of samples or an object with 'generator'")
    gen = spec["generator"]
    lo, hi = _box(spec, box, name)
    if gen == "grid-sweep":
        axes = []
        if "step" in spec:
            steps = np.broadcast_to(np.asarray(spec["step"], dtype=np.float64), (p,))
            for a, b, s in zip(lo, hi, steps):
                if s <= 0:
                    raise ConfigError(name, "step must be positive")
                n = int(math.floor((b - a) / s + 1e-9)) + 1
                axes.append(a + s * np.arange(n))
        elif "count" in spec:
            counts = np.broadcast_to(np.asarray(spec["count"], dtype=int), (p,))
            for a, b, c in zip(lo, hi, counts):
                if c < 1:
                    raise ConfigError(name, "count must be >= 1")
                axes.append(np.linspace(a, b, c) if c > 1 else np.array([0.5 * (a + b)]))
        else:
            raise ConfigError(name, "grid-sweep needs 'step' or 'count'")
        return np.array(list(itertools.product(*axes)), dtype=np.float64).reshape(-1, p)
    if gen in ("latin-hypercube", "uniform"):
        if "seed" not in spec or "count" not in spec:
            raise ConfigError(name, f"{gen} needs explicit 'seed' and 'count'")
        count = int(spec["count"])
        if count < 1:
            raise ConfigError(name, "count must be >= 1")
        if gen == "latin-hypercube":
            unit = latin_hypercube(count, p, int(spec["seed"]))
        else:
            unit = uniform_matrix(int(spec["seed"]), UNIFORM_STREAM, 0, (count, p))
        return lo + unit * (hi - lo)
    raise ConfigError(name, f"unknown generator {gen!r}")


@dataclass
class RunConfig:
    problem: str
    nx: int
    ny: int
    training: object
    rank: int
    rhs_mode: str = "white_noise"
    rhs_seed: int = 0
    taus: tuple = DEFAULT_TAUS
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    sketch_seed: int = 0
    snapshot: str = "search_space"
    h: float = None
    fom_tol: float = 1e-10
    test_samples: object = None
    alphas: list = field(default_factory=list)
    output_dir: str = "."
    created: str = None
    raw: dict = field(default_factory=dict)

    def build_problem(self):
        return build_problem(self.problem, self.nx, self.ny, self.rhs_mode, self.rhs_seed)

    def training_samples(self, problem):
        return generate_samples(self.training, problem.param_box, "training")

    def test_set(self, problem):
        if self.test_samples is None:
            raise ConfigError("test", "no test samples configured")
        return generate_samples(self.test_samples, problem.param_box, "test.samples")


def _num(cfg, key, kind, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(key, "missing")
        return default
    v = cfg[key]
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(key, f"expected an integer, got {v!r}")
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {v!r}")
    return float(v)


def parse_config(cfg):
    """Validate a config dictionary and return a :class:`RunConfig`."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    problem = cfg.get("problem")
    if problem not in PROBLEM_IDS:
        raise ConfigError("problem", f"must be one of {PROBLEM_IDS}, got {problem!r}")
    nx = _num(cfg, "nx", int, required=True)
    ny = _num(cfg, "ny", int, default=nx)
    if nx < 3 or ny < 3:
        raise ConfigError("nx", "grid needs at least 3 nodes per side")
    rank = _num(cfg, "rank", int, required=True)
    if rank < 1:
        raise ConfigError("rank", f"must be >= 1, got {rank}")
    training = cfg.get("training")
    if training is None:
        raise ConfigError("training", "missing")
    if isinstance(training, list) and len(training) == 0:
        raise ConfigError("training", "training set is empty")
    if isinstance(training, dict) and training.get("count", 1) == 0:
        raise ConfigError("training", "training set is empty")
    rhs = cfg.get("rhs", {})
    if not isinstance(rhs, dict):
        raise ConfigError("rhs", "expected an object with 'mode' and 'seed'")
    rhs_mode = rhs.get("mode", "white_noise")
    if rhs_mode not in ("white_noise", "constant_one"):
        raise ConfigError("rhs.mode", f"unknown mode {rhs_mode!r}")
    if rhs_mode == "white_noise" and problem == "gp" and "seed" not in rhs:
        raise ConfigError("rhs.seed", "white-noise load needs an explicit seed")
    taus = cfg.get("taus", list(DEFAULT_TAUS))
    if (not isinstance(taus, list) or not taus
            or not all(isinstance(t, (int, float)) and t >= 0 for t in taus)
            or any(b <= a for a, b in zip(taus, taus[1:]))):
        raise ConfigError("taus", "must be a nonempty strictly increasing list of nonnegative numbers")
    tol = _num(cfg, "tol", float, DEFAULT_TOL)
    if not 0 < tol < 1:
        raise ConfigError("tol", "must lie in (0, 1)")
    h = _num(cfg, "h", float, None)
    if h is not None and not 0 < h < 1:
        raise ConfigError("h", "must lie in (0, 1)")
    snapshot = cfg.get("snapshot", "search_space")
    if snapshot not in ("search_space", "solutions"):
        raise ConfigError("snapshot", f"unknown snapshot kind {snapshot!r}")
    test = cfg.get("test", {})
    alphas = test.get("alphas", [])
    if not isinstance(alphas, list):
        raise ConfigError("test.alphas", "expected a list")
    for a in alphas:
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0 < a < 1:
            raise ConfigError("test.alphas", f"alpha must lie in (0, 1), got {a!r}")
    return RunConfig(
        problem=problem, nx=nx, ny=ny, training=training, rank=rank, rhs_mode=rhs_mode,
        rhs_seed=int(rhs.get("seed", 0)), taus=tuple(float(t) for t in taus), tol=tol,
        max_iter=_num(cfg, "max_iter", int, DEFAULT_MAX_ITER),
        sketch_seed=_num(cfg, "sketch_seed", int, 0), snapshot=snapshot, h=h,
        fom_tol=_num(cfg, "fom_tol", float, 1e-10), test_samples=test.get("samples"),
        alphas=[float(a) for a in alphas], output_dir=str(cfg.get("output_dir", ".")),
        created=cfg.get("created"), raw=cfg,
    )


def load_config(path):
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return parse_config(cfg)
