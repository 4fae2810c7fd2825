"""Where the search-space sketch struggles.

For the piecewise-constant cookie coefficients and the rotated anisotropic
tensor the Krylov search spaces of different training samples have little
in common, so a rank-K sketch of them misses directions that the solutions
need. Sketching the solutions themselves fixes this at the same rank.
"""
import numpy as np

from fracrom import TrainingPlan, build_problem, fom_solve, offline_train, online_solve
from fracrom.config import generate_samples

for pid, K in (("cookies-a", 60), ("aniso", 100)):
    p = build_problem(pid, 33)
    train = generate_samples({"generator": "latin-hypercube", "seed": 1, "count": 40}, p.param_box)
    test = generate_samples({"generator": "uniform", "seed": 2, "count": 4}, p.param_box)
    for snapshot in ("search_space", "solutions"):
        rom, _ = offline_train(TrainingPlan(pid, train, K, snapshot=snapshot), p)
        err = max(np.linalg.norm(online_solve(rom, mu, a) - (u := fom_solve(p, mu, a))) / np.linalg.norm(u)
                  for mu in test for a in (0.2, 0.5, 0.8))
        print(f"{pid:10s} K={K:3d} {snapshot:13s} max rel. error {err:.1e}")
