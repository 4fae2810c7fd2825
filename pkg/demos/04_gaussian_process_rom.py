"""A reduced model for Matern-type Gaussian random fields.

The field solves ``(kappa^2 - Laplace)^alpha u = white noise`` on the unit
square. We train once at ``alpha = 1/2`` over a sweep of ``kappa^2`` and
then query arbitrary ``(kappa^2, alpha)`` pairs at reduced cost.
"""
import time

import numpy as np

from fracrom import TrainingPlan, build_problem, fom_solve, offline_train, online_solve
from fracrom.config import generate_samples

p = build_problem("gp", 65, seed=0)
train = generate_samples({"generator": "grid-sweep", "step": 5.0}, p.param_box)
t0 = time.perf_counter()
rom, report = offline_train(TrainingPlan("gp", train, 60), p)
print(f"offline: {len(train)} samples, rank {rom.rank}, {time.perf_counter() - t0:.1f} s")
print("leading singular values:", np.array2string(report.singular_values[:6], precision=2))

for k2 in (15.0, 105.0, 190.0):
    for alpha in (0.2, 0.5, 0.9):
        t0 = time.perf_counter()
        u_rom = online_solve(rom, [k2], alpha)
        t_on = time.perf_counter() - t0
        t0 = time.perf_counter()
        u_fom = fom_solve(p, [k2], alpha)
        t_fom = time.perf_counter() - t0
        err = np.linalg.norm(u_rom - u_fom) / np.linalg.norm(u_fom)
        print(f"kappa^2={k2:5.0f} alpha={alpha:.1f}  rel. error {err:.1e}  "
              f"online {1e3 * t_on:5.1f} ms vs full {1e3 * t_fom:6.1f} ms")
