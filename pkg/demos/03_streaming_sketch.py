"""Compressing snapshots in one pass.

Columns arrive in blocks and are never stored. The single-view sketch keeps
two small matrices and recovers a near-optimal rank-K basis afterwards.
"""
import numpy as np

from fracrom.sketch import SketchConfig, low_rank_factors, sketch_init, sketch_update

rng = np.random.default_rng(1)
n, m = 2000, 300
U, _ = np.linalg.qr(rng.standard_normal((n, m)))
W, _ = np.linalg.qr(rng.standard_normal((m, m)))
s = 0.8 ** np.arange(m)
S = (U * s) @ W.T

for K in (5, 10, 20, 40):
    st = sketch_init(n, SketchConfig(K, seed=0))
    for start in range(0, m, 60):
        sketch_update(st, S[:, start:start + 60])
    Q, Wk = low_rank_factors(st)
    err = np.linalg.norm(S - Q @ Wk) ** 2
    tail = np.sum(s[K:] ** 2)
    print(f"K={K:3d}  sketch memory {st.y1.size + n * st.l2:7d} floats  "
          f"error^2 / rank-K tail = {err / tail:.2f}")
