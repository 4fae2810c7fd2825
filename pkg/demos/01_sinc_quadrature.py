"""How accurate is the sinc rule for a scalar fractional power?

For a single eigenvalue ``lam`` the rule approximates ``lam ** -alpha``.
We tabulate the relative error as ``h`` is halved and watch it shrink by
roughly ``2 ** (pi^2 / 4)`` per step.
"""
import numpy as np

from fracrom import build_rule, scalar_fractional

lams = [0.1, 1.0, 100.0, 1e4]
alpha = 0.5

print(f"alpha = {alpha}")
print("   h     " + "".join(f"lam={lam:<10g}" for lam in lams) + " nodes")
for k in range(4, 13):
    h = 2.0 ** -k
    rule = build_rule(alpha, h)
    errs = [abs(scalar_fractional(rule, lam) * lam**alpha - 1.0) for lam in lams]
    print(f"2^-{k:<3d}  " + "".join(f"{e:<14.2e}" for e in errs) + f" {len(rule)}")

# the error grows with lam^alpha, so the worst case sits at large lam and alpha
rule = build_rule(0.9, 2.0 ** -10)
print("\nalpha = 0.9, h = 2^-10, lam = 1e4:",
      f"{abs(scalar_fractional(rule, 1e4) * 1e4**0.9 - 1):.2e}")
print("ratio per halving, lam = 1:", end=" ")
errs = np.array([abs(scalar_fractional(build_rule(0.5, 2.0**-k), 1.0) - 1) for k in range(6, 12)])
print(np.round(errs[:-1] / errs[1:], 2))
