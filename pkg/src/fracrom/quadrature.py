"""Sinc quadrature for the resolvent integral of a fractional power.

For ``0 < alpha < 1`` and an SPD operator ``A``,

    A^{-alpha} b = sin(alpha pi)/pi * int_R e^{(1-alpha) z} (e^z + A)^{-1} b dz,

which the sinc rule replaces by ``sum_j w_j (e^{z_j} + A)^{-1} b`` on the
uniform nodes ``z_j = zeta * j`` with ``zeta = 1 / log(1/h)``.
"""
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SincRule", "build_rule", "training_rule", "scalar_fractional", "resolvent_sum"]

# exp overflows float64 just above 709.78
_EXP_MAX = 700.0


@dataclass(frozen=True, eq=False)
class SincRule:
    alpha: float
    h: float
    zeta: float
    z_minus: int
    z_plus: int
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.z_minus + self.z_plus + 1

    @property
    def indices(self):
        return np.arange(-self.z_minus, self.z_plus + 1)

    def exp_nodes(self):
        """``e^{z_j}``; may contain ``inf`` for extreme rules."""
        with np.errstate(over="ignore"):
            return np.exp(self.nodes)

    def shifts(self):
        """Shifts ``sigma_j = e^{-z_j}`` for the rescaled systems ``(M + sigma K)``."""
        with np.errstate(over="ignore"):
            return np.exp(-self.nodes)


def _check_open_unit(name, value):
    if not (0.0 < value < 1.0) or not math.isfinite(value):
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


def build_rule(alpha, h):
    """Sinc rule for exponent ``alpha`` at mesh parameter ``h``.

    ``Z_+ = ceil(pi^2 / (4 alpha zeta^2))`` and
    ``Z_- = ceil(pi^2 / (4 (1 - alpha) zeta^2))``.
    """
    _check_open_unit("alpha", alpha)
    _check_open_unit("h", h)
    alpha = float(alpha)
    zeta = 1.0 / math.log(1.0 / h)
    z_plus = math.ceil(math.pi**2 / (4.0 * alpha * zeta**2))
    z_minus = math.ceil(math.pi**2 / (4.0 * (1.0 - alpha) * zeta**2))
    nodes = zeta * np.arange(-z_minus, z_plus + 1, dtype=np.float64)
    # stored weights may overflow for extreme (alpha, h); resolvent_sum
    # recomputes those terms in log space
    with np.errstate(over="ignore"):
        weights = (zeta * math.sin(alpha * math.pi) / math.pi) * np.exp((1.0 - alpha) * nodes)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SincRule(alpha, float(h), zeta, z_minus, z_plus, nodes, weights)


def training_rule(h):
    """The ``alpha = 1/2`` rule whose nodes define the offline shift set."""
    return build_rule(0.5, h)


def resolvent_sum(rule, lam):
    """``sum_j w_j / (lam_i + e^{z_j})`` for each entry of ``lam``.

    Terms whose ``e^{z_j}`` would overflow are evaluated in log space.
    """
    lam = np.asarray(lam, dtype=np.float64)
    z = rule.nodes
    w = rule.weights
    safe = z <= _EXP_MAX
    lam_col = lam.reshape(-1, 1)
    out = (w[safe] / (lam_col + np.exp(z[safe]))).sum(axis=1)
    if not np.all(safe):
        zs = z[~safe]
        logw = math.log(rule.zeta * math.sin(rule.alpha * math.pi) / math.pi) + (1.0 - rule.alpha) * zs
        # lam << e^z here, so log(lam + e^z) = z + log1p(lam e^{-z})
        tail = np.exp(logw - zs - np.log1p(lam_col * np.exp(-zs)))
        out = out + tail.sum(axis=1)
    return out.reshape(lam.shape)


def scalar_fractional(rule, lam):
    """Quadrature approximation of ``lam ** -alpha`` for ``lam > 0``."""
    lam = float(lam)
    if not lam > 0.0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return float(resolvent_sum(rule, np.array([lam]))[0])
