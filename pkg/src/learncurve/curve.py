"""Power-law learning curve: parameter space and reparameterisation.

The curve maps a training-pool size ``n`` to an expected performance

    f(n) = (1 - a) - b * n**(-c)

with ``a`` the minimum achievable error, ``b`` the learning rate and
``c`` the decay rate.  Both fitters (least squares and the Gaussian
process) share this mean function and the constrained/unconstrained
parameter mapping defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CurveParams",
    "TransformedParams",
    "PerformancePoint",
    "CurvePrediction",
    "eval_power_law",
    "to_transformed",
    "from_transformed",
]


@dataclass(frozen=True)
class CurveParams:
    """Natural-scale curve parameters.

    a : minimum achievable error, in (0, 1)
    b : learning rate, > 0
    c : decay rate, in (0, 1)
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (0.0 < self.a < 1.0):
            raise ValueError(f"a must lie in (0, 1), got {self.a}")
        if not (self.b > 0.0):
            raise ValueError(f"b must be positive, got {self.b}")
        if not (0.0 < self.c < 1.0):
            raise ValueError(f"c must lie in (0, 1), got {self.c}")


@dataclass(frozen=True)
class TransformedParams:
    """Unconstrained representation: (logit a, log b, logit c)."""

    ta: float
    tb: float
    tc: float


@dataclass(frozen=True)
class PerformancePoint:
    """One performance estimate: pool size ``n``, value ``y``, repeat index."""

    n: int
    y: float
    repeat: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not (0.0 <= self.y <= 1.0):
            raise ValueError(f"y must lie in [0, 1], got {self.y}")


@dataclass(frozen=True)
class CurvePrediction:
    """Per-size predicted mean with a central interval at ``level``."""

    sizes: tuple[float, ...]
    mean: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    level: float

    def __post_init__(self):
        k = len(self.sizes)
        if not (len(self.mean) == len(self.lower) == len(self.upper) == k):
            raise ValueError("sizes, mean, lower, upper must have equal length")
        if not (0.0 < self.level < 1.0):
            raise ValueError(f"level must lie in (0, 1), got {self.level}")


def eval_power_law(params: CurveParams, n) -> float | np.ndarray:
    """Evaluate (1 - a) - b * n**(-c) at one or many sizes ``n`` (n >= 1).

    Accepts real-valued ``n`` so dense prediction grids are first class.
    The result may be negative at small ``n`` for large ``b``; the curve
    is a model of expected performance, not a probability.
    """
    n = np.asarray(n, dtype=float)
    out = (1.0 - params.a) - params.b * n ** (-params.c)
    return float(out) if out.ndim == 0 else out


def to_transformed(params: CurveParams) -> TransformedParams:
    """Map natural parameters to the unconstrained fitting scale."""
    return TransformedParams(
        ta=math.log(params.a / (1.0 - params.a)),
        tb=math.log(params.b),
        tc=math.log(params.c / (1.0 - params.c)),
    )


def from_transformed(t: TransformedParams) -> CurveParams:
    """Inverse of :func:`to_transformed`; always yields valid params."""
    return CurveParams(a=_sigmoid(t.ta), b=math.exp(t.tb), c=_sigmoid(t.tc))


def _sigmoid(x: float) -> float:
    # Stable in both tails; never returns exactly 0 or 1 for finite x
    # representable away from the extremes, but clamp to stay inside the
    # open interval for arguments beyond float precision.
    if x >= 0:
        v = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        v = e / (1.0 + e)
    return min(max(v, 5e-324), 1.0 - 1e-16)
