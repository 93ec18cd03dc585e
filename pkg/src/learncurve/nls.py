"""Weighted nonlinear least squares fitting of the learning curve.

Fits the power-law curve to repeated-subsampling performance estimates
with a Levenberg-Marquardt iteration on the unconstrained parameter
scale (logit a, log b, logit c), so every iterate maps back to a valid
parameter triple.  Point predictions carry delta-method intervals
propagated from the transformed-scale covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .curve import (
    CurveParams,
    CurvePrediction,
    PerformancePoint,
    TransformedParams,
    eval_power_law,
    from_transformed,
    to_transformed,
)
from .errors import IdentifiabilityError, NotConvergedError, NumericalError

__all__ = ["AggregatedPoint", "NlsFit", "aggregate", "fit_nls", "predict_nls"]

# Variance floor applied in the weight denominator so single-repeat or
# zero-variance sizes keep finite weights.
V_FLOOR = 1e-6

_LM_LAMBDA0 = 1e-3
_LM_LAMBDA_MAX = 1e12
_LM_MAX_ITER = 200
_LM_RSS_RTOL = 1e-10
_LM_STEP_TOL = 1e-8


@dataclass(frozen=True)
class AggregatedPoint:
    """Per-size summary of the repeats: mean, unbiased variance, count."""

    n: int
    mean_y: float
    var_y: float
    k_eff: int


@dataclass(frozen=True)
class NlsFit:
    """Result of a least-squares curve fit.

    ``tcov`` is the covariance of the transformed-scale estimates
    (logit a, log b, logit c).  For anchored fits (see the transfer
    module) the entries for frozen parameters are zero and their
    natural-scale standard errors are carried in ``frozen_se``.
    """

    params: CurveParams
    tcov: np.ndarray
    rss: float
    converged: bool
    iterations: int
    size_grid: tuple[int, ...]
    anchored: bool = False
    frozen: tuple[str, ...] = ()
    frozen_se: dict | None = None
    provenance: dict | None = None

    def standard_errors(self) -> dict[str, float]:
        """Natural-scale delta-method SEs for (a, b, c)."""
        p = self.params
        se = {
            "a": p.a * (1.0 - p.a) * math.sqrt(max(self.tcov[0, 0], 0.0)),
            "b": p.b * math.sqrt(max(self.tcov[1, 1], 0.0)),
            "c": p.c * (1.0 - p.c) * math.sqrt(max(self.tcov[2, 2], 0.0)),
        }
        if self.frozen_se:
            se.update(self.frozen_se)
        return se

    def to_dict(self) -> dict:
        se = self.standard_errors()
        out = {
            "method": "nls",
            "a": self.params.a,
            "b": self.params.b,
            "c": self.params.c,
            "se_a": se["a"],
            "se_b": se["b"],
            "se_c": se["c"],
            "tcov": [float(v) for v in np.asarray(self.tcov).ravel()],
            "rss": self.rss,
            "converged": self.converged,
            "iterations": self.iterations,
            "size_grid": [int(n) for n in self.size_grid],
        }
        if self.anchored:
            out["anchored"] = True
            out["frozen"] = list(self.frozen)
            out["provenance"] = self.provenance
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "NlsFit":
        anchored = bool(d.get("anchored", False))
        frozen = tuple(d.get("frozen", ()))
        frozen_se = None
        if anchored:
            frozen_se = {k: d[f"se_{k}"] for k in frozen}
        return cls(
            params=CurveParams(a=d["a"], b=d["b"], c=d["c"]),
            tcov=np.array(d["tcov"], dtype=float).reshape(3, 3),
            rss=float(d["rss"]),
            converged=bool(d["converged"]),
            iterations=int(d["iterations"]),
            size_grid=tuple(int(n) for n in d["size_grid"]),
            anchored=anchored,
            frozen=frozen,
            frozen_se=frozen_se,
            provenance=d.get("provenance"),
        )


def aggregate(
    points: list[PerformancePoint], *, min_distinct_sizes: int = 3
) -> list[AggregatedPoint]:
    """Collapse repeats into one (mean, variance, count) summary per size.

    Raises IdentifiabilityError when fewer than ``min_distinct_sizes``
    distinct sizes are present (three abscissae are needed to identify
    the three curve parameters).
    """
    if not points:
        raise IdentifiabilityError("no performance points supplied")
    by_n: dict[int, list[float]] = {}
    for p in points:
        by_n.setdefault(p.n, []).append(p.y)
    if len(by_n) < min_distinct_sizes:
        raise IdentifiabilityError(
            f"{len(by_n)} distinct size(s); need at least {min_distinct_sizes}"
        )
    out = []
    for n in sorted(by_n):
        ys = np.asarray(by_n[n], dtype=float)
        k = ys.size
        var = float(ys.var(ddof=1)) if k > 1 else 0.0
        out.append(AggregatedPoint(n=n, mean_y=float(ys.mean()), var_y=var, k_eff=k))
    return out


def _weights(agg: list[AggregatedPoint]) -> np.ndarray:
    # Inverse-variance weights of per-size means.  The denominator uses
    # the population variance so that duplicating every repeat at a size
    # scales its weight by exactly the k_eff ratio.
    w = np.empty(len(agg))
    for i, p in enumerate(agg):
        pop_var = p.var_y * (p.k_eff - 1) / p.k_eff if p.k_eff > 1 else 0.0
        w[i] = p.k_eff / max(pop_var, V_FLOOR)
    return w


def _model_and_jac(theta: np.ndarray, ns: np.ndarray):
    """Curve values and Jacobian w.r.t. (logit a, log b, logit c)."""
    a = 1.0 / (1.0 + math.exp(-theta[0])) if theta[0] < 700 else 1.0
    b = math.exp(theta[1])
    c = 1.0 / (1.0 + math.exp(-theta[2])) if theta[2] < 700 else 1.0
    pw = ns ** (-c)
    f = (1.0 - a) - b * pw
    jac = np.empty((ns.size, 3))
    jac[:, 0] = -a * (1.0 - a)
    jac[:, 1] = -b * pw
    jac[:, 2] = b * pw * np.log(ns) * c * (1.0 - c)
    return f, jac


def _initial_theta(agg: list[AggregatedPoint]) -> np.ndarray:
    means = np.array([p.mean_y for p in agg])
    a0 = min(max(1.0 - means.max() - 0.01, 0.01), 0.99)
    c0 = 0.5
    n1 = agg[0].n
    b0 = ((1.0 - a0) - agg[0].mean_y) * n1**c0
    b0 = min(max(b0, 1e-3), 1e3)
    return np.array([math.log(a0 / (1 - a0)), math.log(b0), math.log(c0 / (1 - c0))])


def _lm_minimise(theta, ns, ys, w):
    """Levenberg-Marquardt on the weighted sum of squares.

    Returns (theta, tcov, rss, converged, iterations).  The weighted RSS
    is non-increasing across accepted steps by construction.
    """
    sqw = np.sqrt(w)

    def objective(t):
        f, _ = _model_and_jac(t, ns)
        return float(np.sum(w * (ys - f) ** 2))

    rss = objective(theta)
    if not np.isfinite(rss):
        raise NumericalError("non-finite objective at the initial point", payload=theta)

    lam = _LM_LAMBDA0
    converged = False
    iterations = 0
    for iterations in range(1, _LM_MAX_ITER + 1):
        f, jac = _model_and_jac(theta, ns)
        if not np.all(np.isfinite(jac)):
            raise NumericalError("non-finite Jacobian during iteration", payload=theta)
        resid = ys - f
        g_mat = sqw[:, None] * jac
        grad = g_mat.T @ (sqw * resid)
        hess = g_mat.T @ g_mat

        accepted = False
        while lam <= _LM_LAMBDA_MAX:
            damped = hess + lam * np.diag(np.diag(hess) + 1e-12)
            try:
                delta = np.linalg.solve(damped, grad)
            except np.linalg.LinAlgError:
                delta = np.linalg.lstsq(damped, grad, rcond=None)[0]
            trial = theta + delta
            rss_trial = objective(trial)
            if np.isfinite(rss_trial) and rss_trial <= rss:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break

        rel_drop = (rss - rss_trial) / max(rss, 1e-16)
        step = float(np.linalg.norm(delta))
        theta, rss = trial, rss_trial
        lam = max(lam / 10.0, 1e-12)
        if rel_drop < _LM_RSS_RTOL and step < _LM_STEP_TOL:
            converged = True
            break

    f, jac = _model_and_jac(theta, ns)
    g_mat = sqw[:, None] * jac
    hess = g_mat.T @ g_mat
    dof = max(ns.size - 3, 1)
    s2 = rss / dof
    tcov = np.linalg.pinv(hess) * s2
    tcov = (tcov + tcov.T) / 2.0
    return theta, tcov, rss, converged, iterations


def fit_nls(
    points: list[PerformancePoint],
    init: CurveParams | None = None,
    *,
    fit_means: bool = True,
) -> NlsFit:
    """Fit the power-law curve by weighted Levenberg-Marquardt.

    By default the fit targets per-size means with inverse-variance
    weights k_eff / max(var, floor).  ``fit_means=False`` fits all raw
    points with unit weights instead (sensitivity analysis).

    ``converged=False`` is not an error: it flags that the iteration
    stopped without meeting the step/RSS criterion (e.g. a boundary
    collapse on flat data).
    """
    agg = aggregate(points)
    if fit_means:
        ns = np.array([p.n for p in agg], dtype=float)
        ys = np.array([p.mean_y for p in agg])
        w = _weights(agg)
    else:
        ns = np.array([p.n for p in points], dtype=float)
        ys = np.array([p.y for p in points])
        w = np.ones(ns.size)

    theta0 = (
        np.array([to_transformed(init).ta, to_transformed(init).tb, to_transformed(init).tc])
        if init is not None
        else _initial_theta(agg)
    )
    theta, tcov, rss, converged, iterations = _lm_minimise(theta0, ns, ys, w)
    params = from_transformed(TransformedParams(*theta))
    return NlsFit(
        params=params,
        tcov=tcov,
        rss=rss,
        converged=converged,
        iterations=iterations,
        size_grid=tuple(p.n for p in agg),
    )


def curve_gradient(params: CurveParams, sizes: np.ndarray) -> np.ndarray:
    """Gradient of the curve w.r.t. transformed params, one row per size."""
    sizes = np.asarray(sizes, dtype=float)
    pw = sizes ** (-params.c)
    grad = np.empty((sizes.size, 3))
    grad[:, 0] = -params.a * (1.0 - params.a)
    grad[:, 1] = -params.b * pw
    grad[:, 2] = params.b * pw * np.log(sizes) * params.c * (1.0 - params.c)
    return grad


def predict_nls(
    fit: NlsFit, sizes, level: float = 0.95, *, force: bool = False
) -> CurvePrediction:
    """Point predictions with symmetric delta-method intervals.

    Intervals may exceed [0, 1]; no clipping is applied.  Refuses to
    predict from a non-converged fit unless ``force`` is set.
    """
    if not fit.converged and not force:
        raise NotConvergedError(
            "fit did not converge; pass force=True to predict anyway"
        )
    sizes = np.asarray(sizes, dtype=float)
    if np.any(sizes < 1):
        raise ValueError("prediction sizes must be >= 1")
    mean = np.atleast_1d(eval_power_law(fit.params, sizes))
    grad = curve_gradient(fit.params, sizes)
    var = np.einsum("ij,jk,ik->i", grad, fit.tcov, grad)
    se = np.sqrt(np.maximum(var, 0.0))
    z = float(ndtri(0.5 + level / 2.0))
    return CurvePrediction(
        sizes=tuple(float(s) for s in sizes),
        mean=tuple(float(v) for v in mean),
        lower=tuple(float(v) for v in mean - z * se),
        upper=tuple(float(v) for v in mean + z * se),
        level=level,
    )
