"""Validation and ablation battery: RMSE sweeps over solver
hyperparameters, bias/variance decomposition against reference
derivatives, and equal-time comparison of the coupled-walk estimator
against finite differences.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import RestrictedData
from .errors import ConfigError
from .differential import diff_wos, estimate_diff_grid
from .fields import LinearField
from .functional import ProductEstimatorConfig, product_estimate
from .geometry.polyline import PolylineBoundary
from .rng import RngStream
from .scene import Scene
from .solver import wos_solve


@dataclass
class AblationLevel:
    level: object
    rmse: float
    bias: float
    variance: float
    walks: int
    seconds: float


@dataclass
class AblationReport:
    axis: str
    reference: str
    levels: list = field(default_factory=list)

    def check_decomposition(self, rel_tol=1e-9):
        for lv in self.levels:
            lhs = lv.rmse ** 2
            rhs = lv.bias ** 2 + lv.variance
            scale = max(abs(lhs), abs(rhs), 1e-300)
            if abs(lhs - rhs) > rel_tol * scale:
                raise ConfigError(
                    f"bias/variance decomposition violated at level {lv.level}")
        return True

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["axis", "level", "rmse", "bias", "variance",
                        "walks", "seconds"])
            for lv in self.levels:
                w.writerow([self.axis, lv.level, repr(lv.rmse), repr(lv.bias),
                            repr(lv.variance), lv.walks, repr(lv.seconds)])


def _decompose(samples, reference):
    """(rmse, bias, variance) pooled over points from per-seed estimates.

    samples: (n_seeds, n_points); reference: (n_points,). Uses the
    population variance across seeds so rmse^2 = bias^2 + variance holds
    exactly per point before pooling.
    """
    samples = np.asarray(samples, dtype=float)
    reference = np.asarray(reference, dtype=float)
    mean = samples.mean(axis=0)
    bias2 = (mean - reference) ** 2
    var = samples.var(axis=0)  # population variance
    rmse2 = bias2 + var
    return (math.sqrt(rmse2.mean()), math.sqrt(bias2.mean()),
            float(var.mean()))


def default_ablation_scene(n_vertices: int = 100):
    """Blob polyline in the unit box with data g(x) = x1 + x2.

    The ablated quantity is the solution derivative with respect to a
    rigid y-translation of the whole polyline (the sum of all vertex-y
    derivative components).
    """
    theta = np.linspace(0.0, 2.0 * math.pi, n_vertices, endpoint=False)
    r = 0.35 + 0.08 * np.cos(3 * theta) + 0.05 * np.sin(5 * theta)
    verts = np.column_stack([0.5 + r * np.cos(theta), 0.5 + r * np.sin(theta)])
    boundary = PolylineBoundary(verts)
    scene = Scene(boundary, RestrictedData(LinearField((1.0, 1.0), 0.0)))
    weights = np.zeros(scene.n_params)
    weights[1::2] = 1.0  # vertex y components
    return scene, weights


def _combined_derivative(x, scene, bvp, cfg, rng, walks, weights):
    """Mean over walks of the weighted derivative combination at x."""
    total = 0.0
    for j in range(walks):
        est = diff_wos(x, scene, bvp, cfg, rng.derive(j))
        total += sum(weights[k] * v for k, v in est.du.items())
    return total / walks


def _product_quantity(x, scene, bvp, cfg, rng, est_cfg, weights):
    """d(u^2/2)/dp estimate: E[u]E[du] through a product estimator."""
    n = est_cfg.walks
    us = np.empty(n)
    dus = np.empty(n)
    for j in range(n):
        est = diff_wos(x, scene, bvp, cfg, rng.derive(j))
        us[j] = est.u
        dus[j] = sum(weights[k] * v for k, v in est.du.items())
    return float(product_estimate(us, dus, est_cfg)[0])


def rmse_sweep(scene, bvp, axis: str, levels, reference, cfg, rng: RngStream,
               points, weights=None, n_seeds: int = 16, walks: int = 32,
               est_cfg: ProductEstimatorConfig | None = None) -> AblationReport:
    """Per-level RMSE/bias/variance of the derivative estimate on a grid.

    axis: "eps" | "offset" | "nd_method" | "estimator" | "wpp".
    offset levels are multiples of eps; estimator levels route the
    per-point u*du product through the named product estimator.
    reference: per-point reference values of the measured quantity.
    Variance is measured across n_seeds independent seeds.
    """
    if weights is None:
        weights = np.ones(scene.n_params)
    pts = [tuple(map(float, p)) for p in points]
    reference = np.asarray(reference, dtype=float)
    report = AblationReport(axis=axis, reference="caller-supplied")
    if est_cfg is None:
        est_cfg = ProductEstimatorConfig(walks=walks)
    for level in levels:
        lcfg = cfg
        lest = est_cfg
        lwalks = walks
        if axis == "eps":
            lcfg = replace(cfg, eps=float(level), offset=None)
        elif axis == "offset":
            lcfg = replace(cfg, offset=float(level) * cfg.eps)
        elif axis == "nd_method":
            lcfg = replace(cfg, nd_method=str(level))
        elif axis == "estimator":
            lest = replace(est_cfg, kind=str(level))
        elif axis == "wpp":
            lwalks = int(level)
        else:
            raise ConfigError(f"unknown ablation axis {axis!r}")
        t0 = time.perf_counter()
        samples = np.empty((n_seeds, len(pts)))
        for s in range(n_seeds):
            # common random numbers across levels: the same seed substream
            # drives every level, so level-to-level differences (the bias
            # trends) are far less noisy than the raw estimates
            srng = rng.derive(s)
            for i, x in enumerate(pts):
                if axis == "estimator":
                    samples[s, i] = _product_quantity(
                        x, scene, bvp, lcfg, srng.derive(i), lest, weights)
                else:
                    samples[s, i] = _combined_derivative(
                        x, scene, bvp, lcfg, srng.derive(i), lwalks, weights)
        rmse, bias, var = _decompose(samples, reference)
        n_walks = (lest.walks if axis == "estimator" else lwalks)
        report.levels.append(AblationLevel(level, rmse, bias, var,
                                           n_seeds * len(pts) * n_walks,
                                           time.perf_counter() - t0))
    report.check_decomposition()
    return report


@dataclass
class TimedMethodResult:
    method: str
    rmse: float
    repetitions: int
    walks: int
    seconds: float


@dataclass
class EqualTimeReport:
    budget_seconds: float
    results: list = field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "rmse", "repetitions", "walks", "seconds"])
            for r in self.results:
                w.writerow([r.method, repr(r.rmse), r.repetitions, r.walks,
                            repr(r.seconds)])


def equal_time_comparison(scene, bvp, cfg, budget_seconds: float, points,
                          reference, rng: RngStream, weights=None,
                          fd_h: float = 1e-3) -> EqualTimeReport:
    """Derivative-grid RMSE of coupled walks vs finite differences at a
    fixed wall-time budget per method.

    The FD method pays N+1 forward solves per sample (all parameters
    perturbed with common random numbers); the coupled walk pays one walk
    plus one nested normal-derivative walk regardless of N. A zero or
    negative budget returns an empty report.
    """
    report = EqualTimeReport(budget_seconds=budget_seconds)
    if budget_seconds <= 0.0:
        return report
    if weights is None:
        weights = np.ones(scene.n_params)
    pts = [tuple(map(float, p)) for p in points]
    reference = np.asarray(reference, dtype=float)
    n_params = scene.n_params

    # coupled differential walks
    t0 = time.perf_counter()
    acc = np.zeros(len(pts))
    reps = 0
    while time.perf_counter() - t0 < budget_seconds:
        srng = rng.derive(0, reps)
        for i, x in enumerate(pts):
            est = diff_wos(x, scene, bvp, cfg, srng.derive(i))
            acc[i] += sum(weights[k] * v for k, v in est.du.items())
        reps += 1
    dt = time.perf_counter() - t0
    est_diff = acc / max(reps, 1)
    report.results.append(TimedMethodResult(
        "diff_wos", float(np.sqrt(np.mean((est_diff - reference) ** 2))),
        reps, reps * len(pts), dt))

    # finite differences: one base + N perturbed forward walks per sample
    params = scene.get_params()
    h = fd_h * max(scene.extent(), 1.0)
    perturbed = []
    for k in range(n_params):
        bumped = params.copy()
        bumped[k] += h
        perturbed.append(scene.with_params(bumped))
    t0 = time.perf_counter()
    acc = np.zeros(len(pts))
    reps = 0
    while time.perf_counter() - t0 < budget_seconds:
        srng = rng.derive(1, reps)
        for i, x in enumerate(pts):
            prng = srng.derive(i)
            base = wos_solve(x, scene, bvp, cfg, prng)
            total = 0.0
            for k in range(n_params):
                if weights[k] == 0.0:
                    continue
                total += weights[k] * (wos_solve(x, perturbed[k], bvp, cfg, prng) - base) / h
            acc[i] += total
        reps += 1
    dt = time.perf_counter() - t0
    est_fd = acc / max(reps, 1)
    report.results.append(TimedMethodResult(
        "fd", float(np.sqrt(np.mean((est_fd - reference) ** 2))),
        reps, reps * len(pts) * (n_params + 1), dt))
    return report
