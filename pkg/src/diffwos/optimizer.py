"""Stochastic gradient descent over boundary shape and data parameters.

Adam for scalar parameters; Vector Adam for vector-valued groups
(per-vertex or per-center positions), which shares the second-moment
magnitude within a group so updates are rotation-equivariant. Walks per
point anneal geometrically from WPP_0 to WPP_T over the run, and
regularizer strengths decay at the matching O(WPP^-1/2) rate.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DiffWosError, NumericalError
from .functional import (
    FunctionalSpec,
    ProductEstimatorConfig,
    estimate_functional,
    functional_gradient,
    length_regularizer_gradient,
)
from .geometry.bezier import BezierChain
from .geometry.implicit import ImplicitMonopoles
from .geometry.polyline import PolylineBoundary
from .rng import RngStream


@dataclass
class OptimizerConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    iterations: int = 200
    wpp0: int = 2
    wpp_t: int = 64
    resample_every: int = 100      # polyline uniform-resampling period; 0 = off
    smooth_gradients: bool = False  # one umbrella-operator pass on vertex grads

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.wpp0 > self.wpp_t:
            raise ConfigError("wpp0 must be <= wpp_t")
        if self.wpp0 < 1:
            raise ConfigError("wpp0 must be >= 1")


@dataclass
class IterationRecord:
    t: int
    loss: float
    grad_norm: float
    wpp: int
    seconds: float
    param_hash: str
    skipped: int = 0


def wpp_schedule(t: int, cfg: OptimizerConfig) -> int:
    """WPP_t = WPP_0 * exp(log(WPP_T / WPP_0) * t / T), rounded and clamped."""
    if not 0 <= t <= cfg.iterations:
        raise ConfigError(f"iteration {t} outside [0, {cfg.iterations}]")
    if cfg.wpp0 == cfg.wpp_t or cfg.iterations == 0:
        return cfg.wpp0
    w = cfg.wpp0 * math.exp(math.log(cfg.wpp_t / cfg.wpp0) * t / cfg.iterations)
    return int(min(max(round(w), cfg.wpp0), cfg.wpp_t))


def regularizer_decay(t: int, alpha0: float, cfg: OptimizerConfig) -> float:
    """alpha_t = alpha_0 * (WPP_t / WPP_0)^(-1/2)."""
    return alpha0 * (wpp_schedule(t, cfg) / cfg.wpp0) ** -0.5


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    skipped: int = 0

    @staticmethod
    def zeros(n: int) -> "AdamState":
        return AdamState(np.zeros(n), np.zeros(n))


def step(params, gradient, state: AdamState, cfg: OptimizerConfig,
         vector_groups=None):
    """One Adam / Vector Adam update; returns new parameter array.

    vector_groups: sequence of index tuples treated as vectors — within a
    group the second moment uses the gradient's squared norm, so the
    update direction is parallel to the group gradient. Non-finite
    gradient entries are skipped (their moments left untouched) and
    counted on the state.
    """
    params = np.asarray(params, dtype=float).copy()
    g = np.asarray(gradient, dtype=float).copy()
    ok = np.isfinite(g)
    state.skipped += int((~ok).sum())
    g[~ok] = 0.0
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    state.m[ok] = b1 * state.m[ok] + (1 - b1) * g[ok]
    sq = g * g
    grouped = np.zeros(len(g), dtype=bool)
    if vector_groups:
        for grp in vector_groups:
            idx = list(grp)
            if len(idx) < 2:
                continue
            sq[idx] = float(np.dot(g[idx], g[idx]))
            grouped[idx] = True
    state.v[ok] = b2 * state.v[ok] + (1 - b2) * sq[ok]
    mh = state.m / (1 - b1 ** state.t)
    vh = state.v / (1 - b2 ** state.t)
    upd = cfg.lr * mh / (np.sqrt(vh) + cfg.eps_adam)
    upd[~ok] = 0.0
    params -= upd
    return params


def _vector_groups(scene):
    """Index tuples of vector-valued parameter groups (positions)."""
    groups = []
    for grp in scene.param_groups():
        if len(grp) >= 2:
            groups.append(tuple(grp))
    return groups


def _param_hash(params) -> str:
    return hashlib.sha256(np.asarray(params, dtype=float).tobytes()).hexdigest()[:16]


def _smooth_polyline_gradient(scene, grad):
    """One umbrella-operator pass (weight 0.5) on per-vertex gradients."""
    boundary = scene.boundary
    if not isinstance(boundary, PolylineBoundary):
        return grad
    grad = grad.copy()
    for loop in boundary.loops:
        n = len(loop)
        slots = [boundary._vslot.get(v) for v in loop]
        gx = np.array([0.0 if s is None else grad[s] for s in slots])
        gy = np.array([0.0 if s is None else grad[s + 1] for s in slots])
        sx = 0.5 * gx + 0.25 * (np.roll(gx, 1) + np.roll(gx, -1))
        sy = 0.5 * gy + 0.25 * (np.roll(gy, 1) + np.roll(gy, -1))
        for i, s in enumerate(slots):
            if s is not None:
                grad[s], grad[s + 1] = sx[i], sy[i]
    return grad


def _maintain_geometry(scene, t, cfg, log_notes):
    """Periodic resampling / repair; returns True if param layout changed."""
    boundary = scene.boundary
    if isinstance(boundary, BezierChain):
        boundary.repair_colinearity()
        return False
    if (isinstance(boundary, PolylineBoundary) and cfg.resample_every > 0
            and t > 0 and t % cfg.resample_every == 0):
        target = boundary.perimeter() / max(len(boundary.vertices), 3)
        boundary.resample_uniform(target)
        log_notes.append(f"t={t}: resampled polyline to {len(boundary.vertices)} vertices")
        return True
    return False


def _scene_valid(scene) -> bool:
    try:
        scene.boundary.validate()
        return True
    except DiffWosError:
        return False


def optimize(scene, bvp, spec: FunctionalSpec, opt_cfg: OptimizerConfig,
             solver_cfg, est_cfg: ProductEstimatorConfig, rng: RngStream,
             log_path=None, callback=None):
    """Run T iterations of functional_gradient + Adam; returns (params, records).

    Deterministic given the stream. Steps that would produce invalid
    geometry (collapsed segments, merged monopole degeneracies caught by
    validation) are rejected and logged; the loop continues. Records are
    optionally mirrored to a CSV log with columns t, loss, grad_norm,
    wpp, seconds.
    """
    records: list[IterationRecord] = []
    notes: list[str] = []
    state = AdamState.zeros(scene.n_params)
    groups = _vector_groups(scene)
    t_start = time.perf_counter()
    for t in range(opt_cfg.iterations):
        wpp = wpp_schedule(t, opt_cfg)
        it_cfg = replace(est_cfg, walks=max(wpp, 2))
        it_rng = rng.derive(t)
        try:
            loss = estimate_functional(scene, bvp, spec, solver_cfg,
                                       it_cfg, it_rng.derive(0))
            grad = functional_gradient(scene, bvp, spec, solver_cfg, it_cfg,
                                       it_rng.derive(1))
        except DiffWosError as exc:
            # a low-sample iteration can miss the boundary band entirely;
            # skip the step rather than aborting the whole run
            notes.append(f"t={t}: iteration skipped ({exc})")
            continue
        for kind, alpha0 in spec.regularizers:
            alpha = regularizer_decay(t, alpha0, opt_cfg)
            if kind == "length":
                grad = grad + length_regularizer_gradient(scene, alpha,
                                                          it_rng.derive(2))
                loss += alpha * scene.boundary.perimeter()
            else:
                raise ConfigError(f"unknown regularizer kind {kind!r}")
        if opt_cfg.smooth_gradients:
            grad = _smooth_polyline_gradient(scene, grad)
        old = scene.get_params()
        new = step(old, grad, state, opt_cfg, groups)
        try:
            scene.set_params(new)
            if not _scene_valid(scene):
                raise ConfigError("invalid geometry after step")
        except DiffWosError:
            scene.set_params(old)
            notes.append(f"t={t}: step rejected (degenerate geometry)")
        if _maintain_geometry(scene, t + 1, opt_cfg, notes):
            state = AdamState.zeros(scene.n_params)
            groups = _vector_groups(scene)
        gn = float(np.linalg.norm(grad[np.isfinite(grad)]))
        rec = IterationRecord(t, float(loss), gn, wpp,
                              time.perf_counter() - t_start,
                              _param_hash(scene.get_params()),
                              skipped=state.skipped)
        records.append(rec)
        if callback is not None and callback(scene, rec):
            break
    if log_path is not None:
        write_iteration_log(log_path, records)
    return scene.get_params(), records, notes


def write_iteration_log(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "loss", "grad_norm", "wpp", "seconds", "param_hash", "skipped"])
        for r in records:
            w.writerow([r.t, repr(r.loss), repr(r.grad_norm), r.wpp,
                        repr(r.seconds), r.param_hash, r.skipped])
