"""Coupled walk estimating the solution and its parameter derivatives.

The derivative of the solution with respect to a boundary shape or data
parameter satisfies the same screened equation with zero source and a
Dirichlet condition assembled at the walk's terminal boundary point from
the data perturbation and the normal velocity times the solution's
normal derivative. A single walk therefore estimates u and all du/dp_k
together; the normal derivative at the terminal point is estimated by a
short nested forward walk from an interior offset point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .kernels import (
    BallKernel,
    attenuation,
    ball_volume,
    greens_value,
    sample_ball,
    sample_sphere,
)
from .rng import RngStream
from .solver import WalkStats, _offset_point, wos_mean, wos_solve


@dataclass
class CoupledEstimate:
    u: float
    du: dict  # param index -> single-walk derivative estimate
    steps: int = 0
    truncated: bool = False


def terminal_normal_derivative(q, scene, bvp, cfg, rng: RngStream,
                               stats: WalkStats | None = None) -> float:
    """du/dn at the terminal boundary query, via a nested forward walk."""
    eps = cfg.eps * scene.extent()
    y, c = _offset_point(q, scene, cfg, eps)
    if y is None:
        if stats:
            stats.offset_failures += 1
        raise NumericalError(f"no interior offset point near {q.closest}")
    n_walks = max(cfg.forward_walks, 1)
    if cfg.nd_method == "backward":
        u_off = wos_mean(y, scene, bvp, cfg, rng, n_walks, stats)
        return (scene.dirichlet.value(q, scene) - u_off) / c
    dim = scene.boundary.dim
    total = 0.0
    for j in range(n_walks):
        sub = rng.derive(j)
        gen = sub.generator()
        z = sample_sphere(gen, y, c)
        cosa = sum((zi - yi) / c * nb for zi, yi, nb in zip(z, y, q.normal))
        total += (dim / c) * cosa * wos_solve(z, scene, bvp, cfg, sub.derive(1), stats)
    return total / n_walks


def differential_boundary_value(q, scene, bvp, cfg, rng: RngStream,
                                stats: WalkStats | None = None) -> dict:
    """Terminal Dirichlet values of du/dp_k at a boundary query point.

    For each parameter k:
        dudot_k = d(data)/dp_k + tangential slip term
                  + v_n_k * (dg/dn - du/dn)
    The nested normal-derivative walk is skipped when every v_n is zero.
    """
    data = scene.dirichlet
    out = dict(data.param_deriv(q, scene))
    vel = scene.normal_velocity(q)
    tang = data.tangential_term(q, scene)
    for k, t in tang.items():
        if t != 0.0:
            out[k] = out.get(k, 0.0) + t
    vel = {k: v for k, v in vel.items() if v != 0.0}
    if vel:
        gn = data.normal_deriv(q, scene)
        dudn = terminal_normal_derivative(q, scene, bvp, cfg, rng, stats)
        for k, v in vel.items():
            out[k] = out.get(k, 0.0) + v * (gn - dudn)
    return out


def diff_wos(x, scene, bvp, cfg, rng: RngStream,
             stats: WalkStats | None = None) -> CoupledEstimate:
    """One coupled walk from x estimating u and all du/dp_k."""
    boundary = scene.boundary
    x = tuple(float(v) for v in x)
    if not boundary.contains(x):
        raise DomainError(f"walk origin {x} is outside the domain")
    gen = rng.generator()
    eps = cfg.eps * scene.extent()
    dim = boundary.dim
    src_zero = bvp.source.is_zero()
    acc = 0.0
    weight = 1.0
    steps = 0
    while steps < cfg.max_steps:
        in_shell, radius, q = boundary.walk_step(x, eps)
        if in_shell:
            u = acc + weight * scene.dirichlet.value(q, scene)
            delta = differential_boundary_value(q, scene, bvp, cfg,
                                                rng.derive(1, steps), stats)
            du = {k: weight * v for k, v in delta.items()}
            if stats:
                stats.walks += 1
                stats.steps += steps
            return CoupledEstimate(u, du, steps, False)
        kern = BallKernel(dim, radius, bvp.sigma)
        if not src_zero:
            z = sample_ball(gen, x, radius)
            r = math.dist(z, x)
            if r > 0.0:
                acc -= weight * greens_value(kern, r) * ball_volume(dim, radius) * bvp.source.value(z)
        alpha = attenuation(kern)
        if cfg.rr_enabled:
            if alpha < 1.0 and gen.random() >= alpha:
                if stats:
                    stats.walks += 1
                    stats.steps += steps
                return CoupledEstimate(acc, {}, steps, False)
        else:
            weight *= alpha
        x = sample_sphere(gen, x, radius)
        steps += 1
    if stats:
        stats.walks += 1
        stats.steps += steps
        stats.truncated += 1
    return CoupledEstimate(acc, {}, steps, True)


@dataclass
class DiffFieldEstimate:
    u_mean: np.ndarray            # (n_points,)
    du_mean: np.ndarray           # (n_points, n_params)
    du_var: np.ndarray            # (n_points, n_params)
    count: np.ndarray
    stats: WalkStats = field(default_factory=WalkStats)


def estimate_diff_grid(points, scene, bvp, cfg, rng: RngStream) -> DiffFieldEstimate:
    """Per-point means of u and du/dp_k over cfg.walks_per_point walks."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    n_params = scene.n_params
    u_mean = np.full(n, np.nan)
    du_mean = np.full((n, n_params), np.nan)
    du_var = np.full((n, n_params), np.nan)
    count = np.zeros(n, dtype=int)
    stats = WalkStats()
    m = cfg.walks_per_point
    for i in range(n):
        x = tuple(pts[i])
        if not scene.boundary.contains(x):
            continue
        us = np.empty(m)
        dus = np.zeros((m, n_params))
        for j in range(m):
            est = diff_wos(x, scene, bvp, cfg, rng.derive(i, j), stats)
            us[j] = est.u
            for k, v in est.du.items():
                dus[j, k] = v
        u_mean[i] = us.mean()
        du_mean[i] = dus.mean(axis=0)
        du_var[i] = dus.var(axis=0, ddof=1) if m > 1 else 0.0
        count[i] = m
    return DiffFieldEstimate(u_mean, du_mean, du_var, count, stats)


def fd_reference_gradient(evaluate, scene, h: float, rng: RngStream,
                          param_indices=None):
    """Forward-difference gradient of evaluate(scene, stream) over parameters.

    Uses common random numbers: the base and every perturbed evaluation
    reuse the same stream. Returns (gradient array, failure mask); a
    parameter is flagged as failed when its perturbed scene is invalid
    or an evaluation raises a numerical error.
    """
    params = scene.get_params()
    if param_indices is None:
        param_indices = range(len(params))
    base = evaluate(scene, rng)
    grad = np.zeros(len(params))
    failed = np.zeros(len(params), dtype=bool)
    for k in param_indices:
        bumped = params.copy()
        bumped[k] += h
        try:
            pert = scene.with_params(bumped)
            pert.boundary.validate()
            grad[k] = (evaluate(pert, rng) - base) / h
        except (DomainError, NumericalError, ValueError):
            failed[k] = True
            grad[k] = np.nan
    return grad, failed
