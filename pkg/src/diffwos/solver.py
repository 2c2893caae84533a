"""Walk-on-spheres estimation of the forward boundary value problem.

Single-walk estimates of the solution, boundary normal derivatives at
offset points, and deterministic grid estimation. The shell size eps and
the normal-derivative offset c in `SolverConfig` are relative to the
scene's bounding-box extent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, NumericalError
from .fields import ScalarField, ZeroField
from .kernels import (
    BallKernel,
    attenuation,
    ball_volume,
    greens_value,
    sample_ball,
    sample_sphere,
)
from .rng import RngStream


@dataclass
class BVPSpec:
    """Screened Poisson problem: Laplacian(u) - sigma * u = f."""

    sigma: float = 0.0
    source: ScalarField = field(default_factory=ZeroField)

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ConfigError(f"screening coefficient must be >= 0, got {self.sigma}")


@dataclass
class SolverConfig:
    eps: float = 1e-3           # shell size, relative to scene extent
    offset: float | None = None  # normal-derivative offset; default 10*eps
    max_steps: int = 10_000
    rr_enabled: bool = True
    walks_per_point: int = 64
    forward_walks: int = 1       # nested forward walks per terminal point
    nd_method: str = "backward"  # backward | offset_ball

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ConfigError("eps must be positive")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.nd_method not in ("backward", "offset_ball"):
            raise ConfigError(f"unknown normal-derivative method {self.nd_method!r}")

    @property
    def offset_rel(self) -> float:
        return 10.0 * self.eps if self.offset is None else self.offset

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class WalkStats:
    walks: int = 0
    steps: int = 0
    truncated: int = 0
    offset_failures: int = 0

    def merge(self, other: "WalkStats"):
        self.walks += other.walks
        self.steps += other.steps
        self.truncated += other.truncated
        self.offset_failures += other.offset_failures


def wos_walk(x, scene, bvp, cfg, rng, stats: WalkStats | None = None):
    """One WoS walk from x; returns (estimate, steps, truncated)."""
    boundary = scene.boundary
    x = tuple(float(v) for v in x)
    if not boundary.contains(x):
        raise DomainError(f"walk origin {x} is outside the domain")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    eps = cfg.eps * scene.extent()
    dim = boundary.dim
    src_zero = bvp.source.is_zero()
    acc = 0.0
    weight = 1.0
    steps = 0
    while steps < cfg.max_steps:
        in_shell, radius, q = boundary.walk_step(x, eps)
        if in_shell:
            value = acc + weight * scene.dirichlet.value(q, scene)
            if stats:
                stats.walks += 1
                stats.steps += steps
            return value, steps, False
        kern = BallKernel(dim, radius, bvp.sigma)
        if not src_zero:
            z = sample_ball(gen, x, radius)
            r = math.dist(z, x)
            if r > 0.0:
                # Laplacian(u) - sigma*u = f with G > 0 on the ball, hence -G*f.
                acc -= weight * greens_value(kern, r) * ball_volume(dim, radius) * bvp.source.value(z)
        alpha = attenuation(kern)
        if cfg.rr_enabled:
            if alpha < 1.0 and gen.random() >= alpha:
                if stats:
                    stats.walks += 1
                    stats.steps += steps
                return acc, steps, False
        else:
            weight *= alpha
        x = sample_sphere(gen, x, radius)
        steps += 1
    if stats:
        stats.walks += 1
        stats.steps += steps
        stats.truncated += 1
    return acc, steps, True


def wos_solve(x, scene, bvp, cfg, rng, stats: WalkStats | None = None) -> float:
    """Single-walk estimate of u(x)."""
    value, _, _ = wos_walk(x, scene, bvp, cfg, rng, stats)
    return value


def wos_mean(x, scene, bvp, cfg, rng: RngStream, n_walks: int,
             stats: WalkStats | None = None) -> float:
    """Mean of n independent walks, each on its own derived stream."""
    total = 0.0
    for j in range(n_walks):
        total += wos_solve(x, scene, bvp, cfg, rng.derive(j), stats)
    return total / n_walks


def _offset_point(q, scene, cfg, eps):
    """Interior offset point x_bar - c*n, halving c on thin features."""
    c = cfg.offset_rel * scene.extent()
    boundary = scene.boundary
    for _ in range(4):
        y = tuple(xb - c * nb for xb, nb in zip(q.closest, q.normal))
        if boundary.contains(y):
            qy = boundary.closest_point(y)
            if qy.distance >= eps or qy.primitive == q.primitive:
                return y, c
        if c * 0.5 < eps:
            break
        c *= 0.5
    return None, c


def normal_derivative(q, scene, bvp, cfg, rng: RngStream, method: str | None = None,
                      stats: WalkStats | None = None) -> float:
    """Estimate du/dn at a boundary query point (n = outward normal).

    `backward` uses a backward difference between the boundary data and
    the solution at the interior offset point; `offset_ball` uses the
    mean-value gradient identity on the ball of radius c around the
    offset point (constant dim/c).
    """
    method = method or cfg.nd_method
    eps = cfg.eps * scene.extent()
    y, c = _offset_point(q, scene, cfg, eps)
    if y is None:
        if stats:
            stats.offset_failures += 1
        raise NumericalError(
            f"no valid interior offset point near {q.closest} (thin feature)"
        )
    dim = scene.boundary.dim
    n_walks = max(cfg.forward_walks, 1)
    if method == "backward":
        u_off = wos_mean(y, scene, bvp, cfg, rng, n_walks, stats)
        return (scene.dirichlet.value(q, scene) - u_off) / c
    # offset_ball: y is the ball center, radius c touches the boundary at q
    total = 0.0
    for j in range(n_walks):
        sub = rng.derive(j)
        gen = sub.generator()
        z = sample_sphere(gen, y, c)
        ny = tuple((zi - yi) / c for zi, yi in zip(z, y))
        cosa = sum(a * b for a, b in zip(ny, q.normal))
        u_z = wos_solve(z, scene, bvp, cfg, sub.derive(1), stats)
        total += (dim / c) * cosa * u_z
    return total / n_walks


@dataclass
class FieldEstimate:
    mean: np.ndarray
    variance: np.ndarray
    count: np.ndarray
    stats: WalkStats


def estimate_grid(points, scene, bvp, cfg, rng: RngStream) -> FieldEstimate:
    """Per-point sample mean/variance over cfg.walks_per_point walks.

    Points outside the domain are masked out (NaN mean, zero count).
    Deterministic given the stream: walk j at point i uses the
    (i, j)-derived substream.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    mean = np.full(n, np.nan)
    var = np.full(n, np.nan)
    count = np.zeros(n, dtype=int)
    stats = WalkStats()
    m = cfg.walks_per_point
    for i in range(n):
        x = tuple(pts[i])
        if not scene.boundary.contains(x):
            continue
        vals = np.empty(m)
        for j in range(m):
            vals[j] = wos_solve(x, scene, bvp, cfg, rng.derive(i, j), stats)
        mean[i] = vals.mean()
        var[i] = vals.var(ddof=1) if m > 1 else 0.0
        count[i] = m
    return FieldEstimate(mean, var, count, stats)
