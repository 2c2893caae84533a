"""Green's functions, Poisson-kernel attenuation, and ball/sphere sampling.

Closed forms for the zero-Dirichlet screened Poisson equation on balls in
2D and 3D. The attenuation factor is the ratio of the Poisson kernel to
the uniform sphere pdf; it equals 1 for the unscreened (harmonic) case and
drives Russian roulette termination when the screening coefficient is
positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import i0, k0

from .errors import ConfigError, DomainError

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class BallKernel:
    """Kernel parameters for a ball of radius R in `dim` dimensions."""

    dim: int
    R: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigError(f"unsupported dimension {self.dim}")
        if self.R <= 0.0:
            raise ConfigError(f"ball radius must be positive, got {self.R}")
        if self.sigma < 0.0:
            raise ConfigError(f"screening coefficient must be >= 0, got {self.sigma}")


def attenuation(k: BallKernel) -> float:
    """Recursive contribution scale alpha = P(R) / pdf on the sphere.

    Equals 1 when sigma = 0 (mean-value property); otherwise strictly
    less than 1, so it can serve as a Russian roulette survival
    probability.
    """
    if k.sigma == 0.0:
        return 1.0
    m = math.sqrt(k.sigma) * k.R
    if k.dim == 3:
        return m / math.sinh(m)
    return 1.0 / float(i0(m))


def greens_value(k: BallKernel, r: float) -> float:
    """Green's function G(r) for the ball, zero on the sphere r = R."""
    if r <= 0.0 or r >= k.R:
        if r == k.R:
            return 0.0
        raise DomainError(f"greens_value requires 0 < r <= R, got r={r}, R={k.R}")
    if k.dim == 3:
        if k.sigma == 0.0:
            return (1.0 / r - 1.0 / k.R) / FOUR_PI
        s = math.sqrt(k.sigma)
        return math.sinh(s * (k.R - r)) / (FOUR_PI * r * math.sinh(s * k.R))
    if k.sigma == 0.0:
        return math.log(k.R / r) / TWO_PI
    s = math.sqrt(k.sigma)
    return (float(k0(s * r)) - float(k0(s * k.R)) * float(i0(s * r)) / float(i0(s * k.R))) / TWO_PI


def ball_volume(dim: int, R: float) -> float:
    return math.pi * R * R if dim == 2 else FOUR_PI / 3.0 * R**3


def sphere_area(dim: int, R: float) -> float:
    return TWO_PI * R if dim == 2 else FOUR_PI * R * R


def sample_sphere(gen: np.random.Generator, center, R: float):
    """Uniform point on the sphere of radius R around `center` (tuple)."""
    if len(center) == 2:
        theta = TWO_PI * gen.random()
        return (center[0] + R * math.cos(theta), center[1] + R * math.sin(theta))
    z = 1.0 - 2.0 * gen.random()
    phi = TWO_PI * gen.random()
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return (
        center[0] + R * s * math.cos(phi),
        center[1] + R * s * math.sin(phi),
        center[2] + R * z,
    )


def sample_ball(gen: np.random.Generator, center, R: float):
    """Uniform point inside the ball of radius R around `center` (tuple)."""
    dim = len(center)
    r = R * gen.random() ** (1.0 / dim)
    return sample_sphere(gen, center, r) if r > 0.0 else tuple(center)
