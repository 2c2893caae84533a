"""Analytic circle/sphere boundaries, including annuli via hole primitives."""

from __future__ import annotations

import math

from ..errors import ConfigError
from ..kernels import sphere_area, TWO_PI
from .base import Boundary, BoundaryQuery


class SpherePrimitive:
    """A circle (2D) or sphere (3D). `hole=True` puts the domain outside."""

    def __init__(self, center, radius, hole=False, frozen_center=False, frozen_radius=False):
        if radius <= 0.0:
            raise ConfigError(f"sphere radius must be positive, got {radius}")
        self.center = tuple(float(c) for c in center)
        self.radius = float(radius)
        self.hole = bool(hole)
        self.frozen_center = bool(frozen_center)
        self.frozen_radius = bool(frozen_radius)

    @property
    def dim(self):
        return len(self.center)


class SphereBoundary(Boundary):
    def __init__(self, primitives):
        super().__init__()
        if not primitives:
            raise ConfigError("sphere boundary needs at least one primitive")
        self.primitives = list(primitives)
        self.dim = self.primitives[0].dim
        if any(p.dim != self.dim for p in self.primitives):
            raise ConfigError("mixed-dimension sphere primitives")

    # -- parameters ---------------------------------------------------
    def _layout(self):
        """[(primitive index, 'center'|'radius', start index)] in order."""
        out, idx = [], 0
        for i, p in enumerate(self.primitives):
            if not p.frozen_center:
                out.append((i, "center", idx))
                idx += self.dim
            if not p.frozen_radius:
                out.append((i, "radius", idx))
                idx += 1
        return out

    @property
    def n_params(self):
        return sum(self.dim if role == "center" else 1 for _, role, _ in self._layout())

    def get_params(self):
        vals = []
        for i, role, _ in self._layout():
            p = self.primitives[i]
            vals.extend(p.center if role == "center" else [p.radius])
        return vals

    def set_params(self, values):
        values = list(values)
        for i, role, start in self._layout():
            p = self.primitives[i]
            if role == "center":
                p.center = tuple(values[start : start + self.dim])
            else:
                p.radius = float(values[start])
        self._bump()
        self.validate()

    def param_groups(self):
        groups = []
        for _, role, start in self._layout():
            if role == "center":
                groups.append(list(range(start, start + self.dim)))
            else:
                groups.append([start])
        return groups

    def param_roles(self):
        roles = []
        for i, role, _ in self._layout():
            if role == "center":
                roles.extend(f"sphere{i}.center[{c}]" for c in range(self.dim))
            else:
                roles.append(f"sphere{i}.radius")
        return roles

    def validate(self):
        for i, p in enumerate(self.primitives):
            if p.radius <= 0.0:
                raise ConfigError(f"sphere {i} degenerated to radius {p.radius}")

    # -- queries ------------------------------------------------------
    def contains(self, x):
        for p in self.primitives:
            d = math.dist(x, p.center)
            if p.hole:
                if d <= p.radius:
                    return False
            elif d >= p.radius:
                return False
        return True

    def closest_point(self, x):
        best = None
        for i, p in enumerate(self.primitives):
            dc = math.dist(x, p.center)
            d = abs(dc - p.radius)
            if best is None or d < best[0]:
                best = (d, i, dc, p)
        d, i, dc, p = best
        if dc > 0.0:
            w = tuple((xi - ci) / dc for xi, ci in zip(x, p.center))
        else:
            w = (1.0,) + (0.0,) * (self.dim - 1)
        closest = tuple(ci + p.radius * wi for ci, wi in zip(p.center, w))
        sign = -1.0 if p.hole else 1.0
        normal = tuple(sign * wi for wi in w)
        local = (math.atan2(w[1], w[0]) / TWO_PI) % 1.0 if self.dim == 2 else 0.0
        return BoundaryQuery(tuple(x), closest, d, normal, i, local, self.revision)

    def boundary_velocity(self, q):
        p = self.primitives[q.primitive]
        out = {}
        for i, role, start in self._layout():
            if i != q.primitive:
                continue
            if role == "center":
                for c in range(self.dim):
                    e = [0.0] * self.dim
                    e[c] = 1.0
                    out[start + c] = tuple(e)
            else:
                dc = math.dist(q.closest, p.center)
                if dc > 0.0:
                    out[start] = tuple((xi - ci) / dc for xi, ci in zip(q.closest, p.center))
        return out

    def sample_boundary(self, gen):
        areas = [sphere_area(self.dim, p.radius) for p in self.primitives]
        total = sum(areas)
        u = gen.random() * total
        acc = 0.0
        p = self.primitives[-1]
        for prim, a in zip(self.primitives, areas):
            acc += a
            if u <= acc:
                p = prim
                break
        from ..kernels import sample_sphere

        pt = sample_sphere(gen, p.center, p.radius)
        w = tuple((xi - ci) / p.radius for xi, ci in zip(pt, p.center))
        sign = -1.0 if p.hole else 1.0
        normal = tuple(sign * wi for wi in w)
        return pt, normal, 1.0 / total

    def curvature(self, q):
        p = self.primitives[q.primitive]
        return (-1.0 if p.hole else 1.0) / p.radius

    def perimeter(self):
        return sum(sphere_area(self.dim, p.radius) for p in self.primitives)

    def bounding_box(self):
        outers = [p for p in self.primitives if not p.hole] or self.primitives
        lo = tuple(
            min(p.center[c] - p.radius for p in outers) for c in range(self.dim)
        )
        hi = tuple(
            max(p.center[c] + p.radius for p in outers) for c in range(self.dim)
        )
        return lo, hi
