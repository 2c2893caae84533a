"""Implicit boundaries: zero level set of an offset sum of monopoles.

    h(x) = c + sum_n a_n / |x - p_n|,   domain = {x : h(x) > 0}.

The kernel is the restriction of a function harmonic in 3D away from the
poles, so Harnack bounds for positive harmonic functions give a
conservative zero-free step radius at any interior point: the positive
and negative pole contributions are bounded separately on the largest
pole-free ball, and the step radius is the largest radius at which the
sign of h is still guaranteed.

Walks terminate when |h| < |grad h| * eps, with the closest point
estimated by gradient projection.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, SingularityError, UnsupportedBoundaryError
from .base import Boundary, BoundaryQuery

POLE_EXCLUSION_REL = 1e-9


class ImplicitMonopoles(Boundary):
    def __init__(self, offset, scales, poles, bbox=None, frozen_offset=False,
                 frozen_scales=False, frozen_poles=False):
        super().__init__()
        self.offset = float(offset)
        self.scales = np.asarray(scales, dtype=float).copy()
        self.poles = np.asarray(poles, dtype=float).copy()
        if self.poles.ndim != 2 or self.poles.shape[1] != 2:
            raise ConfigError("monopole positions must have shape (n, 2)")
        if len(self.scales) != len(self.poles):
            raise ConfigError("scales and poles must have equal length")
        self.frozen_offset = bool(frozen_offset)
        self.frozen_scales = bool(frozen_scales)
        self.frozen_poles = bool(frozen_poles)
        if self.frozen_scales and self.frozen_poles:
            raise ConfigError("cannot freeze both scales and poles")
        self._bbox = None if bbox is None else (tuple(bbox[0]), tuple(bbox[1]))

    # -- field evaluation ----------------------------------------------
    def _dists(self, x):
        d = np.hypot(self.poles[:, 0] - x[0], self.poles[:, 1] - x[1])
        excl = POLE_EXCLUSION_REL * self.extent()
        if np.any(d < excl):
            raise SingularityError(f"point {tuple(x)} within pole exclusion radius")
        return d

    def h(self, x):
        return self.offset + float(np.sum(self.scales / self._dists(x)))

    def grad_h(self, x):
        d = self._dists(x)
        w = self.scales / d**3
        gx = float(np.sum(-w * (x[0] - self.poles[:, 0])))
        gy = float(np.sum(-w * (x[1] - self.poles[:, 1])))
        return (gx, gy)

    def h_param_deriv(self, x):
        """dict {param index: dh/dparam at x}."""
        d = self._dists(x)
        out = {}
        base = 0
        if not self.frozen_offset:
            out[0] = 1.0
            base = 1
        per = self._per_pole
        w = self.scales / d**3
        for n in range(len(self.poles)):
            k = base + per * n
            if not self.frozen_scales:
                out[k] = float(1.0 / d[n])
                k += 1
            if not self.frozen_poles:
                out[k] = float(w[n] * (x[0] - self.poles[n, 0]))
                out[k + 1] = float(w[n] * (x[1] - self.poles[n, 1]))
        return out

    # -- parameters ---------------------------------------------------
    @property
    def _per_pole(self):
        return ((0 if self.frozen_scales else 1)
                + (0 if self.frozen_poles else 2))

    @property
    def n_params(self):
        return (0 if self.frozen_offset else 1) + self._per_pole * len(self.poles)

    def get_params(self):
        vals = [] if self.frozen_offset else [self.offset]
        for a, p in zip(self.scales, self.poles):
            if not self.frozen_scales:
                vals.append(a)
            if not self.frozen_poles:
                vals.extend([p[0], p[1]])
        return vals

    def set_params(self, values):
        vals = list(values)
        base = 0
        if not self.frozen_offset:
            self.offset = float(vals[0])
            base = 1
        per = self._per_pole
        for n in range(len(self.poles)):
            k = base + per * n
            if not self.frozen_scales:
                self.scales[n] = vals[k]
                k += 1
            if not self.frozen_poles:
                self.poles[n] = (vals[k], vals[k + 1])
        self._bump()

    def param_groups(self):
        groups = [] if self.frozen_offset else [[0]]
        base = 0 if self.frozen_offset else 1
        per = self._per_pole
        for n in range(len(self.poles)):
            k = base + per * n
            if not self.frozen_scales:
                groups.append([k])
                k += 1
            if not self.frozen_poles:
                groups.append([k, k + 1])
        return groups

    def param_roles(self):
        roles = [] if self.frozen_offset else ["offset"]
        for n in range(len(self.poles)):
            if not self.frozen_scales:
                roles.append(f"pole{n}.scale")
            if not self.frozen_poles:
                roles.extend([f"pole{n}.x", f"pole{n}.y"])
        return roles

    # -- walking -------------------------------------------------------
    def _term_bound_radius(self, x, hx):
        """Zero-free radius from per-pole worst-case bounds.

        Bounds each monopole term directly on the ball: a positive term
        is at least a/(d+R) everywhere, a hostile term at worst a/(d-R).
        Unlike the Harnack bound this needs no pole-free ball, so steps
        can cross a friendly pole instead of stalling against it.
        """
        d = self._dists(x)
        sign = 1.0 if hx > 0.0 else -1.0
        friendly = sign * self.scales > 0.0
        hostile = sign * self.scales < 0.0
        cap = float(d[hostile].min()) if hostile.any() else float("inf")
        cap = min(cap, 10.0 * self.extent())

        def guaranteed(r):
            total = self.offset
            total += float(np.sum(self.scales[friendly] / (d[friendly] + r)))
            if hostile.any():
                total += float(np.sum(self.scales[hostile] / (d[hostile] - r)))
            return sign * total > 0.0

        lo, hi = 0.0, 0.999 * cap
        if hi <= 0.0 or not guaranteed(1e-12 * cap):
            return 0.0
        if guaranteed(hi):
            return hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if guaranteed(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def empty_radius(self, x):
        """Conservative radius of a ball around x containing no zero of h."""
        d = self._dists(x)
        R = 0.995 * float(d.min())
        hx = self.h(x)
        if hx == 0.0:
            return 0.0
        pos = float(np.sum(self.scales[self.scales > 0.0] / d[self.scales > 0.0]))
        neg = pos + self.offset - hx  # -(sum of negative terms), >= 0
        sign = 1.0 if hx > 0.0 else -1.0

        def guaranteed(r):
            lo_fac = R * (R - r) / (R + r) ** 2
            hi_fac = R * (R + r) / (R - r) ** 2
            if sign > 0.0:
                return self.offset + pos * lo_fac - neg * hi_fac > 0.0
            return self.offset + pos * hi_fac - neg * lo_fac < 0.0

        lo, hi = 0.0, R
        if guaranteed(R * (1.0 - 1e-12)):
            lo = R
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if guaranteed(mid):
                    lo = mid
                else:
                    hi = mid
        return max(lo, self._term_bound_radius(x, hx))

    def walk_step(self, x, eps):
        hx = self.h(x)
        g = self.grad_h(x)
        gn = math.hypot(*g)
        if abs(hx) < gn * eps:
            # |h|/|grad h| is only a first-order distance: it is also
            # small near a pole, where h is steep but far from zero, so
            # confirm with the converged projection before terminating
            try:
                q = self.closest_point(x)
            except SingularityError:
                # projection failed (saddle / flat field); the first-order
                # test was a false positive, keep walking
                q = None
            if q is not None and q.distance < eps:
                return True, 0.0, q
        return False, self.empty_radius(x), None

    def _query_at(self, x, closest, dist):
        g = self.grad_h(closest)
        gn = math.hypot(*g)
        if gn < 1e-300:
            raise SingularityError("vanishing gradient on level set")
        normal = (-g[0] / gn, -g[1] / gn)  # h decreases outward of {h > 0}
        d = self._dists(closest)
        return BoundaryQuery(
            tuple(x), tuple(closest), float(dist), normal, int(np.argmin(d)), 0.0,
            self.revision,
        )

    # -- queries -------------------------------------------------------
    def contains(self, x):
        return self.h(x) > 0.0

    def closest_point(self, x):
        """Approximate closest point by iterated gradient projection.

        Steps are clamped to a fraction of the scene extent; a diverging
        iteration (flat far field, saddle of h) raises SingularityError
        rather than projecting to a bogus faraway point.
        """
        y = (float(x[0]), float(x[1]))
        cap = 0.5 * self.extent()
        for _ in range(30):
            hy = self.h(y)
            g = self.grad_h(y)
            gn2 = g[0] * g[0] + g[1] * g[1]
            if gn2 < 1e-300:
                raise SingularityError("vanishing gradient during projection")
            step_len = abs(hy) / math.sqrt(gn2)
            if step_len > cap:
                raise SingularityError("level-set projection diverged")
            step = hy / gn2
            y = (y[0] - step * g[0], y[1] - step * g[1])
            if step_len < 1e-12:
                break
        return self._query_at(x, y, math.dist(x, y))

    def level_distance(self, x):
        """First-order distance-to-level-set estimate |h| / |grad h|."""
        g = self.grad_h(x)
        gn = math.hypot(*g)
        return abs(self.h(x)) / max(gn, 1e-300)

    def normal_velocity(self, q):
        from ..errors import StaleQueryError

        if q.revision != self.revision:
            raise StaleQueryError("query from an outdated revision")
        g = self.grad_h(q.closest)
        gn = math.hypot(*g)
        return {k: v / gn for k, v in self.h_param_deriv(q.closest).items()}

    def boundary_velocity(self, q):
        n = q.normal
        return {k: (vn * n[0], vn * n[1]) for k, vn in self.normal_velocity(q).items()}

    def sample_boundary(self, gen):
        raise UnsupportedBoundaryError(
            "implicit boundaries have no direct boundary sampler; "
            "use the boundary-band volume approximation"
        )

    def curvature(self, q):
        raise UnsupportedBoundaryError("curvature queries unsupported for monopoles")

    def perimeter(self):
        raise UnsupportedBoundaryError("perimeter unsupported for monopoles")

    def bounding_box(self):
        if self._bbox is not None:
            return self._bbox
        if self.offset >= 0.0:
            raise ConfigError(
                "unbounded implicit domain (offset >= 0); supply an explicit bbox"
            )
        reach = float(np.sum(np.abs(self.scales))) / abs(self.offset)
        lo = self.poles.min(axis=0) - reach
        hi = self.poles.max(axis=0) + reach
        return tuple(lo), tuple(hi)

    def extent(self):
        lo, hi = self.bounding_box()
        return max(h - l for l, h in zip(lo, hi))


def implicit_step(x, monopoles: ImplicitMonopoles, eps: float):
    """One conservative step for an implicit walk.

    Returns (radius, terminated, closest): if terminated, `closest` is
    the gradient-projected closest-point estimate; otherwise the ball
    B(x, radius) contains no zero of h.
    """
    in_shell, radius, q = monopoles.walk_step(tuple(float(v) for v in x), eps)
    if in_shell:
        return 0.0, True, q.closest
    return radius, False, None
