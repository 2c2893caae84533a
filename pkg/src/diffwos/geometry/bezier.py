"""Closed chains of cubic Bezier segments.

Anchors and handles are stored as absolute positions; segment i runs from
anchor i to anchor i+1 with controls (A_i, Hout_i, Hin_{i+1}, A_{i+1}).
Closest-point queries go through an adaptively flattened polyline whose
flatness bound is subtracted from WoS step radii, keeping sampled spheres
conservatively boundary-free. Chains are auto-oriented so the domain lies
to the left (counterclockwise).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from .base import Boundary, BoundaryQuery

FLATNESS_DEFAULT = 1e-5


def _bernstein(t):
    s = 1.0 - t
    return (s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t)


def _eval_cubic(P, t):
    b = _bernstein(t)
    return (
        b[0] * P[0][0] + b[1] * P[1][0] + b[2] * P[2][0] + b[3] * P[3][0],
        b[0] * P[0][1] + b[1] * P[1][1] + b[2] * P[2][1] + b[3] * P[3][1],
    )


def _eval_cubic_deriv(P, t):
    s = 1.0 - t
    c0, c1, c2 = 3.0 * s * s, 6.0 * s * t, 3.0 * t * t
    dx = (
        c0 * (P[1][0] - P[0][0]) + c1 * (P[2][0] - P[1][0]) + c2 * (P[3][0] - P[2][0])
    )
    dy = (
        c0 * (P[1][1] - P[0][1]) + c1 * (P[2][1] - P[1][1]) + c2 * (P[3][1] - P[2][1])
    )
    return dx, dy


def _eval_cubic_deriv2(P, t):
    s = 1.0 - t
    dx = 6.0 * (
        s * (P[2][0] - 2.0 * P[1][0] + P[0][0]) + t * (P[3][0] - 2.0 * P[2][0] + P[1][0])
    )
    dy = 6.0 * (
        s * (P[2][1] - 2.0 * P[1][1] + P[0][1]) + t * (P[3][1] - 2.0 * P[2][1] + P[1][1])
    )
    return dx, dy


def _flatness(P):
    """Max distance of inner controls from the chord P0-P3."""
    (x0, y0), _, _, (x3, y3) = P
    ex, ey = x3 - x0, y3 - y0
    norm = math.hypot(ex, ey)
    if norm < 1e-300:
        return max(
            math.hypot(P[1][0] - x0, P[1][1] - y0),
            math.hypot(P[2][0] - x0, P[2][1] - y0),
        )
    d1 = abs((P[1][0] - x0) * ey - (P[1][1] - y0) * ex) / norm
    d2 = abs((P[2][0] - x0) * ey - (P[2][1] - y0) * ex) / norm
    return max(d1, d2)


def _split(P, t=0.5):
    """de Casteljau split at t."""
    def lerp(a, b):
        return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))

    p01, p12, p23 = lerp(P[0], P[1]), lerp(P[1], P[2]), lerp(P[2], P[3])
    p012, p123 = lerp(p01, p12), lerp(p12, p23)
    mid = lerp(p012, p123)
    return (P[0], p01, p012, mid), (mid, p123, p23, P[3])


class BezierChain(Boundary):
    def __init__(self, anchors, handles_out, handles_in, colinear=None,
                 flatness=FLATNESS_DEFAULT, auto_orient=True):
        super().__init__()
        self.anchors = np.asarray(anchors, dtype=float).copy()
        self.handles_out = np.asarray(handles_out, dtype=float).copy()
        self.handles_in = np.asarray(handles_in, dtype=float).copy()
        m = len(self.anchors)
        if m < 2 or self.handles_out.shape != (m, 2) or self.handles_in.shape != (m, 2):
            raise ConfigError("chain needs matching anchors/handles_out/handles_in")
        if colinear is None:
            colinear = np.zeros(m, dtype=bool)
        self.colinear = np.asarray(colinear, dtype=bool).copy()
        self.flatness = float(flatness)
        self.distance_slack = self.flatness
        if auto_orient and self._signed_area() < 0.0:
            self._reverse()
        self._rebuild()

    @property
    def n_segments(self):
        return len(self.anchors)

    def segment_controls(self, i):
        j = (i + 1) % self.n_segments
        return (
            tuple(self.anchors[i]),
            tuple(self.handles_out[i]),
            tuple(self.handles_in[j]),
            tuple(self.anchors[j]),
        )

    def _signed_area(self):
        pts = self._flatten(tol=1e-3)[0]
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def _reverse(self):
        self.anchors = self.anchors[::-1].copy()
        hin = self.handles_in[::-1].copy()
        hout = self.handles_out[::-1].copy()
        self.handles_in, self.handles_out = hout, hin
        self.colinear = self.colinear[::-1].copy()

    def _flatten(self, tol=None):
        tol = self.flatness if tol is None else tol
        pts, segs, ts = [], [], []
        for i in range(self.n_segments):
            stack = [(self.segment_controls(i), 0.0, 1.0)]
            while stack:
                P, t0, t1 = stack.pop()
                if _flatness(P) <= tol or (t1 - t0) < 1e-7:
                    pts.append(P[0])
                    segs.append(i)
                    ts.append(t0)
                else:
                    tm = 0.5 * (t0 + t1)
                    left, right = _split(P)
                    stack.append((right, tm, t1))
                    stack.append((left, t0, tm))
        return np.asarray(pts), np.asarray(segs), np.asarray(ts)

    def _rebuild(self):
        pts, segs, ts = self._flatten()
        n = len(pts)
        self.FA = pts
        self.FB = np.roll(pts, -1, axis=0)
        self.FE = self.FB - self.FA
        self.Flen = np.linalg.norm(self.FE, axis=1)
        self.Flen2 = np.maximum(self.Flen**2, 1e-300)
        self.Fseg = segs
        self.Ft0 = ts
        self.Ft1 = np.where(
            np.roll(segs, -1) == segs, np.roll(ts, -1), 1.0
        )
        self.cum_len = np.concatenate([[0.0], np.cumsum(self.Flen)])

    def _invalidate(self):
        self._rebuild()

    # -- parameters ---------------------------------------------------
    @property
    def n_params(self):
        return 6 * self.n_segments

    def get_params(self):
        return np.concatenate(
            [self.anchors.ravel(), self.handles_out.ravel(), self.handles_in.ravel()]
        ).tolist()

    def set_params(self, values):
        m = self.n_segments
        vals = np.asarray(values, dtype=float)
        if vals.size != 6 * m:
            raise ConfigError("parameter vector length mismatch")
        self.anchors = vals[: 2 * m].reshape(m, 2).copy()
        self.handles_out = vals[2 * m : 4 * m].reshape(m, 2).copy()
        self.handles_in = vals[4 * m :].reshape(m, 2).copy()
        # colinearity repair is a separate optimization-time projection
        # (see optimizer._maintain_geometry); applying it here would make
        # set_params disagree with the raw parameter velocities
        self._bump()

    def param_groups(self):
        return [[2 * i, 2 * i + 1] for i in range(3 * self.n_segments)]

    def param_roles(self):
        m = self.n_segments
        roles = []
        for i in range(m):
            roles.extend([f"anchor{i}.x", f"anchor{i}.y"])
        for i in range(m):
            roles.extend([f"handle_out{i}.x", f"handle_out{i}.y"])
        for i in range(m):
            roles.extend([f"handle_in{i}.x", f"handle_in{i}.y"])
        return roles

    def repair_colinearity(self):
        """Project handles so flagged anchors keep colinear handles."""
        for i in np.flatnonzero(self.colinear):
            a = self.anchors[i]
            din = a - self.handles_in[i]
            dout = self.handles_out[i] - a
            lin, lout = np.linalg.norm(din), np.linalg.norm(dout)
            d = din + dout
            nd = np.linalg.norm(d)
            if nd < 1e-12:
                continue
            d /= nd
            self.handles_in[i] = a - lin * d
            self.handles_out[i] = a + lout * d
        self._bump()

    # -- queries ------------------------------------------------------
    def _curve_t(self, j, u):
        """Curve (segment, t) for position u in [0,1] along flat segment j."""
        return int(self.Fseg[j]), float(self.Ft0[j] + u * (self.Ft1[j] - self.Ft0[j]))

    def _normal_at(self, seg, t):
        dx, dy = _eval_cubic_deriv(self.segment_controls(seg), t)
        norm = math.hypot(dx, dy)
        if norm < 1e-300:
            return (0.0, 0.0)
        return (dy / norm, -dx / norm)

    def closest_point(self, x):
        p = np.asarray(x, dtype=float)
        rel = p - self.FA
        u = np.clip((rel * self.FE).sum(axis=1) / self.Flen2, 0.0, 1.0)
        proj = self.FA + u[:, None] * self.FE
        d2 = ((p - proj) ** 2).sum(axis=1)
        j = int(np.argmin(d2))
        seg, t = self._curve_t(j, float(u[j]))
        closest = _eval_cubic(self.segment_controls(seg), t)
        return BoundaryQuery(
            tuple(p),
            closest,
            math.sqrt(float(d2[j])),
            self._normal_at(seg, t),
            seg,
            t,
            self.revision,
        )

    def contains(self, x):
        px, py = float(x[0]), float(x[1])
        ay, by = self.FA[:, 1], self.FB[:, 1]
        cond = (ay > py) != (by > py)
        if not cond.any():
            return False
        ax, bx = self.FA[cond, 0], self.FB[cond, 0]
        ayc, byc = ay[cond], by[cond]
        xi = ax + (py - ayc) * (bx - ax) / (byc - ayc)
        return bool(np.count_nonzero(xi > px) % 2)

    def boundary_velocity(self, q):
        m = self.n_segments
        i = q.primitive
        j = (i + 1) % m
        b = _bernstein(q.local)
        # parameter slots: anchors [0, 2m), handles_out [2m, 4m), handles_in [4m, 6m)
        slots = ((2 * i, b[0]), (2 * m + 2 * i, b[1]), (4 * m + 2 * j, b[2]), (2 * j, b[3]))
        weights = {}
        for s, w in slots:
            if w != 0.0:
                weights[s] = weights.get(s, 0.0) + w
        out = {}
        for s, w in weights.items():
            out[s] = (w, 0.0)
            out[s + 1] = (0.0, w)
        return out

    def sample_boundary(self, gen):
        total = self.cum_len[-1]
        u = gen.random() * total
        j = int(np.searchsorted(self.cum_len, u, side="right") - 1)
        j = min(j, len(self.Flen) - 1)
        frac = (u - self.cum_len[j]) / self.Flen[j]
        seg, t = self._curve_t(j, float(frac))
        pt = _eval_cubic(self.segment_controls(seg), t)
        return pt, self._normal_at(seg, t), 1.0 / total

    def curvature(self, q):
        P = self.segment_controls(q.primitive)
        dx, dy = _eval_cubic_deriv(P, q.local)
        ddx, ddy = _eval_cubic_deriv2(P, q.local)
        speed = math.hypot(dx, dy)
        if speed < 1e-300:
            return 0.0
        return (dx * ddy - dy * ddx) / speed**3

    def tangent_data(self, q):
        """(unit tangent, speed |x'(t)|) at a boundary query."""
        dx, dy = _eval_cubic_deriv(self.segment_controls(q.primitive), q.local)
        speed = math.hypot(dx, dy)
        if speed < 1e-300:
            return (0.0, 0.0), 0.0
        return (dx / speed, dy / speed), speed

    def perimeter(self):
        return float(self.cum_len[-1])

    def bounding_box(self):
        pts = np.vstack([self.anchors, self.handles_in, self.handles_out])
        return tuple(pts.min(axis=0)), tuple(pts.max(axis=0))

    # -- constructors ---------------------------------------------------
    @staticmethod
    def circle(center, radius, n_segments=8, flatness=FLATNESS_DEFAULT):
        """Standard cubic approximation of a circle."""
        m = n_segments
        k = 4.0 / 3.0 * math.tan(math.pi / (2 * m)) * radius
        ang = np.linspace(0.0, 2.0 * math.pi, m, endpoint=False)
        anchors = np.column_stack(
            [center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)]
        )
        tang = np.column_stack([-np.sin(ang), np.cos(ang)])
        return BezierChain(
            anchors,
            anchors + k * tang,
            anchors - k * tang,
            colinear=np.ones(m, dtype=bool),
            flatness=flatness,
        )
