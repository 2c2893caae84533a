"""Closed polyline boundaries with vectorized closest-point queries.

Loops are stored so the domain lies to the left of each directed edge
(counterclockwise outer loops, clockwise holes); the constructor
auto-orients loops under that convention. The outward normal of edge
(a, b) is then (e_y, -e_x)/|e|.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from .base import Boundary, BoundaryQuery


def _signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class PolylineBoundary(Boundary):
    def __init__(self, vertices, loops=None, frozen=None, auto_orient=True):
        super().__init__()
        self.vertices = np.asarray(vertices, dtype=float).copy()
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ConfigError("polyline vertices must have shape (n, 2)")
        n = len(self.vertices)
        if loops is None:
            loops = [list(range(n))]
        self.loops = [list(map(int, loop)) for loop in loops]
        if frozen is None:
            frozen = np.zeros(n, dtype=bool)
        self.frozen = np.asarray(frozen, dtype=bool).copy()
        if auto_orient:
            self._orient_loops()
        self._rebuild()
        self.validate()

    def _orient_loops(self):
        # largest-area loop is the outer boundary (CCW); the rest are holes (CW)
        areas = [_signed_area(self.vertices[loop]) for loop in self.loops]
        outer = int(np.argmax(np.abs(areas)))
        for i, loop in enumerate(self.loops):
            want_ccw = i == outer
            if (areas[i] > 0) != want_ccw:
                self.loops[i] = loop[::-1]

    def _rebuild(self):
        pairs = []
        for loop in self.loops:
            if len(loop) < 3:
                raise ConfigError("polyline loop needs at least 3 vertices")
            pairs.extend((loop[i], loop[(i + 1) % len(loop)]) for i in range(len(loop)))
        self.seg_idx = np.asarray(pairs, dtype=int)
        self.A = self.vertices[self.seg_idx[:, 0]]
        self.B = self.vertices[self.seg_idx[:, 1]]
        self.E = self.B - self.A
        self.seg_len = np.linalg.norm(self.E, axis=1)
        self.seg_len2 = np.maximum(self.seg_len**2, 1e-300)
        # outward normals: domain on the left of each directed edge
        self.seg_normal = np.column_stack([self.E[:, 1], -self.E[:, 0]]) / np.maximum(
            self.seg_len[:, None], 1e-300
        )
        self.cum_len = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        # vertex -> parameter slot (2 coords per unfrozen vertex)
        free = np.flatnonzero(~self.frozen)
        self._free = free
        self._vslot = {int(v): 2 * i for i, v in enumerate(free)}
        self._curv = self._vertex_curvatures()

    def _invalidate(self):
        self._rebuild()

    def _vertex_curvatures(self):
        curv = np.zeros(len(self.vertices))
        for loop in self.loops:
            m = len(loop)
            for i in range(m):
                p_prev = self.vertices[loop[i - 1]]
                p = self.vertices[loop[i]]
                p_next = self.vertices[loop[(i + 1) % m]]
                e1 = p - p_prev
                e2 = p_next - p
                l1 = np.linalg.norm(e1)
                l2 = np.linalg.norm(e2)
                if l1 == 0 or l2 == 0:
                    continue
                ang = math.atan2(e1[0] * e2[1] - e1[1] * e2[0], float(e1 @ e2))
                curv[loop[i]] = ang / (0.5 * (l1 + l2))
        return curv

    def validate(self):
        if np.any(self.seg_len < 1e-12):
            raise ConfigError("degenerate zero-length polyline segment")

    # -- parameters ---------------------------------------------------
    @property
    def n_params(self):
        return 2 * len(self._free)

    def get_params(self):
        return self.vertices[self._free].ravel().tolist()

    def set_params(self, values):
        vals = np.asarray(values, dtype=float).reshape(-1, 2)
        if len(vals) != len(self._free):
            raise ConfigError("parameter vector length mismatch")
        self.vertices[self._free] = vals
        self._bump()
        self.validate()

    def param_groups(self):
        return [[2 * i, 2 * i + 1] for i in range(len(self._free))]

    def param_roles(self):
        roles = []
        for v in self._free:
            roles.extend([f"vertex{v}.x", f"vertex{v}.y"])
        return roles

    # -- queries ------------------------------------------------------
    def closest_point(self, x):
        p = np.asarray(x, dtype=float)
        rel = p - self.A
        t = np.clip((rel * self.E).sum(axis=1) / self.seg_len2, 0.0, 1.0)
        proj = self.A + t[:, None] * self.E
        d2 = ((p - proj) ** 2).sum(axis=1)
        j = int(np.argmin(d2))  # ties -> lowest segment id
        closest = tuple(proj[j])
        return BoundaryQuery(
            tuple(p),
            closest,
            math.sqrt(float(d2[j])),
            tuple(self.seg_normal[j]),
            j,
            float(t[j]),
            self.revision,
        )

    def contains(self, x):
        px, py = float(x[0]), float(x[1])
        ay, by = self.A[:, 1], self.B[:, 1]
        cond = (ay > py) != (by > py)
        if not cond.any():
            return False
        ax, bx = self.A[cond, 0], self.B[cond, 0]
        ayc, byc = ay[cond], by[cond]
        xi = ax + (py - ayc) * (bx - ax) / (byc - ayc)
        return bool(np.count_nonzero(xi > px) % 2)

    def boundary_velocity(self, q):
        ia, ib = self.seg_idx[q.primitive]
        t = q.local
        out = {}
        for v, w in ((int(ia), 1.0 - t), (int(ib), t)):
            if w == 0.0 or v not in self._vslot:
                continue
            s = self._vslot[v]
            out[s] = (w, 0.0)
            out[s + 1] = (0.0, w)
        return out

    def sample_boundary(self, gen):
        total = self.cum_len[-1]
        u = gen.random() * total
        j = int(np.searchsorted(self.cum_len, u, side="right") - 1)
        j = min(j, len(self.seg_len) - 1)
        t = (u - self.cum_len[j]) / self.seg_len[j]
        pt = tuple(self.A[j] + t * self.E[j])
        return pt, tuple(self.seg_normal[j]), 1.0 / total

    def curvature(self, q):
        # discrete estimate: interpolate turning-angle curvature of the
        # segment's endpoint vertices
        ia, ib = self.seg_idx[q.primitive]
        return float((1.0 - q.local) * self._curv[ia] + q.local * self._curv[ib])

    def perimeter(self):
        return float(self.cum_len[-1])

    def bounding_box(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return tuple(lo), tuple(hi)

    # -- maintenance ----------------------------------------------------
    def resample_uniform(self, target_edge_length):
        """Redistribute each loop's vertices at uniform arclength spacing.

        Only supported when no vertex is frozen (resampling renumbers the
        parameter vector).
        """
        if self.frozen.any():
            raise ConfigError("cannot resample a polyline with frozen vertices")
        new_vertices = []
        new_loops = []
        for loop in self.loops:
            pts = self.vertices[loop]
            closed = np.vstack([pts, pts[:1]])
            seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            total = cum[-1]
            m = max(3, int(round(total / target_edge_length)))
            s_new = np.linspace(0.0, total, m, endpoint=False)
            xs = np.interp(s_new, cum, closed[:, 0])
            ys = np.interp(s_new, cum, closed[:, 1])
            base = len(new_vertices)
            new_vertices.extend(zip(xs, ys))
            new_loops.append(list(range(base, base + m)))
        self.vertices = np.asarray(new_vertices, dtype=float)
        self.loops = new_loops
        self.frozen = np.zeros(len(self.vertices), dtype=bool)
        self._bump()
        self.validate()

    @staticmethod
    def regular_polygon(center, radius, n, frozen=False):
        ang = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        verts = np.column_stack(
            [center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)]
        )
        fr = np.full(n, bool(frozen))
        return PolylineBoundary(verts, frozen=fr)
