"""Dirichlet data models.

Three variants:

* constant data;
* the restriction of an ambient scalar field to the boundary;
* values attached to the reference boundary (per polyline vertex or per
  Bezier anchor) and pushed forward through the parameterization.

Each model reports the pieces the coupled derivative estimator needs at a
terminal boundary point: the data value, its explicit parameter
derivative, the normal derivative of the data (restricted case), and the
tangential transport term of the mapped case.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, UnsupportedBoundaryError
from .fields import ScalarField


class DirichletData:
    """Interface for boundary data g(x, pi)."""

    n_params = 0  # data-owned parameters, appended after geometry params

    def value(self, q, scene) -> float:
        raise NotImplementedError

    def param_deriv(self, q, scene) -> dict:
        """Explicit parameter dependence {param index: dg/dpi_k}."""
        return {}

    def normal_deriv(self, q, scene) -> float:
        """Normal derivative of the ambient data field (restricted case)."""
        return 0.0

    def tangential_term(self, q, scene) -> dict:
        """Mapped-data transport term {k: grad_ref(data) . d(inverse map)/dpi_k}."""
        return {}

    def get_params(self):
        return []

    def set_params(self, values):
        if len(list(values)):
            raise ConfigError("data model has no parameters")


class ConstantData(DirichletData):
    def __init__(self, value):
        self.c = float(value)

    def value(self, q, scene):
        return self.c


class RestrictedData(DirichletData):
    """Boundary data as the restriction of an ambient field beta(x)."""

    def __init__(self, field: ScalarField):
        self.field = field

    def value(self, q, scene):
        return self.field.value(q.closest)

    def normal_deriv(self, q, scene):
        g = self.field.gradient(q.closest)
        return sum(ni * gi for ni, gi in zip(q.normal, g))


class MappedData(DirichletData):
    """Per-node values on the reference boundary, linearly interpolated.

    Nodes are polyline vertices or Bezier anchors. When `optimize` is
    set, the node values become scene parameters (appended after the
    geometry parameters).
    """

    def __init__(self, values, optimize=False):
        self.values = np.asarray(values, dtype=float).copy()
        if self.values.ndim != 1:
            raise ConfigError("mapped data values must be a flat sequence")
        self.optimize = bool(optimize)

    @property
    def n_params(self):
        return len(self.values) if self.optimize else 0

    def get_params(self):
        return self.values.tolist() if self.optimize else []

    def set_params(self, values):
        if not self.optimize:
            super().set_params(values)
            return
        vals = np.asarray(list(values), dtype=float)
        if vals.shape != self.values.shape:
            raise ConfigError("data parameter length mismatch")
        self.values = vals

    def _nodes(self, q, boundary):
        """(node index a, node index b, t) bounding the query point."""
        from .geometry.polyline import PolylineBoundary
        from .geometry.bezier import BezierChain

        if isinstance(boundary, PolylineBoundary):
            ia, ib = boundary.seg_idx[q.primitive]
            return int(ia), int(ib), q.local
        if isinstance(boundary, BezierChain):
            i = q.primitive
            return i, (i + 1) % boundary.n_segments, q.local
        raise UnsupportedBoundaryError(
            "mapped data requires a polyline or Bezier boundary"
        )

    def _arc_speed(self, q, boundary):
        """|d(boundary point)/d(local coordinate)| at the query."""
        from .geometry.polyline import PolylineBoundary

        if isinstance(boundary, PolylineBoundary):
            return float(boundary.seg_len[q.primitive])
        _, speed = boundary.tangent_data(q)
        return speed

    def _tangent(self, q, boundary):
        from .geometry.polyline import PolylineBoundary

        if isinstance(boundary, PolylineBoundary):
            e = boundary.E[q.primitive]
            return tuple(e / boundary.seg_len[q.primitive])
        t, _ = boundary.tangent_data(q)
        return t

    def value(self, q, scene):
        ia, ib, t = self._nodes(q, scene.boundary)
        return float((1.0 - t) * self.values[ia] + t * self.values[ib])

    def param_deriv(self, q, scene):
        if not self.optimize:
            return {}
        ia, ib, t = self._nodes(q, scene.boundary)
        off = scene.data_offset
        out = {}
        if t < 1.0:
            out[off + ia] = 1.0 - t
        if t > 0.0:
            out[off + ib] = out.get(off + ib, 0.0) + t
        return out

    def tangential_term(self, q, scene):
        boundary = scene.boundary
        ia, ib, t = self._nodes(q, boundary)
        speed = self._arc_speed(q, boundary)
        if speed <= 0.0:
            return {}
        dval_darc = (self.values[ib] - self.values[ia]) / speed
        if dval_darc == 0.0:
            return {}
        tang = self._tangent(q, boundary)
        out = {}
        for k, v in boundary.boundary_velocity(q).items():
            tv = tang[0] * v[0] + tang[1] * v[1]
            if tv != 0.0:
                out[k] = -dval_darc * tv
        return out
