"""Boundary representation interface and closest-point query records.

All representations answer the same queries: closest boundary point,
domain membership, boundary velocity under parameter perturbations,
uniform boundary sampling, and curvature. Geometry parameters live in a
flat vector shared with any data-model parameters held by the scene.

Conventions: points are tuples of floats; normals point out of the
domain; a query is valid only for the scene revision it was issued at.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError, DomainError, StaleQueryError


@dataclass
class BoundaryQuery:
    """Result of a closest-point query from an interior point."""

    point: tuple          # query location x
    closest: tuple        # closest boundary point
    distance: float       # ||point - closest||
    normal: tuple         # outward unit normal at `closest`
    primitive: int        # segment / curve / primitive id
    local: float          # local coordinate on the primitive, in [0, 1]
    revision: int = 0     # scene revision the query was issued at


class Boundary:
    """Base class for boundary representations."""

    dim = 2
    # closest-point queries may under-report distance by up to this much
    # (nonzero only for flattened parametric curves); subtracted from the
    # WoS step radius so sampled spheres stay boundary-free.
    distance_slack = 0.0

    def __init__(self):
        self.revision = 0

    # -- parameters ---------------------------------------------------
    @property
    def n_params(self) -> int:
        raise NotImplementedError

    def get_params(self):
        raise NotImplementedError

    def set_params(self, values) -> None:
        raise NotImplementedError

    def param_groups(self):
        """Indices grouped into geometric vectors (for Vector Adam).

        Returns a list of index lists; scalar parameters appear as
        singleton groups.
        """
        raise NotImplementedError

    def param_roles(self):
        """Human-readable role string per parameter index."""
        raise NotImplementedError

    def _bump(self):
        self.revision += 1
        self._invalidate()

    def _invalidate(self):
        pass

    # -- queries ------------------------------------------------------
    def closest_point(self, x) -> BoundaryQuery:
        raise NotImplementedError

    def contains(self, x) -> bool:
        raise NotImplementedError

    def boundary_velocity(self, q: BoundaryQuery):
        """Sparse map {param index: velocity vector of the boundary point}."""
        raise NotImplementedError

    def normal_velocity(self, q: BoundaryQuery):
        """Sparse map {param index: normal speed} at the query point."""
        if q.revision != self.revision:
            raise StaleQueryError(
                f"query from revision {q.revision}, boundary at {self.revision}"
            )
        n = q.normal
        out = {}
        for k, v in self.boundary_velocity(q).items():
            vn = sum(ni * vi for ni, vi in zip(n, v))
            if vn != 0.0:
                out[k] = vn
        return out

    def sample_boundary(self, gen):
        """Uniform boundary sample: (point, outward normal, pdf)."""
        raise NotImplementedError

    def curvature(self, q: BoundaryQuery) -> float:
        raise NotImplementedError

    def perimeter(self) -> float:
        raise NotImplementedError

    def bounding_box(self):
        """((xmin, ymin[, zmin]), (xmax, ymax[, zmax])) of the boundary."""
        raise NotImplementedError

    def extent(self) -> float:
        lo, hi = self.bounding_box()
        return max(h - l for l, h in zip(lo, hi))

    # -- walking ------------------------------------------------------
    def walk_step(self, x, eps: float):
        """One WoS stepping decision at x.

        Returns (in_shell, radius, query): if `in_shell`, the walk
        terminates against the Dirichlet data at query.closest;
        otherwise `radius` is a boundary-free sphere radius around x.
        """
        q = self.closest_point(x)
        if q.distance < eps:
            return True, 0.0, q
        return False, max(q.distance - self.distance_slack, eps * 0.5), q

    def validate(self) -> None:
        """Raise ConfigError on degenerate geometry (called after updates)."""


def distance_to_boundary(x, scene) -> BoundaryQuery:
    """Globally nearest boundary point for an interior point x."""
    boundary = scene.boundary if hasattr(scene, "boundary") else scene
    if boundary is None:
        raise ConfigError("scene has no boundary geometry")
    x = tuple(float(v) for v in x)
    if not boundary.contains(x):
        raise DomainError(f"point {x} is outside the domain")
    return boundary.closest_point(x)
