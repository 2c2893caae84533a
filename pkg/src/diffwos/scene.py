"""Scene: boundary geometry plus Dirichlet data model and the flat
parameter vector spanning both.

Geometry parameters come first, data parameters after; `data_offset` maps
data-model indices into the scene layout. Scenes are immutable during a
solve epoch: parameter updates bump the boundary revision, invalidating
outstanding queries.
"""

from __future__ import annotations

import copy

import numpy as np

from .data import ConstantData, DirichletData
from .errors import ConfigError
from .geometry.base import Boundary


class Scene:
    def __init__(self, boundary: Boundary, dirichlet: DirichletData | None = None):
        if boundary is None:
            raise ConfigError("scene requires a boundary")
        self.boundary = boundary
        self.dirichlet = dirichlet if dirichlet is not None else ConstantData(0.0)
        self._extent_cache = None

    @property
    def dim(self):
        return self.boundary.dim

    @property
    def data_offset(self):
        return self.boundary.n_params

    @property
    def n_params(self):
        return self.boundary.n_params + self.dirichlet.n_params

    def get_params(self):
        return np.asarray(
            list(self.boundary.get_params()) + list(self.dirichlet.get_params())
        )

    def set_params(self, values):
        vals = np.asarray(values, dtype=float)
        if vals.size != self.n_params:
            raise ConfigError(
                f"expected {self.n_params} parameters, got {vals.size}"
            )
        ng = self.boundary.n_params
        self.boundary.set_params(vals[:ng])
        self.dirichlet.set_params(vals[ng:])
        self._extent_cache = None

    def with_params(self, values) -> "Scene":
        """Deep copy with a perturbed parameter vector (for FD oracles)."""
        other = copy.deepcopy(self)
        other.set_params(values)
        return other

    def param_groups(self):
        groups = list(self.boundary.param_groups())
        off = self.data_offset
        groups.extend([[off + i] for i in range(self.dirichlet.n_params)])
        return groups

    def param_roles(self):
        roles = list(self.boundary.param_roles())
        roles.extend(f"data[{i}]" for i in range(self.dirichlet.n_params))
        return roles

    def extent(self) -> float:
        key = self.boundary.revision
        if self._extent_cache is None or self._extent_cache[0] != key:
            self._extent_cache = (key, self.boundary.extent())
        return self._extent_cache[1]

    def normal_velocity(self, q):
        """Sparse normal velocity over the full scene layout (geometry only;
        data parameters never move the boundary)."""
        return self.boundary.normal_velocity(q)

    def contains(self, x):
        return self.boundary.contains(tuple(float(v) for v in x))
