"""Named ambient scalar fields: source terms, restricted boundary data,
and reference solutions.

A field exposes a value and, where needed, a spatial gradient. Fields are
independent of the scene parameters; parameter-dependent boundary data is
handled by the data models in `data.py`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .gridfield import GridField


class ScalarField:
    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> tuple:
        raise NotImplementedError

    def is_zero(self) -> bool:
        return False


@dataclass
class ZeroField(ScalarField):
    def value(self, x):
        return 0.0

    def gradient(self, x):
        return (0.0,) * len(x)

    def is_zero(self):
        return True


@dataclass
class ConstantField(ScalarField):
    c: float

    def value(self, x):
        return self.c

    def gradient(self, x):
        return (0.0,) * len(x)

    def is_zero(self):
        return self.c == 0.0


@dataclass
class LinearField(ScalarField):
    """a . x + b"""

    a: tuple
    b: float = 0.0

    def value(self, x):
        return sum(ai * xi for ai, xi in zip(self.a, x)) + self.b

    def gradient(self, x):
        return tuple(self.a)


@dataclass
class GridLookupField(ScalarField):
    """Bilinear lookup into a 2D grid field (single channel)."""

    grid: GridField
    channel: int = 0

    def value(self, x):
        return self.grid.sample(x[0], x[1], self.channel)

    def gradient(self, x):
        # central differences at the grid spacing scale
        xmin, ymin, xmax, ymax = self.grid.bbox
        hx = (xmax - xmin) / max(self.grid.nx - 1, 1)
        hy = (ymax - ymin) / max(self.grid.ny - 1, 1)
        gx = (self.grid.sample(x[0] + hx, x[1], self.channel)
              - self.grid.sample(x[0] - hx, x[1], self.channel)) / (2 * hx)
        gy = (self.grid.sample(x[0], x[1] + hy, self.channel)
              - self.grid.sample(x[0], x[1] - hy, self.channel)) / (2 * hy)
        return (gx, gy)


def make_field(spec, base_dir=None) -> ScalarField:
    """Build a field from a config fragment.

    Accepts a number (constant), or a dict with a `kind` key among
    zero | constant | linear | grid.
    """
    from .gridfield import read_gridfield
    import os

    if spec is None:
        return ZeroField()
    if isinstance(spec, (int, float)):
        return ConstantField(float(spec)) if spec != 0 else ZeroField()
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"bad field spec: {spec!r}")
    kind = spec["kind"]
    extra = set(spec) - {"kind", "value", "a", "b", "path", "channel"}
    if extra:
        raise ConfigError(f"unknown field keys: {sorted(extra)}")
    if kind == "zero":
        return ZeroField()
    if kind == "constant":
        return ConstantField(float(spec["value"]))
    if kind == "linear":
        return LinearField(tuple(float(v) for v in spec["a"]), float(spec.get("b", 0.0)))
    if kind == "grid":
        path = spec["path"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return GridLookupField(read_gridfield(path), int(spec.get("channel", 0)))
    raise ConfigError(f"unknown field kind {kind!r}")
