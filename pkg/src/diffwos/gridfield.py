"""Row-major grid fields with text and binary float32 serialization.

File format: a single ASCII header line

    nx ny channels xmin ymin xmax ymax

followed either by whitespace-separated values in row-major order
(y-rows, then x, then channel), or by a raw little-endian float32 payload
of exactly nx*ny*channels values. Readers auto-detect the variant from
the payload length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class GridField:
    nx: int
    ny: int
    bbox: tuple  # (xmin, ymin, xmax, ymax)
    values: np.ndarray = field(default=None)  # shape (ny, nx, channels)

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros((self.ny, self.nx, 1))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 2:
            self.values = self.values[:, :, None]
        if self.values.shape[:2] != (self.ny, self.nx):
            raise ConfigError(
                f"value block {self.values.shape} does not match grid {self.ny}x{self.nx}"
            )

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def points(self) -> np.ndarray:
        """Node positions, shape (ny*nx, 2), row-major."""
        xmin, ymin, xmax, ymax = self.bbox
        xs = np.linspace(xmin, xmax, self.nx) if self.nx > 1 else np.array([(xmin + xmax) / 2])
        ys = np.linspace(ymin, ymax, self.ny) if self.ny > 1 else np.array([(ymin + ymax) / 2])
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def sample(self, x: float, y: float, channel: int = 0) -> float:
        """Bilinear interpolation at (x, y), clamped to the bounding box."""
        xmin, ymin, xmax, ymax = self.bbox
        fx = 0.0 if self.nx == 1 else (x - xmin) / (xmax - xmin) * (self.nx - 1)
        fy = 0.0 if self.ny == 1 else (y - ymin) / (ymax - ymin) * (self.ny - 1)
        fx = min(max(fx, 0.0), self.nx - 1.0)
        fy = min(max(fy, 0.0), self.ny - 1.0)
        i0 = min(int(fx), self.nx - 2) if self.nx > 1 else 0
        j0 = min(int(fy), self.ny - 2) if self.ny > 1 else 0
        tx = fx - i0
        ty = fy - j0
        v = self.values[..., channel]
        if self.nx == 1 and self.ny == 1:
            return float(v[0, 0])
        if self.nx == 1:
            return float((1 - ty) * v[j0, 0] + ty * v[j0 + 1, 0])
        if self.ny == 1:
            return float((1 - tx) * v[0, i0] + tx * v[0, i0 + 1])
        return float(
            (1 - ty) * ((1 - tx) * v[j0, i0] + tx * v[j0, i0 + 1])
            + ty * ((1 - tx) * v[j0 + 1, i0] + tx * v[j0 + 1, i0 + 1])
        )


def write_gridfield(path, grid: GridField, binary: bool = False) -> None:
    xmin, ymin, xmax, ymax = grid.bbox
    header = f"{grid.nx} {grid.ny} {grid.channels} {xmin!r} {ymin!r} {xmax!r} {ymax!r}\n"
    flat = grid.values.ravel()
    if binary:
        with open(path, "wb") as f:
            f.write(header.encode("ascii"))
            f.write(flat.astype("<f4").tobytes())
    else:
        with open(path, "w") as f:
            f.write(header)
            for j in range(grid.ny):
                row = grid.values[j].ravel()
                f.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_gridfield(path) -> GridField:
    with open(path, "rb") as f:
        raw = f.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ConfigError(f"{path}: line 1: missing header line")
    try:
        parts = raw[:nl].decode("ascii").split()
        if len(parts) != 7:
            raise ValueError
        nx, ny, channels = int(parts[0]), int(parts[1]), int(parts[2])
        bbox = tuple(float(p) for p in parts[3:])
    except (ValueError, UnicodeDecodeError):
        raise ConfigError(f"{path}: line 1: malformed header (want 'nx ny channels "
                          "xmin ymin xmax ymax')") from None
    count = nx * ny * channels
    payload = raw[nl + 1 :]
    # prefer the text variant: a float32 block of the right length can
    # accidentally decode as ASCII, but valid text with the right token
    # count is unambiguous
    flat = None
    try:
        flat = np.array(payload.decode("ascii").split(), dtype=float)
    except (UnicodeDecodeError, ValueError):
        pass
    if flat is None or flat.size != count:
        if len(payload) == 4 * count:
            flat = np.frombuffer(payload, dtype="<f4").astype(float)
        elif flat is None:
            raise ConfigError(f"{path}: line 2: payload is neither text nor a "
                              f"float32 block of {count} values")
        else:
            raise ConfigError(
                f"{path}: line 2: expected {count} values, found {flat.size}"
            )
    return GridField(nx, ny, bbox, flat.reshape(ny, nx, channels))
