"""Equal-width axis-aligned partitioning of the data's bounding box.

Only occupied cells are ever stored; the full ``ell**d`` lattice is never
materialised.  Cells are addressed by a coordinate tuple or by the
row-major linear key used internally for sorting.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError, OutOfRangeError

_INT64_MAX = np.iinfo(np.int64).max


def as_dataset(data):
    """Coerce to a finite 2-D float64 array (a 1-D input becomes one column)."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidInputError(f"expected a 2-D dataset, got shape {x.shape}")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise InvalidInputError("dataset is empty")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("dataset contains non-finite values")
    return x


@dataclass(frozen=True)
class PartitionGrid:
    ell: int
    mins: np.ndarray
    maxs: np.ndarray
    widths: np.ndarray

    @property
    def dims(self):
        return self.mins.size

    @property
    def n_cells(self):
        return self.ell**self.dims

    def coords(self, points):
        """Per-axis cell coordinates for an ``(q, d)`` array of in-range points."""
        points = np.asarray(points, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.floor((points - self.mins) / self.widths)
        raw = np.where(self.widths > 0, raw, 0.0)
        return np.clip(raw, 0, self.ell - 1).astype(np.int64)

    def in_bounds(self, points):
        points = np.asarray(points, dtype=np.float64)
        return np.all((points >= self.mins) & (points <= self.maxs), axis=1)

    def keys(self, coords):
        """Row-major linear keys for integer cell coordinates."""
        coords = np.asarray(coords, dtype=np.int64)
        key = np.zeros(coords.shape[0], dtype=np.int64)
        for j in range(coords.shape[1]):
            key = key * self.ell + coords[:, j]
        return key

    def unravel(self, key):
        out = []
        for _ in range(self.dims):
            key, c = divmod(int(key), self.ell)
            out.append(c)
        return tuple(reversed(out))


def build_grid(data, ell):
    """Grid of ``ell`` equal segments per axis over the data's range."""
    x = as_dataset(data)
    ell = int(ell)
    if ell < 1:
        raise ConfigError(f"ell must be >= 1, got {ell}")
    if ell ** x.shape[1] > _INT64_MAX:
        raise ConfigError(f"ell**d = {ell}**{x.shape[1]} overflows a 64-bit cell index")
    mins = x.min(axis=0)
    maxs = x.max(axis=0)
    return PartitionGrid(ell=ell, mins=mins, maxs=maxs, widths=(maxs - mins) / ell)


def cell_of(grid, point):
    """Cell coordinates of a single point; raises if it is outside the grid box."""
    p = np.asarray(point, dtype=np.float64).reshape(1, -1)
    if p.shape[1] != grid.dims:
        raise InvalidInputError(f"point has {p.shape[1]} coordinates, grid has {grid.dims}")
    if not grid.in_bounds(p)[0]:
        raise OutOfRangeError("point lies outside the grid's bounding box")
    return tuple(int(c) for c in grid.coords(p)[0])


def partition_data(grid, data):
    """Map each occupied cell (coordinate tuple) to the sorted row indices it holds."""
    x = as_dataset(data)
    keys = grid.keys(grid.coords(x))
    order = np.argsort(keys, kind="stable")
    uniq, starts = np.unique(keys[order], return_index=True)
    bounds = np.append(starts, len(order))
    return {
        grid.unravel(k): order[bounds[b]:bounds[b + 1]]
        for b, k in enumerate(uniq)
    }
