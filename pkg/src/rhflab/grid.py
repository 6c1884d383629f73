"""Periodic grids on the flat 4-torus, finite-difference jets and quadrature.

Field data keep the four grid axes first and tensor components last, e.g.
a metric field has shape (N1, N2, N3, N4, 4, 4).  An axis with N = 1 is
"reduced": the field is constant along it and every derivative along it
vanishes.
"""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import CorruptedFieldError, DegenerateMetricError

MAGIC = "RHF1"

# central first differences as weighted sums of f[+k] - f[-k], divided by h
_D1 = {
    2: ((1, 0.5),),
    4: ((1, 8 / 12), (2, -1 / 12)),
}
# second differences as weighted sums of (f[+k] - f) + (f[-k] - f), which
# vanish exactly on constant data
_D2 = {
    2: ((1, 1.0),),
    4: ((1, 16 / 12), (2, -1 / 12)),
}


@dataclass(frozen=True)
class TorusGrid:
    dims: tuple
    lengths: tuple = (2 * np.pi,) * 4
    fd_order: int = 2

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        lengths = tuple(float(x) for x in self.lengths)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "lengths", lengths)
        if len(dims) != 4 or len(lengths) != 4:
            raise ValueError("TorusGrid needs 4 dims and 4 lengths")
        if self.fd_order not in (2, 4):
            raise ValueError(f"fd_order must be 2 or 4, got {self.fd_order}")
        need = 4 if self.fd_order == 2 else 6
        for n in dims:
            if n != 1 and n < need:
                raise ValueError(f"grid dimension {n} too small for fd_order {self.fd_order} (need >= {need} or 1)")
        if any(not np.isfinite(x) or x <= 0 for x in lengths):
            raise ValueError("lengths must be positive and finite")

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.dims))

    @property
    def reduced(self):
        return tuple(n == 1 for n in self.dims)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def npoints(self):
        return int(np.prod(self.dims))

    def coords(self):
        """Coordinate arrays x^1..x^4, each of grid shape."""
        axes = [np.arange(n) * h for n, h in zip(self.dims, self.spacing)]
        return np.meshgrid(*axes, indexing="ij")

    def refined(self, factor=2, axes=None):
        """Grid with the non-reduced (or given) axes refined by `factor`."""
        axes = [i for i in range(4) if not self.reduced[i]] if axes is None else axes
        dims = tuple(n * factor if i in axes else n for i, n in enumerate(self.dims))
        return TorusGrid(dims, self.lengths, self.fd_order)

    # finite differences -------------------------------------------------

    def d1(self, data, axis):
        if self.dims[axis] == 1:
            return np.zeros_like(data)
        out = np.zeros_like(data)
        for off, w in _D1[self.fd_order]:
            out += w * (np.roll(data, -off, axis=axis) - np.roll(data, off, axis=axis))
        return out / self.spacing[axis]

    def d2(self, data, axis):
        if self.dims[axis] == 1:
            return np.zeros_like(data)
        out = np.zeros_like(data)
        for off, w in _D2[self.fd_order]:
            out += w * ((np.roll(data, -off, axis=axis) - data) + (np.roll(data, off, axis=axis) - data))
        return out / self.spacing[axis] ** 2

    def gradient(self, data):
        """Partial derivatives stacked after the grid axes: [grid, k, ...]."""
        return np.stack([self.d1(data, k) for k in range(4)], axis=4)

    def hessian(self, data):
        """Second partials [grid, l, k, ...]; mixed ones by composed stencils."""
        first = [self.d1(data, k) for k in range(4)]
        rows = []
        for l in range(4):
            row = []
            for k in range(4):
                row.append(self.d2(data, k) if l == k else self.d1(first[k], l))
            rows.append(np.stack(row, axis=4))
        return np.stack(rows, axis=4)


def _check_finite(data, what):
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise CorruptedFieldError(f"non-finite {what} data at index {tuple(int(i) for i in bad)}")


@dataclass(frozen=True)
class MetricField:
    grid: TorusGrid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != self.grid.dims + (4, 4):
            raise ValueError(f"metric data shape {data.shape} does not match grid {self.grid.dims}")
        object.__setattr__(self, "data", data)

    def validate(self):
        _check_finite(self.data, "metric")
        if not np.allclose(self.data, np.swapaxes(self.data, -1, -2), rtol=0, atol=1e-12):
            raise CorruptedFieldError("metric data not symmetric")
        T.inverse_metric(self.data)
        return self

    def sqrt_det(self):
        det = np.linalg.det(self.data)
        if np.any(det <= 0):
            raise DegenerateMetricError("non-positive metric determinant", np.argwhere(det <= 0)[0])
        return np.sqrt(det)

    @classmethod
    def flat(cls, grid):
        return cls(grid, np.broadcast_to(np.eye(4), grid.dims + (4, 4)).copy())


@dataclass(frozen=True)
class ScalarField:
    grid: TorusGrid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != self.grid.dims:
            raise ValueError(f"scalar data shape {data.shape} does not match grid {self.grid.dims}")
        object.__setattr__(self, "data", data)

    def validate(self):
        _check_finite(self.data, "scalar")
        return self

    @classmethod
    def constant(cls, grid, value=0.0):
        return cls(grid, np.full(grid.dims, float(value)))


def metric_jets(mf):
    """MetricPoint batched over the whole grid."""
    _check_finite(mf.data, "metric")
    grid = mf.grid
    return T.MetricPoint.from_jets(mf.data, grid.gradient(mf.data), grid.hessian(mf.data))


def phi_jets(sf):
    _check_finite(sf.data, "scalar")
    grid = sf.grid
    return T.PhiJet(sf.data, grid.gradient(sf.data), grid.hessian(sf.data))


def jets_at(mf, sf, point):
    """Jets of the metric and of phi at one grid index."""
    if mf.grid != sf.grid:
        raise ValueError("metric and scalar fields live on different grids")
    idx = tuple(int(i) for i in point)
    mp = metric_jets(mf)
    pj = phi_jets(sf)
    return (
        T.MetricPoint(mp.g[idx], mp.g_inv[idx], mp.dg[idx], mp.d2g[idx]),
        T.PhiJet(pj.phi[idx], pj.dphi[idx], pj.d2phi_coord[idx]),
    )


def integrate(scalar, mf):
    """Sum of value * sqrt(det g) * cell volume over the grid."""
    values = scalar.data if isinstance(scalar, ScalarField) else np.asarray(scalar, dtype=float)
    if values.shape != mf.grid.dims:
        raise ValueError("integrand and metric live on different grids")
    return float(np.sum(values * mf.sqrt_det()) * mf.grid.cell_volume)


def volume(mf):
    return float(np.sum(mf.sqrt_det()) * mf.grid.cell_volume)


def extrema(scalar):
    values = scalar.data if isinstance(scalar, ScalarField) else np.asarray(scalar, dtype=float)
    _check_finite(values, "scalar")
    return float(values.min()), float(values.max())


# snapshot files ------------------------------------------------------------


def save_field(path, field, t=0.0):
    """Write a field snapshot: one text header line, then raw <f8 data."""
    kind = "metric" if isinstance(field, MetricField) else "scalar"
    grid = field.grid
    header = " ".join(
        [
            MAGIC,
            "kind=" + kind,
            "dims=" + ",".join(str(n) for n in grid.dims),
            "lengths=" + ",".join(repr(x) for x in grid.lengths),
            f"fd_order={grid.fd_order}",
            "t=" + repr(float(t)),
        ]
    )
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii") + b"\n")
        fh.write(np.ascontiguousarray(field.data, dtype="<f8").tobytes())
    return path


def load_field(path):
    """Inverse of save_field; returns (field, t)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        payload = fh.read()
    if not header or header[0] != MAGIC:
        raise CorruptedFieldError(f"{path}: missing {MAGIC} header")
    meta = dict(item.split("=", 1) for item in header[1:])
    try:
        grid = TorusGrid(
            tuple(int(n) for n in meta["dims"].split(",")),
            tuple(float(x) for x in meta["lengths"].split(",")),
            int(meta["fd_order"]),
        )
        kind = meta["kind"]
        t = float(meta["t"])
    except (KeyError, ValueError) as exc:
        raise CorruptedFieldError(f"{path}: bad header ({exc})") from exc
    shape = grid.dims + ((4, 4) if kind == "metric" else ())
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise CorruptedFieldError(f"{path}: expected {int(np.prod(shape))} values, found {data.size}")
    data = data.reshape(shape).astype(float)
    field = MetricField(grid, data) if kind == "metric" else ScalarField(grid, data)
    return field, t
