"""Lattice domains, boundary data and nodal fields.

Fields are stored as arrays of shape ``(nx, ny)`` indexed ``[i, j]`` with node
coordinates ``x = x0 + i*h`` and ``y = y0 + j*h``.  One-dimensional problems
use ``ny == 1``.  Every node owns a cell of measure ``h**dim``.

Boundary nodes are the masked-out nodes that touch an interior node in the
8-neighborhood (2-neighborhood in 1D), so every lattice cell with an interior
corner has all four corners in the closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

__all__ = [
    "GridDomain",
    "BoundaryData",
    "ScalarField",
    "LatticeOperators",
    "build_rectangle",
    "build_annulus",
    "build_halfdisk",
    "positivity_measure",
    "write_grid",
    "read_grid",
    "write_mask",
]


def _frame(interior: np.ndarray) -> np.ndarray:
    if interior.shape[1] == 1:
        structure = np.ones((3, 1), dtype=bool)
    else:
        structure = np.ones((3, 3), dtype=bool)
    return ndimage.binary_dilation(interior, structure=structure) & ~interior


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LatticeOperators:
    """Sparse difference operators over the valid cells of a domain.

    ``D`` maps nodal values to scaled edge differences ``(u_b - u_a)/h``;
    ``C`` averages squared edge differences into a per-cell squared gradient,
    so that ``C @ (D @ u)**2`` is the cell value of ``|grad u|**2``.

    The same quantity in dense form: ``cell_nodes`` lists the corners of each
    cell, ``cell_edges`` the corner pairs forming its edges, and
    ``|grad u|**2 = edge_weight * sum((u[b] - u[a])**2)`` over those pairs.
    ``node_cells`` lists the cells around each node, padded with -1.
    """

    D: sp.csr_matrix
    C: sp.csr_matrix
    node_cells: np.ndarray
    cell_nodes: np.ndarray
    cell_edges: tuple[tuple[int, int], ...]
    edge_weight: float
    cell_index: np.ndarray
    cell_volume: float
    neighbors: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class GridDomain:
    nx: int
    ny: int
    h: float
    interior_mask: np.ndarray
    boundary_tags: np.ndarray
    tag_names: tuple[str, ...]
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("lattice dimensions must be positive")
        if not self.h > 0:
            raise ValueError("grid spacing h must be positive")
        interior = np.asarray(self.interior_mask, dtype=bool)
        tags = np.asarray(self.boundary_tags, dtype=np.int64)
        if interior.shape != (self.nx, self.ny) or tags.shape != (self.nx, self.ny):
            raise ValueError("mask shapes must equal (nx, ny)")
        edge = np.zeros_like(interior)
        edge[0, :] = edge[-1, :] = True
        if self.ny > 1:
            edge[:, 0] = edge[:, -1] = True
        if np.any(interior & edge):
            raise ValueError("interior nodes may not lie on the lattice edge")
        if not np.array_equal(tags >= 0, _frame(interior)):
            raise ValueError("boundary nodes must be the masked-out neighbors of the interior")
        if tags.max(initial=-1) >= len(self.tag_names):
            raise ValueError("boundary tag index out of range")
        object.__setattr__(self, "interior_mask", _freeze(interior))
        object.__setattr__(self, "boundary_tags", _freeze(tags))
        object.__setattr__(self, "tag_names", tuple(self.tag_names))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dim(self) -> int:
        return 1 if self.ny == 1 else 2

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        return _freeze(self.boundary_tags >= 0)

    @cached_property
    def closure_mask(self) -> np.ndarray:
        return _freeze(self.interior_mask | self.boundary_mask)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.origin[0] + self.h * np.arange(self.nx)
        y = self.origin[1] + self.h * np.arange(self.ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return _freeze(X), _freeze(Y)

    @property
    def area(self) -> float:
        """Sum of the per-node cell measures over the whole lattice."""
        return self.nx * self.ny * self.cell_volume

    @property
    def interior_area(self) -> float:
        return int(self.interior_mask.sum()) * self.cell_volume

    def cell_measure(self) -> np.ndarray:
        return np.full(self.shape, self.cell_volume)

    def tag_mask(self, tag: str) -> np.ndarray:
        if tag not in self.tag_names:
            raise KeyError(f"unknown boundary tag {tag!r}; have {self.tag_names}")
        return self.boundary_tags == self.tag_names.index(tag)

    @property
    def boundary_nodes(self) -> list[tuple[tuple[int, int], str]]:
        idx = np.argwhere(self.boundary_mask)
        return [((int(i), int(j)), self.tag_names[self.boundary_tags[i, j]]) for i, j in idx]

    @cached_property
    def boundary_distance(self) -> np.ndarray:
        """Euclidean distance (in lattice units) from each node to the nearest boundary node."""
        return _freeze(ndimage.distance_transform_edt(~self.boundary_mask))

    def position(self, node) -> np.ndarray:
        i, j = node
        return np.array([self.origin[0] + i * self.h, self.origin[1] + j * self.h])

    def flat(self, node) -> int:
        i, j = node
        return int(i) * self.ny + int(j)

    def unflat(self, k: int) -> tuple[int, int]:
        return divmod(int(k), self.ny)

    @cached_property
    def operators(self) -> LatticeOperators:
        return _build_operators(self)


def _build_operators(domain: GridDomain) -> LatticeOperators:
    nx, ny, h = domain.nx, domain.ny, domain.h
    closure = domain.closure_mask
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)

    if domain.dim == 1:
        valid = closure[:-1, 0] & closure[1:, 0]
        cells = np.flatnonzero(valid)
        a = idx[cells, 0]
        b = idx[cells + 1, 0]
        m = len(cells)
        rows = np.repeat(np.arange(m), 2)
        cols = np.column_stack([a, b]).ravel()
        vals = np.tile([-1.0 / h, 1.0 / h], m)
        D = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        C = sp.identity(m, format="csr")
        cell_nodes = np.column_stack([a, b])
        cell_index = np.column_stack([cells, np.zeros_like(cells)])
    else:
        valid = closure[:-1, :-1] & closure[1:, :-1] & closure[:-1, 1:] & closure[1:, 1:]
        ci, cj = np.nonzero(valid)
        m = len(ci)
        # x-edges (i,j)-(i+1,j) and y-edges (i,j)-(i,j+1) used by valid cells
        xe = np.concatenate([idx[ci, cj], idx[ci, cj + 1]])
        ye = np.concatenate([idx[ci, cj], idx[ci + 1, cj]])
        xe_u, xe_inv = np.unique(xe, return_inverse=True)
        ye_u, ye_inv = np.unique(ye, return_inverse=True)
        nxe = len(xe_u)
        ne = nxe + len(ye_u)
        tails = np.concatenate([xe_u, ye_u])
        heads = np.concatenate([xe_u + ny, ye_u + 1])
        rows = np.repeat(np.arange(ne), 2)
        cols = np.column_stack([tails, heads]).ravel()
        vals = np.tile([-1.0 / h, 1.0 / h], ne)
        D = sp.csr_matrix((vals, (rows, cols)), shape=(ne, n))
        crow = np.tile(np.arange(m), 4)
        ccol = np.concatenate([xe_inv[:m], xe_inv[m:], nxe + ye_inv[:m], nxe + ye_inv[m:]])
        C = sp.csr_matrix((np.full(4 * m, 0.5), (crow, ccol)), shape=(m, ne))
        cell_nodes = np.column_stack(
            [idx[ci, cj], idx[ci + 1, cj], idx[ci, cj + 1], idx[ci + 1, cj + 1]]
        )
        cell_index = np.column_stack([ci, cj])

    m, k = cell_nodes.shape
    node_cells = np.full((n, k), -1, dtype=np.int64)
    fill = np.zeros(n, dtype=np.int64)
    for corner in range(k):
        nodes = cell_nodes[:, corner]
        node_cells[nodes, fill[nodes]] = np.arange(m)
        fill[nodes] += 1
    if domain.dim == 1:
        cell_edges, weight = ((0, 1),), 1.0 / h**2
    else:
        cell_edges, weight = ((0, 1), (2, 3), (0, 2), (1, 3)), 0.5 / h**2

    nbr = np.full((n, 4), -1, dtype=np.int64)
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    for s, (di, dj) in enumerate(steps):
        ii, jj = I + di, J + dj
        ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
        target = np.where(ok, np.clip(ii, 0, nx - 1) * ny + np.clip(jj, 0, ny - 1), -1)
        ok_flat = ok.ravel() & closure.ravel()
        tgt = target.ravel()
        ok_flat[ok_flat] &= closure.ravel()[tgt[ok_flat]]
        nbr[:, s] = np.where(ok_flat, tgt, -1)
    nbr.setflags(write=False)

    return LatticeOperators(
        D=D.tocsr(),
        C=C.tocsr(),
        node_cells=_freeze(node_cells),
        cell_nodes=_freeze(cell_nodes),
        cell_edges=cell_edges,
        edge_weight=weight,
        cell_index=_freeze(cell_index),
        cell_volume=domain.cell_volume,
        neighbors=nbr,
    )


def build_rectangle(nx: int, ny: int, h: float, origin=(0.0, 0.0)) -> GridDomain:
    """Full rectangle of ``nx`` by ``ny`` nodes with tags left/right/bottom/top.

    ``ny == 1`` gives an interval with tags left/right.  Corner nodes carry the
    left/right tag.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"nonpositive lattice dimensions ({nx}, {ny})")
    if not h > 0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    if nx < 3 or ny == 2:
        raise ValueError("need at least 3 nodes per non-degenerate axis")
    interior = np.zeros((nx, ny), dtype=bool)
    tags = np.full((nx, ny), -1, dtype=np.int64)
    if ny == 1:
        interior[1:-1, 0] = True
        tags[0, 0], tags[-1, 0] = 0, 1
        names = ("left", "right")
    else:
        interior[1:-1, 1:-1] = True
        tags[:, 0] = 2
        tags[:, -1] = 3
        tags[0, :] = 0
        tags[-1, :] = 1
        names = ("left", "right", "bottom", "top")
    return GridDomain(nx, ny, float(h), interior, tags, names, origin)


def _centered_axis(extent: float, h: float) -> tuple[int, float]:
    c = int(math.ceil(extent / h - 1e-12)) + 1
    return c, -c * h


def build_annulus(inner_radius: float, outer_radius: float, h: float) -> GridDomain:
    """Ring ``inner < |x| < outer`` on a lattice centered at the origin."""
    if not (0 < inner_radius < outer_radius):
        raise ValueError(f"need 0 < inner_radius < outer_radius, got {inner_radius}, {outer_radius}")
    if not h > 0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    c, x0 = _centered_axis(outer_radius, h)
    n = 2 * c + 1
    t = h * (np.arange(n) - c)
    X, Y = np.meshgrid(t, t, indexing="ij")
    R = np.hypot(X, Y)
    interior = (R > inner_radius) & (R < outer_radius)
    if not interior.any():
        raise ValueError("annulus has no interior nodes at this resolution")
    frame = _frame(interior)
    tags = np.full((n, n), -1, dtype=np.int64)
    tags[frame & (R <= inner_radius)] = 0
    tags[frame & (R >= outer_radius)] = 1
    return GridDomain(n, n, float(h), interior, tags, ("inner", "outer"), (x0, x0))


def build_halfdisk(radius: float, h: float) -> GridDomain:
    """Upper half disk ``{|x| < radius, y > 0}`` with tags flat (y = 0) and arc."""
    if not radius > 0 or not h > 0:
        raise ValueError("radius and h must be positive")
    c, x0 = _centered_axis(radius, h)
    nxn = 2 * c + 1
    nyn = c + 1
    X, Y = np.meshgrid(h * (np.arange(nxn) - c), h * np.arange(nyn), indexing="ij")
    interior = (np.hypot(X, Y) < radius) & (np.arange(nyn)[None, :] > 0)
    frame = _frame(interior)
    tags = np.full((nxn, nyn), -1, dtype=np.int64)
    tags[frame & (np.arange(nyn)[None, :] == 0)] = 0
    tags[frame & (np.arange(nyn)[None, :] > 0)] = 1
    return GridDomain(nxn, nyn, float(h), interior, tags, ("flat", "arc"), (x0, 0.0))


SegmentValue = float | Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Dirichlet data sampled on the boundary nodes.

    ``values`` is a full lattice array, zero away from boundary nodes.
    """

    domain: GridDomain
    values: np.ndarray
    contact_tag: str | None = None
    c0: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.domain.shape:
            raise ValueError("boundary values must match the lattice shape")
        vals = np.where(self.domain.boundary_mask, vals, 0.0)
        if not np.all(np.isfinite(vals)):
            raise ValueError("boundary values must be finite")
        if np.any(vals < 0):
            raise ValueError("boundary data must be nonnegative")
        if self.contact_tag is not None:
            if not self.c0 > 0:
                raise ValueError("c0 must be positive on the contact region")
            on_a = vals[self.domain.tag_mask(self.contact_tag)]
            if on_a.size == 0 or np.any(on_a < self.c0):
                raise ValueError(f"boundary data on {self.contact_tag!r} must be >= c0={self.c0}")
        object.__setattr__(self, "values", _freeze(vals))

    @classmethod
    def from_segments(
        cls,
        domain: GridDomain,
        segments: Mapping[str, SegmentValue],
        contact_tag: str | None = None,
        c0: float | None = None,
    ) -> "BoundaryData":
        missing = set(domain.tag_names) - set(segments)
        if missing:
            raise ValueError(f"no boundary data for segments {sorted(missing)}")
        X, Y = domain.coords
        vals = np.zeros(domain.shape)
        for tag, spec in segments.items():
            mask = domain.tag_mask(tag)
            if callable(spec):
                sampled = np.broadcast_to(np.asarray(spec(X, Y), dtype=float), domain.shape)
                vals[mask] = sampled[mask]
            else:
                vals[mask] = float(spec)
        if contact_tag is not None and c0 is None:
            c0 = float(vals[domain.tag_mask(contact_tag)].min())
        return cls(domain, vals, contact_tag, 0.0 if c0 is None else float(c0))

    def at(self, node) -> float:
        i, j = node
        if not self.domain.boundary_mask[i, j]:
            raise KeyError(f"{node} is not a boundary node")
        return float(self.values[i, j])

    @property
    def max_value(self) -> float:
        return float(self.values.max(initial=0.0))


@dataclass(eq=False)
class ScalarField:
    data: np.ndarray
    domain: GridDomain = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.domain.shape:
            raise ValueError(f"field shape {self.data.shape} != domain shape {self.domain.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field entries must be finite")

    @classmethod
    def zeros(cls, domain: GridDomain) -> "ScalarField":
        return cls(np.zeros(domain.shape), domain)

    @classmethod
    def from_function(cls, domain: GridDomain, f) -> "ScalarField":
        X, Y = domain.coords
        data = np.broadcast_to(np.asarray(f(X, Y), dtype=float), domain.shape)
        return cls(np.where(domain.closure_mask, data, 0.0), domain)

    def with_boundary(self, bdata: BoundaryData) -> "ScalarField":
        data = np.where(bdata.domain.boundary_mask, bdata.values, self.data)
        return ScalarField(data, self.domain)

    def copy(self) -> "ScalarField":
        return ScalarField(self.data.copy(), self.domain)

    def is_admissible(self, bdata: BoundaryData) -> bool:
        b = self.domain.boundary_mask
        return bool(np.array_equal(self.data[b], bdata.values[b]))


def positivity_measure(u: ScalarField) -> float:
    """Node-counted measure of ``{u > 0}`` over interior nodes."""
    count = int(np.count_nonzero(u.domain.interior_mask & (u.data > 0)))
    return count * u.domain.cell_volume


def _dump(path: Path, header: str, rows: np.ndarray, fmt: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(" ".join(fmt % v for v in row) + "\n")


def write_grid(path, u: ScalarField) -> None:
    """Plain-text dump: ``nx ny h`` then one line per lattice row (fixed j)."""
    d = u.domain
    _dump(path, f"{d.nx} {d.ny} {d.h!r}", u.data.T, "%.17g")


def write_mask(path, domain: GridDomain, mask: np.ndarray | None = None) -> None:
    mask = domain.interior_mask if mask is None else mask
    _dump(path, f"{domain.nx} {domain.ny} {domain.h!r}", mask.T.astype(int), "%d")


def read_grid(path) -> tuple[np.ndarray, int, int, float]:
    with Path(path).open() as fh:
        nx, ny, h = fh.readline().split()
        data = np.loadtxt(fh, ndmin=2)
    nx, ny = int(nx), int(ny)
    if data.shape != (ny, nx):
        raise ValueError(f"grid dump body has shape {data.shape}, header says {(ny, nx)}")
    return data.T.copy(), nx, ny, float(h)
