"""Structured triangulation of [-1,1]^2 with an optional unit-disk mask.

The square is cut into n x n cells of spacing h = 2/n, each cell split into
two triangles along the fixed (+1,+1) diagonal.  Nodes are stored row-major
(y-row index j, x-column index i, node index j*(n+1)+i), so node placement
is deterministic and the origin is a node whenever n is even.

The unit disk is handled by masking: nodes with |x| <= 1 are active, only
triangles whose three nodes are active take part in assembly and quadrature,
and the outermost active layer is flagged as boundary.  The curved boundary
is therefore resolved to O(h); solver-side boundary treatment compensates
(see solver module).
"""

from dataclasses import dataclass
import io
import struct

import numpy as np

from .errors import ConfigError, NodeLookupError, OutOfDomainError, ResolutionError

__all__ = [
    "Grid",
    "GridFunction",
    "VectorField",
    "build_grid",
    "recover_gradient",
    "sup_ball",
    "interpolate",
    "save_csv",
    "load_csv",
    "save_binary",
    "load_binary",
]

_COORD_SNAP = 1e-9


@dataclass(frozen=True)
class Grid:
    """Immutable triangulated square (optionally disk-masked)."""

    n: int
    h: float
    nodes: np.ndarray        # (N, 2) float64
    triangles: np.ndarray    # (2*n*n, 3) int64, positive orientation
    tri_active: np.ndarray   # (2*n*n,) bool: all three nodes active
    active: np.ndarray       # (N,) bool
    boundary: np.ndarray     # (N,) bool: Dirichlet layer (subset of active)
    use_disk_mask: bool

    @property
    def num_nodes(self):
        return self.nodes.shape[0]

    @property
    def tri_area(self):
        """Common triangle area h^2/2 (uniform mesh)."""
        return 0.5 * self.h * self.h

    @property
    def origin_index(self):
        m = self.n // 2
        return m * (self.n + 1) + m

    def index_of(self, ix, iy):
        """Node index of lattice coordinates (ix, iy), each in 0..n."""
        if not (0 <= ix <= self.n and 0 <= iy <= self.n):
            raise NodeLookupError(f"lattice index ({ix},{iy}) outside 0..{self.n}")
        return iy * (self.n + 1) + ix

    def node_index(self, point):
        """Index of the active node at ``point``; NodeLookupError otherwise."""
        x, y = float(point[0]), float(point[1])
        fx = (x + 1.0) / self.h
        fy = (y + 1.0) / self.h
        ix, iy = int(round(fx)), int(round(fy))
        if not (0 <= ix <= self.n and 0 <= iy <= self.n):
            raise NodeLookupError(f"point ({x},{y}) outside the grid")
        if abs(fx - ix) > _COORD_SNAP or abs(fy - iy) > _COORD_SNAP:
            raise NodeLookupError(f"point ({x},{y}) is not a grid node")
        k = iy * (self.n + 1) + ix
        if not self.active[k]:
            raise NodeLookupError(f"node at ({x},{y}) is outside the active domain")
        return k


def build_grid(n, use_disk_mask=False):
    """Build the n x n fixed-diagonal triangulation of [-1,1]^2.

    n must be even and >= 4 so the origin is a node and every ball query has
    room to breathe.  With ``use_disk_mask`` nodes outside the closed unit
    disk are deactivated and the outermost active layer becomes the boundary.
    """
    if not isinstance(n, (int, np.integer)) or n < 4 or n % 2 != 0:
        raise ConfigError(f"grid subdivisions must be an even integer >= 4, got n={n}")
    n = int(n)
    h = 2.0 / n
    side = n + 1
    coords_1d = -1.0 + h * np.arange(side)
    xs, ys = np.meshgrid(coords_1d, coords_1d)   # row-major: y varies slowest
    nodes = np.column_stack([xs.ravel(), ys.ravel()])

    # two triangles per cell, split along the (+1,+1) diagonal
    ix, iy = np.meshgrid(np.arange(n), np.arange(n))
    a = (iy * side + ix).ravel()
    b = a + 1
    c = a + side + 1
    d = a + side
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([a, b, c])
    tris[1::2] = np.column_stack([a, c, d])

    if use_disk_mask:
        r2 = nodes[:, 0] ** 2 + nodes[:, 1] ** 2
        active = r2 <= 1.0 + 1e-12
    else:
        active = np.ones(len(nodes), dtype=bool)

    tri_active = active[tris].all(axis=1)
    # drop active nodes that ended up in no active triangle (mask slivers)
    in_active_tri = np.zeros(len(nodes), dtype=bool)
    in_active_tri[tris[tri_active].ravel()] = True
    active = active & in_active_tri
    tri_active = active[tris].all(axis=1)

    edge = np.zeros((side, side), dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    on_square_edge = edge.ravel()

    if use_disk_mask:
        boundary = np.zeros(len(nodes), dtype=bool)
        mixed = ~tri_active & active[tris].any(axis=1)
        for col in range(3):
            idx = tris[mixed, col]
            boundary[idx[active[idx]]] = True
        boundary |= active & on_square_edge
    else:
        boundary = on_square_edge.copy()

    nodes.setflags(write=False)
    tris.setflags(write=False)
    tri_active.setflags(write=False)
    active.setflags(write=False)
    boundary.setflags(write=False)
    return Grid(
        n=n,
        h=h,
        nodes=nodes,
        triangles=tris,
        tri_active=tri_active,
        active=active,
        boundary=boundary,
        use_disk_mask=use_disk_mask,
    )


def _check_values(grid, values, ncomp=None):
    values = np.asarray(values, dtype=float)
    expected = (grid.num_nodes,) if ncomp is None else (grid.num_nodes, ncomp)
    if values.shape != expected:
        raise ConfigError(f"field shape {values.shape} does not match grid shape {expected}")
    if not np.all(np.isfinite(values)):
        raise ConfigError("field contains non-finite values")
    return values


@dataclass
class GridFunction:
    """Nodal scalar field on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values)

    @classmethod
    def from_callable(cls, grid, fn):
        vals = np.asarray([fn(x, y) for x, y in grid.nodes], dtype=float)
        vals[~grid.active] = 0.0
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid, c):
        vals = np.full(grid.num_nodes, float(c))
        vals[~grid.active] = 0.0
        return cls(grid, vals)

    def sup_norm(self):
        return float(np.max(np.abs(self.values[self.grid.active])))

    def copy(self):
        return GridFunction(self.grid, self.values.copy())


@dataclass
class VectorField:
    """Nodal 2-vector field on a Grid (recovered gradients)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, ncomp=2)

    def sup_norm(self):
        mags = np.hypot(self.values[:, 0], self.values[:, 1])
        return float(np.max(mags[self.grid.active]))


def triangle_gradients(grid, values):
    """Per-triangle constant P1 gradients of a nodal field, shape (T, 2).

    Only entries at active triangles are meaningful; inactive rows are zero.
    """
    tris = grid.triangles
    p1 = grid.nodes[tris[:, 0]]
    p2 = grid.nodes[tris[:, 1]]
    p3 = grid.nodes[tris[:, 2]]
    v = np.asarray(values, dtype=float)
    u1, u2, u3 = v[tris[:, 0]], v[tris[:, 1]], v[tris[:, 2]]
    two_a = (p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1]) - (p3[:, 0] - p1[:, 0]) * (
        p2[:, 1] - p1[:, 1]
    )
    gx = (u1 * (p2[:, 1] - p3[:, 1]) + u2 * (p3[:, 1] - p1[:, 1]) + u3 * (p1[:, 1] - p2[:, 1]))
    gy = (u1 * (p3[:, 0] - p2[:, 0]) + u2 * (p1[:, 0] - p3[:, 0]) + u3 * (p2[:, 0] - p1[:, 0]))
    out = np.column_stack([gx, gy]) / two_a[:, None]
    out[~grid.tri_active] = 0.0
    return out


def recover_gradient(u):
    """Area-weighted average of element P1 gradients at each node.

    Exact on affine fields everywhere; on smooth fields the one-sided patches
    along the boundary limit the sup-norm accuracy to first order in h.
    """
    grid = u.grid
    grads = triangle_gradients(grid, u.values)
    acc = np.zeros((grid.num_nodes, 2))
    wsum = np.zeros(grid.num_nodes)
    area = grid.tri_area
    act = grid.tri_active
    for col in range(3):
        idx = grid.triangles[act, col]
        np.add.at(acc, idx, area * grads[act])
        np.add.at(wsum, idx, area)
    nz = wsum > 0
    acc[nz] /= wsum[nz, None]
    acc[~nz] = 0.0
    return VectorField(grid, acc)


def _resolve_center(grid, x0):
    if isinstance(x0, (int, np.integer)):
        k = int(x0)
        if not (0 <= k < grid.num_nodes) or not grid.active[k]:
            raise NodeLookupError(f"node index {k} is not an active node")
        return k
    return grid.node_index(x0)


def sup_ball(u, x0, r, mode="centered", g=None):
    """Sup over active nodes of the closed ball B_r(x0) in one of three modes.

    raw:              max |u(x)|
    centered:         max |u(x) - u(x0)|
    linear_corrected: max |u(x) - u(x0) - g.(x - x0)|

    x0 must be an (active) grid node, given as node index or coordinates.
    Requires r >= h so the ball contains the first ring of neighbors.
    """
    grid = u.grid
    k0 = _resolve_center(grid, x0)
    if r < grid.h * (1.0 - 1e-12):
        raise ResolutionError(
            f"ball radius {r} below the resolution floor h={grid.h}; "
            "the ball would contain no neighbor ring"
        )
    center = grid.nodes[k0]
    dx = grid.nodes - center
    dist2 = dx[:, 0] ** 2 + dx[:, 1] ** 2
    inside = grid.active & (dist2 <= (r * (1.0 + 1e-12)) ** 2)
    vals = u.values[inside]
    if mode == "raw":
        return float(np.max(np.abs(vals)))
    if mode == "centered":
        return float(np.max(np.abs(vals - u.values[k0])))
    if mode == "linear_corrected":
        if g is None:
            raise ConfigError("linear_corrected mode requires the gradient g")
        g = np.asarray(g, dtype=float)
        lin = u.values[k0] + dx[inside] @ g
        return float(np.max(np.abs(vals - lin)))
    raise ConfigError(f"unknown sup_ball mode '{mode}'")


def interpolate(u, points):
    """P1 interpolation of a nodal field at arbitrary points, shape (M,).

    Points must lie in the square; on masked grids every vertex of the
    containing triangle must be active, otherwise OutOfDomainError is raised
    (no extrapolation across the mask).  Points within 1e-9 h of a node snap
    to it, so nodal queries are exact.
    """
    grid = u.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if np.any(np.abs(pts) > 1.0 + 1e-12):
        bad = pts[np.abs(pts).max(axis=1) > 1.0 + 1e-12][0]
        raise OutOfDomainError(f"point ({bad[0]},{bad[1]}) outside the square domain")
    h, n = grid.h, grid.n
    fx = (pts[:, 0] + 1.0) / h
    fy = (pts[:, 1] + 1.0) / h
    cx = np.floor(fx).astype(np.int64)
    cy = np.floor(fy).astype(np.int64)
    lx = fx - cx
    ly = fy - cy
    # snap to lattice lines, then clamp the cell into range
    for lam, cc in ((lx, cx), (ly, cy)):
        hi = lam > 1.0 - _COORD_SNAP
        cc[hi] += 1
        lam[hi] = 0.0
        lam[lam < _COORD_SNAP] = 0.0
    over = cx >= n
    cx[over] -= 1
    lx[over] = 1.0
    over = cy >= n
    cy[over] -= 1
    ly[over] = 1.0

    side = n + 1
    a = cy * side + cx
    b = a + 1
    c = a + side + 1
    d = a + side
    lower = lx >= ly          # triangle (a,b,c), else (a,c,d)
    vals = np.empty(len(pts))
    v = u.values
    vals[lower] = (
        v[a[lower]]
        + (v[b[lower]] - v[a[lower]]) * lx[lower]
        + (v[c[lower]] - v[b[lower]]) * ly[lower]
    )
    up = ~lower
    vals[up] = (
        v[a[up]]
        + (v[c[up]] - v[d[up]]) * lx[up]
        + (v[d[up]] - v[a[up]]) * ly[up]
    )
    if grid.use_disk_mask:
        act = grid.active
        used_ok = np.where(
            lower,
            act[a] & act[b] & act[c],
            act[a] & act[c] & act[d],
        )
        # vertices with zero barycentric weight do not matter
        exact_node = (lx == 0.0) & (ly == 0.0)
        used_ok |= exact_node & act[a]
        if not np.all(used_ok):
            bad = pts[~used_ok][0]
            raise OutOfDomainError(
                f"point ({bad[0]},{bad[1]}) falls in a cell outside the active mask"
            )
    return vals


# ---------------------------------------------------------------------------
# serialization: CSV (x,y,value in fixed row-major node order) and flat binary
# ---------------------------------------------------------------------------

def save_csv(u, path, metadata=None):
    """Write a nodal field as CSV with a '#' metadata block.

    The block always carries the grid shape (n, disk flag); extra metadata
    key/value pairs are appended in the order given.
    """
    grid = u.grid
    lines = [f"# n={grid.n} disk={int(grid.use_disk_mask)}"]
    for key, val in (metadata or {}).items():
        lines.append(f"# {key}={val}")
    lines.append("x,y,value")
    for (x, y), v in zip(grid.nodes, u.values):
        lines.append(f"{x:.17g},{y:.17g},{v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path):
    """Read a field written by save_csv; returns (GridFunction, metadata dict)."""
    meta = {}
    data_lines = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                for tok in body.split():
                    if "=" in tok:
                        key, _, val = tok.partition("=")
                        meta[key] = val
                continue
            if line.lower().startswith("x,"):
                continue
            data_lines.append(line)
    arr = np.loadtxt(io.StringIO("\n".join(data_lines)), delimiter=",")
    arr = np.atleast_2d(arr)
    count = arr.shape[0]
    if "n" in meta:
        n = int(meta["n"])
    else:
        n = int(round(np.sqrt(count))) - 1
    disk = bool(int(meta.get("disk", "0")))
    grid = build_grid(n, use_disk_mask=disk)
    if grid.num_nodes != count:
        raise ConfigError(f"CSV row count {count} does not match grid n={n}")
    return GridFunction(grid, arr[:, 2]), meta


_BIN_MAGIC = struct.Struct("<II")   # 8-byte header: n, mask flag


def save_binary(u, path):
    """Flat binary dump: 8-byte header (n, mask flag), then float64 node values."""
    grid = u.grid
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC.pack(grid.n, int(grid.use_disk_mask)))
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def load_binary(path):
    with open(path, "rb") as fh:
        n, flag = _BIN_MAGIC.unpack(fh.read(_BIN_MAGIC.size))
        vals = np.frombuffer(fh.read(), dtype="<f8")
    grid = build_grid(int(n), use_disk_mask=bool(flag))
    if vals.size != grid.num_nodes:
        raise ConfigError("binary payload size does not match header grid shape")
    return GridFunction(grid, vals.copy())


def eroded_active(grid, rings):
    """Active nodes whose full (2*rings+1)^2 lattice neighborhood is active.

    Used to restrict derivative stencils to interior-quality data.
    """
    side = grid.n + 1
    mask = grid.active.reshape(side, side).copy()
    for _ in range(rings):
        padded = np.zeros((side + 2, side + 2), dtype=bool)
        padded[1:-1, 1:-1] = mask
        eroded = padded[1:-1, 1:-1].copy()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                eroded &= padded[1 + dy : 1 + dy + side, 1 + dx : 1 + dx + side]
        mask = eroded
    return mask.ravel()
