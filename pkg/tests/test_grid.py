"""Grid construction, gradient recovery, ball queries, serialization."""

import numpy as np
import pytest

from plaplab import (
    ConfigError,
    GridFunction,
    NodeLookupError,
    OutOfDomainError,
    ResolutionError,
    build_grid,
    interpolate,
    load_binary,
    load_csv,
    recover_gradient,
    save_binary,
    save_csv,
    sup_ball,
)
from plaplab.grid import eroded_active


def test_node_and_triangle_counts():
    g = build_grid(4)
    assert g.num_nodes == 25
    assert g.triangles.shape[0] == 32
    g = build_grid(64)
    assert g.num_nodes == 4225
    assert g.triangles.shape[0] == 8192


def test_triangle_areas():
    g = build_grid(8)
    p1 = g.nodes[g.triangles[:, 0]]
    p2 = g.nodes[g.triangles[:, 1]]
    p3 = g.nodes[g.triangles[:, 2]]
    signed = 0.5 * (
        (p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1])
        - (p3[:, 0] - p1[:, 0]) * (p2[:, 1] - p1[:, 1])
    )
    assert np.allclose(signed, g.tri_area)
    assert abs(g.tri_area * g.tri_active.sum() - 4.0) < 1e-10


def test_interior_node_valence():
    g = build_grid(8)
    counts = np.zeros(g.num_nodes, dtype=int)
    np.add.at(counts, g.triangles.ravel(), 1)
    interior = ~g.boundary
    assert np.all(counts[interior] >= 3)


def test_build_grid_validation():
    with pytest.raises(ConfigError):
        build_grid(5)
    with pytest.raises(ConfigError):
        build_grid(2)


def test_disk_mask():
    g = build_grid(4, use_disk_mask=True)
    assert g.active[g.origin_index]
    corners = [0, 4, 20, 24]
    assert not g.active[corners].any()
    # boundary layer is active and every inactive-adjacent triangle is flagged
    assert np.all(g.active[g.boundary])
    mixed = ~g.tri_active & g.active[g.triangles].any(axis=1)
    for tri in g.triangles[mixed]:
        for k in tri:
            if g.active[k]:
                assert g.boundary[k]


def test_origin_is_node():
    for n in (4, 10, 32):
        g = build_grid(n)
        assert np.allclose(g.nodes[g.origin_index], [0.0, 0.0])


def test_node_lookup():
    g = build_grid(8)
    assert g.node_index((0.25, -0.5)) == g.index_of(5, 2)
    with pytest.raises(NodeLookupError):
        g.node_index((0.3, 0.0))
    gd = build_grid(8, use_disk_mask=True)
    with pytest.raises(NodeLookupError):
        gd.node_index((1.0, 1.0))


def test_recover_gradient_affine_exact():
    g = build_grid(16)
    u = GridFunction.from_callable(g, lambda x, y: x)
    assert np.abs(recover_gradient(u).values - [1.0, 0.0]).max() < 1e-12
    u = GridFunction.from_callable(g, lambda x, y: 3.0 * y - 2.0 * x)
    assert np.abs(recover_gradient(u).values - [-2.0, 3.0]).max() < 1e-12


def test_recover_gradient_x2_origin_golden():
    # symmetric 6-triangle patch: element gradients cancel exactly at the origin
    g = build_grid(16)
    u = GridFunction.from_callable(g, lambda x, y: x * x)
    grad0 = recover_gradient(u).values[g.origin_index]
    assert np.abs(grad0).max() < 1e-13


def test_recover_gradient_first_order_sup():
    # sup over all nodes is boundary-dominated: halves per refinement
    errs = {}
    for n in (32, 64, 128):
        g = build_grid(n)
        u = GridFunction.from_callable(g, lambda x, y: np.sin(x) * np.cos(y))
        rec = recover_gradient(u).values
        gx = np.cos(g.nodes[:, 0]) * np.cos(g.nodes[:, 1])
        gy = -np.sin(g.nodes[:, 0]) * np.sin(g.nodes[:, 1])
        errs[n] = np.max(np.hypot(rec[:, 0] - gx, rec[:, 1] - gy))
    assert 1.8 <= errs[32] / errs[64] <= 2.2
    assert 1.8 <= errs[64] / errs[128] <= 2.2


def test_sup_ball_modes():
    g = build_grid(32)
    const = GridFunction.constant(g, 2.5)
    assert sup_ball(const, g.origin_index, 0.25, "centered") == 0.0
    assert sup_ball(const, g.origin_index, 0.25, "raw") == 2.5
    aff = GridFunction.from_callable(g, lambda x, y: 1.0 + 2.0 * x - y)
    corrected = sup_ball(aff, g.origin_index, 0.25, "linear_corrected", g=(2.0, -1.0))
    assert corrected < 1e-12
    # axis-aligned gradient: centered oscillation is exactly |g| r at lattice radii
    ax = GridFunction.from_callable(g, lambda x, y: 3.0 * x)
    assert sup_ball(ax, g.origin_index, 0.25, "centered") == pytest.approx(0.75, abs=1e-12)


def test_sup_ball_power_field():
    g = build_grid(32)
    u = GridFunction.from_callable(g, lambda x, y: (x * x + y * y) ** 0.75)
    # 0.25 is a lattice radius, so the sup is attained exactly on the axis
    assert sup_ball(u, g.origin_index, 0.25, "centered") == pytest.approx(0.125, abs=1e-9)


def test_sup_ball_monotone_in_r():
    g = build_grid(32)
    u = GridFunction.from_callable(g, lambda x, y: np.sin(3 * x) + np.cos(2 * y))
    radii = [0.1, 0.2, 0.3, 0.5, 0.9]
    vals = [sup_ball(u, g.origin_index, r, "centered") for r in radii]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_sup_ball_errors():
    g = build_grid(16)
    u = GridFunction.constant(g, 0.0)
    with pytest.raises(ResolutionError):
        sup_ball(u, g.origin_index, 0.4 * g.h, "centered")
    # r = h is admissible: the first neighbor ring sits on the sphere
    assert sup_ball(u, g.origin_index, g.h, "centered") == 0.0
    with pytest.raises(NodeLookupError):
        sup_ball(u, (0.01, 0.01), 0.25, "centered")
    with pytest.raises(ConfigError):
        sup_ball(u, g.origin_index, 0.25, "linear_corrected")
    with pytest.raises(ConfigError):
        sup_ball(u, g.origin_index, 0.25, "bogus")


def test_interpolate_exactness():
    g = build_grid(16)
    aff = GridFunction.from_callable(g, lambda x, y: 0.5 - x + 2.0 * y)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1.0, 1.0, size=(50, 2))
    vals = interpolate(aff, pts)
    assert np.abs(vals - (0.5 - pts[:, 0] + 2.0 * pts[:, 1])).max() < 1e-12
    # nodal queries snap exactly
    vals = interpolate(aff, g.nodes)
    assert np.array_equal(vals, aff.values)


def test_interpolate_domain_errors():
    g = build_grid(16)
    u = GridFunction.constant(g, 1.0)
    with pytest.raises(OutOfDomainError):
        interpolate(u, [(1.5, 0.0)])
    gd = build_grid(16, use_disk_mask=True)
    ud = GridFunction.constant(gd, 1.0)
    with pytest.raises(OutOfDomainError):
        interpolate(ud, [(0.97, 0.97)])


def test_csv_round_trip(tmp_path):
    g = build_grid(8)
    u = GridFunction.from_callable(g, lambda x, y: np.sin(x) + y)
    path = tmp_path / "field.csv"
    save_csv(u, path, metadata={"config_hash": "deadbeef"})
    u2, meta = load_csv(path)
    assert np.array_equal(u.values, u2.values)
    assert meta["config_hash"] == "deadbeef"
    assert u2.grid.n == 8 and not u2.grid.use_disk_mask
    # header order: metadata block then x,y,value
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert "x,y,value" in lines[:4]


def test_csv_round_trip_disk(tmp_path):
    g = build_grid(8, use_disk_mask=True)
    u = GridFunction.from_callable(g, lambda x, y: x * y)
    path = tmp_path / "disk.csv"
    save_csv(u, path)
    u2, _ = load_csv(path)
    assert u2.grid.use_disk_mask
    assert np.array_equal(u.values, u2.values)


def test_binary_round_trip(tmp_path):
    g = build_grid(8, use_disk_mask=True)
    u = GridFunction.from_callable(g, lambda x, y: np.cos(x) * y)
    path = tmp_path / "field.bin"
    save_binary(u, path)
    u2 = load_binary(path)
    assert np.array_equal(u.values, u2.values)
    assert u2.grid.use_disk_mask and u2.grid.n == 8
    assert path.stat().st_size == 8 + 8 * g.num_nodes


def test_eroded_active():
    g = build_grid(8)
    inner = eroded_active(g, 1)
    side = g.n + 1
    mask = inner.reshape(side, side)
    assert not mask[0].any() and not mask[-1].any()
    assert mask[1:-1, 1:-1].all()
    deeper = eroded_active(g, 2)
    assert deeper.sum() < inner.sum()


def test_field_validation():
    g = build_grid(8)
    with pytest.raises(ConfigError):
        GridFunction(g, np.zeros(3))
    bad = np.zeros(g.num_nodes)
    bad[0] = np.nan
    with pytest.raises(ConfigError):
        GridFunction(g, bad)
