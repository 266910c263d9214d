"""Complex-gradient structure: Wirtinger stencils, K-qr, Jacobian, Morrey growth."""

import numpy as np
import pytest

from plaplab import (
    ComplexField,
    GridFunction,
    ProblemSpec,
    ResolutionError,
    build_grid,
    complex_gradient,
    gradient_mapping_defect,
    jacobian_check,
    kqr_defect,
    morrey_growth,
    nondegenerate_mask,
    solve,
    wirtinger,
)
from plaplab.quasiregular import _forward_diffs


def _field_from(fn, n=32):
    g = build_grid(n)
    z = g.nodes[:, 0] + 1j * g.nodes[:, 1]
    return g, ComplexField(grid=g, phi=fn(z), valid_mask=g.active.copy())


def test_complex_gradient_coordinates():
    g = build_grid(16)
    ux = GridFunction.from_callable(g, lambda x, y: x)
    assert np.abs(complex_gradient(ux).phi - 0.5).max() < 1e-12
    uy = GridFunction.from_callable(g, lambda x, y: y)
    assert np.abs(complex_gradient(uy).phi + 0.5j).max() < 1e-12


def test_complex_gradient_harmonic_quadratic():
    # u = x^2 - y^2 has complex gradient z; interior recovery is exact on quadratics
    g = build_grid(16)
    u = GridFunction.from_callable(g, lambda x, y: x * x - y * y)
    phi = complex_gradient(u).phi
    z = g.nodes[:, 0] + 1j * g.nodes[:, 1]
    for pt in [(0.0, 0.0), (0.25, 0.25), (-0.5, 0.25), (0.5, -0.75), (0.125, 0.5)]:
        k = g.node_index(pt)
        assert abs(phi[k] - z[k]) < 1e-12


def test_wirtinger_holomorphic_antiholomorphic():
    g, fz = _field_from(lambda z: z)
    out = wirtinger(fz)
    m = out.valid_mask
    assert np.abs(out.phi_z[m] - 1.0).max() < 1e-13
    assert np.abs(out.phi_zbar[m]).max() < 1e-13
    g, fzb = _field_from(lambda z: np.conj(z))
    out = wirtinger(fzb)
    m = out.valid_mask
    assert np.abs(out.phi_z[m]).max() < 1e-13
    assert np.abs(out.phi_zbar[m] - 1.0).max() < 1e-13


def test_wirtinger_linear_consistency():
    # phi_z + phi_zbar = dx phi and phi_z - phi_zbar = -i dy phi, per stencil
    g = build_grid(16)
    rng = np.random.default_rng(2)
    phi = rng.standard_normal(g.num_nodes) + 1j * rng.standard_normal(g.num_nodes)
    fld = wirtinger(ComplexField(grid=g, phi=phi, valid_mask=g.active.copy()))
    dx, dy = _forward_diffs(g, phi)
    m = fld.valid_mask
    assert np.abs(fld.phi_z[m] + fld.phi_zbar[m] - dx[m]).max() < 1e-12
    assert np.abs(fld.phi_z[m] - fld.phi_zbar[m] + 1j * dy[m]).max() < 1e-12


def test_holomorphic_sample_decay():
    sups = {}
    for n in (32, 64):
        _, fld = _field_from(lambda z: z * z, n)
        out = wirtinger(fld)
        sups[n] = np.abs(out.phi_zbar[out.valid_mask]).max()
    assert 1.7 <= sups[32] / sups[64] <= 2.3


def test_kqr_defect_affine_and_quadratic():
    g = build_grid(16)
    aff = GridFunction.from_callable(g, lambda x, y: 1.0 + 2.0 * x - y)
    fld = wirtinger(complex_gradient(aff))
    assert np.abs(kqr_defect(fld, 3.0).values).max() < 1e-10
    # p -> 2 limit: (1 - 2/p) = 0 and the harmonic quadratic has phi_zbar = 0
    u = GridFunction.from_callable(g, lambda x, y: x * x - y * y)
    fld = wirtinger(complex_gradient(u))
    assert np.abs(kqr_defect(fld, 2.0).values).max() < 1e-8


def test_kqr_defect_decays_on_p_harmonic_solve():
    sups = {}
    for n in (32, 64):
        g = build_grid(n)
        res = solve(ProblemSpec(g, 3.0, f=0.0,
                                dirichlet=lambda x, y: x + 0.25 * np.sin(x) * np.cos(y)))
        assert res.converged
        fld = wirtinger(complex_gradient(res.u))
        elig = fld.valid_mask & nondegenerate_mask(res.u, 0.1)
        sups[n] = max(kqr_defect(fld, 3.0).values[elig].max(), 0.0)
    assert sups[64] <= 0.75 * sups[32]


def test_jacobian_check_golden():
    _, fld = _field_from(lambda z: z)
    out = wirtinger(fld)
    for p in (3.0, 4.0):
        v = jacobian_check(out, p).values[out.valid_mask]
        expected = (2.0 - p) / (p - 1.0)
        assert np.abs(v - expected).max() < 1e-12
    g = build_grid(16)
    aff = GridFunction.from_callable(g, lambda x, y: 2.0 * x - y)
    out = wirtinger(complex_gradient(aff))
    assert np.abs(jacobian_check(out, 3.0).values).max() < 1e-12


def test_jacobian_equality_at_kqr_extremal():
    # phi = z + k zbar with k = 1 - 2/p sits exactly on both equality cases
    p = 3.0
    k = 1.0 - 2.0 / p
    _, fld = _field_from(lambda z: z + k * np.conj(z))
    out = wirtinger(fld)
    m = out.valid_mask
    assert np.abs(jacobian_check(out, p).values[m]).max() < 1e-12
    assert np.abs(kqr_defect(out, p).values[m]).max() < 1e-12


def test_gradient_mapping_trivia():
    g = build_grid(16)
    aff = GridFunction.from_callable(g, lambda x, y: 1.0 - x + 3.0 * y)
    im_sup, lap_sup = gradient_mapping_defect(wirtinger(complex_gradient(aff)), aff)
    assert im_sup < 1e-12 and lap_sup < 1e-12
    # u = x^2 + y^2: phi_zbar = lap(u)/4 = 1 exactly on interior stencils
    u = GridFunction.from_callable(g, lambda x, y: x * x + y * y)
    fld = wirtinger(complex_gradient(u))
    im_sup, lap_sup = gradient_mapping_defect(fld, u)
    assert im_sup < 1e-10 and lap_sup < 1e-10
    assert np.abs(fld.phi_zbar[fld.valid_mask] - 1.0).max() < 1e-10


def test_gradient_mapping_first_order_window():
    defects = {}
    for n in (32, 64):
        g = build_grid(n)
        u = GridFunction.from_callable(g, lambda x, y: np.sin(x) * np.cos(y))
        defects[n] = gradient_mapping_defect(wirtinger(complex_gradient(u)), u)
    assert 1.8 <= defects[32][0] / defects[64][0] <= 2.2
    assert 1.8 <= defects[32][1] / defects[64][1] <= 2.2


def test_morrey_flat_fields():
    g = build_grid(32)
    const = ComplexField(grid=g, phi=np.full(g.num_nodes, 1.5 + 0.5j),
                         valid_mask=g.active.copy())
    ratios = morrey_growth(const, 3.0, [0.5, 0.25])
    assert np.all(ratios == 0.0)
    aff = GridFunction.from_callable(g, lambda x, y: 2.0 * x)
    ratios = morrey_growth(complex_gradient(aff), 3.0, [0.5, 0.25])
    assert np.all(ratios == 0.0)


def test_morrey_growth_p_harmonic():
    g = build_grid(64)
    res = solve(ProblemSpec(g, 3.0, f=0.0,
                            dirichlet=lambda x, y: x + 0.25 * np.sin(x) * np.cos(y)))
    fld = complex_gradient(res.u)
    ratios = morrey_growth(fld, 3.0, [0.5, 0.25, 0.125])
    assert np.all(ratios <= 1.1)
    # at r = 1/2 the ratio is 1/(p-1) by construction
    assert ratios[0] == pytest.approx(0.5, abs=1e-12)


def test_morrey_radius_validation():
    g = build_grid(16)
    fld = complex_gradient(GridFunction.constant(g, 0.0))
    with pytest.raises(ResolutionError):
        morrey_growth(fld, 3.0, [2.0 * g.h])
    with pytest.raises(ResolutionError):
        morrey_growth(fld, 3.0, [0.6])


def test_nondegenerate_mask():
    g = build_grid(16)
    u = GridFunction.from_callable(g, lambda x, y: 0.05 * x)
    assert not nondegenerate_mask(u, 0.1).any()
    u = GridFunction.from_callable(g, lambda x, y: x)
    assert nondegenerate_mask(u, 0.1).all()


def test_holomorphic_truncation_decay():
    # cubic exponential truncation 1 + z + z^2/2 + z^3/6
    sups = {}
    for n in (32, 64):
        _, fld = _field_from(lambda z: 1.0 + z + z * z / 2.0 + z ** 3 / 6.0, n)
        out = wirtinger(fld)
        sups[n] = np.abs(out.phi_zbar[out.valid_mask]).max()
    assert sups[64] <= 0.6 * sups[32]
