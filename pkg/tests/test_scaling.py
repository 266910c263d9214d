"""Normalization and rescaling transforms: algebra, claims, domain guards."""

import numpy as np
import pytest

from plaplab import (
    DegenerateInputError,
    GridFunction,
    OutOfDomainError,
    ProblemSpec,
    build_grid,
    conjugate,
    interpolate,
    lambda_rescale,
    mu_rescale,
    recover_gradient,
    solve,
    theta_normalize,
)


def test_theta_identity_case():
    g = build_grid(32)
    u = GridFunction.from_callable(g, lambda x, y: np.cos(np.pi * x / 2) * np.cos(np.pi * y / 2))
    v, ft, rec = theta_normalize(u, 1.0, 3.0, delta0=1.0)
    assert rec.factor == 1.0
    assert np.abs(v.values - u.values).max() < 1e-15
    assert ft.sup_norm() == pytest.approx(1.0, abs=1e-13)


def test_theta_arithmetic_case():
    # ||u|| = 2, ||f|| = 1, p = 3: delta0 = 1 is inadmissible, delta0 = 0.1
    # gives theta = 0.4^{1/3} and a transformed source bound of exactly 0.1
    g = build_grid(64)
    u = GridFunction.from_callable(g, lambda x, y: 2.0 * np.cos(np.pi * x / 2) * np.cos(np.pi * y / 2))
    f = lambda x, y: 1.0 - 0.5 * (x * x + y * y) / 2.0
    with pytest.raises(OutOfDomainError) as err:
        theta_normalize(u, f, 3.0, delta0=1.0)
    assert "0.25" in str(err.value)
    v, ft, rec = theta_normalize(u, f, 3.0, delta0=0.1)
    assert rec.factor == pytest.approx(0.4 ** (1.0 / 3.0), abs=1e-12)
    assert abs(ft.sup_norm() - 0.1) <= 1e-13
    assert v.sup_norm() == pytest.approx(1.0, abs=1e-12)
    assert rec.claimed_rhs_bound == 0.1


def test_theta_degenerate_inputs():
    g = build_grid(16)
    zero = GridFunction.constant(g, 0.0)
    one = GridFunction.constant(g, 1.0)
    with pytest.raises(DegenerateInputError):
        theta_normalize(zero, 1.0, 3.0)
    with pytest.raises(DegenerateInputError):
        theta_normalize(one, 0.0, 3.0)


def test_lambda_affine():
    g = build_grid(64)
    u = GridFunction.from_callable(g, lambda x, y: x)
    v, rec = lambda_rescale(u, g.origin_index, 0.25, 3.0)
    expected = GridFunction.from_callable(g, lambda x, y: (2.0 / 3.0) * x)
    assert np.abs(v.values - expected.values).max() < 1e-12
    g0 = recover_gradient(v).values[g.origin_index]
    assert np.hypot(*g0) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert rec.value_scale == pytest.approx(0.375, abs=1e-15)
    # damping factor 0.25^3 / 0.375^2
    assert rec.claimed_rhs_bound == pytest.approx(0.015625 / 0.140625, abs=1e-12)


def test_lambda_zero_field():
    g = build_grid(16)
    v, rec = lambda_rescale(GridFunction.constant(g, 0.0), g.origin_index, 0.25, 3.0)
    assert np.all(v.values == 0.0)
    # grad0 = 0 makes the damping factor exactly 1 via lambda^{p'(p-1)} = lambda^p
    assert rec.claimed_rhs_bound == pytest.approx(1.0, abs=1e-12)


def test_lambda_window_validation():
    g = build_grid(16)
    u = GridFunction.from_callable(g, lambda x, y: x)
    with pytest.raises(ValueError):
        lambda_rescale(u, g.origin_index, 0.5, 3.0)
    with pytest.raises(ValueError):
        lambda_rescale(u, g.origin_index, 0.0, 3.0)
    with pytest.raises(OutOfDomainError):
        lambda_rescale(u, g.node_index((0.875, 0.0)), 0.25, 3.0)


def test_lambda_sup_bound_on_solution():
    g = build_grid(32, use_disk_mask=True)
    res = solve(ProblemSpec(g, 3.0, f=1.0, dirichlet=0.0))
    assert res.u.sup_norm() <= 1.0
    v, rec = lambda_rescale(res.u, g.origin_index, 0.25, 3.0)
    assert v.values[g.origin_index] == 0.0
    assert v.sup_norm() <= 1.0 + 8.0 * g.h


def test_lambda_round_trip():
    errs = {}
    for n in (32, 64):
        g = build_grid(n)
        u = GridFunction.from_callable(g, lambda x, y: np.sin(2 * x) * np.cos(y) + 0.3 * x)
        v, rec = lambda_rescale(u, g.origin_index, 0.3, 3.0)
        sel = np.abs(g.nodes).max(axis=1) <= 0.3 + 1e-12
        pullback = g.nodes[sel] / 0.3
        rec_u = interpolate(v, pullback) * rec.value_scale + u.values[g.origin_index]
        errs[n] = np.abs(rec_u - u.values[sel]).max()
        assert errs[n] <= g.h
    assert errs[64] < errs[32]


def test_mu_affine_exact_slope():
    g = build_grid(64)
    u = GridFunction.from_callable(g, lambda x, y: 0.6 * x + 0.3 * y)
    w, rec = mu_rescale(u, g.origin_index, 3.0)
    assert w.values[g.origin_index] == 0.0
    gw = recover_gradient(w).values[g.origin_index]
    assert np.hypot(*gw) == pytest.approx(1.0, abs=1e-12)
    gn = np.hypot(0.6, 0.3)
    assert rec.factor == pytest.approx(gn ** 2.0, rel=1e-9)


def test_mu_power_field():
    pc = conjugate(3.0)
    g = build_grid(64)
    u = GridFunction.from_callable(g, lambda x, y: (x * x + y * y) ** (pc / 2.0))
    w, rec = mu_rescale(u, g.node_index((0.25, 0.0)), 3.0)
    assert w.values[g.origin_index] == 0.0
    gw = recover_gradient(w).values[g.origin_index]
    assert abs(np.hypot(*gw) - 1.0) <= 2.0 * g.h


def test_mu_guards():
    g = build_grid(64)
    pc = conjugate(3.0)
    u = GridFunction.from_callable(g, lambda x, y: (x * x + y * y) ** (pc / 2.0))
    with pytest.raises(DegenerateInputError):
        mu_rescale(u, g.origin_index, 3.0)
    with pytest.raises(OutOfDomainError):
        mu_rescale(u, g.node_index((0.5, 0.0)), 3.0)


def test_exponent_identities_across_p_grid():
    # every transform asserts p'(p-1) = p and p' - 1 = 1/(p-1) internally;
    # verify the identities directly on a dense grid too
    for p in np.linspace(2.0, 50.0, 97):
        pc = conjugate(float(p))
        assert abs(pc * (p - 1.0) - p) <= 1e-12 * max(1.0, p)
        assert abs((pc - 1.0) - 1.0 / (p - 1.0)) <= 1e-12


def test_record_fields():
    g = build_grid(32)
    u = GridFunction.from_callable(g, lambda x, y: x)
    _, rec = lambda_rescale(u, g.origin_index, 0.25, 3.0)
    assert rec.kind == "lambda"
    assert rec.source_point == (0.0, 0.0)
    w, rec = mu_rescale(u, g.origin_index, 3.0, f_sup=0.7)
    assert rec.kind == "mu"
    assert rec.claimed_rhs_bound == 0.7
