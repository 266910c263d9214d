"""Corrector sweep and refinement study."""

import numpy as np
import pytest

from plaplab import (
    ProblemSpec,
    build_grid,
    convergence_study,
    corrector_experiment,
    p_harmonic_replacement,
    solve,
)


def test_corrector_zero_source_gives_zero_corrector():
    rows = corrector_experiment(3.0, [0.0], 16)
    assert rows[0].xi_sup == 0.0
    assert rows[0].xi_grad_sup == 0.0


def test_corrector_sweep_monotone():
    rows = corrector_experiment(3.0, [1.0, 0.1, 0.01], 16)
    assert all(r.solve_converged and r.replacement_converged for r in rows)
    xi = [r.xi_sup for r in rows]
    gx = [r.xi_grad_sup for r in rows]
    assert xi[0] > xi[1] > xi[2] > 0.0
    assert gx[0] > gx[1] > gx[2] > 0.0


def test_corrector_zero_trace_equals_minus_solution():
    # zero circle data: the p-harmonic replacement vanishes, so xi = -u exactly
    grid = build_grid(16, use_disk_mask=True)
    res = solve(ProblemSpec(grid, 3.0, f=1.0, dirichlet=0.0))
    rows = corrector_experiment(3.0, [1.0], 16)
    assert rows[0].xi_sup == pytest.approx(res.u.sup_norm(), abs=1e-12)


def test_replacement_nodal_trace_path():
    # without the original boundary data the replacement pins u's layer values
    grid = build_grid(16)
    res = solve(ProblemSpec(grid, 3.0, f=1.0, dirichlet=lambda x, y: 0.5 * x))
    rep = p_harmonic_replacement(res.u, 3.0)
    assert rep.converged
    assert np.array_equal(rep.u.values[grid.boundary], res.u.values[grid.boundary])


def test_convergence_study_improves():
    rows = convergence_study(3.0, [16, 32])
    assert rows[0].linf_error > rows[1].linf_error
    assert np.isnan(rows[0].ratio)
    assert rows[1].ratio < 1.0
    assert rows[1].h == 2.0 / 32
