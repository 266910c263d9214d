"""Canned multi-solve experiments: corrector smallness sweep, refinement study.

The corrector experiment quantifies how far a solution with small bounded
source sits from the p-harmonic field sharing its boundary values: for each
source level c it solves -div(|grad u|^{p-2} grad u) = c, replaces u by the
p-harmonic extension of its own boundary trace, and reports the corrector
xi = (replacement - u) through ||xi||_inf and ||grad xi||_inf.  Both norms
shrink with c.

The convergence study runs the radial disk benchmark (f = 1, zero circle
data) over a refinement ladder and reports sup-norm errors against the
closed-form solution c_p (1 - |x|^{p'}).
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .grid import GridFunction, build_grid, recover_gradient
from .solver import ProblemSpec, SolverConfig, radial_benchmark_exact, solve

__all__ = [
    "CorrectorRow",
    "ConvergenceRow",
    "corrector_experiment",
    "convergence_study",
]


@dataclass(frozen=True)
class CorrectorRow:
    f_sup: float
    xi_sup: float
    xi_grad_sup: float
    solve_converged: bool
    replacement_converged: bool


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    h: float
    linf_error: float
    ratio: float          # error / previous error; nan for the first row
    converged: bool


def p_harmonic_replacement(u, p, dirichlet=None, config=None):
    """Solve the homogeneous problem with u's boundary trace.

    When the boundary data that produced u is known it should be passed in
    (it describes the trace exactly, including on the masked circle);
    otherwise u's own nodal values on the boundary layer are pinned.
    """
    spec = ProblemSpec(u.grid, p, f=0.0, dirichlet=u if dirichlet is None else dirichlet)
    return solve(spec, config or SolverConfig())


def corrector_experiment(p, f_values, n, domain="disk", dirichlet=0.0, config=None):
    """Sweep source levels and measure the corrector to p-harmonicity.

    Returns one CorrectorRow per value of f_values, in the given order.
    """
    grid = build_grid(n, use_disk_mask=(domain == "disk"))
    config = config or SolverConfig()
    rows = []
    for c in f_values:
        res = solve(ProblemSpec(grid, p, f=float(c), dirichlet=dirichlet), config)
        rep = p_harmonic_replacement(res.u, p, dirichlet=dirichlet, config=config)
        xi = GridFunction(grid, rep.u.values - res.u.values)
        grad_xi = recover_gradient(xi)
        rows.append(
            CorrectorRow(
                f_sup=abs(float(c)),
                xi_sup=xi.sup_norm(),
                xi_grad_sup=grad_xi.sup_norm(),
                solve_converged=res.converged,
                replacement_converged=rep.converged,
            )
        )
    return rows


def convergence_study(p, ns, config=None):
    """Radial disk benchmark over a refinement ladder; sup-norm errors + ratios."""
    config = config or SolverConfig()
    rows = []
    prev_err = None
    for n in ns:
        grid = build_grid(int(n), use_disk_mask=True)
        res = solve(ProblemSpec(grid, p, f=1.0, dirichlet=0.0), config)
        if not res.converged:
            raise NumericalError(f"radial benchmark did not converge at n={n}: {res.message}")
        exact = radial_benchmark_exact(grid, p)
        err = float(
            np.max(np.abs(res.u.values[grid.active] - exact.values[grid.active]))
        )
        ratio = float("nan") if prev_err is None else err / prev_err
        rows.append(
            ConvergenceRow(
                n=int(n), h=grid.h, linf_error=err, ratio=ratio, converged=res.converged
            )
        )
        prev_err = err
    return rows
