"""Exact normalization and rescaling maps acting on discrete fields.

Three affine changes of variables recur in the sharp-regularity analysis:

theta-normalization   v(x) = u(theta x)/||u||,  theta = (d0 ||u||^{p-1}/||f||)^{1/p},
                      which renormalizes the source to ||f~|| = d0;
lambda-rescale        v(x) = (u(l0 x + x0) - u(x0)) / (l0^{p'} + |grad0| l0),
                      the one-step zoom of the dyadic oscillation iteration;
mu-rescale            w(x) = (u(x0 + mu x) - u(x0)) / mu^{p'},  mu = |grad0|^{p-1},
                      which normalizes the gradient at a nondegenerate point.

All transforms resample by P1 interpolation onto the same grid and fail
loudly when source points would leave the active domain; the exponent
identities p'(p-1) = p and p' - 1 = 1/(p-1) they rely on are asserted to
1e-12 on every call.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, NumericalError, OutOfDomainError
from .exponents import conjugate
from .grid import GridFunction, interpolate, recover_gradient, _resolve_center
from .solver import sample_field

__all__ = [
    "ScalingRecord",
    "theta_normalize",
    "lambda_rescale",
    "mu_rescale",
]


@dataclass(frozen=True)
class ScalingRecord:
    kind: str                 # theta | lambda | mu
    factor: float             # spatial scale
    value_scale: float        # amplitude divisor
    claimed_rhs_bound: float  # bound on the transformed right-hand side
    source_point: tuple


def _check_identities(p):
    pc = conjugate(p)
    if abs(pc * (p - 1.0) - p) > 1e-12 * max(1.0, abs(p)):
        raise NumericalError(f"identity p'(p-1) = p failed at p={p}")
    if abs((pc - 1.0) - 1.0 / (p - 1.0)) > 1e-12:
        raise NumericalError(f"identity p' - 1 = 1/(p-1) failed at p={p}")
    return pc


def _resample(u, points, what):
    try:
        return interpolate(u, points)
    except OutOfDomainError as exc:
        raise OutOfDomainError(f"{what}: {exc}") from exc


def theta_normalize(u, f, p, delta0=1.0):
    """Normalize amplitude to 1 and the source bound to delta0.

    Returns (v, f_tilde, record) with v(x) = u(theta x)/||u|| resampled on the
    same grid and f_tilde carrying sup bound delta0.  Rejects theta > 1
    (resampling would need data outside the domain) and reports the
    admissible delta0 range in that case.
    """
    if not p > 1.0:
        raise ValueError(f"theta_normalize requires p > 1, got p={p}")
    if not delta0 > 0.0:
        raise ValueError(f"delta0 must be positive, got {delta0}")
    _check_identities(p)
    grid = u.grid
    f_vals = sample_field(grid, f)
    sup_u = u.sup_norm()
    sup_f = float(np.max(np.abs(f_vals[grid.active])))
    if sup_u <= 0.0 or sup_f <= 0.0:
        raise DegenerateInputError("theta normalization needs ||u|| > 0 and ||f|| > 0")
    theta = (delta0 * sup_u ** (p - 1.0) / sup_f) ** (1.0 / p)
    if theta > 1.0 + 1e-12:
        delta_max = sup_f / sup_u ** (p - 1.0)
        raise OutOfDomainError(
            f"theta={theta:.6g} > 1 would resample outside the domain; "
            f"admissible delta0 range is (0, {delta_max:.6g}]"
        )
    theta = min(theta, 1.0)
    src = theta * grid.nodes
    v_vals = np.zeros(grid.num_nodes)
    act = grid.active
    v_vals[act] = _resample(u, src[act], "theta-normalize of u") / sup_u

    scale = delta0 / sup_f          # equals theta^p / ||u||^{p-1} exactly
    if callable(f):
        ft_vals = np.zeros(grid.num_nodes)
        ft_vals[act] = scale * np.asarray([f(x, y) for x, y in src[act]])
    else:
        ft_vals = np.zeros(grid.num_nodes)
        ft_vals[act] = scale * _resample(
            GridFunction(grid, f_vals), src[act], "theta-normalize of f"
        )
    sup_ft = float(np.max(np.abs(ft_vals[act])))
    if sup_ft > delta0 * (1.0 + 1e-12):
        raise NumericalError(
            f"transformed source bound {sup_ft} exceeds the claimed {delta0}"
        )
    record = ScalingRecord(
        kind="theta",
        factor=theta,
        value_scale=sup_u,
        claimed_rhs_bound=delta0,
        source_point=(0.0, 0.0),
    )
    return GridFunction(grid, v_vals), GridFunction(grid, ft_vals), record


def lambda_rescale(u, x0, lambda0, p):
    """One dyadic zoom step at x0 with the sharp normalization denominator.

    v(x) = (u(l0 x + x0) - u(x0)) / (l0^{p'} + |grad0| l0).  v(0) = 0 exactly;
    when ||u|| <= 1 the rescaled field satisfies ||v|| <= 1 up to resampling
    error, and the right-hand side is damped by
    l0^p / (l0^{p'} + |grad0| l0)^{p-1} <= 1.
    """
    if not (0.0 < lambda0 < 0.5):
        raise ValueError(f"lambda0 must lie in (0, 1/2), got {lambda0}")
    pc = _check_identities(p)
    grid = u.grid
    k0 = _resolve_center(grid, x0)
    x0c = grid.nodes[k0]
    grad0 = recover_gradient(u).values[k0]
    gnorm = float(np.hypot(grad0[0], grad0[1]))
    denom = lambda0 ** pc + gnorm * lambda0
    if denom <= 0.0:
        raise DegenerateInputError("degenerate rescale denominator")
    if np.max(np.abs(x0c)) + lambda0 > 1.0 + 1e-12:
        raise OutOfDomainError(
            f"lambda window around ({x0c[0]},{x0c[1]}) leaves the square domain"
        )
    src = x0c + lambda0 * grid.nodes
    act = grid.active
    v_vals = np.zeros(grid.num_nodes)
    v_vals[act] = (_resample(u, src[act], "lambda-rescale") - u.values[k0]) / denom

    damping = lambda0 ** p / denom ** (p - 1.0)
    if damping > 1.0 + 1e-12:
        raise NumericalError(f"rescale damping factor {damping} exceeds 1")
    sup_v = float(np.max(np.abs(v_vals[act])))
    if u.sup_norm() <= 1.0 and sup_v > 1.0 + 8.0 * grid.h:
        raise NumericalError(
            f"rescaled sup {sup_v} violates the normalized bound beyond "
            "resampling tolerance"
        )
    record = ScalingRecord(
        kind="lambda",
        factor=lambda0,
        value_scale=denom,
        claimed_rhs_bound=damping,
        source_point=(float(x0c[0]), float(x0c[1])),
    )
    return GridFunction(grid, v_vals), record


def mu_rescale(u, x0, p, f_sup=None):
    """Gradient-normalizing zoom at a nondegenerate point.

    With mu = |grad0|^{p-1}, w(x) = (u(x0 + mu x) - u(x0))/mu^{p'} satisfies
    w(0) = 0 exactly and |grad w(0)| = 1 up to gradient-recovery error
    (mu^{p'}/mu = |grad0|).  Raises at critical points (grad0 = 0) and when
    the mu-window leaves the domain.
    """
    pc = _check_identities(p)
    grid = u.grid
    k0 = _resolve_center(grid, x0)
    x0c = grid.nodes[k0]
    grad0 = recover_gradient(u).values[k0]
    gnorm = float(np.hypot(grad0[0], grad0[1]))
    if gnorm < 1e-14:
        raise DegenerateInputError(
            "mu-rescale is undefined at a critical point (grad u(x0) = 0)"
        )
    mu = gnorm ** (p - 1.0)
    if np.max(np.abs(x0c)) + mu > 1.0 + 1e-12:
        raise OutOfDomainError(
            f"mu window of size {mu:.4g} around ({x0c[0]},{x0c[1]}) leaves the domain"
        )
    src = x0c + mu * grid.nodes
    act = grid.active
    w_vals = np.zeros(grid.num_nodes)
    w_vals[act] = (_resample(u, src[act], "mu-rescale") - u.values[k0]) / mu ** pc
    w = GridFunction(grid, w_vals)

    gw = recover_gradient(w).values[grid.origin_index]
    gw_norm = float(np.hypot(gw[0], gw[1]))
    if abs(gw_norm - 1.0) > max(3.0 * grid.h, 1e-9):
        raise NumericalError(
            f"|grad w(0)| = {gw_norm} deviates from 1 beyond recovery tolerance 3h"
        )
    record = ScalingRecord(
        kind="mu",
        factor=mu,
        value_scale=mu ** pc,
        claimed_rhs_bound=float(f_sup) if f_sup is not None else float("nan"),
        source_point=(float(x0c[0]), float(x0c[1])),
    )
    return w, record
