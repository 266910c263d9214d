"""Complex-gradient structure checks for planar p-harmonic fields.

The complex gradient phi = (u_x - i u_y)/2 of a planar p-harmonic function
is a (p-1)-quasiregular gradient mapping:

    |d phi / d zbar| <= (1 - 2/p) |d phi / d z|        (K-qr inequality)
    Im  d phi / d zbar = 0                              (gradient mapping)
    J_phi = |phi_z|^2 - |phi_zbar|^2 >= |D phi|^2/(p-1) (Jacobian bound)
    int_{B_r} |grad phi|^2 <= (p-1)(2r)^{2 alpha_bk} int_{B_1/2} |grad phi|^2

where |D phi| in the Jacobian bound is the operator norm of the real
Jacobian of (Re phi, Im phi), namely |phi_z| + |phi_zbar| (the bound is
then exactly quasiregularity), while the Morrey integrals use the Frobenius
norm 2(|phi_z|^2 + |phi_zbar|^2), the W^{1,2} energy density.  The module
evaluates the discrete defect of each statement on nodal fields.

Wirtinger derivatives are discretized with one-sided (forward) first
differences.  On this uniform mesh the area-weighted gradient recovery is
second-order accurate at interior nodes, so centered stencils would make
every defect decay at second order; the one-sided stencils keep the whole
pipeline genuinely first order, which is the regime the refinement checks
are calibrated for.  Stencil values are trusted on valid_mask, the nodes
two full rings away from the boundary or mask edge.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ResolutionError
from .exponents import alpha_bk
from .grid import GridFunction, eroded_active, recover_gradient, triangle_gradients

__all__ = [
    "ComplexField",
    "complex_gradient",
    "wirtinger",
    "kqr_defect",
    "gradient_mapping_defect",
    "jacobian_check",
    "morrey_growth",
    "nondegenerate_mask",
]


@dataclass
class ComplexField:
    """Nodal complex field with optional Wirtinger derivative fields."""

    grid: object
    phi: np.ndarray
    phi_z: np.ndarray = None
    phi_zbar: np.ndarray = None
    valid_mask: np.ndarray = None

    @property
    def has_derivatives(self):
        return self.phi_z is not None and self.phi_zbar is not None


def complex_gradient(u):
    """phi = (u_x - i u_y)/2 with the components from gradient recovery."""
    grad = recover_gradient(u).values
    phi = 0.5 * (grad[:, 0] - 1j * grad[:, 1])
    return ComplexField(grid=u.grid, phi=phi, valid_mask=u.grid.active.copy())


def _forward_diffs(grid, values):
    """One-sided lattice differences (d/dx, d/dy); last row/column are zero."""
    side = grid.n + 1
    arr = values.reshape(side, side)
    dx = np.zeros_like(arr)
    dy = np.zeros_like(arr)
    dx[:, :-1] = (arr[:, 1:] - arr[:, :-1]) / grid.h
    dy[:-1, :] = (arr[1:, :] - arr[:-1, :]) / grid.h
    return dx.ravel(), dy.ravel()


def wirtinger(field):
    """Populate phi_z = (dx - i dy) phi / 2 and phi_zbar = (dx + i dy) phi / 2.

    Returns a new ComplexField whose valid_mask is eroded to the nodes where
    the stencils see only interior-quality data.
    """
    grid = field.grid
    dx, dy = _forward_diffs(grid, field.phi)
    phi_z = 0.5 * (dx - 1j * dy)
    phi_zbar = 0.5 * (dx + 1j * dy)
    valid = eroded_active(grid, 2)
    phi_z = np.where(valid, phi_z, 0.0)
    phi_zbar = np.where(valid, phi_zbar, 0.0)
    return ComplexField(
        grid=grid,
        phi=field.phi.copy(),
        phi_z=phi_z,
        phi_zbar=phi_zbar,
        valid_mask=valid,
    )


def _require_derivatives(field):
    if not field.has_derivatives:
        raise ConfigError("wirtinger derivatives not populated; call wirtinger() first")


def kqr_defect(field, p):
    """Per-node defect |phi_zbar| - (1 - 2/p) |phi_z| of the K-qr inequality.

    Nonpositive values satisfy the inequality; for discrete p-harmonic data
    the positive part vanishes with h away from critical points.
    """
    _require_derivatives(field)
    if not p >= 2.0:
        raise ValueError(f"kqr_defect requires p >= 2, got p={p}")
    k = 1.0 - 2.0 / p
    vals = np.abs(field.phi_zbar) - k * np.abs(field.phi_z)
    vals = np.where(field.valid_mask, vals, 0.0)
    return GridFunction(field.grid, vals)


def gradient_mapping_defect(field, u):
    """(sup |Im phi_zbar|, sup |phi_zbar - lap(u)/4|) over the valid nodes.

    The discrete Laplacian composes the one-sided first differences into the
    standard 5-point stencil.  Both sup-norms vanish at first order in h for
    C^2 fields.
    """
    _require_derivatives(field)
    grid = field.grid
    side = grid.n + 1
    arr = u.values.reshape(side, side)
    lap = np.zeros_like(arr)
    h2 = grid.h * grid.h
    lap[1:-1, 1:-1] = (
        arr[1:-1, 2:] - 2.0 * arr[1:-1, 1:-1] + arr[1:-1, :-2]
        + arr[2:, 1:-1] - 2.0 * arr[1:-1, 1:-1] + arr[:-2, 1:-1]
    ) / h2
    lap = lap.ravel()
    m = field.valid_mask
    if not m.any():
        return 0.0, 0.0
    im_sup = float(np.max(np.abs(field.phi_zbar[m].imag)))
    lap_sup = float(np.max(np.abs(field.phi_zbar[m] - 0.25 * lap[m])))
    return im_sup, lap_sup


def jacobian_check(field, p):
    """Per-node violation |D phi|^2/(p-1) - J_phi of the Jacobian lower bound.

    Conventions: J_phi = |phi_z|^2 - |phi_zbar|^2 and |D phi| is the operator
    norm of the real Jacobian, |phi_z| + |phi_zbar|, so the bound is exactly
    the (p-1)-quasiregularity statement (for K-qr maps |D phi|^2 <= K J).
    Nonpositive values satisfy the bound.
    """
    _require_derivatives(field)
    if not p > 2.0:
        raise ValueError(f"jacobian_check requires p > 2, got p={p}")
    az = np.abs(field.phi_z)
    ab = np.abs(field.phi_zbar)
    vals = (az + ab) ** 2 / (p - 1.0) - (az ** 2 - ab ** 2)
    vals = np.where(field.valid_mask, vals, 0.0)
    return GridFunction(field.grid, vals)


def morrey_growth(field, p, radii):
    """Growth ratios int_{B_r}|D phi|^2 / ((p-1)(2r)^{2 alpha_bk} int_{B_1/2}|D phi|^2).

    Integrals use triangle-wise quadrature of the recovered gradient of
    (Re phi, Im phi); a triangle belongs to B_r when its centroid does.  For
    exact p-harmonic fields every ratio is at most 1; the discrete check
    allows a resolution-dependent excess.  A flat field yields all zeros.
    """
    if not p > 2.0:
        raise ValueError(f"morrey_growth requires p > 2, got p={p}")
    grid = field.grid
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 2.0 * grid.h * (1.0 + 1e-12)) or np.any(radii > 0.5 + 1e-12):
        raise ResolutionError(
            f"morrey radii must lie in (2h, 1/2] with h={grid.h}; got {radii}"
        )
    g_re = triangle_gradients(grid, field.phi.real)
    g_im = triangle_gradients(grid, field.phi.imag)
    dens = (
        g_re[:, 0] ** 2 + g_re[:, 1] ** 2 + g_im[:, 0] ** 2 + g_im[:, 1] ** 2
    )
    tris = grid.triangles
    cent = grid.nodes[tris].mean(axis=1)
    crad2 = cent[:, 0] ** 2 + cent[:, 1] ** 2
    act = grid.tri_active
    area = grid.tri_area

    def ball_integral(r):
        sel = act & (crad2 <= r * r)
        return area * float(np.sum(dens[sel]))

    ref = ball_integral(0.5)
    alpha = alpha_bk(p)
    out = np.empty(len(radii))
    for i, r in enumerate(radii):
        num = ball_integral(float(r))
        den = (p - 1.0) * (2.0 * r) ** (2.0 * alpha) * ref
        out[i] = 0.0 if den <= 1e-300 else num / den
    return out


def nondegenerate_mask(u, threshold=0.1):
    """Nodes where the recovered gradient magnitude is at least ``threshold``.

    Pointwise quasiregular checks are restricted to these nodes: across the
    critical set the discrete difference quotients see the unbounded Hessian
    and carry no information at fixed h.
    """
    grad = recover_gradient(u).values
    return np.hypot(grad[:, 0], grad[:, 1]) >= threshold
