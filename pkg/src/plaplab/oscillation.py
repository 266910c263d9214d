"""Oscillation profiles, growth-exponent fits, and the dyadic iteration bound.

Around a base node x0 the two oscillation measures are

    osc_centered(r) = sup_{B_r} |u - u(x0)|
    osc_linear(r)   = sup_{B_r} |u - u(x0) - grad0 . (x - x0)|

with grad0 the recovered gradient at x0.  Fitting log(osc) against log(r)
measures the local growth exponent; for a solution of the p-Poisson problem
with bounded source the centered oscillation at a critical point grows like
r^{p'}, and in general it obeys

    osc_centered(r) <= C r^{p'} (1 + |grad0| r^{1/(1-p)}),

whose smallest measured constant C is reported by crack_bound_constant.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateProfileError, ResolutionError
from .exponents import conjugate
from .grid import recover_gradient, sup_ball, _resolve_center

__all__ = [
    "OscillationProfile",
    "ExponentFit",
    "profile",
    "fit_exponent",
    "crack_bound_constant",
    "iteration_bound",
    "classify_point",
]

#: oscillation values below this are treated as exactly flat when fitting
FLAT_TRIM = 1e-13


@dataclass
class OscillationProfile:
    """Dyadic oscillation data of one field around one base node."""

    x0_index: int
    x0: np.ndarray
    grad0: np.ndarray
    radii: np.ndarray          # strictly decreasing
    osc_centered: np.ndarray
    osc_linear: np.ndarray

    @property
    def grad0_norm(self):
        return float(np.hypot(self.grad0[0], self.grad0[1]))


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    radii_used: np.ndarray


def max_levels(grid, r_max, ratio):
    """Largest level count with r_max * ratio^(levels-1) above the h floor."""
    if r_max < grid.h:
        return 0
    return 1 + int(math.floor(math.log(grid.h / r_max) / math.log(ratio) + 1e-12))


def profile(u, x0, r_max, levels=5, ratio=0.5):
    """Measure centered and gradient-corrected oscillations on dyadic balls.

    Radii are r_k = r_max * ratio^k for k = 0..levels-1; the smallest must
    stay at or above the node spacing h so every ball holds a neighbor ring.
    """
    grid = u.grid
    if levels < 3:
        raise ResolutionError("a profile needs at least 3 levels")
    if not (0.0 < ratio < 1.0):
        raise ResolutionError(f"ratio must lie in (0,1), got {ratio}")
    r_min = r_max * ratio ** (levels - 1)
    if r_min < grid.h * (1.0 - 1e-12):
        usable = max_levels(grid, r_max, ratio)
        raise ResolutionError(
            f"smallest radius {r_min:.4g} is below the grid floor h={grid.h:.4g}; "
            f"at most {usable} levels are usable for r_max={r_max}, ratio={ratio}",
            max_levels=usable,
        )
    k0 = _resolve_center(grid, x0)
    grad0 = recover_gradient(u).values[k0]
    radii = r_max * ratio ** np.arange(levels)
    osc_c = np.array([sup_ball(u, k0, r, mode="centered") for r in radii])
    osc_l = np.array(
        [sup_ball(u, k0, r, mode="linear_corrected", g=grad0) for r in radii]
    )
    return OscillationProfile(
        x0_index=k0,
        x0=grid.nodes[k0].copy(),
        grad0=np.asarray(grad0, dtype=float),
        radii=radii,
        osc_centered=osc_c,
        osc_linear=osc_l,
    )


def fit_exponent(prof, which="centered"):
    """Least-squares growth exponent of log(osc) against log(r).

    Radii whose oscillation sits at the floating-point floor are trimmed; if
    fewer than 3 informative radii remain the field is flat around x0 and no
    exponent exists (DegenerateProfileError).
    """
    if which == "centered":
        osc = prof.osc_centered
    elif which == "linear_corrected":
        osc = prof.osc_linear
    else:
        raise ValueError(f"unknown oscillation kind '{which}'")
    keep = osc > FLAT_TRIM
    if keep.sum() < 3:
        raise DegenerateProfileError(
            f"only {int(keep.sum())} radii carry oscillation above {FLAT_TRIM}; "
            "the field is flat to machine precision around the base point"
        )
    x = np.log(prof.radii[keep])
    y = np.log(osc[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        radii_used=prof.radii[keep].copy(),
    )


def oscillation_bound(radii, grad0_norm, p):
    """Right-hand side r^{p'} (1 + |grad0| r^{1/(1-p)}) of the sharp bound."""
    pc = conjugate(p)
    radii = np.asarray(radii, dtype=float)
    return radii ** pc * (1.0 + grad0_norm * radii ** (1.0 / (1.0 - p)))


def crack_bound_constant(prof, p):
    """Smallest C with osc_centered(r_k) <= C r_k^{p'}(1 + |grad0| r_k^{1/(1-p)}).

    This is the max over measured radii of the oscillation-to-bound ratio;
    flat radii contribute 0.
    """
    if not p > 2.0:
        raise ValueError(f"crack_bound_constant requires p > 2, got p={p}")
    rhs = oscillation_bound(prof.radii, prof.grad0_norm, p)
    return float(np.max(prof.osc_centered / rhs))


def iteration_bound(k, lambda0, g, p):
    """Closed form of the k-step dyadic oscillation recursion.

    Propagating the one-scale estimate osc(lambda0 r) <= lambda0^{p'} +
    |grad| lambda0 through k scales gives

        a_k <= lambda0^{k p'} + g lambda0^k sum_{i=0}^{k-1} (lambda0^{p'-1})^i,

    returned here with the geometric sum in closed form.
    """
    if not (isinstance(k, (int, np.integer)) and k >= 0):
        raise ValueError(f"iteration_bound requires integer k >= 0, got {k}")
    if not (0.0 < lambda0 < 0.5):
        raise ValueError(f"lambda0 must lie in (0, 1/2), got {lambda0}")
    if g < 0.0:
        raise ValueError(f"gradient magnitude must be >= 0, got {g}")
    if not p > 2.0:
        raise ValueError(f"iteration_bound requires p > 2, got p={p}")
    pc = conjugate(p)
    q = lambda0 ** (pc - 1.0)
    partial = (1.0 - q ** k) / (1.0 - q)
    return lambda0 ** (k * pc) + g * lambda0 ** k * partial


def classify_point(u, x0, r, p):
    """'nondegenerate' when |grad0| > r^{1/(p-1)}, else 'critical'.

    At nondegenerate points the operator is uniformly elliptic at scale r;
    at critical points the sharp r^{p'} oscillation growth takes over.
    """
    grid = u.grid
    if r < grid.h * (1.0 - 1e-12):
        raise ResolutionError(f"classification radius {r} below the grid floor h={grid.h}")
    k0 = _resolve_center(grid, x0)
    g = recover_gradient(u).values[k0]
    gnorm = float(np.hypot(g[0], g[1]))
    return "nondegenerate" if gnorm > r ** (1.0 / (p - 1.0)) else "critical"
