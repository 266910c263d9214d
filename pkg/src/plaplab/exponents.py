"""Closed-form exponents and constants of planar degenerate p-Laplacian regularity.

For p > 2 the sharp gradient Hölder exponents relevant to the 2-D p-Poisson
problem -div(|grad u|^{p-2} grad u) = f, f bounded, form a strict chain

    alpha_star(p) > alpha_bk(p) > 1/(p-1),

where alpha_star is the optimal exponent for planar p-harmonic functions,
alpha_bk is the (smaller) exponent coming from the quasiregular-gradient
route that ships with uniform estimates, and 1/(p-1) = p' - 1 is the
exponent of the radial extremal profile c_p (1 - |x|^{p'}).  All formulas
are evaluated in ordinary 64-bit floating point.
"""

from dataclasses import dataclass
import math

__all__ = [
    "conjugate",
    "alpha_star",
    "alpha_bk",
    "alpha_crit",
    "exponent_chain",
    "radial_constant",
    "tau0",
    "ChainReport",
    "ExponentSet",
]

#: multiplicative safety margin keeping tau0 strictly inside its window
_TAU0_SHRINK = 1.0 - 1e-9


def conjugate(p):
    """Conjugate exponent p' = p/(p-1), the unique q with p + q = p*q.

    Raises ValueError for p <= 1 (no conjugate exists).
    """
    if not p > 1.0:
        raise ValueError(f"conjugate exponent requires p > 1, got p={p}")
    return p / (p - 1.0)


def alpha_star(p):
    """Optimal gradient Hölder exponent of planar p-harmonic functions.

    alpha_star(p) = (1/6) * ( p/(p-1) + sqrt(1 + 14/(p-1) + 1/(p-1)^2) ).

    Defined for p >= 2; alpha_star(2) = 1 is the exact uniformly elliptic
    anchor, and alpha_star -> 1/3 as p -> infinity.
    """
    if not p >= 2.0:
        raise ValueError(f"alpha_star requires p >= 2, got p={p}")
    s = 1.0 / (p - 1.0)
    return (p * s + math.sqrt(1.0 + 14.0 * s + s * s)) / 6.0


def alpha_bk(p):
    """Gradient Hölder exponent available with uniform local estimates.

    alpha_bk(p) = (1/(2p)) * ( -3 - 1/(p-1) + sqrt(33 + 30/(p-1) + 1/(p-1)^2) ).

    This is the exponent produced by the K-quasiregular-gradient argument
    (K = p - 1); it is smaller than alpha_star(p) but comes with explicit
    constants, which is what the oscillation machinery needs.
    """
    if not p >= 2.0:
        raise ValueError(f"alpha_bk requires p >= 2, got p={p}")
    s = 1.0 / (p - 1.0)
    return (-3.0 - s + math.sqrt(33.0 + 30.0 * s + s * s)) / (2.0 * p)


def alpha_crit(p):
    """Critical exponent 1/(p-1) = p' - 1 realized by the radial extremal."""
    if not p > 1.0:
        raise ValueError(f"alpha_crit requires p > 1, got p={p}")
    return 1.0 / (p - 1.0)


@dataclass(frozen=True)
class ChainReport:
    """Strict-inequality report alpha_star > alpha_bk > 1/(p-1) at one p."""

    p: float
    alpha_star: float
    alpha_bk: float
    alpha_crit: float
    margin_star_bk: float
    margin_bk_crit: float
    passed: bool


def exponent_chain(p):
    """Evaluate the exponent chain at p > 2 and check both strict margins.

    Raises ValueError for p <= 2: at p = 2 all three exponents collapse to 1
    and the chain degenerates to equality.
    """
    if not p > 2.0:
        raise ValueError(f"exponent_chain requires p > 2, got p={p}")
    a_star = alpha_star(p)
    a_bk = alpha_bk(p)
    a_crit = alpha_crit(p)
    m1 = a_star - a_bk
    m2 = a_bk - a_crit
    return ChainReport(
        p=p,
        alpha_star=a_star,
        alpha_bk=a_bk,
        alpha_crit=a_crit,
        margin_star_bk=m1,
        margin_bk_crit=m2,
        passed=(m1 > 0.0 and m2 > 0.0),
    )


def radial_constant(d, p):
    """Constant c_p with -div(|grad u|^{p-2} grad u) = 1 for u = c_p (1 - |x|^{p'}).

    On the unit ball of R^d the radial computation gives (c_p p')^{p-1} d = 1,
    hence c_p = d^{-1/(p-1)} / p' = d^{-1/(p-1)} (p-1)/p.
    """
    if not (isinstance(d, int) and d >= 2):
        raise ValueError(f"radial_constant requires integer dimension d >= 2, got d={d}")
    if not p > 2.0:
        raise ValueError(f"radial_constant requires p > 2, got p={p}")
    return d ** (-1.0 / (p - 1.0)) * (p - 1.0) / p


def tau0(p):
    """Margin tau0 with p-harmonic functions locally C^{p' + tau0}, p > 2.

    Chosen as the largest value compatible with both constraints
    0 < tau0 < (p-2)/(p-1) and 1/(p-1) + tau0 <= alpha_bk(p), shrunk by a
    relative 1e-9 so the inequalities stay strict in floating point.
    """
    if not p > 2.0:
        raise ValueError(f"tau0 requires p > 2, got p={p}")
    window = min(alpha_bk(p) - alpha_crit(p), (p - 2.0) / (p - 1.0))
    return window * _TAU0_SHRINK


@dataclass(frozen=True)
class ExponentSet:
    """Every exponent and constant the analysis attaches to a single p.

    Built for p >= 2; the chain margins are meaningful only for p > 2
    (at p = 2 all exponents equal 1 and tau0 degenerates to 0).
    """

    p: float
    p_conj: float
    alpha_star: float
    alpha_bk: float
    alpha_crit: float
    tau0: float
    c_radial: float

    @classmethod
    def from_p(cls, p):
        if not p >= 2.0:
            raise ValueError(f"ExponentSet requires p >= 2, got p={p}")
        if p > 2.0:
            t = tau0(p)
            c = radial_constant(2, p)
        else:
            t = 0.0
            # closed form continues analytically to p = 2 (classical 1/(2d))
            c = 2.0 ** (-1.0 / (p - 1.0)) * (p - 1.0) / p
        return cls(
            p=p,
            p_conj=conjugate(p),
            alpha_star=alpha_star(p),
            alpha_bk=alpha_bk(p),
            alpha_crit=alpha_crit(p),
            tau0=t,
            c_radial=c,
        )
