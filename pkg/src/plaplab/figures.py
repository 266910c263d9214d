"""Matplotlib rendering of report tables to figure files.

Every CLI report path can render a figure next to its delimited output; the
functions here keep that rendering deterministic (fixed size, fixed dpi, no
timestamps) so repeated runs produce identical files.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import matplotlib.tri as mtri
import numpy as np

__all__ = [
    "solution_figure",
    "profile_figure",
    "exponent_figure",
    "convergence_figure",
    "corrector_figure",
    "morrey_figure",
]

_DPI = 150


def _save(fig, path):
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def solution_figure(u, path, title=None):
    grid = u.grid
    tri = mtri.Triangulation(
        grid.nodes[:, 0], grid.nodes[:, 1], grid.triangles[grid.tri_active]
    )
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    im = ax.tripcolor(tri, u.values, shading="gouraud", cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    _save(fig, path)


def profile_figure(radii, osc_centered, osc_linear, bound_rhs, path, slope=None):
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.loglog(radii, osc_centered, "o-", label="centered")
    pos = np.asarray(osc_linear) > 0
    if pos.any():
        ax.loglog(np.asarray(radii)[pos], np.asarray(osc_linear)[pos], "s-", label="linear-corrected")
    ax.loglog(radii, bound_rhs, "k--", label="bound rhs")
    ax.set_xlabel("r")
    ax.set_ylabel("oscillation")
    if slope is not None:
        ax.set_title(f"fitted growth exponent {slope:.3f}")
    ax.legend()
    _save(fig, path)


def exponent_figure(ps, a_star, a_bk, a_crit, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.plot(ps, a_star, label="alpha_star")
    ax.plot(ps, a_bk, label="alpha_bk")
    ax.plot(ps, a_crit, label="1/(p-1)")
    ax.set_xlabel("p")
    ax.set_ylabel("exponent")
    ax.legend()
    _save(fig, path)


def convergence_figure(hs, errors, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.loglog(hs, errors, "o-", label="sup error")
    hs = np.asarray(hs, dtype=float)
    ref = errors[0] * (hs / hs[0])
    ax.loglog(hs, ref, "k--", label="O(h)")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.legend()
    _save(fig, path)


def corrector_figure(f_sups, xi_sups, xi_grad_sups, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.loglog(f_sups, xi_sups, "o-", label="||xi||")
    ax.loglog(f_sups, xi_grad_sups, "s-", label="||grad xi||")
    ax.set_xlabel("||f||")
    ax.set_ylabel("corrector size")
    ax.legend()
    _save(fig, path)


def morrey_figure(radii, ratios, path):
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.semilogx(radii, ratios, "o-")
    ax.axhline(1.0, color="k", linestyle="--", linewidth=0.8)
    ax.set_xlabel("r")
    ax.set_ylabel("growth ratio")
    _save(fig, path)
