"""Experiment runner: one subcommand per analysis path, reproducible outputs.

Exit codes: 0 success, 1 numerical failure or non-convergence (diagnostics
are still written), 2 configuration error.  Every output file carries the
artifact version and a hash of the resolved configuration; identical
configurations produce bit-identical files.  Report paths can render a
matplotlib figure next to the delimited output via --fig.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateProfileError,
    NodeLookupError,
    NumericalError,
    OutOfDomainError,
    ResolutionError,
)
from .exponents import ExponentSet, exponent_chain
from .experiments import convergence_study, corrector_experiment
from .grid import build_grid, load_csv, save_binary, save_csv
from .oscillation import (
    classify_point,
    crack_bound_constant,
    fit_exponent,
    oscillation_bound,
    profile,
)
from .quasiregular import (
    complex_gradient,
    gradient_mapping_defect,
    jacobian_check,
    kqr_defect,
    morrey_growth,
    nondegenerate_mask,
    wirtinger,
)
from .scaling import lambda_rescale, mu_rescale, theta_normalize
from .solver import ProblemSpec, SolverConfig, solve

_ARTIFACT = f"plaplab-{__version__}"

RHS_EXPRS = {
    "one": lambda x, y: 1.0,
    "sinpi2": lambda x, y: math.sin(math.pi * x) * math.sin(math.pi * y),
    "peak": lambda x, y: 2.0 - x * x - y * y,
}

BOUNDARY_EXPRS = {
    "zero": 0.0,
    "xlin": lambda x, y: x,
    "smooth": lambda x, y: x + 0.25 * math.sin(x) * math.cos(y),
}


def parse_rhs(text):
    if text.startswith("const:"):
        try:
            return float(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"rhs: malformed constant '{text}'")
    if text in RHS_EXPRS:
        return RHS_EXPRS[text]
    raise ConfigError(
        f"rhs: unknown expression id '{text}' (use const:<c> or one of {sorted(RHS_EXPRS)})"
    )


def parse_boundary(text):
    if text.startswith("affine:"):
        parts = text.split(":", 1)[1].split(",")
        if len(parts) != 3:
            raise ConfigError(f"boundary: affine data needs 3 coefficients, got '{text}'")
        try:
            a, b, c = (float(t) for t in parts)
        except ValueError:
            raise ConfigError(f"boundary: malformed affine coefficients '{text}'")
        return lambda x, y: a + b * x + c * y
    if text in BOUNDARY_EXPRS:
        return BOUNDARY_EXPRS[text]
    raise ConfigError(
        f"boundary: unknown id '{text}' (use affine:a,b,c or one of {sorted(BOUNDARY_EXPRS)})"
    )


def parse_x0(text, grid):
    if text == "origin":
        return grid.origin_index
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"x0: expected 'i,j' lattice indices or 'origin', got '{text}'")
    try:
        ix, iy = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"x0: malformed lattice indices '{text}'")
    return grid.index_of(ix, iy)


def _parse_float_list(text, key):
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise ConfigError(f"{key}: malformed number list '{text}'")


def _parse_int_list(text, key):
    try:
        return [int(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise ConfigError(f"{key}: malformed integer list '{text}'")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

#: file-location parameters: not part of the experiment identity (input files
#: contribute through their recorded config hash instead)
_NON_SEMANTIC = ("config", "func", "outdir", "out", "fig", "morrey_out",
                 "solution", "dump_binary")


def config_hash(args, input_hash=None):
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in _NON_SEMANTIC}
    if input_hash is not None:
        payload["input_config_hash"] = input_hash
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _resolve_path(args, name):
    if name is None:
        return None
    if os.path.isabs(name):
        path = name
    else:
        base = args.outdir or os.environ.get("PLAPLAB_OUTDIR") or "."
        path = os.path.join(base, name)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_table(path, columns, rows, chash):
    lines = [f"# artifact={_ARTIFACT}", f"# config_hash={chash}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, payload, chash):
    payload = dict(payload)
    payload["artifact"] = _ARTIFACT
    payload["config_hash"] = chash
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _sidecar(path):
    return os.path.splitext(path)[0] + ".json"


def _load_solution(path):
    u, meta = load_csv(path)
    return u, meta.get("config_hash")


def _solver_config(args):
    kwargs = {}
    for dest, field in (
        ("eps0", "eps0"),
        ("eps_min", "eps_min"),
        ("eps_factor", "eps_factor"),
        ("newton_tol", "newton_tol"),
        ("max_newton", "max_newton"),
    ):
        val = getattr(args, dest, None)
        if val is not None:
            kwargs[field] = val
    return SolverConfig(**kwargs)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def cmd_exponents(args):
    if not args.p_min > 2.0:
        raise ConfigError(f"p-min: the exponent chain needs p > 2, got {args.p_min}")
    if args.p_max < args.p_min:
        raise ConfigError("p-max: must be >= p-min")
    if args.steps < 1:
        raise ConfigError("steps: must be >= 1")
    chash = config_hash(args)
    ps = np.linspace(args.p_min, args.p_max, args.steps)
    rows = []
    for p in ps:
        es = ExponentSet.from_p(float(p))
        chain = exponent_chain(float(p))
        rows.append(
            (es.p, es.p_conj, es.alpha_star, es.alpha_bk, es.alpha_crit,
             es.tau0, es.c_radial, chain.passed)
        )
    out = _resolve_path(args, args.out)
    write_table(
        out,
        ["p", "p_conj", "alpha_star", "alpha_bk", "alpha_crit", "tau0",
         "c_radial_2d", "chain_pass"],
        rows,
        chash,
    )
    if args.fig:
        from .figures import exponent_figure

        exponent_figure(
            [r[0] for r in rows], [r[2] for r in rows], [r[3] for r in rows],
            [r[4] for r in rows], _resolve_path(args, args.fig),
        )
    return 0


def cmd_solve(args):
    chash = config_hash(args)
    grid = build_grid(args.n, use_disk_mask=(args.domain == "disk"))
    spec = ProblemSpec(grid, args.p, f=parse_rhs(args.rhs),
                       dirichlet=parse_boundary(args.boundary))
    result = solve(spec, _solver_config(args))
    out = _resolve_path(args, args.out)
    save_csv(result.u, out, metadata={"artifact": _ARTIFACT, "config_hash": chash})
    if args.dump_binary:
        save_binary(result.u, _resolve_path(args, args.dump_binary))
    write_json(
        _sidecar(out),
        {
            "residual_sup": result.residual_sup,
            "iterations": result.newton_iters_total,
            "eps_final": result.eps_final,
            "energy_history": result.energy_history,
            "stage_iters": result.stage_iters,
            "converged": result.converged,
            "message": result.message,
            "p": args.p,
            "n": args.n,
            "domain": args.domain,
        },
        chash,
    )
    if args.fig:
        from .figures import solution_figure

        solution_figure(result.u, _resolve_path(args, args.fig),
                        title=f"p={args.p} {args.domain} n={args.n}")
    return 0 if result.converged else 1


def cmd_oscillate(args):
    u, in_hash = _load_solution(args.solution)
    chash = config_hash(args, input_hash=in_hash)
    x0 = parse_x0(args.x0, u.grid)
    prof = profile(u, x0, args.rmax, levels=args.levels, ratio=args.ratio)
    bound = oscillation_bound(prof.radii, prof.grad0_norm, args.p)
    ratio_to_bound = prof.osc_centered / bound
    crack = crack_bound_constant(prof, args.p)
    fits = {}
    for which in ("centered", "linear_corrected"):
        try:
            fit = fit_exponent(prof, which)
            fits[which] = {
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "radii_used": list(fit.radii_used),
            }
        except DegenerateProfileError as exc:
            fits[which] = {"degenerate": str(exc)}
    out = _resolve_path(args, args.out)
    write_table(
        out,
        ["r", "osc_centered", "osc_linear", "bound_rhs", "ratio_to_bound"],
        list(zip(prof.radii, prof.osc_centered, prof.osc_linear, bound, ratio_to_bound)),
        chash,
    )
    write_json(
        _sidecar(out),
        {
            "x0": [float(prof.x0[0]), float(prof.x0[1])],
            "grad0": [float(prof.grad0[0]), float(prof.grad0[1])],
            "grad0_norm": prof.grad0_norm,
            "crack_bound_constant": crack,
            "classification_at_rmax": classify_point(u, x0, args.rmax, args.p),
            "fits": fits,
            "p": args.p,
        },
        chash,
    )
    if args.fig:
        from .figures import profile_figure

        slope = fits.get("centered", {}).get("slope")
        profile_figure(prof.radii, prof.osc_centered, prof.osc_linear, bound,
                       _resolve_path(args, args.fig), slope=slope)
    return 0


def _quantiles(values):
    if values.size == 0:
        return {"count": 0, "sup_positive": 0.0, "q50": 0.0, "q90": 0.0, "max": 0.0}
    pos = np.maximum(values, 0.0)
    return {
        "count": int(values.size),
        "sup_positive": float(np.max(pos)),
        "q50": float(np.quantile(values, 0.5)),
        "q90": float(np.quantile(values, 0.9)),
        "max": float(np.max(values)),
    }


def cmd_qr(args):
    u, in_hash = _load_solution(args.solution)
    chash = config_hash(args, input_hash=in_hash)
    field = wirtinger(complex_gradient(u))
    eligible = field.valid_mask & nondegenerate_mask(u, args.threshold)
    kqr = kqr_defect(field, args.p)
    jac = jacobian_check(field, args.p)
    im_sup, lap_sup = gradient_mapping_defect(field, u)
    radii = [r for r in _parse_float_list(args.morrey_radii, "morrey-radii")
             if r > 2.0 * u.grid.h * (1.0 + 1e-12)]
    ratios = morrey_growth(field, args.p, radii) if radii else np.array([])
    out = _resolve_path(args, args.out)
    write_json(
        out,
        {
            "p": args.p,
            "gradient_threshold": args.threshold,
            "kqr_defect": _quantiles(kqr.values[eligible]),
            "jacobian_violation": _quantiles(jac.values[eligible]),
            "gradient_mapping": {"im_sup": im_sup, "laplace_sup": lap_sup},
            "valid_nodes": int(field.valid_mask.sum()),
            "eligible_nodes": int(eligible.sum()),
        },
        chash,
    )
    morrey_out = args.morrey_out or os.path.splitext(args.out)[0] + "_morrey.csv"
    write_table(
        _resolve_path(args, morrey_out),
        ["r", "ratio"],
        list(zip(radii, ratios)),
        chash,
    )
    if args.fig and radii:
        from .figures import morrey_figure

        morrey_figure(radii, ratios, _resolve_path(args, args.fig))
    return 0


def cmd_rescale(args):
    u, in_hash = _load_solution(args.solution)
    chash = config_hash(args, input_hash=in_hash)
    x0 = parse_x0(args.x0, u.grid)
    if args.kind == "theta":
        v, f_tilde, record = theta_normalize(u, parse_rhs(args.rhs), args.p,
                                             delta0=args.delta0)
    elif args.kind == "lambda":
        v, record = lambda_rescale(u, x0, args.lambda0, args.p)
    else:
        v, record = mu_rescale(u, x0, args.p)
    out = _resolve_path(args, args.out)
    save_csv(v, out, metadata={"artifact": _ARTIFACT, "config_hash": chash})
    write_json(
        _sidecar(out),
        {
            "kind": record.kind,
            "factor": record.factor,
            "value_scale": record.value_scale,
            "claimed_rhs_bound": record.claimed_rhs_bound,
            "source_point": list(record.source_point),
        },
        chash,
    )
    return 0


def cmd_corrector(args):
    chash = config_hash(args)
    f_values = _parse_float_list(args.f_values, "f-values")
    rows = corrector_experiment(
        args.p, f_values, args.n, domain=args.domain,
        dirichlet=parse_boundary(args.boundary), config=_solver_config(args),
    )
    out = _resolve_path(args, args.out)
    write_table(
        out,
        ["f_sup", "xi_sup", "xi_grad_sup", "solve_converged", "replacement_converged"],
        [(r.f_sup, r.xi_sup, r.xi_grad_sup, r.solve_converged, r.replacement_converged)
         for r in rows],
        chash,
    )
    if args.fig:
        from .figures import corrector_figure

        pos = [r for r in rows if r.f_sup > 0]
        if pos:
            corrector_figure([r.f_sup for r in pos], [r.xi_sup for r in pos],
                             [r.xi_grad_sup for r in pos], _resolve_path(args, args.fig))
    return 0 if all(r.solve_converged and r.replacement_converged for r in rows) else 1


def cmd_convergence(args):
    chash = config_hash(args)
    ns = _parse_int_list(args.ns, "ns")
    rows = convergence_study(args.p, ns, config=_solver_config(args))
    out = _resolve_path(args, args.out)
    write_table(
        out,
        ["n", "h", "linf_error", "ratio"],
        [(r.n, r.h, r.linf_error, r.ratio) for r in rows],
        chash,
    )
    if args.fig:
        from .figures import convergence_figure

        convergence_figure([r.h for r in rows], [r.linf_error for r in rows],
                           _resolve_path(args, args.fig))
    return 0


# ---------------------------------------------------------------------------
# parser construction and dispatch
# ---------------------------------------------------------------------------

def _add_common(sp):
    sp.add_argument("--outdir", default=None, help="output directory (env PLAPLAB_OUTDIR)")
    sp.add_argument("--config", default=None, help="JSON or TOML config file; flags win")
    sp.add_argument("--seed", type=int, default=0, help="seed recorded for reproducibility")


def _add_solver_flags(sp):
    sp.add_argument("--eps0", type=float, default=None)
    sp.add_argument("--eps-min", dest="eps_min", type=float, default=None)
    sp.add_argument("--eps-factor", dest="eps_factor", type=float, default=None)
    sp.add_argument("--newton-tol", dest="newton_tol", type=float, default=None)
    sp.add_argument("--max-newton", dest="max_newton", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plaplab",
        description="2-D degenerate p-Poisson laboratory",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    sp = subs.add_parser("exponents", help="tabulate sharp exponents and the chain check")
    sp.add_argument("--p-min", dest="p_min", type=float, default=2.1)
    sp.add_argument("--p-max", dest="p_max", type=float, default=10.0)
    sp.add_argument("--steps", type=int, default=50)
    sp.add_argument("--out", default="exponents.csv")
    sp.add_argument("--fig", default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_exponents)
    table["exponents"] = sp

    sp = subs.add_parser("solve", help="solve the p-Poisson problem")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--rhs", default="const:1")
    sp.add_argument("--domain", choices=("square", "disk"), default="disk")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--boundary", default="zero")
    sp.add_argument("--out", default="solution.csv")
    sp.add_argument("--dump-binary", dest="dump_binary", default=None,
                    help="also write the flat binary grid dump")
    sp.add_argument("--fig", default=None)
    _add_solver_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_solve)
    table["solve"] = sp

    sp = subs.add_parser("oscillate", help="oscillation profile and exponent fit")
    sp.add_argument("--solution", required=True)
    sp.add_argument("--x0", default="origin")
    sp.add_argument("--rmax", type=float, default=0.25)
    sp.add_argument("--levels", type=int, default=5)
    sp.add_argument("--ratio", type=float, default=0.5)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--out", default="profile.csv")
    sp.add_argument("--fig", default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_oscillate)
    table["oscillate"] = sp

    sp = subs.add_parser("qr", help="quasiregular structure report")
    sp.add_argument("--solution", required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--threshold", type=float, default=0.1)
    sp.add_argument("--morrey-radii", dest="morrey_radii", default="0.5,0.25,0.125")
    sp.add_argument("--morrey-out", dest="morrey_out", default=None)
    sp.add_argument("--out", default="qr_report.json")
    sp.add_argument("--fig", default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_qr)
    table["qr"] = sp

    sp = subs.add_parser("rescale", help="theta/lambda/mu change of variables")
    sp.add_argument("--kind", choices=("theta", "lambda", "mu"), required=True)
    sp.add_argument("--solution", required=True)
    sp.add_argument("--x0", default="origin")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--lambda0", type=float, default=0.25)
    sp.add_argument("--delta0", type=float, default=1.0)
    sp.add_argument("--rhs", default="const:1", help="source used by the theta transform")
    sp.add_argument("--out", default="rescaled.csv")
    _add_common(sp)
    sp.set_defaults(func=cmd_rescale)
    table["rescale"] = sp

    sp = subs.add_parser("corrector", help="corrector smallness sweep over ||f||")
    sp.add_argument("--p", type=float, default=3.0)
    sp.add_argument("--n", type=int, default=32)
    sp.add_argument("--domain", choices=("square", "disk"), default="disk")
    sp.add_argument("--boundary", default="zero")
    sp.add_argument("--f-values", dest="f_values", default="1,0.1,0.01")
    sp.add_argument("--out", default="corrector.csv")
    sp.add_argument("--fig", default=None)
    _add_solver_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_corrector)
    table["corrector"] = sp

    sp = subs.add_parser("convergence", help="radial benchmark refinement study")
    sp.add_argument("--p", type=float, default=3.0)
    sp.add_argument("--ns", default="32,64,128")
    sp.add_argument("--out", default="convergence.csv")
    sp.add_argument("--fig", default=None)
    _add_solver_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_convergence)
    table["convergence"] = sp

    return parser, table


def _load_config_file(path):
    if not os.path.exists(path):
        raise ConfigError(f"config: file '{path}' not found")
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:      # Python < 3.11
            import tomli as tomllib

        with open(path, "rb") as fh:
            try:
                return tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"config: malformed TOML ({exc})")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: malformed JSON ({exc})")


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser, table = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            cfg = _load_config_file(args.config)
            sub = table[args.command]
            allowed = {a.dest for a in sub._actions if a.dest != "help"}
            for key in cfg:
                if key not in allowed:
                    raise ConfigError(f"config: unknown key '{key}' for '{args.command}'")
            sub.set_defaults(**cfg)
            args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ResolutionError, NodeLookupError, OutOfDomainError,
            DegenerateInputError, DegenerateProfileError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
