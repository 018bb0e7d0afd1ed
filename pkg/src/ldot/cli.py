"""Command-line entry point ``ldot``.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge,
4 infeasible problem.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .costs import CramerFamily, cost_matrix, cramer_closed, parse_cost
from .experiments import (Config, Instance, double_limit, gamma_sweep, instance_from_config,
                          schedule_from_config)
from .legendre import GridFunction1D, cramer_numeric, lft
from .measures import DiscreteMeasure, canonical_family
from .noise import noise_for_cost
from .particles import estimate_ldp_slope
from .solvers import InfeasibleError, PenaltyProblem, solve_mk_lp, solve_mkk_alpha, solve_tk_sinkhorn

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE, EXIT_INFEASIBLE = 0, 2, 3, 4


class NotConverged(RuntimeError):
    pass


def _grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        n = int(n)
    except ValueError:
        raise ValueError(f"grid must look like a:b:n, got {text!r}") from None
    if n < 1:
        raise ValueError("grid needs at least one point")
    return np.linspace(float(a), float(b), n)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _meta(raw: bytes, seed) -> dict:
    return {"config": io.config_hash(raw), "version": io.version_tag(),
            "seed": "none" if seed is None else seed}


def _argv_bytes(args) -> bytes:
    items = sorted((k, str(v)) for k, v in vars(args).items() if k not in ("func", "out"))
    return repr(items).encode()


def _check(rep):
    if not rep.converged:
        raise NotConverged(f"solver stopped at the iteration cap (residual {rep.residual:.3g})")
    return rep


def _report_json(rep, args) -> str:
    d = io.report_to_dict(rep)
    d["meta"] = _meta(_argv_bytes(args), None)
    return io.dumps(d)


def _pair(args):
    mu, nu = io.read_measure(args.mu), io.read_measure(args.nu)
    return mu, nu, parse_cost(args.cost)


def cmd_solve(args):
    mu, nu, cost = _pair(args)
    rep = _check(solve_mk_lp(mu, nu, cost_matrix(cost, mu, nu)))
    _emit(_report_json(rep, args), args.out)


def _instance(mu, nu, cost, m, mode):
    return Instance(mu, nu, cost, canonical_family(m, mu, nu), mode, noise_for_cost(cost, mu.dim))


def cmd_entropic(args):
    mu, nu, cost = _pair(args)
    inst = _instance(mu, nu, cost, 2, args.mode)
    rep = _check(solve_tk_sinkhorn(mu, nu, inst.kernel(args.k), tol=args.tol,
                                   max_iters=args.max_iters))
    _emit(_report_json(rep, args), args.out)


def cmd_penalized(args):
    mu, nu, cost = _pair(args)
    key, _, val = args.testfam.partition("=")
    if key.strip() != "m" or not val.strip().isdigit():
        raise ValueError("--testfam must look like m=INT")
    inst = _instance(mu, nu, cost, int(val), args.mode)
    pen = PenaltyProblem(args.alpha, inst.fam, nu)
    rep = _check(solve_mkk_alpha(mu, nu, inst.kernel(args.k), pen))
    _emit(_report_json(rep, args), args.out)


def cmd_anneal(args):
    cfg = Config.load(args.config)
    inst = instance_from_config(cfg)
    sch = schedule_from_config(cfg)
    rows = gamma_sweep(inst, sch["ks"], tol=sch["tol"], timing=sch["timing"])
    table = [(r.k, r.value, r.gap_to_limit, r.iterations, r.seconds) for r in rows]
    _emit(io.table_to_csv(["k", "value", "gap", "iters", "seconds"], table,
                          _meta(cfg.raw, cfg.seed)), args.out)


def cmd_doublelimit(args):
    cfg = Config.load(args.config)
    inst = instance_from_config(cfg)
    sch = schedule_from_config(cfg)
    rows = double_limit(inst, sch["ks"], sch["alphas"])
    table = [(r.k, r.alpha, r.value, r.gap_to_limit, r.gap_mk) for r in rows]
    _emit(io.table_to_csv(["k", "alpha", "value", "gap_alpha", "gap_mk"], table,
                          _meta(cfg.raw, cfg.seed)), args.out)


def cmd_particles(args):
    cfg = Config.load(args.config)
    inst = instance_from_config(cfg)
    p = cfg.data.get("particles", {})
    for key in ("k", "n_values", "replicates", "delta"):
        if key not in p:
            raise ValueError(f"[particles] misses {key}")
    support = p.get("support")
    fam = inst.fam
    if "family_support" in p:
        fam = canonical_family(int(p.get("m", 2)), DiscreteMeasure.uniform(p["family_support"]))
    est = estimate_ldp_slope(inst.mu, inst.nu, inst.noise, int(p["k"]), p["n_values"],
                             int(p["replicates"]), float(p["delta"]), fam, cfg.seed,
                             pilot=int(p.get("pilot", 10_000)), bootstrap=int(p.get("bootstrap", 400)),
                             support=None if support is None else np.asarray(support, dtype=float))
    meta = _meta(cfg.raw, cfg.seed)
    meta.update({"slope": io.fmt(est.slope), "slope_stderr": io.fmt(est.slope_stderr),
                 "reference_rate": io.fmt(est.reference_rate),
                 "relative_error": io.fmt(est.relative_error), "reliable": str(est.reliable)})
    table = [(n, est.replicates, h, lp, se)
             for n, h, lp, se in zip(est.n_values, est.hits, est.log_prob_estimates, est.stderr)]
    _emit(io.table_to_csv(["n", "replicates", "hits", "log_prob", "stderr"], table, meta), args.out)


def cmd_cramer(args):
    fam = CramerFamily(args.family, args.a, args.b)
    u = _grid(args.grid)
    zeta = _grid(args.mgf_grid)
    lm = fam.log_mgf(zeta)
    ok = np.isfinite(lm)
    numeric = cramer_numeric(GridFunction1D(zeta[ok], lm[ok]), u, method="envelope").values
    closed = np.asarray(cramer_closed(fam, u), dtype=float)
    with np.errstate(invalid="ignore"):
        diff = np.where(closed == numeric, 0.0, np.abs(closed - numeric))
    table = list(zip(u, closed, numeric, diff))
    _emit(io.table_to_csv(["u", "closed", "numeric", "abs_diff"], table,
                          _meta(_argv_bytes(args), None)), args.out)


def cmd_legendre(args):
    f = io.gridfunction_from_csv(Path(args.infile).read_text(encoding="utf-8"))
    g = lft(f, _grid(args.dual), method=args.method)
    _emit(io.gridfunction_to_csv(g), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldot", description="Discrete optimal transport lab.")
    sub = ap.add_subparsers(dest="command", required=True)

    def pair(p):
        p.add_argument("--mu", required=True, help="source measure CSV (x1..xd,weight)")
        p.add_argument("--nu", required=True, help="target measure CSV")
        p.add_argument("--cost", required=True, help='e.g. quadratic, "power:p=3", "cramer:family=poisson"')
        p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("solve", help="exact Monge-Kantorovich problem")
    pair(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("entropic", help="rescaled entropic cost T_k")
    pair(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=["gibbs", "density"], default="gibbs")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.set_defaults(func=cmd_entropic)

    p = sub.add_parser("penalized", help="penalized entropic problem MK_k^alpha")
    pair(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--testfam", default="m=8", help="m=INT test functions")
    p.add_argument("--mode", choices=["gibbs", "density"], default="gibbs")
    p.set_defaults(func=cmd_penalized)

    for name, func, text in [("anneal", cmd_anneal, "T_k sweep over k"),
                             ("doublelimit", cmd_doublelimit, "MK_k^alpha over k and alpha"),
                             ("particles", cmd_particles, "Monte Carlo large-deviation slope")]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("cramer", help="closed-form vs numeric Cramer transform")
    p.add_argument("--family", required=True)
    p.add_argument("--grid", required=True, help="u grid a:b:n")
    p.add_argument("--mgf-grid", default="-30:30:60001", help="log-MGF sampling grid a:b:n")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cramer)

    p = sub.add_parser("legendre", help="discrete Legendre-Fenchel transform of a y,value CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dual", required=True, help="dual grid a:b:n")
    p.add_argument("--method", choices=["direct", "envelope"], default="envelope")
    p.add_argument("--out")
    p.set_defaults(func=cmd_legendre)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NotConverged as e:
        print(f"not converged: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, KeyError, OSError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
