"""Command line entry point: ``toepspec <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings

import numpy as np

from . import harness
from .harness import ExperimentConfig, HarnessError, thread_limit
from .matrices import dump_matrix, noise_model, perturbed, sample_noise
from .quasimodes import quasimode_basis
from .regions import LocationParams, c_hat, location_stats
from .spectral import eigenpairs, gap_report
from .symbol import (as_symbol, bad_sets, branch_points, curve_diameter, parse_symbol,
                     roots_at)
from .symfunc import det_expansion

log = logging.getLogger("toepspec")


def parse_complex(text):
    """``"1.5,-0.2"`` or a Python complex literal like ``"1.5-0.2j"``."""
    t = text.strip().replace(" ", "")
    if "," in t:
        re_, im = t.split(",", 1)
        return complex(float(re_), float(im))
    return complex(t)


def _cx(z):
    return [float(z.real), float(z.imag)]


def _emit(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _large_guard(args):
    if args.n > harness.DESK_MAX_N and not args.large:
        raise HarnessError(f"N > {harness.DESK_MAX_N} needs --large")
    if args.n > harness.DESK_MAX_N:
        warnings.warn(f"N={args.n} beyond desk scale; expect long runtimes", stacklevel=2)


# -- subcommands --------------------------------------------------------------------

def cmd_symbol_info(args):
    sym = parse_symbol(args.symbol)
    crit, b2 = branch_points(sym)
    bad = bad_sets(sym)
    out = {"literal": sym.to_literal(), "N_plus": sym.n_plus, "N_minus": sym.n_minus,
           "g0": sym.g0, "width": sym.width, "curve_diameter": curve_diameter(sym),
           "critical_points": [_cx(c) for c in crit], "b1": [_cx(b) for b in bad.b1],
           "b2": [_cx(b) for b in b2]}
    if args.z:
        pts = []
        for zt in args.z:
            z = parse_complex(zt)
            prof = roots_at(sym, z)
            pts.append({"z": _cx(z), "winding": prof.winding, "on_curve": prof.on_curve,
                        "m_plus": prof.m_plus, "m_minus": prof.m_minus,
                        "roots": [_cx(r) for r in prof.roots]})
        out["points"] = pts
    _emit(out, args.out)
    return 0


def cmd_spectrum(args):
    _large_guard(args)
    smp = perturbed(args.symbol, args.n, args.gamma, args.seed, noise_model(args.noise))
    if args.vectors:
        w, v = eigenpairs(smp.matrix)
    else:
        w, v = eigenpairs(smp.matrix, vectors=False), None
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        wr = csv.writer(fh, lineterminator="\n")
        extra = [f"abs_v{nu + 1}" for nu in range(args.n)] if v is not None else []
        wr.writerow(["re", "im"] + extra)
        for i, lam in enumerate(w):
            row = [repr(float(lam.real)), repr(float(lam.imag))]
            if v is not None:
                row += [repr(float(x)) for x in np.abs(v[:, i])]
            wr.writerow(row)
    finally:
        if args.out:
            fh.close()
    if args.dump:
        dump_matrix(args.dump, smp.matrix, kind="generic")
    if args.figures:
        from .plotting import eigenvalue_cloud
        import os

        os.makedirs(args.figures, exist_ok=True)
        eigenvalue_cloud(args.symbol, w, os.path.join(args.figures, "spectrum.png"))
    return 0


def cmd_gaps(args):
    z = parse_complex(args.z)
    _emit(gap_report(args.symbol, z, args.n).as_dict(), args.out)
    return 0


def cmd_quasimodes(args):
    z = parse_complex(args.z)
    qb = quasimode_basis(args.symbol, z, args.n)
    out = {"z": _cx(z), "n": args.n, "d": qb.d, "side": qb.side, "N0": qb.N0,
           "class_1": qb.class_1, "class_2": qb.class_2,
           "residuals": [float(r) for r in qb.residuals], "gram_error": qb.gram_error}
    _emit(out, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["nu"] + [f"psi{j + 1}" for j in range(qb.psi.shape[1])])
            for nu in range(args.n):
                wr.writerow([nu + 1] + [repr(float(x)) for x in np.abs(qb.psi[nu])])
    if args.figures:
        import os

        from .plotting import eigenvector_profiles

        os.makedirs(args.figures, exist_ok=True)
        eigenvector_profiles(np.abs(qb.psi), os.path.join(args.figures, "quasimodes.png"))
    return 0


def cmd_detexp(args):
    z = parse_complex(args.z)
    q = sample_noise(noise_model(args.noise), args.n, args.seed)
    de = det_expansion(args.symbol, z, args.gamma, q, seed=args.seed)
    _emit({"z": _cx(z), "n": args.n, "gamma": args.gamma, "seed": args.seed, "k0": de.k0,
           "branch": de.branch, "sum_residual": de.sum_residual, "terms": de.records()}, args.out)
    return 0


def _cloud(args):
    _large_guard(args)
    sym = as_symbol(args.symbol)
    smp = perturbed(sym, args.n, args.gamma, args.seed, noise_model(args.noise))
    return sym, smp


def cmd_tubes(args):
    sym, smp = _cloud(args)
    w = eigenpairs(smp.matrix, vectors=False)
    bad = bad_sets(sym, radius=args.epsilon)
    gp = args.gamma_prime or ((1 + args.gamma) / 2 if args.gamma > 1 else 1.25)
    params = LocationParams(N=args.n, epsilon=args.epsilon, C=args.C, gamma_prime=gp,
                            c_hat=c_hat(sym, gp, bad=bad))
    ls = location_stats(w, sym, bad, params)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["re", "im", "class", "dist_scaled"])
            for r in ls.records:
                wr.writerow([repr(r["re"]), repr(r["im"]), r["class"], repr(r["dist_scaled"])])
    _emit(ls.as_dict(), args.out)
    return 0


def cmd_localize(args):
    sym, smp = _cloud(args)
    w, v = eigenpairs(smp.matrix)
    if args.z0 is not None:
        z0 = parse_complex(args.z0)
        idx = np.argsort(np.abs(w - z0), kind="stable")[:args.count]
    else:
        idx = np.linspace(0, args.n - 1, args.count).round().astype(int)
    reports = []
    for i in sorted(int(j) for j in idx):
        d = roots_at(sym, w[i]).winding or 0
        reports.append(harness.localization_report(v[:, i], w[i], sym, d).as_dict())
    _emit({"n": args.n, "gamma": args.gamma, "seed": args.seed, "reports": reports}, args.out)
    return 0


def cmd_experiment(args):
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    over = {"N": args.n, "gamma": args.gamma, "seed": args.seed, "trials": args.trials,
            "out_dir": args.out, "workers": args.workers, "noise": args.noise,
            "symbol": args.symbol}
    base.update({k: v for k, v in over.items() if v is not None})
    if args.large:
        base["large"] = True
    cfg = ExperimentConfig.from_dict(base)
    keep = bool(args.figures)
    summary, code, samples = harness.run_experiment(cfg, keep_samples=keep)
    if keep:
        from .plotting import experiment_figures

        experiment_figures(cfg, samples, args.figures)
    sys.stdout.write(json.dumps({"n_ok": summary["n_ok"], "failures": summary["failures"],
                                 "medians": summary["medians"]}, sort_keys=True) + "\n")
    return code


# -- parser ----------------------------------------------------------------------

def _common(p, n_default=256, gamma=True):
    p.add_argument("--n", type=int, default=n_default)
    if gamma:
        p.add_argument("--gamma", type=float, default=1.2)
        p.add_argument("--noise", default="complex_gaussian")
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")


def build_parser():
    ap = argparse.ArgumentParser(prog="toepspec", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("symbol-info", help="band data, bad sets, roots at points")
    p.add_argument("symbol")
    p.add_argument("--z", action="append", help="point re,im (repeatable)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_symbol_info)

    p = sub.add_parser("spectrum", help="eigenvalues of a perturbed Toeplitz matrix (CSV)")
    p.add_argument("symbol")
    _common(p)
    p.add_argument("--large", action="store_true")
    p.add_argument("--vectors", action="store_true", help="append |v| columns per eigenvalue")
    p.add_argument("--dump", default=None, help="also dump the perturbed matrix")
    p.add_argument("--figures", default=None, metavar="DIR")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gaps", help="singular value splitting at z")
    p.add_argument("symbol")
    p.add_argument("--z", required=True)
    _common(p, gamma=False)
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("quasimodes", help="quasimode residuals at z")
    p.add_argument("symbol")
    p.add_argument("--z", required=True)
    _common(p, gamma=False)
    p.add_argument("--csv", default=None, help="per-mode profile CSV (nu, |psi_j(nu)|)")
    p.add_argument("--figures", default=None, metavar="DIR")
    p.set_defaults(func=cmd_quasimodes)

    p = sub.add_parser("detexp", help="noise expansion det_k(z) (JSON)")
    p.add_argument("symbol")
    p.add_argument("--z", required=True)
    _common(p, n_default=64)
    p.set_defaults(func=cmd_detexp)

    p = sub.add_parser("tubes", help="classify eigenvalues (good / forbidden / other)")
    p.add_argument("symbol")
    _common(p)
    p.add_argument("--epsilon", type=float, default=0.15)
    p.add_argument("--C", type=float, default=8.0)
    p.add_argument("--gamma-prime", type=float, default=None)
    p.add_argument("--csv", default=None, help="per-eigenvalue CSV")
    p.add_argument("--large", action="store_true")
    p.set_defaults(func=cmd_tubes)

    p = sub.add_parser("localize", help="localization reports for eigenvectors")
    p.add_argument("symbol")
    _common(p)
    p.add_argument("--z0", default=None)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--large", action="store_true")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("experiment", help="seeded Monte Carlo run from a JSON config")
    p.add_argument("--config", default=None)
    p.add_argument("--symbol", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--noise", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--large", action="store_true")
    p.add_argument("--figures", default=None, metavar="DIR", help="also write PNG figures")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with thread_limit():
            return args.func(args)
    except Exception as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        if args.verbose:
            raise
        return 1


if __name__ == "__main__":
    sys.exit(main())
