"""Command-line entry point.

Exit codes: 0 success / statistical pass, 1 statistical fail,
2 usage or configuration error, 3 runtime failure.  All output is a
pure function of the inputs (no timestamps), so reruns are
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import sys as _sys

import numpy as np

from . import __version__
from .arithmetic import (StripParams, birkhoff_deviation, classify,
                         ergodization_time, ir_measure)
from .config import DEFAULTS, apply_overrides, build_system, load_config
from .ensemble import (EnsembleSpec, calibrate_lattice, exit_time_experiment,
                       run_ensemble, table_callables,
                       walk_calibration_experiment)
from .errors import ConfigError, TwistdiffError
from .normal_form import NormalFormParams, build_normal_form, drift_b
from .potentials import check_hypotheses
from .stats import clt_test, emit_histogram

_OVERRIDE_NAMES = ("epsilon", "s", "samples", "seed", "beta", "out",
                   "threads", "r0")

PASS, FAIL, USAGE, RUNTIME = 0, 1, 2, 3


def _common_flags(p):
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--r0", type=float, default=None)


def _load(args):
    cfg = load_config(args.config) if args.config else dict(DEFAULTS)
    cfg = apply_overrides(cfg, args, _OVERRIDE_NAMES)
    return cfg, build_system(cfg)


def _spec(cfg, record=False):
    return EnsembleSpec(
        eps=float(cfg["epsilon"]), s=float(cfg["s"]),
        samples=int(cfg["samples"]), seed=int(cfg["seed"]),
        theta0=cfg["theta0"], r0=float(cfg["r0"]), record=record,
        threads=int(cfg["threads"]))


def cmd_check(args):
    cfg, sysm = _load(args)
    report = check_hypotheses(sysm.potentials)
    for name in sorted(report.results):
        res = report.results[name]
        req = name in report.required
        tag = "pass" if res.passed else "FAIL"
        note = "" if req else " (not required: reduced case)"
        print(f"{name}: {tag}{note}")
    print(f"overall: {'pass' if report.passed else 'FAIL'}"
          f" ({'reduced' if report.reduced else 'full'} hypothesis set)")
    return PASS if report.passed else FAIL


def cmd_simulate(args):
    cfg, sysm = _load(args)
    res = run_ensemble(sysm, _spec(cfg))
    d = res.displacements
    print(f"samples: {len(d)}")
    print(f"horizon: {res.spec.horizon}")
    print(f"mean displacement: {np.mean(d):.10g}")
    print(f"var displacement:  {np.var(d):.10g}")
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["theta_final", "r_final"])
            for t, r in zip(res.theta_final, res.r_final):
                wr.writerow([f"{t:.17g}", f"{r:.17g}"])
        print(f"wrote {cfg['out']}")
    return PASS


def cmd_clt(args):
    cfg, sysm = _load(args)
    res = run_ensemble(sysm, _spec(cfg))
    p = sysm.potentials
    nf = NormalFormParams(beta=float(cfg["beta"]), d=p.degree)
    from .errors import ResonantInput
    try:
        b0 = drift_b(sysm, float(cfg["r0"]), nf)
    except ResonantInput:
        b0 = 0.0
        print("note: r0 is resonant; using b = 0 reference")
    s = float(cfg["s"])
    ref_mean = s * b0
    ref_var = s * float(p.sigma_squared(float(cfg["r0"])))
    rep = clt_test(res.displacements, ref_mean, ref_var)
    print(f"reference: mean {ref_mean:.6g}, var {ref_var:.6g}")
    print(f"sample:    mean {rep.mean:.6g}, var {rep.var:.6g}")
    print(f"KS: {rep.ks:.4f}   AD: {rep.ad:.4f}")
    if cfg["out"]:
        z = (res.displacements - ref_mean) / np.sqrt(ref_var)
        emit_histogram(z, cfg["out"], report=rep)
        print(f"wrote {cfg['out']}")
    se = np.sqrt(ref_var / rep.n_samples)
    ok = (rep.ks <= 0.05 and abs(rep.mean - ref_mean) <= 4.0 * se
          and abs(rep.var / ref_var - 1.0) <= 0.15)
    print(f"verdict: {'pass' if ok else 'FAIL'}")
    return PASS if ok else FAIL


def cmd_drift(args):
    cfg, sysm = _load(args)
    nf = NormalFormParams(beta=float(cfg["beta"]),
                          d=sysm.potentials.degree)
    data = build_normal_form(sysm, nf)
    rows = data.as_rows()
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "b", "sigma2"])
            for r, b, s2 in rows:
                wr.writerow([f"{r:.12g}", f"{b:.12g}", f"{s2:.12g}"])
        print(f"wrote {cfg['out']} ({len(rows)} rows)")
    else:
        print("r,b,sigma2")
        for r, b, s2 in rows:
            print(f"{r:.12g},{b:.12g},{s2:.12g}")
    return PASS


def cmd_classify(args):
    cfg, _ = _load(args)
    params = StripParams(l=args.l, gamma=args.gamma, beta=float(cfg["beta"]))
    eps = float(cfg["epsilon"])
    sc = classify((args.lo, args.hi), params, eps)
    line = f"[{args.lo:g}, {args.hi:g}]: {sc.tag}"
    if sc.witness is not None:
        line += f" (witness {sc.p}/{sc.q})"
    print(line)
    print(f"IR union measure on [0,1]: {ir_measure(params, eps):.6g}")
    return PASS


def cmd_exits(args):
    cfg, sysm = _load(args)
    rep = exit_time_experiment(sysm, _spec(cfg), args.center, args.gamma,
                               args.delta)
    frac = rep.outside_window_fraction
    print(f"strip: [{rep.lo:.6g}, {rep.hi:.6g}]")
    print(f"window: [{rep.window[0]:.6g}, {rep.window[1]:.6g}] steps")
    print(f"boundary exits: {int(np.sum(rep.boundary_mask))}"
          f" / {len(rep.side)}")
    print(f"up fraction: {rep.up_fraction:.4f}")
    print(f"outside-window fraction: {frac:.4f}")
    ok = frac <= 0.05
    print(f"verdict: {'pass' if ok else 'FAIL'}")
    return PASS if ok else FAIL


def cmd_walk(args):
    cfg, sysm = _load(args)
    nf = NormalFormParams(beta=float(cfg["beta"]),
                          d=sysm.potentials.degree)
    data = build_normal_form(sysm, nf)
    b_func, s2_func = table_callables(data)
    eps = float(cfg["epsilon"])
    lattice = calibrate_lattice(b_func, s2_func, float(cfg["r0"]),
                                args.spacing * eps ** args.gamma,
                                args.nodes)
    spec = _spec(cfg)
    horizon = int(4.0 * (lattice.spacing / eps) ** 2)
    from dataclasses import replace
    spec = replace(spec, n_steps=horizon)
    probs, finals = walk_calibration_experiment(sysm, lattice, spec)
    for j, (p_, f_) in enumerate(zip(probs, finals), start=1):
        print(f"node {j} at {lattice.nodes[j]:.6g}: "
              f"up {p_:.4f} (unresolved {f_:.4f})")
    ok = bool(np.all(np.abs(probs - 0.5) <= 0.04))
    print(f"verdict: {'pass' if ok else 'FAIL'}")
    return PASS if ok else FAIL


def cmd_ergodize(args):
    cfg, sysm = _load(args)
    params = StripParams(l=args.l, gamma=args.gamma,
                         beta=float(cfg["beta"]))
    eps = float(cfg["epsilon"])
    N = ergodization_time(args.rstar, params, eps)
    dev = birkhoff_deviation(sysm.potentials.Ev, 0.0, args.rstar, N)
    print(f"N = {N}")
    print(f"Birkhoff deviation of Ev: {dev:.6g}")
    print(f"K estimate (dev / eps^tau): {dev / eps ** params.tau:.6g}")
    return PASS


def make_parser():
    p = argparse.ArgumentParser(
        prog="twistdiff",
        description="Diffusion certification for random twist maps")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="verify the structural hypotheses")
    _common_flags(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="run a trajectory ensemble")
    _common_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("clt", help="test displacements against the "
                                    "limiting normal law")
    _common_flags(sp)
    sp.set_defaults(func=cmd_clt)

    for name in ("drift", "nf"):
        sp = sub.add_parser(name, help="tabulate drift and variance")
        _common_flags(sp)
        sp.set_defaults(func=cmd_drift)

    sp = sub.add_parser("classify", help="classify an action strip")
    _common_flags(sp)
    sp.add_argument("--lo", type=float, required=True)
    sp.add_argument("--hi", type=float, required=True)
    sp.add_argument("--l", type=int, default=6)
    sp.add_argument("--gamma", type=float, default=0.81)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("exits", help="strip exit-time experiment")
    _common_flags(sp)
    sp.add_argument("--center", type=float, default=None)
    sp.add_argument("--gamma", type=float, default=0.81)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.set_defaults(func=cmd_exits)

    sp = sub.add_parser("walk", help="random-walk lattice calibration")
    _common_flags(sp)
    sp.add_argument("--gamma", type=float, default=0.81)
    sp.add_argument("--spacing", type=float, default=1.0,
                    help="lattice spacing in units of eps^gamma")
    sp.add_argument("--nodes", type=int, default=4)
    sp.set_defaults(func=cmd_walk)

    sp = sub.add_parser("ergodize", help="ergodization time of a rotation")
    _common_flags(sp)
    sp.add_argument("--rstar", type=float, required=True)
    sp.add_argument("--l", type=int, default=6)
    sp.add_argument("--gamma", type=float, default=0.81)
    sp.set_defaults(func=cmd_ergodize)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "exits" and args.center is None:
        args.center = (args.r0 if args.r0 is not None
                       else DEFAULTS["r0"])
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return USAGE
    except TwistdiffError as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}",
              file=_sys.stderr)
        return RUNTIME


if __name__ == "__main__":
    _sys.exit(main())
