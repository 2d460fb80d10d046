"""Command-line drivers.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure,
3 a check reported FAIL.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .diagnostics import (
    boundary_vanishing_check,
    core_agreement_D,
    kinetic_energy_bound,
)
from .characteristics import ExactHomogeneousField
from .dust import make_core_boundary
from .errors import CollapseError, ConfigError, NumericError
from .initial_data import make_initial_data
from .io import fmt, write_series_csv
from .runner import dump_keep, run, write_outputs
from .trajectories import run_trajectory_suites

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

DEMO_COLUMNS = ("stage", "t", "rho_inf", "E_kin", "neg_E_pot", "sup_m_r",
                "bound_rho_inf", "bound_E_kin", "bound_neg_E_pot", "bound_sup_m_r")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _status(ok):
    return "PASS" if ok else "FAIL"


def _config_from_args(args, **defaults):
    overrides = dict(defaults)
    for key in ("a0", "eps", "n_particles", "dt", "dt_hist", "t_end_frac", "seed", "threads",
                "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides)


# dust ----------------------------------------------------------------------

def dust_table(a0, epsilon, dt_out):
    """Rows ``(t, a, adot, r_eps, rdot_eps)`` on ``k dt_out <= 0.999 T_eps``."""
    d = make_initial_data(epsilon, a0)
    core = make_core_boundary(epsilon, d.M_eps, a0)
    t = dt_out * np.arange(int(math.floor(0.999 * core.T_eps / dt_out + 1e-9)) + 1)
    a, adot = d.homog.dust.state(t)
    r, rdot = core.state(t)
    # + 0.0 turns -0.0 into 0.0
    return np.column_stack([t, a, adot + 0.0, r, rdot]), d.homog.dust.T, core.T_eps


def cmd_dust(args):
    a0 = 1.0 if args.a0 is None else args.a0
    eps = 0.1 if args.eps is None else args.eps
    dt_out = 1e-3 if args.dt is None else args.dt
    if not dt_out > 0:
        raise ConfigError("dt", f"must be positive, got {dt_out!r}")
    rows, T, T_eps = dust_table(a0, eps, dt_out)
    lines = ["t,a,adot,r_eps,rdot_eps"]
    lines += [",".join(fmt(x) for x in row) for row in rows]
    lines += [f"# T={fmt(T)}", f"# T_eps={fmt(T_eps)}"]
    text = "\n".join(lines) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


# simulate ------------------------------------------------------------------

def cmd_simulate(args):
    cfg = _config_from_args(args)
    res = run(cfg, keep=dump_keep(cfg))
    out = write_outputs(res)
    last = res.reports[-1]
    first = res.reports[0]
    drift = abs(last.E_tot - first.E_tot) / abs(first.E_pot) if first.E_pot else 0.0
    print(f"wrote {out} ({len(res.history)} snapshots, t_end={fmt(res.t_end)}, "
          f"T_eps={fmt(res.core.T_eps)})")
    print(f"energy drift / |E_pot(0)| = {drift:.3e}; final D_core = {last.D_core:.4g}")
    return EXIT_OK


# verify-core ---------------------------------------------------------------

def _parse_fracs(text):
    try:
        fracs = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("times", f"expected comma-separated fractions, got {text!r}") from None
    if not fracs or any(not 0 <= f < 1 for f in fracs):
        raise ConfigError("times", "fractions of T_eps must lie in [0, 1)")
    return sorted(fracs)


def collapse_time_gaps(epsilons, a0=1.0):
    out = []
    for eps in epsilons:
        d = make_initial_data(eps, a0)
        core = make_core_boundary(eps, d.M_eps, a0)
        out.append((eps, d.homog.dust.T - core.T_eps))
    return out


def cmd_verify_core(args):
    fracs = _parse_fracs(args.times)
    cfg = _config_from_args(args)
    if args.probes is not None:
        cfg = cfg.replace(n_probes=args.probes)
    cfg = cfg.replace(t_end_fraction=max(cfg.t_end_fraction, fracs[-1]), core_every=10 ** 9)
    ok = True

    gaps = collapse_time_gaps((0.4, 0.2, 0.1), cfg.a0)
    decreasing = all(g1 < g0 for (_, g0), (_, g1) in zip(gaps, gaps[1:]))
    print("eps,T-T_eps")
    for eps, g in gaps:
        print(f"{eps},{fmt(g)}")
    print(f"{_status(decreasing)} T - T_eps strictly decreasing in eps")
    ok &= decreasing

    res = run(cfg)
    d, core, hist = res.initial_data, res.core, res.history
    exact = ExactHomogeneousField(d.homog.dust)
    rows = []
    for frac in fracs:
        t = frac * core.T_eps
        kw = dict(n_samples=cfg.n_probes, seed=cfg.seed, dt_char=cfg.dt_char,
                  threads=cfg.thread_count)
        D = core_agreement_D(hist, d, core, t, **kw)
        D_exact = core_agreement_D(exact, d, core, t, **kw)
        B = boundary_vanishing_check(hist, d, core, t, **kw) if t > 0 else 0.0
        tol = cfg.tol_core_mid if frac <= 0.5 else cfg.tol_core_late
        passed = D < tol and D_exact < cfg.tol_core_exact and B < cfg.tol_boundary
        if frac == 0:
            passed = passed and D == 0.0
        ok &= passed
        rows.append((frac, t, D, tol, D_exact, B, float(passed)))
        print(f"{_status(passed)} t={frac:g} T_eps: D_core={D:.4g} (tol {tol:g}), "
              f"exact-field D={D_exact:.3g} (tol {cfg.tol_core_exact:g}), "
              f"boundary={B:.3g} (tol {cfg.tol_boundary:g})")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(out / "verify_core.csv",
                     ("t_frac", "t", "D_core", "tol", "D_exact", "boundary", "pass"), rows)
    return EXIT_OK if ok else EXIT_CHECK


# collapse-demo -------------------------------------------------------------

def _sup_m_r_sigma(field, N):
    r, m = field.radii, field.cum_mass
    k = int(np.argmax(np.where(r > 0, m / np.where(r > 0, r, 1.0), 0.0)))
    M = m[-1]
    return math.sqrt(max(m[k] * (M - m[k]), 0.0) / N) / r[k]


def _rho_sigma(ensemble, bin_width):
    from .diagnostics import shell_densities

    _, rho, counts = shell_densities(ensemble, bin_width)
    k = int(np.argmax(rho))
    return rho[k] / math.sqrt(counts[k]) if counts[k] else 0.0


def collapse_demo(cfg):
    """Initial and final rows of the concentration table plus the checks on them."""
    res = run(cfg, keep=(0,))
    d, core = res.initial_data, res.core
    a0 = cfg.a0
    r0, r1 = res.reports[0], res.reports[-1]
    t = r1.t
    a = float(d.homog.dust.a(t))
    r_eps = float(core.r(t))
    init_bounds = (3.0 / (4.0 * math.pi * a0 ** 3), kinetic_energy_bound(d.homog.profile, a0),
                   0.6 * 32.0 / a0 ** 6, 4.0 / a0 ** 3)
    lower = (3.0 / (4.0 * math.pi * a ** 3), r0.E_tot + 0.6 * r_eps ** 5 / a ** 6,
             0.6 * r_eps ** 5 / a ** 6, r_eps ** 2 / a ** 3)
    rows = [
        ("initial", 0.0, r0.rho_inf, r0.E_kin, -r0.E_pot, r0.sup_m_over_r, *init_bounds),
        ("final", t, r1.rho_inf, r1.E_kin, -r1.E_pot, r1.sup_m_over_r, *lower),
    ]
    first_field = res.history.snapshot(0)
    sig_m = _sup_m_r_sigma(first_field, cfg.N)
    sig_rho = _rho_sigma(res.snapshots[0], cfg.rho_bin * a0)
    checks = [
        ("initial sup m/r within bound + 3 sigma", r0.sup_m_over_r <= init_bounds[3] + 3 * sig_m),
        ("initial rho_inf within bound + 3 sigma", r0.rho_inf <= init_bounds[0] + 3 * sig_rho),
        ("final sup m/r above 0.8 x dust lower bound", r1.sup_m_over_r >= 0.8 * lower[3]),
        ("final -E_pot above 0.8 x dust lower bound", -r1.E_pot >= 0.8 * lower[2]),
        ("sup m/r grows by a factor of at least 10", r1.sup_m_over_r >= 10 * r0.sup_m_over_r),
        ("-E_pot grows by a factor of at least 10", r1.E_pot <= 10 * r0.E_pot),
    ]
    return rows, checks, res


def cmd_collapse_demo(args):
    cfg = _config_from_args(args, a0=4.0, eps=0.1, t_end_frac=0.95)
    cfg = cfg.replace(n_probes=0)
    rows, checks, res = collapse_demo(cfg)
    print(",".join(DEMO_COLUMNS))
    for row in rows:
        print(",".join([row[0]] + [fmt(x) for x in row[1:]]))
    for name, ok in checks:
        print(f"{_status(ok)} {name}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "collapse_demo.csv", "w") as fh:
        fh.write(",".join(DEMO_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join([row[0]] + [fmt(x) for x in row[1:]]) + "\n")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_CHECK


# trajectory-suite ----------------------------------------------------------

def cmd_trajectory_suite(args):
    cfg = _config_from_args(args).replace(n_probes=0)
    res = run(cfg)
    results = run_trajectory_suites(res.history, res.initial_data.homog.dust, res.core,
                                    seed=cfg.seed)
    for r in results:
        print(r.line())
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trajectory_suites.csv", "w") as fh:
        fh.write("suite,tracers,checked,violations,worst,tolerance,pass\n")
        for r in results:
            fh.write(f"{r.name},{r.n_tracers},{r.n_checked},{r.violations},{fmt(r.worst)},"
                     f"{fmt(r.tolerance)},{int(r.passed)}\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


# entry point ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--a0", type=float, help="initial scale of the homogeneous solution")
    common.add_argument("--eps", type=float, help="velocity cut-off epsilon")
    common.add_argument("--n-particles", type=int, help="number of particles N")
    common.add_argument("--dt", type=float, help="time step (output spacing for 'dust')")
    common.add_argument("--dt-hist", type=float, help="spacing of field snapshots")
    common.add_argument("--t-end-frac", type=float, help="end time as a fraction of T_eps")
    common.add_argument("--seed", type=int, help="sampling seed")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--out", help="output directory (file for 'dust')")

    parser = _Parser(prog="vpcollapse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("dust", parents=[common], help="closed-form a(t) and r_eps(t) table")
    sub.add_parser("simulate", parents=[common], help="run and write snapshots and series")
    p = sub.add_parser("verify-core", parents=[common], help="core agreement checks")
    p.add_argument("--times", default="0,0.5,0.9", help="fractions of T_eps (default 0,0.5,0.9)")
    p.add_argument("--probes", type=int, help="probe count per time")
    sub.add_parser("collapse-demo", parents=[common], help="dilute-to-concentrated table")
    sub.add_parser("trajectory-suite", parents=[common], help="characteristic property suites")
    return parser


COMMANDS = {
    "dust": cmd_dust,
    "simulate": cmd_simulate,
    "verify-core": cmd_verify_core,
    "collapse-demo": cmd_collapse_demo,
    "trajectory-suite": cmd_trajectory_suite,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CollapseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
