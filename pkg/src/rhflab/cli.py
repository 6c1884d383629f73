"""Command-line driver: ``rhflab --config run.cfg [--mode M] [--seed N] [--out DIR]``.

Exit status is 0 when every check passed or was not applicable, 1 when a
check failed and 2 on configuration or runtime errors.
"""
import argparse
import csv
import logging
import math
from pathlib import Path
import sys
import time

import numpy as np

from . import bounds as B
from . import flow as F
from . import grid as G
from . import identities as I
from . import monitors as M
from . import profiles as P
from .config import RunConfig, dump_config, load_config
from .errors import ConfigError, RHFError

log = logging.getLogger("rhflab")

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2

IDENTITY_TOL = 1e-12
# these two contract products of several random tensors and lose one digit
LOOSE_IDENTITY_TOL = {"sm_weyl_split": 1e-11, "sm_contraction": 1e-11}
ORDER_SLACK = 0.3
CONVERGENCE_FIELDS = ("S", "gradphi", "f", "Sic")


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, int, np.floating, np.integer)) else str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# initial data ----------------------------------------------------------------


def schedule_of(cfg):
    try:
        if cfg.alpha_times:
            return F.AlphaSchedule(cfg.alpha_times, cfg.alpha_values)
        return F.AlphaSchedule.constant(cfg.alpha)
    except ValueError as exc:
        raise ConfigError("alpha_values" if cfg.alpha_times else "alpha", str(exc)) from None


def _load_snapshot(key, path, kind):
    try:
        fld, _ = G.load_field(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None
    if not isinstance(fld, kind):
        raise ConfigError(key, f"{path} holds the wrong kind of field")
    return fld


def initial_fields(cfg, dims=None):
    """Metric and phi fields described by the config, SPD-checked."""
    g = phi = None
    if cfg.metric_file:
        g = _load_snapshot("metric_file", cfg.metric_file, G.MetricField)
        grid = g.grid
    else:
        try:
            grid = G.TorusGrid(dims or cfg.dims, cfg.lengths, cfg.fd_order)
        except ValueError as exc:
            raise ConfigError("dims", str(exc)) from None
    if cfg.phi_file:
        phi = _load_snapshot("phi_file", cfg.phi_file, G.ScalarField)
        if phi.grid != grid:
            raise ConfigError("phi_file", "snapshot grid differs from the metric grid")
    try:
        if g is None:
            g = P.make_metric(
                cfg.metric_profile,
                grid,
                amplitude=cfg.metric_amplitude,
                mode=cfg.metric_mode,
                warp=cfg.metric_warp,
                seed=cfg.seed,
            )
        else:
            g.validate()
    except ValueError as exc:
        raise ConfigError("metric_profile" if not cfg.metric_file else "metric_file", str(exc)) from None
    if phi is None:
        try:
            phi = P.make_phi(
                cfg.phi_profile,
                grid,
                amplitude=cfg.phi_amplitude,
                mode=cfg.phi_mode,
                axis=cfg.phi_axis,
                value=cfg.phi_value,
            )
        except ValueError as exc:
            raise ConfigError("phi_profile", str(exc)) from None
    return g, phi


def initial_state(cfg, dims=None):
    g, phi = initial_fields(cfg, dims)
    return F.FlowState(0.0, g, phi, schedule_of(cfg))


# modes -------------------------------------------------------------------------


def run_identities(cfg, out):
    t0 = time.perf_counter()
    reports = I.run_batch(cfg.seed, cfg.samples)
    elapsed = time.perf_counter() - t0
    rows, failed = [], False
    for rep in reports:
        tol = LOOSE_IDENTITY_TOL.get(rep.name, IDENTITY_TOL)
        ok = rep.max_residual < tol
        failed |= not ok
        print(rep.line(), "pass" if ok else "FAIL")
        rows.append((rep.name, rep.seeds_run, rep.max_residual, tol, "pass" if ok else "fail"))
    log.info("identity batch took %.2fs", elapsed)
    _write_csv(out / "identities.csv", ["identity", "samples", "max_residual", "tolerance", "status"], rows)
    return EXIT_FAILED if failed else EXIT_OK


def _flow_artifacts(out, records, ctx):
    M.write_records(out / "monitors.csv", records)
    slacks = M.all_slacks(records, ctx) if len(records) > 1 else []
    M.write_slacks(out / "slacks.csv", slacks)
    return slacks


def run_flow(cfg, out):
    state = initial_state(cfg)
    C = M.default_C(state) if math.isnan(cfg.C) else cfg.C
    try:
        ctx = M.RunContext.from_state(state, C, cfg.chi)
    except ValueError as exc:
        raise ConfigError("C", str(exc)) from None
    G.save_field(out / "initial_metric.rhf", state.g, state.t)
    G.save_field(out / "initial_phi.rhf", state.phi, state.t)

    records, last = [], [state]

    def on_record(s):
        records.append(M.record(s, ctx))
        last[0] = s

    dt = None if math.isnan(cfg.dt) else cfg.dt
    try:
        res = F.run(state, cfg.t_end, cfg.record_every, cfg.cfl, dt, on_record)
    except (RHFError, ValueError, FloatingPointError) as exc:
        _flow_artifacts(out, records, ctx)
        s = last[0]
        G.save_field(out / "partial_metric.rhf", s.g, s.t)
        G.save_field(out / "partial_phi.rhf", s.phi, s.t)
        (out / "failure.txt").write_text(f"t={s.t!r}\nerror={type(exc).__name__}: {exc}\n")
        print(f"flow failed after t={s.t!r}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    final = res.states[-1]
    G.save_field(out / "final_metric.rhf", final.g, final.t)
    G.save_field(out / "final_phi.rhf", final.phi, final.t)
    slacks = _flow_artifacts(out, records, ctx)
    counts = {}
    for x in slacks:
        counts[x.status] = counts.get(x.status, 0) + 1
    print(f"flow: t_end={final.t!r} steps={res.steps} rejections={res.rejections} C={C!r}")
    print("slacks: " + " ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    for x in slacks:
        if x.status == "fail":
            print(f"FAIL {x.inequality} s={x.s!r} lhs={x.lhs!r} rhs={x.rhs!r}")
    return EXIT_FAILED if counts.get("fail") else EXIT_OK


def fitted_order(ns, errors):
    """Least-squares slope of -log(error) against log(N)."""
    return float(-np.polyfit(np.log(ns), np.log(errors), 1)[0])


def convergence_table(cfg):
    """Max-norm residuals of the evolution identities along the ladder.

    Returns (ns, {name: [residual per N]}).  Each axis whose configured size
    exceeds 1 is set to N.
    """
    live = [n > 1 for n in cfg.dims]
    norms = {k: [] for k in CONVERGENCE_FIELDS}
    for n in cfg.ladder:
        dims = tuple(n if on else 1 for on in live)
        state = initial_state(cfg, dims)
        C = M.default_C(state) if math.isnan(cfg.C) else cfg.C
        if cfg.conv_t0 > 0:
            state = F.run(state, cfg.conv_t0, cfl=cfg.cfl).states[-1]
        hist = F.triplet(state, cfg.conv_dt)
        norms["S"].append(float(np.max(np.abs(F.residual_evolution_S(hist)))))
        norms["gradphi"].append(F.residual_evolution_gradphi(hist))
        norms["f"].append(F.residual_evolution_f(hist, C))
        norms["Sic"].append(F.residual_evolution_Sic(hist))
    return list(cfg.ladder), norms


def run_convergence(cfg, out):
    ns, norms = convergence_table(cfg)
    need = cfg.fd_order - ORDER_SLACK
    rows, failed = [], False
    for name in CONVERGENCE_FIELDS:
        order = fitted_order(ns, norms[name])
        ok = order >= need
        failed |= not ok
        for n, e in zip(ns, norms[name]):
            rows.append((name, n, e, order, "pass" if ok else "fail"))
        print(f"{name:<8s} " + " ".join(f"N={n}:{e:.3e}" for n, e in zip(ns, norms[name])) + f" order={order:.2f}")
    _write_csv(out / "convergence.csv", ["residual", "N", "max_norm", "fitted_order", "status"], rows)
    return EXIT_FAILED if failed else EXIT_OK


def bounds_rows(cfg):
    aA = (cfg.chi, cfg.alpha, cfg.A1, cfg.vol0)
    rows = []
    for s in cfg.bound_s:
        if not math.isnan(cfg.C) and cfg.C > 0:
            rows.append(("c0", s, B.bound_c0(cfg.chi, cfg.C, cfg.alpha, cfg.A1, cfg.vol0, cfg.int_f0, s), "ok"))
        else:
            rows.append(("c0", s, math.nan, "unsupported"))
        rows.append(("a0", s, B.bound_a0(*aA, cfg.int_sic2_over_S0, s), "ok"))
        rows.append(("b", s, B.bound_b(cfg.int_sic2_0, *aA, s), "ok"))
        rows.append(("c", s, B.bound_c(cfg.int_sic2_0, *aA, s), "ok"))
    return rows


def run_bounds(cfg, out):
    rows = bounds_rows(cfg)
    for name, s, v, status in rows:
        print(f"{name:<3s} s={s!r} value={v!r} {status}")
    _write_csv(out / "bounds.csv", ["bound", "s", "value", "status"], rows)
    return EXIT_OK


MODE_RUNNERS = {
    "verify-identities": run_identities,
    "flow": run_flow,
    "convergence": run_convergence,
    "bounds-only": run_bounds,
}


def execute(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_config(cfg))
    return MODE_RUNNERS[cfg.mode](cfg, out)


def build_parser():
    p = argparse.ArgumentParser(prog="rhflab", description="Numerical laboratory for the Ricci-harmonic flow on T^4.")
    p.add_argument("--config", help="key=value configuration file (defaults apply without one)")
    p.add_argument("--mode", choices=sorted(MODE_RUNNERS))
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(mode=args.mode, seed=args.seed, out=args.out)
        return execute(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (RHFError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
