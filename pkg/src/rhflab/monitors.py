"""Integral monitors, bound evaluation and inequality slacks along a flow.

A run is summarised by one MonitorRecord per recorded state.  The inequality
checks consume those records (plus the run context holding C, chi and the
t = 0 data) and return Slack rows with status pass, fail, not-applicable or
info.  A slack passes when rhs - lhs >= -tol, with tol = 1e-6 |rhs| unless a
check states an absolute tolerance.
"""
import csv
from dataclasses import asdict, dataclass, fields
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import bounds as B
from . import grid as G
from . import tensor as T

REL_TOL = 1e-6
MONOTONE_TOL = 1e-6
PHI_TOL = 1e-9
GB_ROUTE_TOL = 1e-10
P_VALUES = (1, 2, 3)


def z_tensor(state, C):
    """Z_ijk = (nabla_i S_jk)(S + C) - S_jk nabla_i S, as [grid, i, j, k]."""
    b = state.bundle
    u = b.s_scalar + C
    grad_sic = state.connection.grad_sym2(b.sic)
    grad_s = state.grid.gradient(b.s_scalar)
    return grad_sic * u[..., None, None, None] - b.sic[..., None, :, :] * grad_s[..., :, None, None]


def gauss_bonnet_integrands(state):
    """Pointwise |Rm|^2 - 4|Ric|^2 + R^2, directly and through Sm, Sic and S."""
    c = state.scalars
    a = state.alpha
    direct = c["rm2"] - 4 * c["ric2"] + c["r2"]
    translated = (
        c["sm2"] - 4 * c["sic2"] + c["s2"]
        - 6.5 * a**2 * c["grad4"]
        - 9 * a * c["sic_dphi_dphi"]
        + 2 * a * state.bundle.s_scalar * c["grad2"]
    )
    return direct, translated


def gauss_bonnet_residual(state, chi=0):
    """Both routes to the integral, each minus 32 pi^2 chi."""
    direct, translated = gauss_bonnet_integrands(state)
    target = 32 * math.pi**2 * chi
    return G.integrate(direct, state.g) - target, G.integrate(translated, state.g) - target


def pinching_ratio(state, C):
    b, c = state.bundle, state.scalars
    u = b.s_scalar + C
    if np.any(u <= 0):
        raise ValueError(f"S + C <= 0 at t={state.t!r}")
    lhs = float(np.max(np.sqrt(np.maximum(c["sin2"], 0.0)) / u))
    ratio = float(np.max((np.sqrt(np.maximum(c["weyl2"], 0.0)) + c["hess2"]) / u))
    return lhs, ratio


@dataclass(frozen=True)
class RunContext:
    """Data fixed at t = 0 that the bounds depend on."""

    C: float
    chi: float
    A1: float
    vol0: float
    min_S0: float
    int_f0: float
    int_f2_0: float
    int_sic2_0: float
    int_sic2_over_S0: float  # nan unless min S(0) > 0
    alpha_constant: bool
    alpha0: float

    @classmethod
    def from_state(cls, state, C, chi=0.0):
        b, c = state.bundle, state.scalars
        s = b.s_scalar
        min_s0 = float(s.min())
        if not np.all(s + C > 0):
            raise ValueError(f"S + C <= 0 at t=0 for C={C!r} (min S = {min_s0!r})")
        over = G.integrate(c["sic2"] / s, state.g) if min_s0 > 0 else math.nan
        return cls(
            C=float(C),
            chi=float(chi),
            A1=float(c["grad2"].max()),
            vol0=G.volume(state.g),
            min_S0=min_s0,
            int_f0=G.integrate(c["sic2"] / (s + C), state.g),
            int_f2_0=G.integrate(c["sic2"] / (s + 2), state.g) if np.all(s + 2 > 0) else math.nan,
            int_sic2_0=G.integrate(c["sic2"], state.g),
            int_sic2_over_S0=over,
            alpha_constant=state.schedule.is_constant,
            alpha0=state.alpha,
        )


def default_C(state):
    return max(0.0, -float(state.bundle.s_scalar.min())) + 1.0


@dataclass(frozen=True)
class MonitorRecord:
    t: float
    vol: float
    minS: float
    maxS: float
    max_gradphi2: float
    A1: float
    A2: float
    A3: float
    int_f: float
    int_f2: float
    int_S2: float
    int_absSic: float
    int_Sic2: float
    int_Sic4_over: float
    int_Sm2: float
    gb_residual: float
    pinching_lhs: float
    pinching_weyl_ratio: float
    alpha: float
    alpha_dot: float
    int_S: float
    int_gradphi2: float
    int_Sic3: float
    int_Sic4: float
    int_f2sq: float
    int_SpC4: float
    gb_direct: float
    gb_translated: float
    min_phi: float
    max_phi: float
    slack_sic_pointwise: float
    sandwich_lo: float
    sandwich_hi: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


def record(state, ctx):
    b, c = state.bundle, state.scalars
    s = b.s_scalar
    u = s + ctx.C
    if np.any(u <= 0):
        idx = tuple(int(i) for i in np.argwhere(u <= 0)[0])
        raise ValueError(f"S + C <= 0 at t={state.t!r}, grid index {idx}")
    integ = lambda v: G.integrate(v, state.g)  # noqa: E731
    sic2 = c["sic2"]
    sic_abs = np.sqrt(np.maximum(sic2, 0.0))
    u2 = s + 2.0
    # f = |Sic|^2/(S+2) only matters under |S| <= 1; elsewhere it is zeroed
    f_ba = np.where(u2 > 0, sic2 / np.where(u2 > 0, u2, 1.0), 0.0)
    a = state.alpha
    a2 = integ(c["hess2"])
    direct, translated = gauss_bonnet_integrands(state)
    gb_d, gb_l = integ(direct), integ(translated)
    lhs, ratio = pinching_ratio(state, ctx.C)
    phi_min, phi_max = G.extrema(state.phi)
    return MonitorRecord(
        t=float(state.t),
        vol=G.volume(state.g),
        minS=float(s.min()),
        maxS=float(s.max()),
        max_gradphi2=float(c["grad2"].max()),
        A1=ctx.A1,
        A2=a2,
        A3=256 * math.pi**2 * ctx.chi + 104 * a**2 * ctx.A1**2 * ctx.vol0 * math.exp(ctx.C * state.t) + 2 * a * a2,
        int_f=integ(sic2 / u),
        int_f2=integ(f_ba),
        int_S2=integ(s**2),
        int_absSic=integ(sic_abs),
        int_Sic2=integ(sic2),
        int_Sic4_over=integ(sic2**2 / u**2),
        int_Sm2=integ(c["sm2"]),
        gb_residual=gb_d - 32 * math.pi**2 * ctx.chi,
        pinching_lhs=lhs,
        pinching_weyl_ratio=ratio,
        alpha=a,
        alpha_dot=state.alpha_dot,
        int_S=integ(s),
        int_gradphi2=integ(c["grad2"]),
        int_Sic3=integ(sic_abs**3),
        int_Sic4=integ(sic2**2),
        int_f2sq=integ(f_ba**2),
        int_SpC4=integ(u**4),
        gb_direct=gb_d,
        gb_translated=gb_l,
        min_phi=phi_min,
        max_phi=phi_max,
        slack_sic_pointwise=float(np.min(2 * sic2 / u + ctx.C / 2 - sic_abs)),
        sandwich_lo=float(np.min(f_ba - sic2 / 3)),
        sandwich_hi=float(np.min(sic2 - f_ba)),
    )


# slacks ------------------------------------------------------------------


@dataclass(frozen=True)
class Slack:
    inequality: str
    s: float
    lhs: float
    rhs: float
    slack: float
    status: str

    @classmethod
    def judge(cls, inequality, s, lhs, rhs, applicable=True, abs_tol=None, info=False):
        slack = rhs - lhs
        if not applicable:
            status = "not-applicable"
        elif info:
            status = "info"
        else:
            tol = abs_tol if abs_tol is not None else REL_TOL * abs(rhs)
            status = "pass" if slack >= -tol else "fail"
        return cls(inequality, float(s), float(lhs), float(rhs), float(slack), status)


def _series(records, name):
    return np.array([getattr(r, name) for r in records], dtype=float)


def _cumulative(records, name):
    t = _series(records, "t")
    return cumulative_trapezoid(_series(records, name), t, initial=0.0)


def _require_start(records):
    if not records or records[0].t != 0.0:
        raise ValueError("history must start at t = 0")


def energy_inequality_slacks(records, ctx):
    """2 int_0^t A2 + int |dphi|^2 (t) <= e^{Ct} A1 Vol0."""
    _require_start(records)
    ok = all(r.minS + ctx.C > 0 for r in records)
    a2 = _cumulative(records, "A2")
    return [
        Slack.judge("energy-gradphi", r.t, 2 * a2[k] + r.int_gradphi2, math.exp(ctx.C * r.t) * ctx.A1 * ctx.vol0, ok)
        for k, r in enumerate(records)
    ]


def energy_inequality(records, ctx):
    """Smallest slack of the energy inequality over the history."""
    return min(x.slack for x in energy_inequality_slacks(records, ctx))


def monotonicity_slacks(records, ctx):
    """min S nondecreasing, |dphi|^2 <= A1 and the phi maximum principle."""
    _require_start(records)
    out = []
    decay_ok = True  # alpha >= 0 and alpha' <= 0 are enforced by the schedule
    for prev, r in zip(records, records[1:]):
        out.append(Slack.judge("minS-monotone", r.t, records[0].minS, r.minS, decay_ok, abs_tol=MONOTONE_TOL))
        out.append(Slack.judge("gradphi-max", r.t, r.max_gradphi2, ctx.A1, abs_tol=MONOTONE_TOL))
        out.append(Slack.judge("phi-max", r.t, r.max_phi, prev.max_phi, abs_tol=PHI_TOL))
        out.append(Slack.judge("phi-min", r.t, prev.min_phi, r.min_phi, abs_tol=PHI_TOL))
    return out


def check_f_estimates(records, ctx):
    _require_start(records)
    C, chi = ctx.C, ctx.chi
    applicable = ctx.alpha_constant and C > 0
    bad = [r for r in records if not r.minS + C > 0]
    if bad:
        raise ValueError(f"S + C <= 0 at t={bad[0].t!r}")
    alpha, A1, vol0 = ctx.alpha0, ctx.A1, ctx.vol0
    sic4 = _cumulative(records, "int_Sic4_over")
    s2 = _cumulative(records, "int_S2")
    sic2 = _cumulative(records, "int_Sic2")
    sm2 = _cumulative(records, "int_Sm2")
    vol = _cumulative(records, "vol")
    out = []
    for k, r in enumerate(records):
        s = r.t
        c0 = B.bound_c0(chi, C, alpha, A1, vol0, ctx.int_f0, s) if C > 0 else math.nan
        e36 = 1.0 if s == 0 else math.exp(36 * C * s)
        growth = 0.0 if s == 0 else 13 * alpha**2 * A1**2 * vol0 / C * (math.exp(C * s) - 1)
        rows = [
            ("f-integral", r.int_f + sic4[k], c0 + 574 * e36 * s2[k]),
            ("sic-L1", r.int_absSic, 2 * c0 + C / 2 * r.vol + 1148 * e36 * s2[k]),
            ("sic-L2-time", sic2[k], 8 * c0 + C**2 / 4 * vol[k] + 4592 * e36 * s2[k]),
            (
                "sm-L2-time",
                sm2[k],
                131 / 50 * C**2 * vol[k] + growth + 881 / 25 * c0 + 32 * math.pi**2 * chi * s
                + (505694 / 25 * e36 + 81 / 50) * s2[k],
            ),
        ]
        out += [Slack.judge(name, s, lhs, rhs, applicable) for name, lhs, rhs in rows]
        # pointwise |Sic| <= 2|Sic|^2/(S+C) + C/2, as a minimum over the grid
        out.append(Slack.judge("sic-pointwise", s, 0.0, r.slack_sic_pointwise, C > 0, abs_tol=1e-12))
    return out


def check_positive_S_estimates(records, ctx):
    _require_start(records)
    applicable = ctx.alpha_constant and ctx.min_S0 > 0
    alpha, A1, vol0, chi = ctx.alpha0, ctx.A1, ctx.vol0, ctx.chi
    s2 = _cumulative(records, "int_S2")
    sic2 = _cumulative(records, "int_Sic2")
    sm2 = _cumulative(records, "int_Sm2")
    out = []
    for k, r in enumerate(records):
        s = r.t
        a0 = B.bound_a0(chi, alpha, A1, vol0, ctx.int_sic2_over_S0, s) if applicable else math.nan
        rows = [
            ("posS-sic-L1", r.int_absSic, 2 * a0 + 1148 * s2[k]),
            ("posS-sic-L2-time", sic2[k], 8 * a0 + 4592 * s2[k]),
            (
                "posS-sm-L2-time",
                sm2[k],
                32 * math.pi**2 * chi * s + 13 * (alpha * A1) ** 2 * vol0 * s + 881 / 25 * a0
                + 1011469 / 50 * s2[k],
            ),
        ]
        out += [Slack.judge(name, s, lhs, rhs, applicable) for name, lhs, rhs in rows]
    return out


@dataclass(frozen=True)
class BAReport:
    closed_4_manifold: bool
    alpha_constant: bool
    finite_horizon: bool
    max_abs_S: float
    S_bounded: bool
    note: str = "|dphi|^2 <= A1 along the flow, so a bound on S is equivalent to a bound on R"

    @property
    def holds(self):
        return self.closed_4_manifold and self.alpha_constant and self.finite_horizon and self.S_bounded


def check_BA(records, ctx):
    max_abs = max(max(abs(r.minS), abs(r.maxS)) for r in records)
    finite = all(math.isfinite(r.t) for r in records)
    return BAReport(True, ctx.alpha_constant, finite, max_abs, max_abs <= 1.0)


def check_ba_f_rate(records, ctx):
    """d/dt int f <= int(-f^2 + 88 f) + A3 with f = |Sic|^2/(S+2), via difference quotients."""
    _require_start(records)
    applicable = check_BA(records, ctx).holds
    alpha, A1, vol0, chi = ctx.alpha0, ctx.A1, ctx.vol0, ctx.chi

    def bound(r):
        return (
            -r.int_f2sq + 88 * r.int_f2 + 128 * math.pi**2 * chi
            + 52 * (alpha * A1) ** 2 * vol0 * math.exp(2 * r.t) + 2 * alpha * r.A2
        )

    out = []
    for prev, r in zip(records, records[1:]):
        dq = (r.int_f2 - prev.int_f2) / (r.t - prev.t)
        out.append(Slack.judge("ba-f-rate", r.t, dq, 0.5 * (bound(prev) + bound(r)), applicable))
    return out


def check_ba_sic_bounds(records, ctx):
    _require_start(records)
    ba = check_BA(records, ctx)
    applicable = ba.holds
    alpha, A1, vol0, chi = ctx.alpha0, ctx.A1, ctx.vol0, ctx.chi
    t = _series(records, "t")
    T_end = float(t[-1])
    sic4 = _cumulative(records, "int_Sic4")
    b_T = B.bound_b(ctx.int_sic2_0, chi, alpha, A1, vol0, T_end)
    tails = {}
    for p, name in zip(P_VALUES, ("int_absSic", "int_Sic2", "int_Sic3")):
        cum = _cumulative(records, name)
        tails[p] = cum[-1] - cum
    out = []
    for k, r in enumerate(records):
        s = r.t
        b = B.bound_b(ctx.int_sic2_0, chi, alpha, A1, vol0, s)
        growth = 1.0 if s == 0 else math.exp(2 * s)
        out.append(Slack.judge("ba-sic-L2", s, r.int_Sic2, b, applicable))
        out.append(
            Slack.judge("ba-sm-L2", s, r.int_Sm2, 32 * math.pi**2 * chi + 13 * (alpha * A1) ** 2 * vol0 * growth + 185 / 26 * b, applicable)
        )
        out.append(Slack.judge("ba-sic-L4-time", s, sic4[k], b, applicable))
        if s < T_end:
            for p in P_VALUES:
                q = (4 - p) / 4
                rhs = abs(b_T) ** (p / 4) * math.exp(T_end * q) * vol0**q * (T_end - s) ** q
                out.append(Slack.judge(f"ba-sic-Lp-tail[p={p}]", s, tails[p][k], rhs, applicable))
        # intermediate facts used in the proof, valid once |S| <= 1
        out.append(Slack.judge("sandwich-lower", s, 0.0, r.sandwich_lo, applicable, abs_tol=1e-12))
        out.append(Slack.judge("sandwich-upper", s, 0.0, r.sandwich_hi, applicable, abs_tol=1e-12))
        out.append(Slack.judge("vol-upper", s, r.vol, math.exp(T_end) * vol0, applicable))
        out.append(Slack.judge("vol-lower", s, math.exp(-T_end) * vol0, r.vol, applicable))
    return out


def alpha_decay_slacks(records, ctx):
    """Alpha-decay version of the f estimate, reported as info only."""
    _require_start(records)
    if ctx.alpha_constant:
        return []
    C = ctx.C
    sic4 = _cumulative(records, "int_Sic4_over")
    s2 = _cumulative(records, "int_S2")
    t = _series(records, "t")
    decay = cumulative_trapezoid(-_series(records, "alpha_dot") * _series(records, "int_SpC4"), t, initial=0.0)
    out = []
    for k, r in enumerate(records):
        s = r.t
        e36 = 1.0 if s == 0 else math.exp(36 * C * s)
        c0 = B.bound_c0(ctx.chi, C, ctx.alpha0, ctx.A1, ctx.vol0, ctx.int_f0, s)
        rhs = c0 + 574 * e36 * s2[k] + B.alpha_decay_term(C, s, decay[k])
        out.append(Slack.judge("decay-f-integral", s, r.int_f + sic4[k], rhs, info=True))
    return out


def volume_rate_slacks(records):
    """d/dt Vol against -int S (trapezoid average), as info rows."""
    return [
        Slack.judge("vol-rate", r.t, (r.vol - p.vol) / (r.t - p.t), -0.5 * (p.int_S + r.int_S), info=True)
        for p, r in zip(records, records[1:])
    ]


def gauss_bonnet_slacks(records):
    out = []
    for r in records:
        scale = 1.0 + max(abs(r.gb_direct), abs(r.gb_translated))
        out.append(Slack.judge("GB-routes", r.t, abs(r.gb_direct - r.gb_translated) / scale, 0.0, abs_tol=GB_ROUTE_TOL))
    return out


def all_slacks(records, ctx):
    return (
        energy_inequality_slacks(records, ctx)
        + monotonicity_slacks(records, ctx)
        + check_f_estimates(records, ctx)
        + check_positive_S_estimates(records, ctx)
        + check_ba_f_rate(records, ctx)
        + check_ba_sic_bounds(records, ctx)
        + alpha_decay_slacks(records, ctx)
        + volume_rate_slacks(records)
        + gauss_bonnet_slacks(records)
    )


# CSV ---------------------------------------------------------------------


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, int, np.floating)) else str(v)


def write_records(path, records):
    cols = MonitorRecord.columns()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in cols])


def read_records(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != MonitorRecord.columns():
        raise ValueError(f"{path}: unexpected monitor columns")
    return [MonitorRecord(*map(float, row)) for row in rows[1:]]


SLACK_COLUMNS = ["inequality", "s", "lhs", "rhs", "slack", "status"]


def write_slacks(path, slacks):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLACK_COLUMNS)
        for x in slacks:
            w.writerow([_fmt(v) for v in asdict(x).values()])


def read_slacks(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != SLACK_COLUMNS:
        raise ValueError(f"{path}: unexpected slack columns")
    return [Slack(r[0], float(r[1]), float(r[2]), float(r[3]), float(r[4]), r[5]) for r in rows[1:]]
