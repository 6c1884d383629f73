"""Method-of-lines integration of the Ricci-harmonic flow

    d/dt g = -2 Ric + 2 alpha(t) dphi (x) dphi,    d/dt phi = Laplacian phi,

in fixed coordinates on a periodic grid, with residual checks of the
evolution equations satisfied by S, Sic, |dphi|^2 and f = |Sic|^2/(S+C).
"""
from dataclasses import dataclass, field
from functools import cached_property
import logging

import numpy as np

from . import grid as G
from . import tensor as T
from .covariant import Connection
from .errors import DegenerateMetricError, RHFError, StepRejected
from .monitors import z_tensor

log = logging.getLogger(__name__)

CFL = 0.1
MAX_HALVINGS = 20


@dataclass(frozen=True)
class AlphaSchedule:
    """alpha(t): constant, or piecewise linear and nonincreasing through knots.

    Outside the knot range the end values are held, with zero derivative.
    """

    times: tuple = (0.0,)
    values: tuple = (0.0,)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if len(times) != len(values) or not times:
            raise ValueError("alpha schedule needs matching, non-empty times and values")
        if not all(np.isfinite(times + values)):
            raise ValueError("alpha schedule entries must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("alpha schedule times must increase strictly")
        if min(values) < 0:
            raise ValueError("alpha must be >= 0")
        if any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("alpha schedule must be nonincreasing")

    @classmethod
    def constant(cls, alpha):
        return cls((0.0,), (alpha,))

    @property
    def kind(self):
        return "constant" if self.is_constant else "piecewise-linear-decreasing"

    @property
    def is_constant(self):
        return len(set(self.values)) == 1

    def value(self, t):
        return float(np.interp(t, self.times, self.values))

    def derivative(self, t):
        ts, vs = self.times, self.values
        for k in range(len(ts) - 1):
            if ts[k] <= t < ts[k + 1]:
                return (vs[k + 1] - vs[k]) / (ts[k + 1] - ts[k])
        return 0.0


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    g: G.MetricField
    phi: G.ScalarField
    schedule: AlphaSchedule = field(default_factory=lambda: AlphaSchedule.constant(0.0))

    def __post_init__(self):
        if self.g.grid != self.phi.grid:
            raise ValueError("metric and phi live on different grids")

    @property
    def grid(self):
        return self.g.grid

    @property
    def alpha(self):
        return self.schedule.value(self.t)

    @property
    def alpha_dot(self):
        return self.schedule.derivative(self.t)

    @cached_property
    def metric_point(self):
        return G.metric_jets(self.g)

    @cached_property
    def phi_jet(self):
        return G.phi_jets(self.phi)

    @cached_property
    def bundle(self):
        return T.curvature_bundle(self.metric_point, self.phi_jet, self.alpha)

    @cached_property
    def connection(self):
        return Connection.of(self.grid, self.metric_point)

    @cached_property
    def scalars(self):
        return T.contractions(self.bundle)

    def with_fields(self, t, g_data, phi_data):
        grid = self.grid
        return FlowState(t, G.MetricField(grid, g_data), G.ScalarField(grid, phi_data), self.schedule)


def rhs(state):
    """Time derivatives (dg, dphi) of the flow at `state`, as raw arrays."""
    b = state.bundle
    dg = -2.0 * b.sic
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    return dg, b.lap_phi.copy()


def dt_max(state, cfl=CFL):
    grid = state.grid
    h2 = [h * h for h, red in zip(grid.spacing, grid.reduced) if not red]
    hmin2 = min(h2) if h2 else 1.0
    c = state.scalars
    load = np.sqrt(c["rm2"]) + state.alpha * c["grad2"] + np.sqrt(c["hess2"])
    return cfl * hmin2 / (1.0 + float(np.max(load)))


def _checked(state):
    g = state.g.data
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(state.phi.data))):
        raise StepRejected(f"non-finite field at t={state.t!r}")
    try:
        state.metric_point
    except DegenerateMetricError as exc:
        raise StepRejected(f"lost positive-definiteness at t={state.t!r}: {exc}") from exc
    return state


def step_rk4(state, dt):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    g0, p0 = state.g.data, state.phi.data

    def stage(scale, k):
        return _checked(state.with_fields(state.t + scale * dt, g0 + scale * dt * k[0], p0 + scale * dt * k[1]))

    k1 = rhs(state)
    k2 = rhs(stage(0.5, k1))
    k3 = rhs(stage(0.5, k2))
    k4 = rhs(stage(1.0, k3))
    g1 = g0 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    p1 = p0 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return _checked(state.with_fields(state.t + dt, g1, p1))


@dataclass
class FlowRun:
    states: list
    steps: int = 0
    rejections: int = 0


def advance(state, dt, cfl=CFL):
    """One accepted step of size at most dt, halving on rejection.

    Returns (new_state, accepted_dt, rejections).
    """
    h = dt
    for attempt in range(MAX_HALVINGS + 1):
        try:
            return step_rk4(state, h), h, attempt
        except StepRejected as exc:
            log.info("step rejected at t=%r dt=%r: %s", state.t, h, exc)
            h *= 0.5
    raise RHFError(f"step at t={state.t!r} rejected {MAX_HALVINGS + 1} times; last dt={2 * h!r}")


def run(state, t_end, record_every=1, cfl=CFL, dt=None, on_record=None):
    """Integrate to t_end, keeping every `record_every`-th state and the last."""
    if not t_end > state.t:
        raise ValueError("t_end must exceed the initial time")
    out = FlowRun([state])
    if on_record:
        on_record(state)
    eps = 1e-12 * max(1.0, abs(t_end))
    while state.t < t_end - eps:
        h = dt if dt is not None else dt_max(state, cfl)
        h = min(h, t_end - state.t)
        state, _, rej = advance(state, h, cfl)
        out.steps += 1
        out.rejections += rej
        if out.steps % record_every == 0 or state.t >= t_end - eps:
            out.states.append(state)
            if on_record:
                on_record(state)
    return out


def triplet(state, dt):
    """Three states a fixed dt apart, for central time differences."""
    s1 = step_rk4(state, dt)
    return state, s1, step_rk4(s1, dt)


# evolution residuals ------------------------------------------------------


def _history(history):
    if len(history) != 3:
        raise ValueError("residual checks need exactly 3 consecutive states")
    s0, s1, s2 = history
    if not (s0.grid == s1.grid == s2.grid):
        raise ValueError("history states live on different grids")
    d0, d1 = s1.t - s0.t, s2.t - s1.t
    if not (d0 > 0 and abs(d1 - d0) <= 1e-9 * d0):
        raise ValueError(f"history steps differ: {d0!r} vs {d1!r}")
    return s0, s1, s2, 0.5 * (d0 + d1)


def _ddt(history, getter):
    s0, _, s2, dt = _history(history)
    return (getter(s2) - getter(s0)) / (2.0 * dt)


def residual_evolution_S(history):
    """Pointwise residual of box S = 2|Sic|^2 + 2 alpha (Lap phi)^2 - alpha' |dphi|^2."""
    mid = history[1]
    b, c = mid.bundle, mid.scalars
    ds = _ddt(history, lambda s: s.bundle.s_scalar)
    lap = mid.connection.laplacian_scalar(b.s_scalar)
    return ds - lap - 2 * c["sic2"] - 2 * mid.alpha * b.lap_phi**2 + mid.alpha_dot * b.grad_norm2


def residual_evolution_Sic_field(history):
    mid = history[1]
    b = mid.bundle
    gi = b.g_inv
    dsic = _ddt(history, lambda s: s.bundle.sic)
    lap = mid.connection.laplacian_sym2(b.sic)
    phiphi = b.dphi[..., :, None] * b.dphi[..., None, :]
    return (
        dsic
        - lap
        - 2 * T.curvature_action(b.sm, b.sic, gi)
        + 2 * T.tensor_square(b.sic, gi)
        - 2 * mid.alpha * b.lap_phi[..., None, None] * b.hess_phi
        + mid.alpha_dot * phiphi
    )


def residual_evolution_Sic(history):
    return float(np.max(np.abs(residual_evolution_Sic_field(history))))


def residual_evolution_gradphi_field(history):
    mid = history[1]
    c = mid.scalars
    dg2 = _ddt(history, lambda s: s.bundle.grad_norm2)
    lap = mid.connection.laplacian_scalar(c["grad2"])
    return dg2 - lap + 2 * mid.alpha * c["grad4"] + 2 * c["hess2"]


def residual_evolution_gradphi(history):
    return float(np.max(np.abs(residual_evolution_gradphi_field(history))))


def f_field(state, C):
    u = state.bundle.s_scalar + C
    if np.any(u <= 0):
        idx = tuple(int(i) for i in np.argwhere(u <= 0)[0])
        raise ValueError(f"S + C <= 0 at t={state.t!r}, grid index {idx}")
    return state.scalars["sic2"] / u


def f_evolution_rhs(state, C, printed=False):
    """Right side of the box-f identity at one state.

    With alpha' != 0 the extra terms are alpha'|dphi|^2|Sic|^2/(S+C)^2 and
    -2 alpha' <Sic, dphi dphi>/(S+C).  `printed=True` swaps the second one for
    +2 alpha'(S+C)<Sic, dphi dphi>, a variant kept to measure its mismatch.
    """
    b, c = state.bundle, state.scalars
    gi = b.g_inv
    a, ad = state.alpha, state.alpha_dot
    u = b.s_scalar + C
    f = f_field(state, C)
    z2 = T.norm2(z_tensor(state, C), gi)
    mixed = b.lap_phi[..., None, None] * b.sic / u[..., None, None] - b.hess_phi
    out = (
        -2 * z2 / u**3
        - 2 * f**2
        + 4 * c["sm_sic_sic"] / u
        - 2 * a * T.norm2(mixed, gi)
        + 2 * a * c["hess2"]
    )
    if ad != 0.0:
        out = out + ad * c["grad2"] * c["sic2"] / u**2
        if printed:
            out = out + 2 * ad * u * c["sic_dphi_dphi"]
        else:
            out = out - 2 * ad * c["sic_dphi_dphi"] / u
    return out


def residual_evolution_f_field(history, C, printed=False):
    mid = history[1]
    df = _ddt(history, lambda s: f_field(s, C))
    lap = mid.connection.laplacian_scalar(f_field(mid, C))
    return df - lap - f_evolution_rhs(mid, C, printed)


def residual_evolution_f(history, C, printed=False):
    return float(np.max(np.abs(residual_evolution_f_field(history, C, printed))))
