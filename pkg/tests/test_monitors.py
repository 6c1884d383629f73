import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rhflab import flow as F
from rhflab import grid as G
from rhflab import monitors as M
from rhflab import profiles as P
from rhflab import tensor as T

from conftest import smooth_state


def flat_state(value=0.0, dims=(8, 1, 1, 1), alpha=1.0):
    grid = G.TorusGrid(dims)
    return F.FlowState(0.0, G.MetricField.flat(grid), G.ScalarField.constant(grid, value), F.AlphaSchedule.constant(alpha))


def history(state, t_end=0.05, every=1):
    ctx = M.RunContext.from_state(state, M.default_C(state))
    res = F.run(state, t_end, every)
    return [M.record(s, ctx) for s in res.states], ctx


def test_slack_judge_statuses():
    assert M.Slack.judge("x", 0, 1.0, 2.0).status == "pass"
    assert M.Slack.judge("x", 0, 2.0, 1.0).status == "fail"
    assert M.Slack.judge("x", 0, 1.0 + 5e-7, 1.0).status == "pass"
    assert M.Slack.judge("x", 0, 1.0, 0.0, abs_tol=2.0).status == "pass"
    assert M.Slack.judge("x", 0, 3.0, 1.0, applicable=False).status == "not-applicable"
    assert M.Slack.judge("x", 0, 3.0, 1.0, info=True).status == "info"


def test_flat_record_is_trivial():
    state = flat_state(0.4)
    ctx = M.RunContext.from_state(state, 1.0)
    r = M.record(state, ctx)
    assert r.vol == pytest.approx((2 * math.pi) ** 4)
    for name in ("minS", "maxS", "max_gradphi2", "int_f", "int_Sic2", "int_Sm2", "gb_residual", "pinching_lhs", "pinching_weyl_ratio"):
        assert getattr(r, name) == 0, name
    assert M.gauss_bonnet_residual(state) == (0.0, 0.0)
    assert M.pinching_ratio(state, 1.0) == (0.0, 0.0)


def test_flat_run_slacks_pass():
    recs, ctx = history(flat_state(0.4), 0.05)
    sl = M.all_slacks(recs, ctx)
    assert {x.status for x in sl} <= {"pass", "not-applicable", "info"}
    energy = M.energy_inequality_slacks(recs, ctx)
    assert all(x.lhs == 0 and x.rhs == 0 and x.status == "pass" for x in energy)
    pos = [x for x in sl if x.inequality.startswith("posS")]
    assert pos and all(x.status == "not-applicable" for x in pos)
    ba = M.check_BA(recs, ctx)
    assert ba.holds and ba.max_abs_S == 0


def test_history_must_start_at_zero():
    recs, ctx = history(smooth_state(16), 0.02)
    with pytest.raises(ValueError, match="t = 0"):
        M.energy_inequality(recs[1:], ctx)


def test_energy_inequality_on_generic_run():
    recs, ctx = history(smooth_state(16), 0.1)
    assert M.energy_inequality(recs, ctx) >= -1e-6 * recs[-1].A1 * ctx.vol0 * math.exp(ctx.C * 0.1)


def test_f_estimates_reject_nonpositive_denominator():
    recs, ctx = history(smooth_state(16), 0.02)
    bad = [dataclasses.replace(r, minS=-10.0) for r in recs]
    with pytest.raises(ValueError, match="S \\+ C <= 0"):
        M.check_f_estimates(bad, ctx)
    with pytest.raises(ValueError):
        M.RunContext.from_state(smooth_state(16), -5.0)


def test_z_tensor_kernel():
    # flat metric, phi along x1: Sic = S e1 e1 with e1 e1 parallel, so Z = 0 for C = 0
    grid = G.TorusGrid((16, 1, 1, 1))
    phi = P.make_phi("phi-sine", grid, amplitude=0.5)
    state = F.FlowState(0.0, G.MetricField.flat(grid), phi, F.AlphaSchedule.constant(0.8))
    assert np.max(np.abs(state.bundle.s_scalar)) > 0.01
    assert np.max(np.abs(M.z_tensor(state, 0.0))) < 1e-14
    assert np.all(M.z_tensor(flat_state(1.0), 3.0) == 0)


def test_z_tensor_is_affine_in_c():
    state = smooth_state(16)
    z0, z1 = M.z_tensor(state, 0.0), M.z_tensor(state, 2.0)
    grad_sic = state.connection.grad_sym2(state.bundle.sic)
    assert np.allclose(z1 - z0, 2.0 * grad_sic, atol=1e-13)


def test_ba_rescaling_pair():
    state = smooth_state(16, amplitude=0.05)
    lam = 4.0
    scaled = F.FlowState(0.0, G.MetricField(state.grid, lam * state.g.data), state.phi, state.schedule)
    ra = M.record(state, M.RunContext.from_state(state, 1.0))
    rb = M.record(scaled, M.RunContext.from_state(scaled, 1.0))
    assert rb.maxS == pytest.approx(ra.maxS / lam, rel=1e-12)
    assert rb.minS == pytest.approx(ra.minS / lam, rel=1e-12)


def test_ba_false_for_decreasing_alpha():
    sched = F.AlphaSchedule((0.0, 1.0), (0.8, 0.3))
    recs, ctx = history(smooth_state(16, schedule=sched), 0.02)
    ba = M.check_BA(recs, ctx)
    assert not ba.alpha_constant and not ba.holds
    sl = M.all_slacks(recs, ctx)
    assert all(x.status == "not-applicable" for x in sl if x.inequality.startswith(("ba-", "sic-L", "f-integral")))
    assert any(x.inequality == "decay-f-integral" and x.status == "info" for x in sl)


def test_gauss_bonnet_routes_agree():
    state = smooth_state(dims=(12, 12, 1, 1), amplitude=0.1)
    direct, translated = M.gauss_bonnet_residual(state)
    assert abs(direct - translated) <= 1e-10 * (1 + abs(direct))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 10.0))
def test_sic_pointwise_inequality_on_random_data(seed, C):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((4, 4))
    g = a @ a.T + 0.5 * np.eye(4)
    gi = np.linalg.inv(g)
    b = rng.standard_normal((4, 4)) * rng.uniform(0, 3)
    sic = b + b.T
    s = float(np.einsum("ij,ij->", gi, sic))
    if s + C <= 0:
        sic = sic + (1 - s - C) / 4 * g
        s = float(np.einsum("ij,ij->", gi, sic))
    x2 = T.norm2(sic, gi)
    assert math.sqrt(x2) <= 2 * x2 / (s + C) + C / 2 + 1e-12 * (1 + x2)


def test_record_csv_round_trip(tmp_path):
    recs, ctx = history(smooth_state(16), 0.02)
    M.write_records(tmp_path / "m.csv", recs)
    assert M.read_records(tmp_path / "m.csv") == recs
    sl = M.all_slacks(recs, ctx)
    M.write_slacks(tmp_path / "s.csv", sl)
    back = M.read_slacks(tmp_path / "s.csv")
    assert len(back) == len(sl)
    for a, b in zip(back, sl):
        for u, v in zip(dataclasses.astuple(a), dataclasses.astuple(b)):
            assert u == v or (isinstance(v, float) and math.isnan(u) and math.isnan(v))
    assert (tmp_path / "m.csv").read_text().splitlines()[0].split(",") == M.MonitorRecord.columns()


def test_read_rejects_wrong_header(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        M.read_records(tmp_path / "x.csv")
    with pytest.raises(ValueError):
        M.read_slacks(tmp_path / "x.csv")
