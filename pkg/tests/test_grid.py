import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rhflab import grid as G
from rhflab import profiles as P
from rhflab.errors import CorruptedFieldError, DegenerateMetricError


def order_of(errors, ns):
    return float(-np.polyfit(np.log(ns), np.log(errors), 1)[0])


@pytest.mark.parametrize("dims", [(3, 1, 1, 1), (8, 5, 1, 1), (8, 8, 8)])
def test_bad_dims_rejected(dims):
    with pytest.raises(ValueError):
        G.TorusGrid(dims, fd_order=4 if dims == (8, 5, 1, 1) else 2)


def test_bad_order_and_lengths():
    with pytest.raises(ValueError):
        G.TorusGrid((8, 1, 1, 1), fd_order=3)
    with pytest.raises(ValueError):
        G.TorusGrid((8, 1, 1, 1), lengths=(1.0, 1.0, -1.0, 1.0))


def test_constant_fields_have_zero_derivatives():
    grid = G.TorusGrid((8, 6, 1, 1), fd_order=4)
    data = np.full(grid.dims, 3.7)
    assert np.all(grid.gradient(data) == 0)
    assert np.all(grid.hessian(data) == 0)


@pytest.mark.parametrize("order", [2, 4])
def test_metric_first_derivative_order(order):
    errs, ns = [], [16, 32, 64]
    for n in ns:
        grid = G.TorusGrid((n, 1, 1, 1), lengths=(3.0, 1.0, 1.0, 1.0), fd_order=order)
        x = grid.coords()[0]
        k = 2 * np.pi / 3.0
        g = np.eye(4) * (1 + 0.1 * np.sin(k * x))[..., None, None]
        dg = grid.d1(g, 0)
        exact = np.eye(4) * (0.1 * k * np.cos(k * x))[..., None, None]
        errs.append(np.max(np.abs(dg - exact)))
    assert order_of(errs, ns) == pytest.approx(order, abs=0.2)


@pytest.mark.parametrize("order", [2, 4])
def test_scalar_second_derivative_order(order):
    errs, ns = [], [16, 32, 64]
    for n in ns:
        grid = G.TorusGrid((1, n, 1, 1), lengths=(1.0, 5.0, 1.0, 1.0), fd_order=order)
        k = 2 * np.pi / 5.0
        x2 = grid.coords()[1]
        h = grid.hessian(np.sin(k * x2))
        errs.append(np.max(np.abs(h[..., 1, 1] + k * k * np.sin(k * x2))))
        assert np.all(h[..., 0, :] == 0)
    assert order_of(errs, ns) == pytest.approx(order, abs=0.2)


@pytest.mark.parametrize("order", [2, 4])
def test_mixed_partial_order(order):
    errs, ns = [], [12, 24, 48]
    for n in ns:
        grid = G.TorusGrid((n, n, 1, 1), fd_order=order)
        x1, x2, _, _ = grid.coords()
        h = grid.hessian(np.sin(x1) * np.cos(2 * x2))
        errs.append(np.max(np.abs(h[..., 0, 1] + 2 * np.cos(x1) * np.sin(2 * x2))))
    assert order_of(errs, ns) == pytest.approx(order, abs=0.2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 4]))
def test_periodic_differences_sum_to_zero(seed, order):
    grid = G.TorusGrid((8, 6, 1, 1), fd_order=order)
    data = np.random.default_rng(seed).standard_normal(grid.dims)
    for k in (0, 1):
        assert abs(grid.d1(data, k).sum()) < 1e-10
        assert abs(grid.d2(data, k).sum()) < 1e-9


def test_integrate_examples():
    grid = G.TorusGrid((8, 6, 4, 1), fd_order=2)
    flat = G.MetricField.flat(grid)
    assert G.volume(flat) == pytest.approx((2 * np.pi) ** 4, rel=1e-14)
    assert G.integrate(np.full(grid.dims, 2.5), flat) == pytest.approx(2.5 * (2 * np.pi) ** 4, rel=1e-14)
    x = grid.coords()[1]
    assert abs(G.integrate(np.sin(x), flat)) < 1e-10


def test_integrate_conformal_volume():
    # e^{2 eps sin x} delta has sqrt det = e^{4 eps sin x}; its mean is I0(4 eps)
    from scipy.special import i0

    grid = G.TorusGrid((32, 1, 1, 1))
    g = P.make_metric("conformal-sine", grid, amplitude=0.1)
    assert G.volume(g) == pytest.approx((2 * np.pi) ** 4 * i0(0.4), rel=1e-12)


def test_integrate_rejects_negative_determinant():
    grid = G.TorusGrid((4, 1, 1, 1))
    data = G.MetricField.flat(grid).data
    data[1] = np.diag([1.0, 1.0, 1.0, -1.0])
    with pytest.raises(DegenerateMetricError):
        G.volume(G.MetricField(grid, data))


def test_extrema():
    grid = G.TorusGrid((64, 1, 1, 1))
    assert G.extrema(G.ScalarField.constant(grid, 1.5)) == (1.5, 1.5)
    lo, hi = G.extrema(P.make_phi("phi-sine", grid, amplitude=0.4))
    assert lo == pytest.approx(-0.4) and hi == pytest.approx(0.4)
    reduced = G.TorusGrid((64, 1, 1, 1), lengths=(2 * np.pi, 7.0, 9.0, 1.0))
    assert G.extrema(P.make_phi("phi-sine", reduced, amplitude=0.4)) == (lo, hi)


def test_non_finite_data_is_corrupted():
    grid = G.TorusGrid((4, 1, 1, 1))
    data = np.zeros(grid.dims)
    data[2] = np.nan
    with pytest.raises(CorruptedFieldError):
        G.ScalarField(grid, data).validate()
    with pytest.raises(CorruptedFieldError):
        G.phi_jets(G.ScalarField(grid, data))


def test_asymmetric_metric_is_corrupted():
    grid = G.TorusGrid((4, 1, 1, 1))
    data = G.MetricField.flat(grid).data
    data[0, ..., 0, 1] = 0.3
    with pytest.raises(CorruptedFieldError):
        G.MetricField(grid, data).validate()


def test_shape_mismatch():
    grid = G.TorusGrid((4, 1, 1, 1))
    with pytest.raises(ValueError):
        G.ScalarField(grid, np.zeros((5, 1, 1, 1)))
    with pytest.raises(ValueError):
        G.MetricField(grid, np.zeros((4, 1, 1, 1, 3, 3)))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5), st.sampled_from([2, 4]))
def test_snapshot_round_trip(tmp_path_factory, seed, t, order):
    tmp = tmp_path_factory.mktemp("snap")
    grid = G.TorusGrid((6, 1, 6, 1), lengths=(1.0, 2.0, math.pi, 4.0), fd_order=order)
    g = P.make_metric("anisotropic-sine", grid, amplitude=0.1, seed=seed)
    phi = G.ScalarField(grid, np.random.default_rng(seed).standard_normal(grid.dims))
    for field in (g, phi):
        G.save_field(tmp / "f.rhf", field, t)
        back, t2 = G.load_field(tmp / "f.rhf")
        assert type(back) is type(field) and back.grid == grid and t2 == t
        assert np.array_equal(back.data, field.data)


def test_corrupted_snapshots(tmp_path):
    grid = G.TorusGrid((4, 1, 1, 1))
    path = G.save_field(tmp_path / "s.rhf", G.ScalarField.constant(grid, 1.0))
    raw = path.read_bytes()
    (tmp_path / "short.rhf").write_bytes(raw[:-8])
    (tmp_path / "magic.rhf").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "header.rhf").write_bytes(raw.replace(b"dims=4,1,1,1", b"dims=4,1,1"))
    for name in ("short", "magic", "header"):
        with pytest.raises(CorruptedFieldError):
            G.load_field(tmp_path / f"{name}.rhf")


def test_refined_keeps_reduced_axes():
    grid = G.TorusGrid((8, 1, 6, 1), fd_order=2)
    assert grid.refined().dims == (16, 1, 12, 1)
    assert grid.refined(3, axes=[2]).dims == (8, 1, 18, 1)


def test_jets_at_matches_field_jets():
    grid = G.TorusGrid((8, 8, 1, 1))
    g = P.make_metric("anisotropic-sine", grid, amplitude=0.1, seed=2)
    phi = P.make_phi("phi-sine", grid, amplitude=0.3, axis=1)
    mp, pj = G.jets_at(g, phi, (3, 5, 0, 0))
    full = G.metric_jets(g)
    assert np.array_equal(mp.d2g, full.d2g[3, 5, 0, 0])
    assert pj.phi == phi.data[3, 5, 0, 0]
