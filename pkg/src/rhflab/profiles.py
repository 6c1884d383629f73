"""Named analytic initial data on a TorusGrid."""
import numpy as np

from . import grid as G

DEFAULT_AMPLITUDE = 0.05


def _wave(grid, axis, mode, phase=0.0):
    x = grid.coords()[axis]
    return np.sin(2 * np.pi * mode * x / grid.lengths[axis] + phase)


def _live_axes(grid):
    return [a for a in range(4) if not grid.reduced[a]]


def flat(grid, **_):
    return G.MetricField.flat(grid)


def conformal_sine(grid, amplitude=DEFAULT_AMPLITUDE, mode=1, axis=0, **_):
    """g = exp(2 eps sin(2 pi k x^a / L_a)) delta."""
    factor = np.exp(2 * amplitude * _wave(grid, axis, mode))
    return G.MetricField(grid, factor[..., None, None] * np.eye(4))


def anisotropic_sine(grid, amplitude=DEFAULT_AMPLITUDE, mode=1, seed=0, **_):
    """Diagonal g_ii = 1 + eps * sum over live axes of seeded-phase sines."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, size=(4, 4))
    data = np.zeros(grid.dims + (4, 4))
    for i in range(4):
        bump = sum((_wave(grid, a, mode, phases[i, a]) for a in _live_axes(grid)), np.zeros(grid.dims))
        data[..., i, i] = 1 + amplitude * bump
    return G.MetricField(grid, data)


def conformal_warp(grid, amplitude=DEFAULT_AMPLITUDE, warp=DEFAULT_AMPLITUDE, mode=1, **_):
    """Pullback of exp(2 psi) delta under x -> x + warp (sin x^2, sin x^1, 0, 0).

    Conformally flat, but the finite-difference jets do not stay inside a
    conformally flat family, so the discrete Weyl tensor measures truncation
    error.  Needs x^1 and x^2 live; on other grids it degrades gracefully.
    """
    x = grid.coords()
    k1 = 2 * np.pi * mode / grid.lengths[0]
    k2 = 2 * np.pi * mode / grid.lengths[1]
    y1 = x[0] + warp * np.sin(k2 * x[1]) / k2
    y2 = x[1] + warp * np.sin(k1 * x[0]) / k1
    jac = np.broadcast_to(np.eye(4), grid.dims + (4, 4)).copy()
    jac[..., 0, 1] = warp * np.cos(k2 * x[1])
    jac[..., 1, 0] = warp * np.cos(k1 * x[0])
    psi = amplitude * (np.sin(k1 * y1) + np.sin(k2 * y2))
    g = np.einsum("...ki,...kj->...ij", jac, jac)
    return G.MetricField(grid, np.exp(2 * psi)[..., None, None] * g)


def phi_sine(grid, amplitude=DEFAULT_AMPLITUDE, mode=1, axis=0, **_):
    return G.ScalarField(grid, amplitude * _wave(grid, axis, mode))


def phi_constant(grid, value=0.0, **_):
    return G.ScalarField.constant(grid, value)


METRICS = {
    "flat": flat,
    "conformal-sine": conformal_sine,
    "anisotropic-sine": anisotropic_sine,
    "conformal-warp": conformal_warp,
}
SCALARS = {
    "phi-sine": phi_sine,
    "constant": phi_constant,
    "zero": phi_constant,
}


def make_metric(name, grid, **params):
    try:
        builder = METRICS[name]
    except KeyError:
        raise ValueError(f"unknown metric profile {name!r}; choose from {sorted(METRICS)}") from None
    return builder(grid, **params).validate()


def make_phi(name, grid, **params):
    try:
        builder = SCALARS[name]
    except KeyError:
        raise ValueError(f"unknown phi profile {name!r}; choose from {sorted(SCALARS)}") from None
    return builder(grid, **params).validate()
