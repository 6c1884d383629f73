"""Pointwise curvature algebra for Riemannian 4-metrics.

All functions broadcast over leading axes, so the same call evaluates one
point or a whole grid of points.  Index layout of the arrays:

    dg[..., k, i, j]        d_k g_ij
    d2g[..., l, k, i, j]    d_l d_k g_ij
    gamma[..., k, i, j]     Gamma^k_ij
    rm[..., i, j, k, l]     R_ijkl

Sign convention (the only place it is fixed): R_ijkl = g(R(e_i, e_j) e_k, e_l)
with R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y].  With this choice
Ric_ij = g^{kl} R_iklj, sectional curvatures are R_ijji and the round sphere
has positive scalar curvature.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError

DIM = 4
COND_LIMIT = 1e12


def inverse_metric(g):
    """Invert a (batch of) symmetric positive-definite 4x4 matrices.

    Raises DegenerateMetricError for non-positive eigenvalues or a condition
    number above COND_LIMIT; the error carries the first offending batch index.
    """
    g = np.asarray(g, dtype=float)
    eig = np.linalg.eigvalsh(g)
    lo, hi = eig[..., 0], eig[..., -1]
    bad = ~(lo > 0) | (hi > COND_LIMIT * np.where(lo > 0, lo, 1.0))
    if np.any(bad):
        loc = np.argwhere(bad)[0] if bad.ndim else None
        raise DegenerateMetricError("degenerate metric", loc)
    return np.linalg.inv(g)


@dataclass(frozen=True)
class MetricPoint:
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray

    @classmethod
    def from_jets(cls, g, dg=None, d2g=None):
        g = np.asarray(g, dtype=float)
        batch = g.shape[:-2]
        if dg is None:
            dg = np.zeros(batch + (DIM,) * 3)
        if d2g is None:
            d2g = np.zeros(batch + (DIM,) * 4)
        return cls(g, inverse_metric(g), np.asarray(dg, float), np.asarray(d2g, float))


@dataclass(frozen=True)
class PhiJet:
    phi: np.ndarray
    dphi: np.ndarray
    d2phi_coord: np.ndarray


@dataclass(frozen=True)
class CurvatureBundle:
    gamma: np.ndarray
    rm: np.ndarray
    ric: np.ndarray
    r_scalar: np.ndarray
    weyl: np.ndarray
    sic: np.ndarray
    s_scalar: np.ndarray
    sm: np.ndarray
    sin_tf: np.ndarray
    hess_phi: np.ndarray
    lap_phi: np.ndarray
    grad_norm2: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    dphi: np.ndarray
    alpha: np.ndarray


def _alpha(alpha, extra_axes):
    a = np.asarray(alpha, dtype=float)
    return a.reshape(a.shape + (1,) * extra_axes)


def _lowered_christoffel(dg):
    # Gamma_lij = (d_i g_jl + d_j g_il - d_l g_ij) / 2, first index lowered
    return 0.5 * (
        np.einsum("...ijl->...lij", dg)
        + np.einsum("...jil->...lij", dg)
        - dg
    )


def christoffel(mp):
    return np.einsum("...kl,...lij->...kij", mp.g_inv, _lowered_christoffel(mp.dg))


def christoffel_derivative(mp):
    """d_m Gamma^k_ij as array [..., m, k, i, j], exact in the metric jets."""
    low = _lowered_christoffel(mp.dg)
    d_low = 0.5 * (
        np.einsum("...mijl->...mlij", mp.d2g)
        + np.einsum("...mjil->...mlij", mp.d2g)
        - mp.d2g
    )
    d_ginv = -np.einsum("...ka,...mab,...bl->...mkl", mp.g_inv, mp.dg, mp.g_inv, optimize=True)
    return (
        np.einsum("...mkl,...lij->...mkij", d_ginv, low)
        + np.einsum("...kl,...mlij->...mkij", mp.g_inv, d_low)
    )


def riemann(mp):
    gam = christoffel(mp)
    dgam = christoffel_derivative(mp)
    # R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_ip G^p_jk - G^l_jp G^p_ik
    up = (
        np.einsum("...iljk->...ijkl", dgam)
        - np.einsum("...jlik->...ijkl", dgam)
        + np.einsum("...lip,...pjk->...ijkl", gam, gam)
        - np.einsum("...ljp,...pik->...ijkl", gam, gam)
    )
    return np.einsum("...ijkp,...pl->...ijkl", up, mp.g)


def ricci(rm, g_inv):
    return np.einsum("...kl,...iklj->...ij", g_inv, rm)


def scalar_curvature(ric, g_inv):
    return np.einsum("...ij,...ij->...", g_inv, ric)


def sic_tensor(ric, alpha, dphi):
    dphi = np.asarray(dphi, dtype=float)
    return ric - _alpha(alpha, 2) * dphi[..., :, None] * dphi[..., None, :]


def s_scalar(r_scalar, alpha, grad_norm2):
    return r_scalar - np.asarray(alpha, dtype=float) * grad_norm2


def sm_tensor(rm, alpha, dphi, g):
    """S_ijkl = R_ijkl - (alpha/2)(g_jl d_iphi d_kphi + g_kl d_iphi d_jphi)."""
    dphi = np.asarray(dphi, dtype=float)
    corr = np.einsum("...jl,...i,...k->...ijkl", g, dphi, dphi, optimize=True) + np.einsum(
        "...kl,...i,...j->...ijkl", g, dphi, dphi
    )
    return rm - 0.5 * _alpha(alpha, 4) * corr


def kn_bracket(h, g):
    """h_il g_jk + h_jk g_il - h_ik g_jl - h_jl g_ik (symmetric h)."""
    return (
        np.einsum("...il,...jk->...ijkl", h, g)
        + np.einsum("...jk,...il->...ijkl", h, g)
        - np.einsum("...ik,...jl->...ijkl", h, g)
        - np.einsum("...jl,...ik->...ijkl", h, g)
    )


def metric_bracket(g):
    """g_il g_jk - g_ik g_jl, the curvature tensor of unit sectional curvature."""
    return np.einsum("...il,...jk->...ijkl", g, g) - np.einsum("...ik,...jl->...ijkl", g, g)


def schouten_part(ric, r_scalar, g, m=DIM):
    r = np.asarray(r_scalar, dtype=float)[..., None, None, None, None]
    return kn_bracket(ric, g) / (m - 2) - r * metric_bracket(g) / ((m - 1) * (m - 2))


def weyl_tensor(rm, ric, r_scalar, g):
    return rm - schouten_part(ric, r_scalar, g)


def hessian_phi(mp, pj):
    """Covariant Hessian and Laplacian of phi from its coordinate jets."""
    gam = christoffel(mp)
    hess = pj.d2phi_coord - np.einsum("...kij,...k->...ij", gam, pj.dphi)
    return hess, np.einsum("...ij,...ij->...", mp.g_inv, hess)


def trace_free(sic, s, g, m=DIM):
    return sic - np.asarray(s, dtype=float)[..., None, None] / m * g


def raise_all(t, g_inv):
    """Raise every index of a covariant tensor (trailing axes)."""
    rank = t.ndim - g_inv.ndim + 2
    letters = "abcdefgh"[:rank]
    out = t
    for pos in range(rank):
        src = letters[:pos] + "z" + letters[pos + 1:]
        out = np.einsum(f"...{src},...{letters[pos]}z->...{letters}", out, g_inv)
    return out


def norm2(t, g_inv):
    """Full contraction |T|^2 with every index raised by g_inv."""
    rank = t.ndim - g_inv.ndim + 2
    up = raise_all(t, g_inv)
    return np.sum(t * up, axis=tuple(range(-rank, 0)))


def vec_norm2(v, g_inv):
    return np.einsum("...i,...ij,...j->...", v, g_inv, v, optimize=True)


def mat_power_up(a, g_inv):
    """Mixed form A^i_j = g^{ik} A_kj."""
    return np.einsum("...ik,...kj->...ij", g_inv, a)


def tensor_square(a, g_inv):
    """(A^2)_ij = A_ik A_jl g^{kl}."""
    return np.einsum("...ik,...kl,...jl->...ij", a, g_inv, a, optimize=True)


def trace_cube(a, g_inv):
    """A_ij A^j_k A^{ki}."""
    mixed = mat_power_up(a, g_inv)
    return np.einsum("...ij,...jk,...ki->...", mixed, mixed, mixed, optimize=True)


def pair(a, b, g_inv):
    """<A, B> for covariant 2-tensors."""
    return np.einsum("...ij,...ik,...jl,...kl->...", a, g_inv, g_inv, b, optimize=True)


def curvature_contract(t4, a, g_inv):
    """T(A, A) = T_kijl A^{kl} A^{ij}."""
    up = np.einsum("...ka,...ab,...bl->...kl", g_inv, a, g_inv, optimize=True)
    return np.einsum("...kijl,...kl,...ij->...", t4, up, up, optimize=True)


def curvature_action(t4, a, g_inv):
    """T(A, .)_ij = T_kijl A^{kl}."""
    up = np.einsum("...ka,...ab,...bl->...kl", g_inv, a, g_inv, optimize=True)
    return np.einsum("...kijl,...kl->...ij", t4, up)


def curvature_bundle(mp, pj, alpha):
    gamma = christoffel(mp)
    rm = riemann(mp)
    ric = ricci(rm, mp.g_inv)
    r = scalar_curvature(ric, mp.g_inv)
    hess, lap = hessian_phi(mp, pj)
    grad2 = vec_norm2(pj.dphi, mp.g_inv)
    sic = sic_tensor(ric, alpha, pj.dphi)
    s = s_scalar(r, alpha, grad2)
    return CurvatureBundle(
        gamma=gamma,
        rm=rm,
        ric=ric,
        r_scalar=r,
        weyl=weyl_tensor(rm, ric, r, mp.g),
        sic=sic,
        s_scalar=s,
        sm=sm_tensor(rm, alpha, pj.dphi, mp.g),
        sin_tf=trace_free(sic, s, mp.g),
        hess_phi=hess,
        lap_phi=lap,
        grad_norm2=grad2,
        g=mp.g,
        g_inv=mp.g_inv,
        dphi=np.asarray(pj.dphi, float),
        alpha=np.asarray(alpha, float),
    )


def contractions(bundle, alpha=None):
    """Scalar contractions used by the evolution identities and estimates.

    Keys: rm2, ric2, r2, sm2, sic2, s2, sin2, weyl2, sm_sic_sic, sic3, sin3,
    sic_dphi_dphi, weyl_sin_sin, grad2, grad4, hess2, lap2.
    """
    if alpha is None:
        alpha = bundle.alpha
    b = bundle
    gi = b.g_inv
    return {
        "rm2": norm2(b.rm, gi),
        "ric2": norm2(b.ric, gi),
        "r2": b.r_scalar**2,
        "sm2": norm2(b.sm, gi),
        "sic2": norm2(b.sic, gi),
        "s2": b.s_scalar**2,
        "sin2": norm2(b.sin_tf, gi),
        "weyl2": norm2(b.weyl, gi),
        "sm_sic_sic": curvature_contract(b.sm, b.sic, gi),
        "sic3": trace_cube(b.sic, gi),
        "sin3": trace_cube(b.sin_tf, gi),
        "sic_dphi_dphi": np.einsum("...ij,...ia,...jb,...a,...b->...", b.sic, gi, gi, b.dphi, b.dphi, optimize=True),
        "weyl_sin_sin": curvature_contract(b.weyl, b.sin_tf, gi),
        "grad2": b.grad_norm2,
        "grad4": b.grad_norm2**2,
        "hess2": norm2(b.hess_phi, gi),
        "lap2": b.lap_phi**2,
    }
