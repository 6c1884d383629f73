"""Randomised verification of the pointwise curvature identities.

The inputs are synthetic: a random SPD metric, an algebraic curvature
tensor drawn independently of any metric derivatives, a gradient vector and
a coupling constant.  Every check returns a relative residual, batched over
a leading sample axis when the input is batched.
"""
from dataclasses import dataclass

import numpy as np

from . import tensor as T

M = T.DIM


@dataclass(frozen=True)
class SyntheticInput:
    g: np.ndarray
    rm: np.ndarray
    dphi: np.ndarray
    alpha: np.ndarray
    seed: int

    @classmethod
    def draw(cls, seed, batch=None, alpha=None, dphi_scale=1.0):
        """Draw one input (batch=None) or a batch of inputs from one seed."""
        rng = np.random.default_rng(seed)
        shape = () if batch is None else (batch,)
        # orthonormal-frame quantities, then pushed to coordinates via g = E^T E
        eig = rng.uniform(0.2, 5.0, size=shape + (M,))
        q, r = np.linalg.qr(rng.standard_normal(shape + (M, M)))
        q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]
        frame = np.sqrt(eig)[..., :, None] * np.swapaxes(q, -1, -2)
        g = np.swapaxes(frame, -1, -2) @ frame
        g = 0.5 * (g + np.swapaxes(g, -1, -2))

        rm_hat = random_curvature_tensor(rng, shape)
        # frame norm in [0.5, 3]: keeps |LHS| and the cancelling terms comparable
        size = np.sqrt(np.sum(rm_hat**2, axis=(-4, -3, -2, -1)))
        rm_hat *= (rng.uniform(0.5, 3.0, size=shape) / size)[..., None, None, None, None]
        rm = np.einsum(
            "...ai,...bj,...ck,...dl,...abcd->...ijkl", frame, frame, frame, frame, rm_hat, optimize=True
        )

        v = rng.standard_normal(shape + (M,))
        v /= np.linalg.norm(v, axis=-1, keepdims=True)
        v *= np.sqrt(rng.uniform(0.0, 10.0, size=shape))[..., None] * dphi_scale
        dphi = np.einsum("...ai,...a->...i", frame, v)
        if alpha is None:
            alpha = rng.uniform(0.0, 1.0, size=shape)
        alpha = np.broadcast_to(np.asarray(alpha, float), shape).copy()
        return cls(g=g, rm=rm, dphi=dphi, alpha=alpha, seed=int(seed))

    def scaled(self, lam):
        """g -> lam g; the lowered curvature tensor scales the same way."""
        return SyntheticInput(self.g * lam, self.rm * lam, self.dphi, self.alpha, self.seed)

    @property
    def g_inv(self):
        return T.inverse_metric(self.g)


def curvature_projection(t):
    """Project an arbitrary 4-tensor onto algebraic curvature tensors."""
    t = 0.5 * (t - np.swapaxes(t, -1, -2))
    t = 0.5 * (t - np.swapaxes(t, -3, -4))
    t = 0.5 * (t + np.einsum("...ijkl->...klij", t))
    bianchi = (t + np.einsum("...jkil->...ijkl", t) + np.einsum("...kijl->...ijkl", t)) / 3.0
    return t - bianchi


def random_curvature_tensor(rng, shape=()):
    """Random algebraic curvature tensor in an orthonormal frame.

    Sum of Kulkarni-Nomizu-type products of random symmetric matrices plus a
    trace-free (Weyl-type) part of a projected random tensor.
    """
    delta = np.broadcast_to(np.eye(M), shape + (M, M))
    total = np.zeros(shape + (M,) * 4)
    for _ in range(2):
        a = rng.standard_normal(shape + (M, M))
        b = rng.standard_normal(shape + (M, M))
        a = 0.5 * (a + np.swapaxes(a, -1, -2))
        b = 0.5 * (b + np.swapaxes(b, -1, -2))
        total += 0.5 * (T.kn_bracket(a, b) + T.kn_bracket(b, a))
    cand = curvature_projection(rng.standard_normal(shape + (M,) * 4))
    ric = T.ricci(cand, delta)
    total += T.weyl_tensor(cand, ric, T.scalar_curvature(ric, delta), delta)
    return curvature_projection(total)


def curvature_from_ricci(ric, g, weyl=None):
    """Algebraic curvature tensor with prescribed Ricci tensor (and Weyl part)."""
    r = T.scalar_curvature(ric, T.inverse_metric(g))
    out = T.schouten_part(ric, r, g)
    return out if weyl is None else out + weyl


def _pieces(si):
    gi = si.g_inv
    ric = T.ricci(si.rm, gi)
    r = T.scalar_curvature(ric, gi)
    grad2 = T.vec_norm2(si.dphi, gi)
    sic = T.sic_tensor(ric, si.alpha, si.dphi)
    s = T.s_scalar(r, si.alpha, grad2)
    sm = T.sm_tensor(si.rm, si.alpha, si.dphi, si.g)
    sic_pp = np.einsum("...ij,...ia,...jb,...a,...b->...", sic, gi, gi, si.dphi, si.dphi, optimize=True)
    return dict(gi=gi, ric=ric, r=r, grad2=grad2, sic=sic, s=s, sm=sm, sic_pp=sic_pp)


def _rel(lhs, rhs):
    return np.abs(lhs - rhs) / (1.0 + np.abs(lhs))


def gb_translation_sides(si):
    p = _pieces(si)
    gi, a, grad2 = p["gi"], si.alpha, p["grad2"]
    lhs = T.norm2(si.rm, gi) - 4 * T.norm2(p["ric"], gi) + p["r"] ** 2
    rhs = (
        T.norm2(p["sm"], gi)
        - 4 * T.norm2(p["sic"], gi)
        + p["s"] ** 2
        - (M + 9) / 2 * a**2 * grad2**2
        - 9 * a * p["sic_pp"]
        + 2 * a * p["s"] * grad2
    )
    return lhs, rhs


def check_gb_translation(si):
    return _rel(*gb_translation_sides(si))


def check_sub_identities(si):
    p = _pieces(si)
    gi, a, g2, pp = p["gi"], si.alpha, p["grad2"], p["sic_pp"]
    rm2 = T.norm2(si.rm, gi)
    ric2 = T.norm2(p["ric"], gi)
    return {
        "rm2": _rel(rm2, T.norm2(p["sm"], gi) - a * pp - (M + 3) / 2 * a**2 * g2**2),
        "ric2": _rel(ric2, T.norm2(p["sic"], gi) + 2 * a * pp + a**2 * g2**2),
        "r2": _rel(p["r"] ** 2, p["s"] ** 2 + a**2 * g2**2 + 2 * a * p["s"] * g2),
    }


def check_trace_identities(si):
    """Max-entry residuals of the three metric traces of Sm."""
    p = _pieces(si)
    gi, sm, a = p["gi"], p["sm"], np.asarray(si.alpha)[..., None, None]
    pp = si.dphi[..., :, None] * si.dphi[..., None, :]
    scale = 1.0 + np.max(np.abs(p["sic"]), axis=(-2, -1))

    def err(x, y):
        return np.max(np.abs(x - y), axis=(-2, -1)) / scale

    return {
        "sic_from_sm": np.maximum(
            err(np.einsum("...kl,...iklj->...ij", gi, sm), p["sic"]),
            err(np.einsum("...kl,...kijl->...ij", gi, sm), p["sic"]),
        ),
        "jl": err(np.einsum("...jl,...ijkl->...ik", gi, sm), -p["sic"] - (M + 3) / 2 * a * pp),
        "kl": err(np.einsum("...kl,...ijkl->...ij", gi, sm), -(M + 1) / 2 * a * pp),
    }


def check_weyl_reconstruction(si):
    p = _pieces(si)
    w = T.weyl_tensor(si.rm, p["ric"], p["r"], si.g)
    back = w + T.schouten_part(p["ric"], p["r"], si.g)
    scale = 1.0 + np.max(np.abs(si.rm), axis=(-4, -3, -2, -1))
    traces = [
        np.einsum("...il,...ijkl->...jk", p["gi"], w),
        np.einsum("...jk,...ijkl->...il", p["gi"], w),
        np.einsum("...ik,...ijkl->...jl", p["gi"], w),
    ]
    trace_err = np.max([np.max(np.abs(t), axis=(-2, -1)) for t in traces], axis=0) / scale
    return {
        "reconstruction": np.max(np.abs(back - si.rm), axis=(-4, -3, -2, -1)) / scale,
        "trace_free": trace_err,
    }


def sm_weyl_split_terms(si, C):
    """Named terms of the Weyl-based expansion of S_ijkl (sum = Sm)."""
    p = _pieces(si)
    g, a, m = si.g, np.asarray(si.alpha)[..., None, None, None, None], M
    w = T.weyl_tensor(si.rm, p["ric"], p["r"], g)
    sic_p = p["sic"] + C / m * g
    s_p = (p["s"] + C)[..., None, None, None, None]
    q = T.metric_bracket(g)
    pp = si.dphi[..., :, None] * si.dphi[..., None, :]
    grad2 = p["grad2"][..., None, None, None, None]
    x = np.einsum("...jl,...ik->...ijkl", g, pp) + np.einsum("...kl,...ij->...ijkl", g, pp)
    return {
        "weyl": w,
        "sic_prime": T.kn_bracket(sic_p, g) / (m - 2),
        "s_prime": -s_p * q / ((m - 2) * (m - 1)),
        "c_first": C / (m * (m - 1) * (m - 2)) * q,
        "c_second": -C / (m * (m - 2)) * q,
        "alpha_grad": a / (m - 2) * T.kn_bracket(pp, g),
        "alpha_norm": -a * grad2 * q / ((m - 2) * (m - 1)),
        "alpha_sm": -0.5 * a * x,
    }


def check_sm_weyl_split(si, C):
    p = _pieces(si)
    rhs = sum(sm_weyl_split_terms(si, C).values())
    scale = 1.0 + np.max(np.abs(p["sm"]), axis=(-4, -3, -2, -1))
    return np.max(np.abs(rhs - p["sm"]), axis=(-4, -3, -2, -1)) / scale


def sm_contraction_sides(si, C):
    p = _pieces(si)
    gi, g, a, m = p["gi"], si.g, si.alpha, M
    sic_p = p["sic"] + C / m * g
    s_p = p["s"] + C
    sic_p2 = T.norm2(sic_p, gi)
    w = T.weyl_tensor(si.rm, p["ric"], p["r"], g)
    lhs = T.curvature_contract(p["sm"], sic_p, gi)
    pp = si.dphi[..., :, None] * si.dphi[..., None, :]
    inner = s_p[..., None, None] * sic_p - m / 2 * T.tensor_square(sic_p, gi)
    rhs = (
        ((2 * m - 1) / (m - 1) * s_p * sic_p2 - 2 * T.trace_cube(sic_p, gi) - s_p**3 / (m - 1)) / (m - 2)
        + T.curvature_contract(w, sic_p, gi)
        - (C / m + a / (m - 2) * p["grad2"]) * (s_p**2 - sic_p2) / (m - 1)
        + 2 * a / (m - 2) * T.pair(inner, pp, gi)
    )
    return lhs, rhs


def check_sm_contraction(si, C):
    return _rel(*sm_contraction_sides(si, C))


@dataclass(frozen=True)
class IdentityReport:
    name: str
    seeds_run: int
    max_residual: float

    def line(self):
        return f"{self.name:<24s} seeds={self.seeds_run:<7d} max_residual={self.max_residual:.3e}"


def run_batch(seed, samples, c_values=(0.0, 1.0, 7.3)):
    """Run every identity over `samples` random inputs drawn from `seed`."""
    si = SyntheticInput.draw(seed, batch=samples)
    out = [IdentityReport("gb_translation", samples, float(np.max(check_gb_translation(si))))]
    for key, val in check_sub_identities(si).items():
        out.append(IdentityReport(f"sub_{key}", samples, float(np.max(val))))
    for key, val in check_trace_identities(si).items():
        out.append(IdentityReport(f"trace_{key}", samples, float(np.max(val))))
    for key, val in check_weyl_reconstruction(si).items():
        out.append(IdentityReport(f"weyl_{key}", samples, float(np.max(val))))
    out.append(
        IdentityReport("sm_weyl_split", samples, float(max(np.max(check_sm_weyl_split(si, c)) for c in c_values)))
    )
    out.append(
        IdentityReport("sm_contraction", samples, float(max(np.max(check_sm_contraction(si, c)) for c in c_values)))
    )
    return out
