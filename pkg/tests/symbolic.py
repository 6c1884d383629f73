"""Sympy reference geometry, used as an oracle for the numerical kernels."""
import numpy as np
import sympy as sp

X = sp.symbols("x1:5", real=True)


def conformal_metric(psi):
    return sp.exp(2 * psi) * sp.eye(4)


def jets(gsym, point):
    """(g, dg, d2g) evaluated at a point, in the [k, i, j] / [l, k, i, j] layout."""
    sub = dict(zip(X, point))
    g = np.array(gsym.subs(sub).evalf(), dtype=float)
    dg = np.zeros((4, 4, 4))
    d2g = np.zeros((4, 4, 4, 4))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                dk = sp.diff(gsym[i, j], X[k])
                dg[k, i, j] = float(dk.subs(sub))
                for l in range(4):
                    d2g[l, k, i, j] = float(sp.diff(dk, X[l]).subs(sub))
    return g, dg, d2g


def christoffel(gsym):
    gi = gsym.inv()
    return [
        [
            [
                sp.simplify(
                    sum(gi[k, l] * (sp.diff(gsym[j, l], X[i]) + sp.diff(gsym[i, l], X[j]) - sp.diff(gsym[i, j], X[l])) for l in range(4))
                    / 2
                )
                for j in range(4)
            ]
            for i in range(4)
        ]
        for k in range(4)
    ]


def riemann_lowered(gsym, gam=None):
    """R_ijkl = g(R(d_i, d_j) d_k, d_l) by differentiating the symbols directly."""
    gam = gam or christoffel(gsym)

    def up(i, j, k, l):
        return (
            sp.diff(gam[l][j][k], X[i])
            - sp.diff(gam[l][i][k], X[j])
            + sum(gam[l][i][p] * gam[p][j][k] - gam[l][j][p] * gam[p][i][k] for p in range(4))
        )

    return {(i, j, k, l): sum(up(i, j, k, p) * gsym[p, l] for p in range(4))
            for i in range(4) for j in range(4) for k in range(4) for l in range(4)}


def evaluate(expr_or_dict, point, shape=None):
    sub = dict(zip(X, point))
    if isinstance(expr_or_dict, dict):
        out = np.zeros(shape)
        for idx, e in expr_or_dict.items():
            out[idx] = float(e.subs(sub))
        return out
    return float(expr_or_dict.subs(sub))


def conformal_scalar_curvature(psi):
    """R of e^{2 psi} delta in dimension 4: -6 e^{-2 psi}(Lap psi + |d psi|^2)."""
    lap = sum(sp.diff(psi, x, 2) for x in X)
    grad2 = sum(sp.diff(psi, x) ** 2 for x in X)
    return -6 * sp.exp(-2 * psi) * (lap + grad2)


def laplace_beltrami(gsym, f):
    gi = gsym.inv()
    vol = sp.sqrt(gsym.det())
    return sum(sp.diff(vol * gi[a, b] * sp.diff(f, X[b]), X[a]) for a in range(4) for b in range(4)) / vol
