"""Covariant derivatives and rough Laplacians of grid tensor fields.

Partial derivatives come from the grid stencils; connection terms use the
Christoffel symbols and their exact jet derivatives, so the only error is the
finite-difference error of the partials.
"""
from dataclasses import dataclass

import numpy as np

from . import tensor as T


@dataclass(frozen=True)
class Connection:
    grid: object
    mp: T.MetricPoint
    gamma: np.ndarray
    dgamma: np.ndarray

    @classmethod
    def of(cls, grid, mp):
        return cls(grid, mp, T.christoffel(mp), T.christoffel_derivative(mp))

    def grad_scalar(self, u):
        return self.grid.gradient(u)

    def laplacian_scalar(self, u):
        du = self.grid.gradient(u)
        hess = self.grid.hessian(u) - np.einsum("...cab,...c->...ab", self.gamma, du)
        return np.einsum("...ab,...ab->...", self.mp.g_inv, hess)

    def grad_sym2(self, t, dt=None):
        """nabla_b T_ij as [grid, b, i, j]."""
        gam = self.gamma
        if dt is None:
            dt = self.grid.gradient(t)
        return (
            dt
            - np.einsum("...cbi,...cj->...bij", gam, t)
            - np.einsum("...cbj,...ic->...bij", gam, t)
        )

    def laplacian_sym2(self, t):
        """g^{ab} nabla_a nabla_b T_ij for a covariant 2-tensor field."""
        gam, dgam = self.gamma, self.dgamma
        dt = self.grid.gradient(t)
        d2t = self.grid.hessian(t)
        cov1 = self.grad_sym2(t, dt)
        # d_a (nabla_b T_ij) by the product rule
        d_cov1 = (
            d2t
            - np.einsum("...acbi,...cj->...abij", dgam, t)
            - np.einsum("...cbi,...acj->...abij", gam, dt)
            - np.einsum("...acbj,...ic->...abij", dgam, t)
            - np.einsum("...cbj,...aic->...abij", gam, dt)
        )
        cov2 = (
            d_cov1
            - np.einsum("...cab,...cij->...abij", gam, cov1)
            - np.einsum("...cai,...bcj->...abij", gam, cov1)
            - np.einsum("...caj,...bic->...abij", gam, cov1)
        )
        return np.einsum("...ab,...abij->...ij", self.mp.g_inv, cov2)
