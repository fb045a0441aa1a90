"""Reference implementations written directly in complex arithmetic.

They share no code with the real-pair machinery: the sine transform is a
dense matrix product, eigenvalues are rebuilt from scratch, and the
coefficients act as complex numbers. Used to cross-check the stepper under
the identification ``u = u1 - i u2``.
"""
from __future__ import annotations

import numpy as np

__all__ = ["ComplexOracle"]


def _sine_matrix(n: int) -> np.ndarray:
    j = np.arange(1, n + 1)
    return np.sin(np.pi * np.outer(j, j) / (n + 1))


class ComplexOracle:
    """Semi-implicit stepper for

        u_t - (lam + i alpha) Laplace u - (kappa + i beta) |u|^(q-2) u - gamma u = f

    on ``prod_d (0, L_d)`` with ``n_d`` interior points per axis.
    """

    def __init__(self, lengths, sizes, lam, alpha, kappa, beta, gamma, q, sign=1.0):
        self.lengths = tuple(float(v) for v in lengths)
        self.sizes = tuple(int(v) for v in sizes)
        self.mats = [_sine_matrix(n) for n in self.sizes]
        nus = [(np.pi * np.arange(1, n + 1) / L) ** 2 for L, n in zip(self.lengths, self.sizes)]
        nu = nus[0]
        for extra in nus[1:]:
            nu = nu[:, None] + extra[None, :]
        self.nu = nu
        self.lin = complex(lam, alpha)
        self.nonlin = sign * complex(kappa, beta)
        self.gamma = float(gamma)
        self.q = float(q)

    def to_coef(self, u: np.ndarray) -> np.ndarray:
        c = np.asarray(u, dtype=complex)
        for axis, (S, n) in enumerate(zip(self.mats, self.sizes)):
            c = np.moveaxis(np.tensordot(S, c, axes=([1], [axis])), 0, axis) * (2.0 / (n + 1))
        return c

    def to_grid(self, c: np.ndarray) -> np.ndarray:
        u = np.asarray(c, dtype=complex)
        for axis, S in enumerate(self.mats):
            u = np.moveaxis(np.tensordot(S, u, axes=([1], [axis])), 0, axis)
        return u

    def step(self, u: np.ndarray, dt: float, f: np.ndarray | None = None) -> np.ndarray:
        mag = np.abs(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(mag > 0, mag ** (self.q - 2.0), 0.0) * u
        rhs = u + dt * (self.nonlin * g + self.gamma * u)
        if f is not None:
            rhs = rhs + dt * f
        c = self.to_coef(rhs) / (1.0 + dt * self.lin * self.nu)
        return self.to_grid(c)
