"""Dirichlet energy, power functionals, their gradients, resolvents and
Yosida approximations.

``phi(U) = 1/2 |grad U|^2`` is evaluated spectrally, so ``grad_phi`` is the
mode-wise multiplication by ``nu_k`` and its resolvent is the mode-wise
scaling ``1 / (1 + mu nu_k)``. ``psi_r(U) = (1/r) int |U|^r`` uses the same
trapezoid rule as :func:`~cgllab.spectral_core.integrate`; its gradient and
resolvent act pointwise.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .field_algebra import ComplexField
from .spectral_core import build_basis, from_modes, integrate, to_modes

__all__ = [
    "phi",
    "grad_phi",
    "psi_r",
    "grad_psi_r",
    "resolvent_phi",
    "yosida_phi",
    "moreau_yosida_phi",
    "resolvent_psi_r",
    "yosida_psi_r",
    "phi_modes",
]


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not mu > 0:
        raise ValueError(f"Yosida parameter must be positive, got {mu}")
    return mu


def _check_r(r: float) -> float:
    r = float(r)
    if not r > 1:
        raise ValueError(f"exponent r must exceed 1, got {r}")
    return r


def phi_modes(modes: np.ndarray, eigenvalues: np.ndarray, norm_factor: float) -> float:
    """Dirichlet energy from a ``(2, *shape)`` array of sine coefficients."""
    return 0.5 * norm_factor * float(np.sum(eigenvalues * (modes[0] ** 2 + modes[1] ** 2)))


def phi(U: ComplexField) -> float:
    """``1/2 sum_k nu_k |U_k|^2`` (times the Parseval weight)."""
    basis = build_basis(U.domain)
    return phi_modes(to_modes(U.domain, U.data), basis.eigenvalues, basis.norm_factor)


def _mode_multiply(U: ComplexField, factor: np.ndarray) -> ComplexField:
    modes = to_modes(U.domain, U.data)
    return ComplexField(from_modes(U.domain, modes * factor), U.domain)


def grad_phi(U: ComplexField) -> ComplexField:
    """``-Laplace U`` with Dirichlet conditions."""
    return _mode_multiply(U, build_basis(U.domain).eigenvalues)


def psi_r(U: ComplexField, r: float) -> float:
    r = _check_r(r)
    return float(integrate(U.domain, kernels.abs_pow(U.data, r))) / r


def grad_psi_r(U: ComplexField, r: float) -> ComplexField:
    """``|U|^(r-2) U`` pointwise."""
    r = _check_r(r)
    return ComplexField(kernels.grad_psi(U.data, r), U.domain)


def resolvent_phi(U: ComplexField, mu: float) -> ComplexField:
    """``(1 + mu grad_phi)^-1 U``."""
    mu = _check_mu(mu)
    return _mode_multiply(U, 1.0 / (1.0 + mu * build_basis(U.domain).eigenvalues))


def yosida_phi(U: ComplexField, mu: float) -> ComplexField:
    """``grad_phi(resolvent_phi(U, mu)) = (U - J_mu U) / mu``, mode factor ``nu / (1 + mu nu)``."""
    mu = _check_mu(mu)
    nu = build_basis(U.domain).eigenvalues
    return _mode_multiply(U, nu / (1.0 + mu * nu))


def moreau_yosida_phi(U: ComplexField, mu: float) -> float:
    """``mu/2 |yosida_phi(U)|^2 + phi(J_mu U)``, never larger than ``phi(U)``."""
    mu = _check_mu(mu)
    basis = build_basis(U.domain)
    nu = basis.eigenvalues
    modes = to_modes(U.domain, U.data)
    res = modes / (1.0 + mu * nu)
    yos = modes * (nu / (1.0 + mu * nu))
    return 0.5 * mu * basis.norm_factor * float(np.sum(yos ** 2)) + phi_modes(res, nu, basis.norm_factor)


def resolvent_psi_r(U: ComplexField, mu: float, r: float, tol: float = 1e-13) -> ComplexField:
    """``(1 + mu grad_psi_r)^-1 U``, solved pointwise (requires ``r > 2``)."""
    mu = _check_mu(mu)
    r = float(r)
    if not r > 2:
        raise ValueError(f"resolvent_psi_r needs r > 2, got {r}")
    return ComplexField(kernels.resolvent_psi(U.data, mu, r, tol), U.domain)


def yosida_psi_r(U: ComplexField, mu: float, r: float) -> ComplexField:
    """``grad_psi_r(resolvent_psi_r(U))``."""
    return grad_psi_r(resolvent_psi_r(U, mu, r), r)
