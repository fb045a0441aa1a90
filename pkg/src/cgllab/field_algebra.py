"""Real-pair representation of complex fields and the rotation matrix ``I``.

A complex field is stored as ``U = (u1, u2)``, a ``(2, *shape)`` array. The
rotation ``I = ((0, 1), (-1, 0))`` acts pointwise, ``I U = (u2, -u1)``, so
``I @ I = -E``. Under the identification ``u = u1 - i u2`` the action of ``I``
is exactly multiplication by ``i``, and ``aE + bI`` is multiplication by
``a + ib``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral_core import Domain, build_basis, from_modes, integrate

__all__ = [
    "ComplexField",
    "I_MATRIX",
    "apply_i",
    "complex_scale",
    "inner_l2",
    "inner_l2_skew",
    "l2_norm",
    "l2_norm_sq",
    "random_field",
    "eigenmode",
    "zeros",
]

I_MATRIX = np.array([[0.0, 1.0], [-1.0, 0.0]])
I_MATRIX.setflags(write=False)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """A field ``U = (u1, u2)`` on the interior grid of a domain."""

    data: np.ndarray
    domain: Domain

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.shape != (2,) + self.domain.shape:
            raise ValueError(f"field data must have shape {(2,) + self.domain.shape}, got {arr.shape}")
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_parts(cls, u1, u2, domain: Domain) -> "ComplexField":
        return cls(np.stack([np.asarray(u1, float), np.asarray(u2, float)]), domain)

    @classmethod
    def from_complex(cls, u: np.ndarray, domain: Domain) -> "ComplexField":
        """Inverse of :meth:`to_complex` (``u = u1 - i u2``)."""
        u = np.asarray(u, dtype=complex)
        return cls(np.stack([u.real, -u.imag]), domain)

    def to_complex(self) -> np.ndarray:
        return self.data[0] - 1j * self.data[1]

    @property
    def u1(self) -> np.ndarray:
        return self.data[0]

    @property
    def u2(self) -> np.ndarray:
        return self.data[1]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def _like(self, data) -> "ComplexField":
        return ComplexField(data, self.domain)

    def _other(self, other) -> np.ndarray:
        if isinstance(other, ComplexField):
            _same_domain(self, other)
            return other.data
        return other

    def __add__(self, other):
        return self._like(self.data + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._like(self.data - self._other(other))

    def __rsub__(self, other):
        return self._like(self._other(other) - self.data)

    def __mul__(self, scalar):
        return self._like(self.data * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._like(self.data / float(scalar))

    def __neg__(self):
        return self._like(-self.data)


def _same_domain(U: ComplexField, V: ComplexField) -> None:
    if U.domain != V.domain:
        raise ValueError("fields live on different domains")


def zeros(domain: Domain) -> ComplexField:
    return ComplexField(np.zeros((2,) + domain.shape), domain)


def rotate(data: np.ndarray) -> np.ndarray:
    """``I`` acting on the leading component axis of a raw array."""
    return np.stack([data[1], -data[0]])


def apply_i(U: ComplexField) -> ComplexField:
    return ComplexField(rotate(U.data), U.domain)


def scale_data(a: float, b: float, data: np.ndarray) -> np.ndarray:
    """``(aE + bI)`` on a raw ``(2, ...)`` array."""
    return np.stack([a * data[0] + b * data[1], a * data[1] - b * data[0]])


def complex_scale(a: float, b: float, U: ComplexField) -> ComplexField:
    """``a U + b I U``; the real-pair version of multiplying by ``a + ib``."""
    return ComplexField(scale_data(a, b, U.data), U.domain)


def inner_l2(U: ComplexField, V: ComplexField) -> float:
    _same_domain(U, V)
    return float(integrate(U.domain, U.data[0] * V.data[0] + U.data[1] * V.data[1]))


def inner_l2_skew(U: ComplexField, V: ComplexField) -> float:
    """``(U, I V)``."""
    _same_domain(U, V)
    return float(integrate(U.domain, U.data[0] * V.data[1] - U.data[1] * V.data[0]))


def l2_norm_sq(U: ComplexField) -> float:
    return float(integrate(U.domain, U.data[0] ** 2 + U.data[1] ** 2))


def l2_norm(U: ComplexField) -> float:
    return float(np.sqrt(l2_norm_sq(U)))


def _mode_draws(rng: np.random.Generator, sizes: tuple[int, ...]) -> np.ndarray:
    # Draw mode by mode in increasing index order so that, in 1-D, refining the
    # grid keeps the low-mode coefficients of a seed unchanged.
    if len(sizes) == 1:
        return rng.standard_normal((sizes[0], 2)).T.copy()
    draws = rng.standard_normal(sizes + (2,))
    return np.moveaxis(draws, -1, 0)


def random_field(domain: Domain, seed: int, decay: float = 1.0, amplitude: float = 1.0) -> ComplexField:
    """Gaussian sine series with mode amplitudes ``nu_k ** -decay``.

    ``decay = 0`` is white noise in mode space; larger ``decay`` gives smoother
    fields (in 1-D, ``phi`` stays bounded under refinement once ``decay > 3/4``).
    """
    if decay < 0:
        raise ValueError("decay must be non-negative")
    basis = build_basis(domain)
    rng = np.random.default_rng(seed)
    coef = _mode_draws(rng, domain.shape) * basis.eigenvalues ** (-decay)
    return ComplexField(amplitude * from_modes(domain, coef), domain)


def eigenmode(domain: Domain, k, amplitude: complex = 1.0) -> ComplexField:
    """``amplitude * prod_d sin(k_d pi x_d / L_d)`` under ``u = u1 - i u2``."""
    k = tuple(int(v) for v in np.atleast_1d(k))
    if len(k) != domain.dim or any(v < 1 or v > n for v, n in zip(k, domain.sizes)):
        raise ValueError(f"mode index {k} outside 1..{domain.sizes}")
    coef = np.zeros((2,) + domain.shape)
    amp = complex(amplitude)
    idx = tuple(v - 1 for v in k)
    coef[(0,) + idx] = amp.real
    coef[(1,) + idx] = -amp.imag
    return ComplexField(from_modes(domain, coef), domain)
