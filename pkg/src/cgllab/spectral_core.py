"""Dirichlet boxes, their sine-mode basis, transforms and quadrature.

Grids store interior points only; ``x_j = j * h`` with ``h = L / (n + 1)``,
``j = 1..n``. Boundary values are identically zero, which is how the
homogeneous Dirichlet condition is encoded everywhere in the package.

A grid function ``g`` and its mode vector ``c`` are related by

    g(x) = sum_k c_k prod_d sin(k_d pi x_d / L_d),

which is the type-I discrete sine transform up to scaling. With this
normalization the trapezoid quadrature of ``g**2`` equals
``prod_d(L_d / 2) * sum_k c_k**2`` exactly on the grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

__all__ = [
    "Domain",
    "SpectralBasis",
    "build_basis",
    "to_modes",
    "from_modes",
    "integrate",
    "grid_points",
]

MIN_RESOLUTION = 4


@dataclass(frozen=True)
class Domain:
    """An interval ``(0, L)`` or a rectangle ``(0, L1) x (0, L2)``.

    Parameters
    ----------
    lengths : tuple of float
        Side lengths, one per dimension.
    sizes : tuple of int
        Number of interior grid points per dimension (at least 4).
    """

    lengths: tuple[float, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        sizes = tuple(int(v) for v in np.atleast_1d(self.sizes))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "sizes", sizes)
        if len(lengths) not in (1, 2):
            raise ValueError(f"only 1-D and 2-D domains are supported, got dimension {len(lengths)}")
        if len(sizes) != len(lengths):
            raise ValueError("lengths and sizes must have the same dimension")
        if not all(np.isfinite(L) and L > 0 for L in lengths):
            raise ValueError(f"side lengths must be positive, got {lengths}")
        if not all(n >= MIN_RESOLUTION for n in sizes):
            raise ValueError(f"resolutions must be >= {MIN_RESOLUTION}, got {sizes}")

    @classmethod
    def interval(cls, length: float, n: int) -> "Domain":
        return cls((length,), (n,))

    @classmethod
    def rectangle(cls, l1: float, l2: float, n1: int, n2: int) -> "Domain":
        return cls((l1, l2), (n1, n2))

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n + 1) for L, n in zip(self.lengths, self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def refined(self, factor: int = 2) -> "Domain":
        """Same box with ``(n + 1) * factor - 1`` points, so old nodes are kept."""
        return Domain(self.lengths, tuple((n + 1) * factor - 1 for n in self.sizes))


def grid_points(domain: Domain) -> tuple[np.ndarray, ...]:
    """Coordinate arrays broadcast to ``domain.shape`` (``indexing='ij'``)."""
    axes = [h * np.arange(1, n + 1) for h, n in zip(domain.spacing, domain.sizes)]
    return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass(frozen=True)
class SpectralBasis:
    """Dirichlet Laplacian eigenpairs on a box.

    ``eigenvalues[k]`` is ``sum_d (k_d pi / L_d)**2`` for ``k_d = 1..n_d``.
    ``norm_factor`` is the Parseval weight ``prod_d L_d / 2``.
    """

    domain: Domain
    eigenvalues: np.ndarray = field(repr=False)
    lambda1: float
    norm_factor: float

    @property
    def mode_indices(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*[np.arange(1, n + 1) for n in self.domain.sizes], indexing="ij"))


@lru_cache(maxsize=64)
def build_basis(domain: Domain) -> SpectralBasis:
    """Eigenvalues ``nu_k`` and the first eigenvalue ``lambda_1`` of ``-Laplace``."""
    per_axis = [(np.arange(1, n + 1) * np.pi / L) ** 2 for L, n in zip(domain.lengths, domain.sizes)]
    nu = per_axis[0]
    for extra in per_axis[1:]:
        nu = np.add.outer(nu, extra)
    nu = np.ascontiguousarray(nu, dtype=float)
    nu.setflags(write=False)
    lambda1 = float(sum((np.pi / L) ** 2 for L in domain.lengths))
    norm = float(np.prod([L / 2.0 for L in domain.lengths]))
    return SpectralBasis(domain, nu, lambda1, norm)


def _check_shape(domain: Domain, arr: np.ndarray) -> None:
    if arr.shape[arr.ndim - domain.dim:] != domain.shape:
        raise ValueError(f"array of shape {arr.shape} does not match domain shape {domain.shape}")


def _scale(domain: Domain) -> float:
    return float(np.prod([np.sqrt((n + 1) / 2.0) for n in domain.sizes]))


def to_modes(domain: Domain, grid) -> np.ndarray:
    """Sine coefficients of a grid function.

    Leading axes (for example the two components of a field, or a time axis)
    are transformed independently.
    """
    arr = np.asarray(grid, dtype=float)
    _check_shape(domain, arr)
    axes = tuple(range(arr.ndim - domain.dim, arr.ndim))
    return scipy.fft.dstn(arr, type=1, axes=axes, norm="ortho") / _scale(domain)


def from_modes(domain: Domain, modes) -> np.ndarray:
    """Grid values from sine coefficients; inverse of :func:`to_modes`."""
    arr = np.asarray(modes, dtype=float)
    _check_shape(domain, arr)
    axes = tuple(range(arr.ndim - domain.dim, arr.ndim))
    return scipy.fft.dstn(arr, type=1, axes=axes, norm="ortho") * _scale(domain)


def integrate(domain: Domain, grid) -> float | np.ndarray:
    """Trapezoid rule with zero boundary values, summed over the spatial axes."""
    arr = np.asarray(grid, dtype=float)
    _check_shape(domain, arr)
    axes = tuple(range(arr.ndim - domain.dim, arr.ndim))
    out = arr.sum(axis=axes) * domain.cell_volume
    return float(out) if np.ndim(out) == 0 else out
