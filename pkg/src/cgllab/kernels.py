"""Backend selection for the pointwise kernels.

The compiled module ``cgllab._kernels`` is used when it imports; otherwise
(or when ``CGLLAB_PURE_PYTHON=1``) the numpy twin in ``_kernels_py`` is used.
Both expose ``grad_psi``, ``abs_pow``, ``resolvent_psi`` and
``lipschitz_scan`` with identical signatures.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active: ModuleType = _kernels_py
BACKEND = "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def use_backend(name: str) -> None:
    """Switch the active backend (``"compiled"`` or ``"python"``)."""
    global _active, BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    _active = _BACKENDS[name]
    BACKEND = name


def get_backend(name: str) -> ModuleType:
    return _BACKENDS[name]


if _compiled is not None and os.environ.get("CGLLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    use_backend("compiled")


def grad_psi(data, r):
    return _active.grad_psi(data, r)


def abs_pow(data, r):
    return _active.abs_pow(data, r)


def resolvent_psi(data, mu, r, tol=1e-13, max_iter=200):
    return _active.resolvent_psi(data, mu, r, tol, max_iter)


def lipschitz_scan(u, v, r, d, dtilde):
    return _active.lipschitz_scan(u, v, r, d, dtilde)
