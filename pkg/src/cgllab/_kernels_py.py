"""Pure numpy implementation of the pointwise kernels.

Mirrors ``_kernels.pyx`` function for function; used when the compiled
module is missing or ``CGLLAB_PURE_PYTHON=1`` is set.
"""
from __future__ import annotations

import numpy as np

REL_SLACK = 1e-12


def grad_psi(data: np.ndarray, r: float) -> np.ndarray:
    """``|U|^(r-2) U`` pointwise, with value 0 where ``U = 0``."""
    mag = np.sqrt(data[0] ** 2 + data[1] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(mag > 0, mag ** (r - 2.0), 0.0)
    return data * w


def abs_pow(data: np.ndarray, r: float) -> np.ndarray:
    """``|U|^r`` pointwise."""
    return np.sqrt(data[0] ** 2 + data[1] ** 2) ** r


def resolvent_psi(data: np.ndarray, mu: float, r: float, tol: float = 1e-13, max_iter: int = 200) -> np.ndarray:
    """Solve ``V + mu |V|^(r-2) V = U`` pointwise.

    The direction of ``V`` is that of ``U``; its length ``s`` is the unique
    root of ``s + mu s^(r-1) = |U|`` in ``[0, |U|]``, found by Newton steps
    from an upper bound and bisection whenever a step leaves the bracket.
    """
    shape = np.shape(data)
    data = np.asarray(data, dtype=float).reshape(2, -1)
    a = np.sqrt(data[0] ** 2 + data[1] ** 2)
    hi = np.minimum(a, (a / mu) ** (1.0 / (r - 1.0)))
    lo = np.zeros_like(a)
    s = hi.copy()
    scale = np.maximum(a, 1e-300)
    active = a > 0
    for _ in range(max_iter):
        if not active.any():
            break
        sa = s[active]
        g = sa + mu * sa ** (r - 1.0) - a[active]
        gp = 1.0 + mu * (r - 1.0) * sa ** (r - 2.0)
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(g < 0, sa, lo_a)
        hi_a = np.where(g > 0, sa, hi_a)
        step = sa - g / gp
        bad = ~np.isfinite(step) | (step < lo_a) | (step > hi_a)
        new = np.where(bad, 0.5 * (lo_a + hi_a), step)
        done = (np.abs(new - sa) <= tol * scale[active]) | (g == 0)
        s[active] = new
        lo[active], hi[active] = lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        if active.any():
            raise RuntimeError("resolvent Newton iteration did not converge")
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(a > 0, s / scale, 0.0)
    return (data * ratio).reshape(shape)


def lipschitz_scan(u: np.ndarray, v: np.ndarray, r: float, d: float, dtilde: float):
    """Worst ratios and violation counts of the two pointwise Lipschitz bounds.

    ``u`` and ``v`` are ``(m, 2)`` arrays of pairs. Returns
    ``(worst_lip, worst_diff, violations_lip, violations_diff)``.
    """
    nu_ = np.sqrt(u[:, 0] ** 2 + u[:, 1] ** 2)
    nv_ = np.sqrt(v[:, 0] ** 2 + v[:, 1] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        pu = np.where(nu_ > 0, nu_ ** (r - 2.0), 0.0)
        pv = np.where(nv_ > 0, nv_ ** (r - 2.0), 0.0)
        w = u - v
        dist = np.sqrt(w[:, 0] ** 2 + w[:, 1] ** 2)
        # |U|^(r-2) - |V|^(r-2) without cancellation for nearly equal norms
        tot = nu_ + nv_
        dnorm = np.where(tot > 0, np.sum(w * (u + v), axis=1) / np.where(tot > 0, tot, 1.0), 0.0)
        pos = (nu_ > 0) & (nv_ > 0) & (np.abs(dnorm) <= 0.5 * np.maximum(nu_, nv_))
        safe_v = np.where(pos, nv_, 1.0)
        dpow = np.where(pos, pv * np.expm1((r - 2.0) * np.log1p(dnorm / safe_v)), pu - pv)
        g = pu[:, None] * w + dpow[:, None] * v
        lhs = np.max(np.abs(g[:, :, None] * w[:, None, :]), axis=(1, 2))
        rhs = d * (pu + pv) * dist ** 2
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
        viol = lhs > rhs * (1.0 + REL_SLACK)

        # for r < 3 the right-hand side is infinite at a zero vector
        both = (nu_ > 0) & (nv_ > 0) if r < 3 else np.ones_like(nu_, dtype=bool)
        lhs3 = np.abs(dpow)
        rhs3 = dtilde * (nu_ ** (r - 3.0) + nv_ ** (r - 3.0)) * dist
        ratio3 = np.where(rhs3 > 0, lhs3 / rhs3, np.where(lhs3 > 0, np.inf, 0.0))
        ratio3 = np.where(both, ratio3, 0.0)
        viol3 = both & (lhs3 > rhs3 * (1.0 + REL_SLACK))
    return (
        float(ratio.max(initial=0.0)),
        float(ratio3.max(initial=0.0)),
        int(viol.sum()),
        int(viol3.sum()),
    )
