"""Time integration of the real-pair Ginzburg-Landau system

    dU/dt + (lam + alpha I) grad_phi(U) - (kappa + beta I) grad_psi_q(U) - gamma U = F,

of the linear auxiliary problem where ``grad_psi_q(U)`` is replaced by a given
source ``h(t)``, of its Yosida-regularized variant, and of the Picard
iteration ``h -> grad_psi_q(U^h)``.

All schemes work in sine-mode space. The default scheme is first order:
implicit in the whole linear operator ``(lam + alpha I) nu_k`` (a 2x2 solve per
mode, inverted in closed form through ``(aE + bI)^-1 = (aE - bI) / (a^2 + b^2)``)
and explicit in the nonlinearity, the source, ``gamma U`` and the forcing.
Classical RK4 on the full right-hand side is available as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import BallEscape, BlowupSignal, ConfigurationError, NonContractive, SupercriticalExponent
from .field_algebra import ComplexField, rotate, scale_data
from .monotone_ops import phi
from .spectral_core import Domain, build_basis, from_modes, integrate, to_modes

__all__ = [
    "EvolutionParams",
    "Forcing",
    "SourceSeries",
    "Trajectory",
    "FixedPointReport",
    "step_acgl",
    "simulate",
    "solve_linear_aeh",
    "solve_aeh_mu",
    "fixed_point_solve",
    "acgl_residual",
    "time_grid",
    "critical_exponent",
]

SCHEMES = ("semi_implicit", "explicit_rk4")


def critical_exponent(dim: int) -> float:
    return np.inf if dim <= 2 else 2.0 * dim / (dim - 2)


@dataclass(frozen=True)
class EvolutionParams:
    """Coefficients, exponent, horizon and step of a run.

    ``nonlinear_sign = -1`` flips the sign of the whole nonlinear term. It is
    a sanity switch for defocusing comparison runs, not part of the focusing
    model (whose default is ``+1``).
    """

    lam: float = 1.0
    alpha: float = 0.0
    kappa: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    q: float = 4.0
    T: float = 1.0
    dt: float = 1e-3
    scheme: str = "semi_implicit"
    nonlinear_sign: float = 1.0

    def __post_init__(self):
        for name in ("lam", "alpha", "kappa", "beta", "gamma", "q", "T", "dt"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ConfigurationError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.lam <= 0:
            raise ConfigurationError("lam must be positive")
        if self.kappa < 0:
            raise ConfigurationError("kappa must be non-negative")
        if self.T <= 0 or self.dt <= 0:
            raise ConfigurationError("T and dt must be positive")
        if self.q <= 2:
            raise ConfigurationError("q must exceed 2")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.nonlinear_sign not in (1, -1):
            raise ConfigurationError("nonlinear_sign must be +1 or -1")
        object.__setattr__(self, "nonlinear_sign", float(self.nonlinear_sign))

    @property
    def gamma_plus(self) -> float:
        return max(0.0, self.gamma)

    def check_subcritical(self, dim: int) -> None:
        if not self.q < critical_exponent(dim):
            raise SupercriticalExponent(self.q, dim)

    def replace(self, **changes) -> "EvolutionParams":
        from dataclasses import replace

        return replace(self, **changes)


def time_grid(S: float, dt: float) -> np.ndarray:
    """``0, dt, 2dt, ...`` up to ``S``, closing with a partial step if needed."""
    n = int(np.floor(S / dt + 1e-9))
    times = dt * np.arange(n + 1)
    if S - times[-1] > 1e-12 * max(S, 1.0):
        times = np.append(times, S)
    else:
        times[-1] = S if n > 0 else times[-1]
    return times


def _interp_index(times: np.ndarray, t: float) -> tuple[int, float]:
    """Left index and weight of ``t`` inside a sorted sample grid."""
    span = times[-1] - times[0]
    tol = 1e-9 * max(span, 1.0)
    if t < times[0] - tol or t > times[-1] + tol:
        raise ValueError(f"t = {t} outside sampled range [{times[0]}, {times[-1]}]")
    if len(times) == 1:
        return 0, 0.0
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
    w = (t - times[i]) / (times[i + 1] - times[i])
    return i, float(np.clip(w, 0.0, 1.0))


class Forcing:
    """External force: zero, a constant field, or samples interpolated linearly in time."""

    def __init__(self, domain: Domain, kind: str = "zero", field=None, times=None, samples=None):
        self.domain = domain
        self.kind = kind
        if kind == "zero":
            self._modes = None
        elif kind == "constant":
            data = field.data if isinstance(field, ComplexField) else np.asarray(field, float)
            self._grid = np.asarray(data, float)
            self._modes = to_modes(domain, self._grid)
        elif kind == "sampled":
            self.times = np.asarray(times, float)
            if self.times.ndim != 1 or len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
                raise ValueError("sample times must be strictly increasing with at least two entries")
            self._grid = np.asarray(samples, float)
            if self._grid.shape != (len(self.times), 2) + domain.shape:
                raise ValueError("samples must have shape (len(times), 2, *domain.shape)")
            self._modes = to_modes(domain, self._grid)
        else:
            raise ValueError(f"unknown forcing kind {kind!r}")

    @classmethod
    def zero(cls, domain: Domain) -> "Forcing":
        return cls(domain, "zero")

    @classmethod
    def constant(cls, U: ComplexField) -> "Forcing":
        return cls(U.domain, "constant", field=U)

    @classmethod
    def sampled(cls, times, samples, domain: Domain) -> "Forcing":
        return cls(domain, "sampled", times=times, samples=samples)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def covers(self, T: float) -> bool:
        if self.kind != "sampled":
            return True
        return self.times[0] <= 1e-12 and self.times[-1] >= T * (1 - 1e-12)

    def _pick(self, arr, t):
        if self.kind == "constant":
            return arr
        i, w = _interp_index(self.times, t)
        return arr[i] if w == 0.0 else (1 - w) * arr[i] + w * arr[i + 1]

    def modes_at(self, t: float):
        if self._modes is None:
            return None
        return self._pick(self._modes, t)

    def at(self, t: float) -> np.ndarray:
        if self._modes is None:
            return np.zeros((2,) + self.domain.shape)
        return self._pick(self._grid, t)

    def l2_norm_at(self, t: float) -> float:
        if self._modes is None:
            return 0.0
        return float(np.sqrt(build_basis(self.domain).norm_factor * np.sum(self.modes_at(t) ** 2)))

    def l2_norm_series(self, times) -> np.ndarray:
        return np.array([self.l2_norm_at(t) for t in times])

    def hs_norm_sq(self, T: float, dt: float | None = None) -> float:
        """``int_0^T |F(t)|^2 dt`` (trapezoid on the sample grid or on ``dt``)."""
        if self._modes is None:
            return 0.0
        if self.kind == "constant":
            return T * self.l2_norm_at(0.0) ** 2
        ts = self.times[self.times <= T]
        if ts[-1] < T:
            ts = np.append(ts, T)
        if dt is not None:
            ts = np.union1d(ts, time_grid(T, dt))
        return float(np.trapezoid(self.l2_norm_series(ts) ** 2, ts))


@dataclass
class SourceSeries:
    """A time-sampled source ``h(t)``; linear between sample times."""

    times: np.ndarray
    data: np.ndarray
    domain: Domain
    _modes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.data = np.asarray(self.data, float)
        if self.data.shape != (len(self.times), 2) + self.domain.shape:
            raise ValueError("source data must have shape (len(times), 2, *domain.shape)")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("source series has non-finite entries")

    @classmethod
    def zeros(cls, times, domain: Domain) -> "SourceSeries":
        times = np.asarray(times, float)
        return cls(times, np.zeros((len(times), 2) + domain.shape), domain)

    @property
    def modes(self) -> np.ndarray:
        if self._modes is None:
            self._modes = to_modes(self.domain, self.data)
        return self._modes

    def modes_at(self, t: float) -> np.ndarray:
        i, w = _interp_index(self.times, t)
        m = self.modes
        return m[i] if w == 0.0 else (1 - w) * m[i] + w * m[i + 1]

    def at(self, t: float) -> np.ndarray:
        i, w = _interp_index(self.times, t)
        return self.data[i] if w == 0.0 else (1 - w) * self.data[i] + w * self.data[i + 1]

    def l2_sq_series(self) -> np.ndarray:
        return integrate(self.domain, self.data[:, 0] ** 2 + self.data[:, 1] ** 2)

    def hs_norm(self) -> float:
        """``(int_0^S |h(t)|^2 dt)^(1/2)``, trapezoid in time."""
        if len(self.times) < 2:
            return 0.0
        return float(np.sqrt(np.trapezoid(self.l2_sq_series(), self.times)))

    def __sub__(self, other: "SourceSeries") -> "SourceSeries":
        return SourceSeries(self.times, self.data - other.data, self.domain)


@dataclass
class Trajectory:
    """Step times, stored frames and per-step diagnostics.

    Diagnostics (``l2_sq``, ``phi``, ``psi_q``, ``residual``) exist for every
    step; fields are stored every ``save_every`` steps plus the final one, at
    ``frame_times``. ``residual[0]`` is NaN (no backward difference at t=0).
    """

    domain: Domain
    times: np.ndarray
    frame_times: np.ndarray
    fields: np.ndarray
    l2_sq: np.ndarray
    phi: np.ndarray
    psi_q: np.ndarray
    residual: np.ndarray
    blowup_index: int | None = None
    meta: dict = field(default_factory=dict)

    def field_at(self, i: int) -> ComplexField:
        return ComplexField(self.fields[i], self.domain)

    @property
    def final(self) -> ComplexField:
        return self.field_at(-1)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def every_step(self) -> bool:
        return len(self.frame_times) == len(self.times)

    def diagnostics_table(self) -> list[tuple[float, float, float, float, float]]:
        return list(zip(self.times, self.l2_sq, self.phi, self.psi_q, self.residual))


class _ModeStepper:
    """Semi-implicit mode-space machinery for one domain and parameter set."""

    def __init__(self, domain: Domain, params: EvolutionParams, implicit_alpha: bool = True):
        self.domain = domain
        self.params = params
        basis = build_basis(domain)
        self.nu = basis.eigenvalues
        self.norm = basis.norm_factor
        self.implicit_alpha = implicit_alpha
        self._solvers: dict[float, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def solve(self, rhs: np.ndarray, dt: float) -> np.ndarray:
        """Apply ``(E + dt nu (lam E + alpha I))^-1`` (or only ``lam`` when alpha is explicit)."""
        coef = self._solvers.get(dt)
        if coef is None:
            p = self.params
            a = 1.0 + dt * p.lam * self.nu
            b = dt * p.alpha * self.nu if self.implicit_alpha else np.zeros_like(self.nu)
            coef = (a, b, a * a + b * b)
            if len(self._solvers) > 64:
                self._solvers.clear()
            self._solvers[dt] = coef
        a, b, den = coef
        return scale_data(a, -b, rhs) / den

    def linear_operator(self, modes: np.ndarray) -> np.ndarray:
        """``(lam E + alpha I) nu`` applied in mode space."""
        p = self.params
        return scale_data(p.lam, p.alpha, self.nu * modes)

    def nonlinear_modes(self, grid: np.ndarray) -> np.ndarray:
        """``sign * (kappa E + beta I) grad_psi_q`` in mode space."""
        p = self.params
        g = kernels.grad_psi(grid, p.q)
        return p.nonlinear_sign * scale_data(p.kappa, p.beta, to_modes(self.domain, g))

    def l2_sq(self, modes: np.ndarray) -> float:
        return self.norm * float(np.sum(modes * modes))

    def phi(self, modes: np.ndarray) -> float:
        return 0.5 * self.norm * float(np.sum(self.nu * (modes[0] ** 2 + modes[1] ** 2)))

    def psi_q(self, grid: np.ndarray) -> float:
        return float(integrate(self.domain, kernels.abs_pow(grid, self.params.q))) / self.params.q


def _forcing(F: Forcing | None, domain: Domain) -> Forcing:
    if F is None:
        return Forcing.zero(domain)
    if F.domain != domain:
        raise ValueError("forcing and state live on different domains")
    return F


def _semi_implicit_modes(st: _ModeStepper, modes, grid, t, dt, F: Forcing):
    p = st.params
    rhs = modes + dt * (st.nonlinear_modes(grid) + p.gamma * modes)
    Fm = F.modes_at(t)
    if Fm is not None:
        rhs = rhs + dt * Fm
    return st.solve(rhs, dt)


def _rk4_modes(st: _ModeStepper, modes, t, dt, F: Forcing):
    p = st.params
    dom = st.domain

    def rhs(tt, m):
        out = -st.linear_operator(m) + st.nonlinear_modes(from_modes(dom, m)) + p.gamma * m
        Fm = F.modes_at(tt)
        return out if Fm is None else out + Fm

    k1 = rhs(t, modes)
    k2 = rhs(t + dt / 2, modes + dt / 2 * k1)
    k3 = rhs(t + dt / 2, modes + dt / 2 * k2)
    k4 = rhs(t + dt, modes + dt * k3)
    return modes + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_acgl(U: ComplexField, t: float, params: EvolutionParams, F: Forcing | None = None,
              dt: float | None = None, step_index: int = 0) -> ComplexField:
    """Advance one step of the full nonlinear system.

    Raises :class:`BlowupSignal` when the new state is not finite.
    """
    dt = params.dt if dt is None else float(dt)
    st = _ModeStepper(U.domain, params)
    F = _forcing(F, U.domain)
    modes = to_modes(U.domain, U.data)
    with np.errstate(over="ignore", invalid="ignore"):
        if params.scheme == "semi_implicit":
            new = _semi_implicit_modes(st, modes, U.data, t, dt, F)
        else:
            new = _rk4_modes(st, modes, t, dt, F)
    if not np.all(np.isfinite(new)):
        raise BlowupSignal(step_index + 1, t + dt)
    return ComplexField(from_modes(U.domain, new), U.domain)


class _Recorder:
    def __init__(self, times: np.ndarray, save_every: int):
        self.times = times
        self.save_every = max(1, int(save_every))
        m = len(times)
        self.l2 = np.full(m, np.nan)
        self.phi = np.full(m, np.nan)
        self.psi = np.full(m, np.nan)
        self.res = np.full(m, np.nan)
        self.frames: list[np.ndarray] = []
        self.frame_times: list[float] = []

    def record(self, j, st: _ModeStepper, modes, grid, residual=np.nan):
        self.l2[j] = st.l2_sq(modes)
        self.phi[j] = st.phi(modes)
        self.psi[j] = st.psi_q(grid)
        self.res[j] = residual
        if j % self.save_every == 0 or j == len(self.times) - 1:
            self.frames.append(np.array(grid))
            self.frame_times.append(self.times[j])

    def finite(self, j) -> bool:
        return bool(np.isfinite(self.l2[j]) and np.isfinite(self.phi[j]) and np.isfinite(self.psi[j]))

    def build(self, domain, blowup_index=None, upto=None, **meta) -> Trajectory:
        sl = slice(None) if upto is None else slice(0, upto + 1)
        if upto is not None and self.frame_times and self.frame_times[-1] > self.times[upto]:
            self.frames.pop()
            self.frame_times.pop()
        return Trajectory(
            domain=domain,
            times=self.times[sl].copy(),
            frame_times=np.array(self.frame_times),
            fields=np.array(self.frames),
            l2_sq=self.l2[sl].copy(),
            phi=self.phi[sl].copy(),
            psi_q=self.psi[sl].copy(),
            residual=self.res[sl].copy(),
            blowup_index=blowup_index,
            meta=dict(meta),
        )


def _residual_norm(st: _ModeStepper, new, old, dt, explicit_terms) -> float:
    r = (new - old) / dt + st.linear_operator(new) - explicit_terms
    return float(np.sqrt(st.l2_sq(r)))


def simulate(U0: ComplexField, params: EvolutionParams, F: Forcing | None = None,
             T: float | None = None, save_every: int = 1) -> Trajectory:
    """Run the full nonlinear system on ``[0, T]`` with :func:`step_acgl`'s scheme.

    The residual column evaluates every term of the equation at the new time
    level, so it measures the splitting error of the scheme (``O(dt)``).
    On non-finite values a :class:`BlowupSignal` carrying the partial
    trajectory is raised.
    """
    T = params.T if T is None else float(T)
    dom = U0.domain
    params.check_subcritical(dom.dim)
    F = _forcing(F, dom)
    st = _ModeStepper(dom, params)
    times = time_grid(T, params.dt)
    rec = _Recorder(times, save_every)
    p = params
    modes = to_modes(dom, U0.data)
    grid = U0.data.copy()
    rec.record(0, st, modes, grid)
    nonlin = st.nonlinear_modes(grid)
    for j in range(len(times) - 1):
        t, dt = times[j], times[j + 1] - times[j]
        with np.errstate(over="ignore", invalid="ignore"):
            if p.scheme == "semi_implicit":
                rhs = modes + dt * (nonlin + p.gamma * modes)
                Fm = F.modes_at(t)
                if Fm is not None:
                    rhs = rhs + dt * Fm
                new = st.solve(rhs, dt)
            else:
                new = _rk4_modes(st, modes, t, dt, F)
            new_grid = from_modes(dom, new)
            new_nonlin = st.nonlinear_modes(new_grid)
        if not (np.all(np.isfinite(new)) and np.all(np.isfinite(new_nonlin))):
            traj = rec.build(dom, blowup_index=j + 1, upto=j, scheme=p.scheme)
            raise BlowupSignal(j + 1, times[j + 1], traj)
        explicit = new_nonlin + p.gamma * new
        Fn = F.modes_at(times[j + 1])
        if Fn is not None:
            explicit = explicit + Fn
        with np.errstate(over="ignore", invalid="ignore"):
            res = _residual_norm(st, new, modes, dt, explicit)
            rec.record(j + 1, st, new, new_grid, res)
        if not rec.finite(j + 1):
            traj = rec.build(dom, blowup_index=j + 1, upto=j, scheme=p.scheme)
            raise BlowupSignal(j + 1, times[j + 1], traj)
        modes, grid, nonlin = new, new_grid, new_nonlin
    return rec.build(dom, scheme=p.scheme)


def _source_modes(h: SourceSeries | None, t: float):
    return None if h is None else h.modes_at(t)


def _march_linear(h, F, U0, S, params, mu=None, save_every=1) -> Trajectory:
    dom = U0.domain
    F = _forcing(F, dom)
    if h is not None and h.domain != dom:
        raise ValueError("source and state live on different domains")
    p = params
    yosida = mu is not None and p.alpha != 0.0
    st = _ModeStepper(dom, p, implicit_alpha=not yosida)
    nu_mu = st.nu / (1.0 + mu * st.nu) if yosida else None
    times = time_grid(S, p.dt)
    rec = _Recorder(times, save_every)
    modes = to_modes(dom, U0.data)
    rec.record(0, st, modes, U0.data)

    def explicit(t, m):
        out = p.gamma * m
        hm = _source_modes(h, t)
        if hm is not None:
            out = out + scale_data(p.kappa, p.beta, hm)
        Fm = F.modes_at(t)
        if Fm is not None:
            out = out + Fm
        if yosida:
            out = out - p.alpha * rotate(nu_mu * m)
        return out

    for j in range(len(times) - 1):
        t, dt = times[j], times[j + 1] - times[j]
        new = st.solve(modes + dt * explicit(t, modes), dt)
        # residual of the continuous equation with every term at the new level
        lin = st.nu * p.lam * new if yosida else st.linear_operator(new)
        r = (new - modes) / dt + lin - explicit(times[j + 1], new)
        res = float(np.sqrt(st.l2_sq(r)))
        modes = new
        rec.record(j + 1, st, modes, from_modes(dom, modes), res)
    return rec.build(dom, mu=mu)


def solve_linear_aeh(h: SourceSeries | None, F: Forcing | None, U0: ComplexField, S: float,
                     params: EvolutionParams, save_every: int = 1) -> Trajectory:
    """Linear auxiliary problem with ``grad_psi_q(U)`` replaced by the source ``h``.

    ``h = None`` means a zero source. The source and forcing are taken at the
    left end of each step.
    """
    return _march_linear(h, F, U0, S, params, save_every=save_every)


def solve_aeh_mu(h: SourceSeries | None, F: Forcing | None, U0: ComplexField, S: float, mu: float,
                 params: EvolutionParams, save_every: int = 1) -> Trajectory:
    """Auxiliary problem with ``alpha I grad_phi`` replaced by ``alpha I yosida_phi(., mu)``.

    ``lam grad_phi`` stays implicit; the Yosida term is explicit, which needs
    ``dt <= mu / (4 |alpha|)``.
    """
    mu = float(mu)
    if not mu > 0:
        raise ConfigurationError("mu must be positive")
    if params.alpha != 0.0 and params.dt > mu / (4.0 * abs(params.alpha)) * (1 + 1e-12):
        raise ConfigurationError(
            f"dt = {params.dt:g} too large for mu = {mu:g}: need dt <= mu / (4|alpha|) = {mu / (4 * abs(params.alpha)):g}"
        )
    return _march_linear(h, F, U0, S, params, mu=mu, save_every=save_every)


def nonlinear_source(traj: Trajectory, params: EvolutionParams) -> SourceSeries:
    """``sign * grad_psi_q(U(t))`` sampled on the trajectory frames."""
    data = params.nonlinear_sign * np.stack([kernels.grad_psi(f, params.q) for f in traj.fields])
    return SourceSeries(traj.frame_times, data, traj.domain)


@dataclass
class FixedPointReport:
    R: float
    S: float
    S_request: float
    distances: list[float]
    norms: list[float]
    converged: bool
    iterations: int
    in_ball: bool
    tol: float
    final_distance: float = np.nan
    acgl_residual_max: float = np.nan
    step_norm_max: float = np.nan

    @property
    def ratios(self) -> list[float]:
        d = self.distances
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "S": self.S,
            "S_request": self.S_request,
            "distances": list(self.distances),
            "ratios": self.ratios,
            "norms": list(self.norms),
            "converged": self.converged,
            "iterations": self.iterations,
            "in_ball": self.in_ball,
            "tol": self.tol,
            "final_distance": self.final_distance,
            "acgl_residual_max": self.acgl_residual_max,
            "step_norm_max": self.step_norm_max,
        }


def ball_radius(U0: ComplexField, F: Forcing | None, params: EvolutionParams) -> float:
    """``max(|U0|^2/2 + phi(U0) + ||F||^2_{H^T} / lam, 1)``."""
    from .field_algebra import l2_norm_sq

    F = _forcing(F, U0.domain)
    return max(0.5 * l2_norm_sq(U0) + phi(U0) + F.hs_norm_sq(params.T, params.dt) / params.lam, 1.0)


def fixed_point_solve(U0: ComplexField, F: Forcing | None, S_request: float, params: EvolutionParams,
                      tol: float = 1e-10, max_iter: int = 50, min_S: float | None = None):
    """Picard iteration ``h_{n+1} = grad_psi_q(U^{h_n})`` on ``[0, S]``.

    ``S`` starts at ``S_request`` and is halved until the first sweep keeps
    ``||h||_{H^S} <= R``. Returns ``(h, trajectory, report)`` where the
    trajectory solves the auxiliary problem driven by the returned ``h``.

    Raises :class:`BallEscape` if an iterate leaves the ball and
    :class:`NonContractive` after ``max_iter`` sweeps without convergence;
    both carry the report.
    """
    dom = U0.domain
    params.check_subcritical(dom.dim)
    F = _forcing(F, dom)
    R = ball_radius(U0, F, params)
    S = min(float(S_request), params.T)
    min_S = params.dt if min_S is None else float(min_S)

    def sweep(h, S):
        traj = solve_linear_aeh(h, F, U0, S, params)
        return traj, nonlinear_source(traj, params)

    while True:
        traj0, h = sweep(None, S)
        traj, h_next = sweep(h, S)
        if max(h.hs_norm(), h_next.hs_norm()) <= R:
            break
        if S / 2 < min_S:
            report = FixedPointReport(R, S, S_request, [], [h.hs_norm(), h_next.hs_norm()], False, 0, False, tol)
            raise BallEscape(max(h.hs_norm(), h_next.hs_norm()), R, report)
        S /= 2

    report = FixedPointReport(R, S, S_request, [], [h.hs_norm()], False, 0, True, tol)
    for it in range(1, max_iter + 1):
        dist = (h_next - h).hs_norm()
        report.distances.append(dist)
        report.norms.append(h_next.hs_norm())
        report.iterations = it
        if report.norms[-1] > R:
            report.in_ball = False
            raise BallEscape(report.norms[-1], R, report)
        if dist <= tol:
            report.converged = True
            break
        h = h_next
        traj, h_next = sweep(h, S)
    report.final_distance = report.distances[-1]
    res = acgl_residual(traj, F, params)
    report.acgl_residual_max = float(np.nanmax(res)) if len(res) > 1 else 0.0
    report.step_norm_max = _max_step_rate(traj)
    if not report.converged:
        raise NonContractive(report)
    return h, traj, report


def _max_step_rate(traj: Trajectory) -> float:
    """``max_j |U_{j+1} - U_j|_{L2} / dt_j`` over stored frames."""
    if len(traj.frame_times) < 2:
        return 0.0
    diff = np.diff(traj.fields, axis=0)
    dts = np.diff(traj.frame_times)
    norms = np.sqrt(integrate(traj.domain, diff[:, 0] ** 2 + diff[:, 1] ** 2))
    return float(np.max(norms / dts))


def acgl_residual(traj: Trajectory, F: Forcing | None, params: EvolutionParams) -> np.ndarray:
    """``|dU/dt + (lam + alpha I) grad_phi(U) - (kappa + beta I) grad_psi_q(U) - gamma U - F|_{L2}``.

    Backward differences between consecutive stored frames, all operator terms
    at the later frame. Entry 0 is NaN.
    """
    dom = traj.domain
    F = _forcing(F, dom)
    st = _ModeStepper(dom, params)
    out = np.full(len(traj.frame_times), np.nan)
    prev = to_modes(dom, traj.fields[0])
    for i in range(1, len(traj.frame_times)):
        grid = traj.fields[i]
        cur = to_modes(dom, grid)
        dt = traj.frame_times[i] - traj.frame_times[i - 1]
        explicit = st.nonlinear_modes(grid) + params.gamma * cur
        Fm = F.modes_at(traj.frame_times[i])
        if Fm is not None:
            explicit = explicit + Fm
        out[i] = _residual_norm(st, cur, prev, dt, explicit)
        prev = cur
    return out


RhsFn = Callable[[float, np.ndarray], np.ndarray]
