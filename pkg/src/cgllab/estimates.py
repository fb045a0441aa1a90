"""A priori estimates as computable reports.

Covers the interpolation exponents ``xi``, ``chi``, ``eta``; residuals of the
two energy identities with their integrated envelopes; empirical embedding
constants; the window Gronwall bound; the pointwise Lipschitz bounds of
``|U|^(r-2) U``; and the continuous-dependence envelope of two trajectories.

Every empirical constant here is a maximum over trial fields, hence a lower
bound on the true constant. They are reported as such.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .errors import ConfigurationError, SupercriticalExponent
from .evolution import EvolutionParams, Forcing, SourceSeries, Trajectory, ball_radius, critical_exponent
from .field_algebra import ComplexField
from .spectral_core import Domain, build_basis, from_modes, grid_points, integrate, to_modes

__all__ = [
    "GnsExponents",
    "gns_exponents",
    "EnergyReport",
    "energy_constants",
    "energy_identity_report",
    "estimate_sobolev_constant",
    "estimate_interpolation_constant",
    "estimate_splitting_constant",
    "GronwallCheck",
    "window_integral_sup",
    "gronwall_envelope",
    "lipschitz_constants",
    "LipschitzReport",
    "check_pointwise_lipschitz",
    "UniquenessReport",
    "uniqueness_envelope",
    "lq_lipschitz_ratio",
]


# --------------------------------------------------------------------------- exponents


@dataclass(frozen=True)
class GnsExponents:
    """Interpolation exponents for ``q`` in dimension ``N``.

    ``xi`` leaves ``(0, 1)`` for ``N <= 2`` (stronger embeddings hold there);
    the formulas are kept as they are and only ``chi > 1`` and
    ``(1 - xi)(q - 1) < 1`` are enforced.
    """

    q: float
    N: int
    xi: float
    chi: float
    eta: float
    critical: float

    @property
    def xi_in_unit_interval(self) -> bool:
        return 0.0 < self.xi < 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["critical"] = "inf" if np.isinf(self.critical) else self.critical
        return d


def gns_exponents(q: float, N: int) -> GnsExponents:
    """Solve

        1/(2(q-1)) = (1/2 - 2/N)(1 - xi) + (1/2 - 1/N) xi,
        1/q        = (1/2 - 1/N)(1 - eta) + eta/2,

    and set ``chi = xi (q-1) / (1 - (q-1)(1-xi))``.
    """
    q = float(q)
    N = int(N)
    if N < 1:
        raise ConfigurationError("dimension must be positive")
    if not q > 2:
        raise ConfigurationError(f"q must exceed 2, got {q}")
    if not q < critical_exponent(N):
        raise SupercriticalExponent(q, N)
    xi = N * (1.0 / (2.0 * (q - 1.0)) - (0.5 - 2.0 / N))
    eta = N * (1.0 / q - (0.5 - 1.0 / N))
    young = (1.0 - xi) * (q - 1.0)
    if not young < 1.0:
        raise ConfigurationError(f"(1 - xi)(q - 1) = {young} is not below 1")
    chi = xi * (q - 1.0) / (1.0 - young)
    if not chi > 1.0:
        raise ConfigurationError(f"chi = {chi} is not above 1")
    if not 0.0 < eta < 1.0:
        raise ConfigurationError(f"eta = {eta} outside (0, 1)")
    return GnsExponents(q, N, xi, chi, eta, critical_exponent(N))


# --------------------------------------------------------------------------- energy identities


def energy_constants(params: EvolutionParams, S: float) -> tuple[float, float]:
    """``(C1, C2)`` of the integrated first and second energy bounds on ``[0, S]``.

    C1 = 4 exp((4 gamma_+ + kappa^2 + beta^2 + lam) S / 2) / min(1, 4 lam).
    C2 bounds ``sup phi + int |grad_phi U|^2 + int |dU/dt|^2`` by ``C2 R``:
    with ``B = 1 + (kappa^2 + beta^2)/lam + 2 gamma_+ C1`` one has
    ``sup phi <= B R`` and ``int |grad_phi U|^2 <= 4 B R / lam``, and the
    equation bounds ``|dU/dt|^2`` by four times the sum of its squared terms.
    Both assume ``||h||^2_{H^S} <= R``.
    """
    p = params
    kb = p.kappa ** 2 + p.beta ** 2
    C1 = 4.0 * np.exp((4 * p.gamma_plus + kb + p.lam) * S / 2) / min(1.0, 4 * p.lam)
    B = 1.0 + kb / p.lam + 2 * p.gamma_plus * C1
    grad_int = 4 * B / p.lam
    C2 = B + grad_int + 4 * ((p.lam ** 2 + p.alpha ** 2) * grad_int + kb + p.gamma ** 2 * S * C1 + p.lam)
    return float(C1), float(C2)


@dataclass
class EnergyReport:
    """Residuals of the two energy identities and the integrated envelopes.

    ``first`` and ``second`` hold per-step residuals (entry 0 is NaN).
    ``first_ok`` / ``second_ok`` compare, at every step, the running
    ``max |U|^2 + int phi`` with ``C1 R`` and
    ``max phi + int |grad_phi U|^2 + int |dU/dt|^2`` with ``C2 R``.
    """

    times: np.ndarray
    first: np.ndarray
    second: np.ndarray
    first_quantity: np.ndarray
    second_quantity: np.ndarray
    R: float
    C1: float
    C2: float
    h_norm_sq: float

    @property
    def first_max(self) -> float:
        return float(np.nanmax(np.abs(self.first)))

    @property
    def second_max(self) -> float:
        return float(np.nanmax(np.abs(self.second)))

    @property
    def first_ok(self) -> np.ndarray:
        return self.first_quantity <= self.C1 * self.R

    @property
    def second_ok(self) -> np.ndarray:
        return self.second_quantity <= self.C2 * self.R

    @property
    def h_within_ball(self) -> bool:
        return self.h_norm_sq <= self.R

    @property
    def envelopes_hold(self) -> bool:
        return bool(np.all(self.first_ok) and np.all(self.second_ok))

    def summary(self) -> dict:
        return {
            "first_residual_max": self.first_max,
            "second_residual_max": self.second_max,
            "R": self.R,
            "C1": self.C1,
            "C2": self.C2,
            "first_quantity_max": float(self.first_quantity[-1]),
            "second_quantity_max": float(self.second_quantity[-1]),
            "h_norm_sq": self.h_norm_sq,
            "h_within_ball": self.h_within_ball,
            "envelopes_hold": self.envelopes_hold,
        }


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def energy_identity_report(traj: Trajectory, h: SourceSeries | None, F: Forcing | None,
                           params: EvolutionParams, R: float | None = None) -> EnergyReport:
    """Residuals of

        d/dt 1/2 |U|^2 + 2 lam phi(U) - gamma |U|^2 - ((kappa + beta I) h + F, U),
        d/dt phi(U) + lam |grad_phi U|^2 - 2 gamma phi(U) - ((kappa + beta I) h + F, grad_phi U),

    with backward differences and every other term at the later time.
    The trajectory must store every step. ``R`` defaults to the ball radius
    built from the initial state and ``F``.
    """
    if not traj.every_step:
        raise ValueError("energy report needs a trajectory saved at every step")
    dom = traj.domain
    basis = build_basis(dom)
    nu, w = basis.eigenvalues, basis.norm_factor
    F = Forcing.zero(dom) if F is None else F
    p = params
    t = traj.times
    modes = to_modes(dom, traj.fields)
    l2 = w * np.sum(modes ** 2, axis=tuple(range(1, modes.ndim)))
    ph = 0.5 * w * np.sum(nu * (modes[:, 0] ** 2 + modes[:, 1] ** 2), axis=tuple(range(1, dom.dim + 1)))
    gp = w * np.sum(nu ** 2 * (modes[:, 0] ** 2 + modes[:, 1] ** 2), axis=tuple(range(1, dom.dim + 1)))

    drive = np.zeros_like(modes)
    for j, tj in enumerate(t):
        if h is not None:
            hm = h.modes_at(tj)
            drive[j, 0] += p.kappa * hm[0] + p.beta * hm[1]
            drive[j, 1] += p.kappa * hm[1] - p.beta * hm[0]
        Fm = F.modes_at(tj)
        if Fm is not None:
            drive[j] += Fm
    axes = tuple(range(1, modes.ndim))
    pair_u = w * np.sum(drive * modes, axis=axes)
    pair_g = w * np.sum(drive * nu * modes, axis=axes)

    dt = np.diff(t)
    first = np.full(len(t), np.nan)
    second = np.full(len(t), np.nan)
    first[1:] = 0.5 * np.diff(l2) / dt + 2 * p.lam * ph[1:] - p.gamma * l2[1:] - pair_u[1:]
    second[1:] = np.diff(ph) / dt + p.lam * gp[1:] - 2 * p.gamma * ph[1:] - pair_g[1:]

    dudt_sq = np.zeros(len(t))
    dudt_sq[1:] = w * np.sum(np.diff(modes, axis=0) ** 2, axis=axes) / dt ** 2
    q1 = np.maximum.accumulate(l2) + _cumtrapz(ph, t)
    q2 = np.maximum.accumulate(ph) + _cumtrapz(gp, t) + np.concatenate([[0.0], np.cumsum(dudt_sq[1:] * dt)])

    S = float(t[-1])
    if R is None:
        R = ball_radius(traj.field_at(0), F, p.replace(T=max(S, p.dt)))
    C1, C2 = energy_constants(p, S)
    hn = 0.0 if h is None else h.hs_norm() ** 2
    return EnergyReport(t.copy(), first, second, q1, q2, float(R), C1, C2, float(hn))


# --------------------------------------------------------------------------- empirical constants


def _trial_data(domain: Domain, rng: np.random.Generator) -> np.ndarray:
    """One trial field: a decaying random spectrum, a localized bump, or a few low modes."""
    basis = build_basis(domain)
    kind = rng.integers(3)
    if kind == 0:
        decay = rng.uniform(0.3, 2.0)
        coef = rng.standard_normal((2,) + domain.shape) * basis.eigenvalues ** (-decay)
        return from_modes(domain, coef)
    if kind == 1:
        xs = np.meshgrid(*grid_points(domain), indexing="ij")
        r2 = np.zeros(domain.shape)
        for x, L in zip(xs, domain.lengths):
            c = rng.uniform(0.15, 0.85) * L
            wdt = L * 10 ** rng.uniform(-1.6, -0.4)
            r2 = r2 + ((x - c) / wdt) ** 2
        env = np.exp(-r2)
        for x, L in zip(xs, domain.lengths):
            env = env * np.sin(np.pi * x / L) ** 0.5
        th = rng.uniform(0, 2 * np.pi)
        return np.stack([np.cos(th) * env, np.sin(th) * env])
    m = min(4, *domain.shape)
    coef = np.zeros((2,) + domain.shape)
    sl = (slice(None),) + tuple(slice(0, m) for _ in domain.shape)
    coef[sl] = rng.standard_normal((2,) + (m,) * domain.dim)
    return from_modes(domain, coef)


def _low_mode_slices(domain: Domain, m: int):
    m = min(m, *domain.shape)
    return (slice(None),) + tuple(slice(0, m) for _ in domain.shape), (2,) + (m,) * domain.dim


def _optimized_max(domain: Domain, ratio, n_starts: int = 3, m: int | None = None) -> float:
    """Local maximization of a scale-invariant ratio over low-mode coefficients.

    Starts are fixed (independent of any trial count) so callers stay
    monotone in the number of random trials.
    """
    if m is None:
        m = 10 if domain.dim == 1 else 4
    sl, shp = _low_mode_slices(domain, m)
    size = int(np.prod(shp))
    starts = []
    first = np.zeros(shp)
    first[(0,) + (0,) * domain.dim] = 1.0
    starts.append(first.ravel())
    rng = np.random.default_rng(20240611)
    for _ in range(n_starts - 1):
        starts.append(rng.standard_normal(size) / (1 + np.arange(size) % m))

    def objective(x):
        coef = np.zeros((2,) + domain.shape)
        coef[sl] = x.reshape(shp)
        if not np.any(coef):
            return 0.0
        val = ratio(from_modes(domain, coef))
        return -val if np.isfinite(val) else 0.0

    best = 0.0
    for x0 in starts:
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"maxiter": 400 * size, "xatol": 1e-8, "fatol": 1e-12})
        best = max(best, -float(res.fun), -objective(x0))
    return best


def _phi_data(domain: Domain, data: np.ndarray) -> float:
    basis = build_basis(domain)
    m = to_modes(domain, data)
    return 0.5 * basis.norm_factor * float(np.sum(basis.eigenvalues * (m[0] ** 2 + m[1] ** 2)))


def _l2sq_data(domain: Domain, data: np.ndarray) -> float:
    return float(integrate(domain, data[0] ** 2 + data[1] ** 2))


def _grad_phi_sq_data(domain: Domain, data: np.ndarray) -> float:
    basis = build_basis(domain)
    m = to_modes(domain, data)
    return basis.norm_factor * float(np.sum(basis.eigenvalues ** 2 * (m[0] ** 2 + m[1] ** 2)))


def _psi_data(domain: Domain, data: np.ndarray, q: float) -> float:
    return float(integrate(domain, kernels.abs_pow(data, q))) / q


def sobolev_ratio(U: ComplexField, q: float) -> float:
    """``psi_q(U) / phi(U)^(q/2)``; invariant under ``U -> cU``."""
    ph = _phi_data(U.domain, U.data)
    return _psi_data(U.domain, U.data, q) / ph ** (q / 2) if ph > 0 else 0.0


def _max_ratio(domain, ratio, trials, seed, optimize_starts):
    if trials < 1:
        raise ValueError("trials must be positive")
    best = 0.0
    for i in range(trials):
        rng = np.random.default_rng([int(seed), i])
        val = ratio(_trial_data(domain, rng))
        if np.isfinite(val):
            best = max(best, val)
    if optimize_starts:
        best = max(best, _optimized_max(domain, ratio, optimize_starts))
    return best


def estimate_sobolev_constant(domain: Domain, q: float, trials: int = 200, seed: int = 0,
                              safety: float = 2.0, optimize_starts: int = 3, raw: bool = False) -> float:
    """Heuristic ``C`` with ``psi_q(U) <= C phi(U)^(q/2)``.

    Maximum of the ratio over seeded trial fields and a few local
    optimizations, times ``safety``, floored at 1. A lower-bound-based
    estimate, not a certified constant. ``raw=True`` returns the bare maximum.
    """
    EvolutionParams(q=q).check_subcritical(domain.dim)

    def ratio(data):
        ph = _phi_data(domain, data)
        return _psi_data(domain, data, q) / ph ** (q / 2) if ph > 0 else 0.0

    best = _max_ratio(domain, ratio, trials, seed, optimize_starts)
    return best if raw else max(1.0, safety * best)


def estimate_interpolation_constant(domain: Domain, q: float, trials: int = 200, seed: int = 0,
                                    safety: float = 2.0, optimize_starts: int = 3, raw: bool = False) -> float:
    """Heuristic ``C`` with ``|W|_{L^q} <= C phi(W)^((1-eta)/2) |W|^eta``; same scheme as the Sobolev estimate."""
    eta = gns_exponents(q, domain.dim).eta

    def ratio(data):
        ph = _phi_data(domain, data)
        l2 = _l2sq_data(domain, data)
        if ph <= 0 or l2 <= 0:
            return 0.0
        lq = (q * _psi_data(domain, data, q)) ** (1.0 / q)
        return lq / (ph ** ((1 - eta) / 2) * l2 ** (eta / 2))

    best = _max_ratio(domain, ratio, trials, seed, optimize_starts)
    return best if raw else max(1.0, safety * best)


def estimate_splitting_constant(domain: Domain, q: float, eps: float, trials: int = 200, seed: int = 0,
                                phi_max: float = 1.0, levels: int = 7) -> float:
    """Smallest ``C_eps`` seen to satisfy

        |grad_psi_q U|^2 <= eps (|grad_phi U|^2 + |U|^2) + C_eps phi(U)^chi

    on trial fields with ``phi(U) <= phi_max``.

    The inequality is not scale invariant, so each trial shape is evaluated
    at ``phi = phi_max * 10^-k`` for ``k < levels``. The sublevel restriction
    matters: over all of ``H^1_0`` the best constant is infinite whenever
    ``2(q-1) > 2 chi``.
    """
    if not eps > 0 or not phi_max > 0:
        raise ValueError("eps and phi_max must be positive")
    chi = gns_exponents(q, domain.dim).chi
    best = 0.0
    for i in range(trials):
        data = _trial_data(domain, np.random.default_rng([int(seed), i]))
        ph0 = _phi_data(domain, data)
        if ph0 <= 0:
            continue
        for k in range(levels):
            ph = phi_max * 10.0 ** (-k)
            d = data * np.sqrt(ph / ph0)
            g = kernels.grad_psi(d, q)
            lhs = _l2sq_data(domain, g)
            rest = eps * (_grad_phi_sq_data(domain, d) + _l2sq_data(domain, d))
            best = max(best, (lhs - rest) / ph ** chi)
    return float(best)


# --------------------------------------------------------------------------- Gronwall


def window_integral_sup(times, values, starts_dt: float | None = None) -> float:
    """``sup_s int_s^{s+1} g`` for ``g`` piecewise linear through ``(times, values)``
    and zero beyond ``times[-1]``.

    The window starts range over the sample times, the sample times minus 1,
    and (if given) a uniform grid of spacing ``starts_dt``.
    """
    t = np.asarray(times, float)
    g = np.asarray(values, float)
    if t.ndim != 1 or t.shape != g.shape or len(t) < 1:
        raise ValueError("times and values must be matching 1-d arrays")
    if len(t) == 1:
        return 0.0
    if t[0] != 0.0:
        raise ValueError("samples must start at t = 0")
    cum = _cumtrapz(g, t)
    T = t[-1]

    def G(x):
        x = np.clip(x, 0.0, T)
        i = np.clip(np.searchsorted(t, x, side="right") - 1, 0, len(t) - 2)
        frac = (x - t[i]) / (t[i + 1] - t[i])
        gx = g[i] + frac * (g[i + 1] - g[i])
        return cum[i] + 0.5 * (x - t[i]) * (g[i] + gx)

    starts = np.concatenate([t, np.clip(t - 1.0, 0.0, None)])
    if starts_dt is not None:
        starts = np.concatenate([starts, np.arange(0.0, T, starts_dt)])
    starts = np.unique(starts[starts <= T])
    return float(np.max(G(starts + 1.0) - G(starts)))


@dataclass
class GronwallCheck:
    times: np.ndarray
    envelope: np.ndarray
    f_window: float
    holds: bool
    first_violation: int | None
    max_ratio: float


def gronwall_envelope(j0: float, delta: float, K: float, f_times, f_values, j_series=None,
                      rtol: float = 1e-9, atol: float = 1e-12) -> GronwallCheck:
    """``j0 e^{-delta t} + K / (1 - e^{-delta}) |||f|||_1`` on the times of ``f``.

    ``|||f|||_1`` is the supremum of unit-window integrals of ``|f|``
    extended by zero. If ``j_series`` (sampled at the same times) is given,
    each entry is checked against the envelope.
    """
    if not delta > 0 or not K > 0:
        raise ValueError("delta and K must be positive")
    t = np.asarray(f_times, float)
    fw = window_integral_sup(t, np.abs(np.asarray(f_values, float)))
    env = j0 * np.exp(-delta * t) + K / (1.0 - np.exp(-delta)) * fw
    if j_series is None:
        return GronwallCheck(t, env, fw, True, None, np.nan)
    j = np.asarray(j_series, float)
    if j.shape != t.shape:
        raise ValueError("j_series must be sampled at the forcing times")
    bad = j > env * (1 + rtol) + atol
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(env > 0, j / env, np.where(j > 0, np.inf, 0.0))
    first = int(np.argmax(bad)) if bad.any() else None
    return GronwallCheck(t, env, fw, not bad.any(), first, float(np.max(ratio)))


# --------------------------------------------------------------------------- pointwise Lipschitz


def lipschitz_constants(r: float) -> tuple[float, float]:
    """``(d_r, dtilde_r)`` of the two pointwise bounds."""
    r = float(r)
    if not r > 2:
        raise ValueError("r must exceed 2")
    if r <= 3:
        return 1.0, (r - 2) / 2
    if r < 4:
        return 1.5, 1.0
    return (r - 1) / 2, (r - 2) / 2


def _pair_batch(rng: np.random.Generator, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs in R^2 drawn from six families: generic, near zero, collinear,
    equal norm, identical and ``V = 0``."""
    def polar(mag, ang):
        return np.stack([mag * np.cos(ang), mag * np.sin(ang)], axis=1)

    fam = rng.integers(6, size=m)
    mu = 10 ** rng.uniform(-4, 3, m)
    mv = 10 ** rng.uniform(-4, 3, m)
    au = rng.uniform(0, 2 * np.pi, m)
    av = rng.uniform(0, 2 * np.pi, m)
    tiny = 10 ** rng.uniform(-14, -6, m)
    close = mu * (1 + 10 ** rng.uniform(-10, -1, m) * rng.choice([-1, 1], m))
    mv = np.select([fam == 1, fam == 2, fam == 3], [tiny, close, mu], mv)
    av = np.select([fam == 2, fam == 3], [au + np.pi * (rng.random(m) < 0.3), av], av)
    u = polar(mu, au)
    v = polar(mv, av)
    v[fam == 4] = u[fam == 4]
    v[fam == 5] = 0.0
    swap = rng.random(m) < 0.5
    u[swap], v[swap] = v[swap].copy(), u[swap].copy()
    return u, v


@dataclass
class LipschitzReport:
    r: float
    d: float
    dtilde: float
    samples: int
    worst_ratio: float
    worst_ratio_tilde: float
    violations: int
    violations_tilde: int
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.violations_tilde == 0

    def to_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


def check_pointwise_lipschitz(r: float, samples: int = 10 ** 6, seed: int = 0, chunk: int = 250_000,
                              d: float | None = None, dtilde: float | None = None) -> LipschitzReport:
    """Fuzz

        |(|U|^(r-2) u_i - |V|^(r-2) v_i)(u_j - v_j)| <= d_r (|U|^(r-2) + |V|^(r-2)) |U - V|^2,
        ||U|^(r-2) - |V|^(r-2)| <= dtilde_r (|U|^(r-3) + |V|^(r-3)) |U - V|,

    for ``samples`` seeded pairs. The second bound skips pairs with a zero
    vector when ``r < 3``, where its right side is infinite.
    """
    d0, dt0 = lipschitz_constants(r)
    d = d0 if d is None else float(d)
    dtilde = dt0 if dtilde is None else float(dtilde)
    rng = np.random.default_rng([int(seed), int(round(r * 1000))])
    worst = worst3 = 0.0
    viol = viol3 = 0
    counter = None
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        u, v = _pair_batch(rng, m)
        w1, w3, n1, n3 = kernels.lipschitz_scan(np.ascontiguousarray(u), np.ascontiguousarray(v), r, d, dtilde)
        if not (np.isfinite(w1) or w1 == np.inf) or not (np.isfinite(w3) or w3 == np.inf):
            raise RuntimeError("non-finite ratio in Lipschitz scan")
        worst, worst3 = max(worst, w1), max(worst3, w3)
        if (n1 or n3) and counter is None:
            counter = _locate_violation(u, v, r, d, dtilde)
        viol += n1
        viol3 += n3
        done += m
    return LipschitzReport(float(r), d, dtilde, int(samples), worst, worst3, viol, viol3, counter)


def _locate_violation(u, v, r, d, dtilde) -> dict:
    for i in range(len(u)):
        res = kernels.get_backend("python").lipschitz_scan(u[i:i + 1], v[i:i + 1], r, d, dtilde)
        if res[2] or res[3]:
            return {"U": u[i].tolist(), "V": v[i].tolist(), "ratio": res[0], "ratio_tilde": res[1]}
    return {}


def lq_lipschitz_ratio(U: ComplexField, V: ComplexField, r: float) -> float:
    """``|(grad_psi_r U - grad_psi_r V, U - V)| / ((psi_r(U)^(r-2) + psi_r(V)^(r-2)) |U - V|^2_{L^r})``."""
    dom = U.domain
    W = U.data - V.data
    g = kernels.grad_psi(U.data, r) - kernels.grad_psi(V.data, r)
    lhs = abs(float(integrate(dom, np.sum(g * W, axis=0))))
    wr = float(integrate(dom, kernels.abs_pow(W, r))) ** (2.0 / r)
    den = (_psi_data(dom, U.data, r) ** (r - 2) + _psi_data(dom, V.data, r) ** (r - 2)) * wr
    return lhs / den if den > 0 else 0.0


# --------------------------------------------------------------------------- continuous dependence


@dataclass
class UniquenessReport:
    """Difference of two runs against ``|W0|^2 exp(rate t)``.

    ``C`` is the smallest constant for which, at every step,

        (|W_{j+1}|^2 - |W_j|^2) / (2 dt) + lam phi(W_{j+1}) <= K_j |W_j|^2,
        K_j = C (psi_q(U_j)^(q-2) + psi_q(V_j)^(q-2))^(1/eta) + gamma_+,

    so that the discrete Gronwall bound with
    ``rate = 2 C (2 M^(q-2))^(1/eta) + 2 gamma_+`` is guaranteed.
    ``rate_single_gamma`` replaces ``2 gamma_+`` by ``gamma_+``.
    """

    times: np.ndarray
    diff_sq: np.ndarray
    envelope: np.ndarray
    C: float
    M: float
    eta: float
    rate: float
    rate_single_gamma: float
    holds: bool
    holds_single_gamma: bool

    def ratio_at(self, t: float) -> float:
        i = int(np.argmin(np.abs(self.times - t)))
        return float(self.diff_sq[i] / self.envelope[i]) if self.envelope[i] > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "M": self.M,
            "eta": self.eta,
            "rate": self.rate,
            "rate_single_gamma": self.rate_single_gamma,
            "holds": self.holds,
            "holds_single_gamma": self.holds_single_gamma,
            "final_diff_sq": float(self.diff_sq[-1]),
            "final_envelope": float(self.envelope[-1]),
        }


def uniqueness_envelope(trajA: Trajectory, trajB: Trajectory, params: EvolutionParams,
                        eta: float | None = None, rtol: float = 1e-9) -> UniquenessReport:
    if trajA.domain != trajB.domain or not np.array_equal(trajA.times, trajB.times):
        raise ValueError("trajectories must share domain and time grid")
    if not (trajA.every_step and trajB.every_step):
        raise ValueError("uniqueness check needs trajectories saved at every step")
    dom = trajA.domain
    q = params.q
    if eta is None:
        eta = gns_exponents(q, dom.dim).eta
    t = trajA.times
    W = trajA.fields - trajB.fields
    diff_sq = integrate(dom, W[:, 0] ** 2 + W[:, 1] ** 2)
    phiW = np.array([_phi_data(dom, w) for w in W])
    P = trajA.psi_q ** (q - 2) + trajB.psi_q ** (q - 2)
    dt = np.diff(t)
    lhs = np.diff(diff_sq) / (2 * dt) + params.lam * phiW[1:] - params.gamma_plus * diff_sq[:-1]
    den = P[:-1] ** (1.0 / eta) * diff_sq[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cj = np.where(den > 0, lhs / den, 0.0)
    C = max(0.0, float(np.max(cj, initial=0.0)))
    M = float(max(trajA.psi_q.max(), trajB.psi_q.max()))
    base = C * (2 * M ** (q - 2)) ** (1.0 / eta)
    rate = 2 * base + 2 * params.gamma_plus
    rate1 = 2 * base + params.gamma_plus
    env = diff_sq[0] * np.exp(rate * t)
    env1 = diff_sq[0] * np.exp(rate1 * t)
    holds = bool(np.all(diff_sq <= env * (1 + rtol) + 1e-300))
    holds1 = bool(np.all(diff_sq <= env1 * (1 + rtol) + 1e-300))
    return UniquenessReport(t.copy(), diff_sq, env, C, M, float(eta), rate, rate1, holds, holds1)
