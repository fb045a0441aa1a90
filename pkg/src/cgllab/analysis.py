"""Scenario logic: the blow-up detector and the small-data certificate.

The detector turns "either the solution lives on the whole horizon or
``phi(U(t))`` is unbounded near a finite time" into a computable test: an
adaptive run is declared blowing up when ``phi`` crosses a threshold at a
time that is stable under refinement of the initial step.

The certificate evaluates the small-data constants (coercivity rate,
admissible energy level, the a priori factor ``N``) with measured
embedding constants, and :func:`monitored_global_run` checks a run against
the resulting bound ``phi(U(t)) < N r^2``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BlowupSignal, NotApplicable, PreconditionError
from .estimates import estimate_sobolev_constant, estimate_splitting_constant, gns_exponents, window_integral_sup
from .evolution import EvolutionParams, Forcing, Trajectory, _ModeStepper, _rk4_modes, simulate, time_grid
from .field_algebra import ComplexField, l2_norm_sq
from .monotone_ops import phi
from .spectral_core import Domain, build_basis, from_modes, to_modes

__all__ = [
    "window_norm",
    "DtPolicy",
    "BlowupVerdict",
    "detect_blowup",
    "coercivity_constants",
    "a_priori_constants",
    "SmallDataCertificate",
    "small_data_certificate",
    "GlobalRunReport",
    "monitored_global_run",
]

DEFOCUSING_LABEL = "defocusing sanity scenario (nonlinear sign reversed, outside the focusing model)"


# --------------------------------------------------------------------------- window norm


def window_norm(F, kind: str = "L2", T: float | None = None, dt: float | None = None) -> float:
    """``sup_s int_s^{s+1}`` of the zero-extended forcing magnitude.

    ``kind="L2"`` integrates ``|F(t)|^2_{L2}`` and returns the square root;
    ``kind="L1"`` integrates ``|F(t)|`` (or ``|f(t)|`` for scalar samples).
    ``F`` is a :class:`Forcing` (then ``T`` is required) or a pair
    ``(times, values)`` of scalar magnitudes. The integrand is taken
    piecewise linear between samples; window starts run over a ``dt`` grid
    plus the sample times.
    """
    if kind not in ("L1", "L2"):
        raise ValueError(f"kind must be 'L1' or 'L2', got {kind!r}")
    if isinstance(F, Forcing):
        if T is None:
            raise ValueError("T is required for a Forcing")
        if F.is_zero:
            return 0.0
        step = dt if dt is not None else min(1e-2, T / 100)
        ts = time_grid(T, step)
        if F.kind == "sampled":
            ts = np.union1d(ts, F.times[F.times <= T])
        mags = F.l2_norm_series(ts)
    else:
        ts, mags = (np.asarray(a, float) for a in F)
        mags = np.abs(mags)
        step = dt
    integrand = mags ** 2 if kind == "L2" else mags
    val = window_integral_sup(ts, integrand, step)
    return float(np.sqrt(val)) if kind == "L2" else val


# --------------------------------------------------------------------------- blow-up detector


@dataclass(frozen=True)
class DtPolicy:
    """Adaptive-step rules of the detector.

    A step is rejected and ``dt`` halved when ``phi`` grows by more than
    ``growth`` in one step or the state is not finite; after an accepted
    step ``dt`` doubles again up to the level's cap. Refinement level ``k``
    uses the cap ``dt0 / 2^k`` and the growth limit ``growth / 2^k``, so every
    level is a genuine refinement of the step controller. Levels are added
    until ``agreements`` successive crossing-time changes are below
    ``rel_tol``.
    """

    growth: float = 0.1
    min_dt: float = 1e-12
    rel_tol: float = 0.05
    agreements: int = 2
    max_levels: int = 8


@dataclass
class BlowupVerdict:
    outcome: str
    T_m: float | None
    peak_phi: float
    theta: float
    history: list[dict] = field(default_factory=list)
    label: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _adaptive_run(U0: ComplexField, params: EvolutionParams, F: Forcing, T: float, dt0: float,
                  theta: float, policy: DtPolicy, growth: float) -> dict:
    dom = U0.domain
    st = _ModeStepper(dom, params)
    modes = to_modes(dom, U0.data)
    grid = U0.data
    t, dt = 0.0, dt0
    ph = st.phi(modes)
    peak = ph
    steps = rejected = 0
    min_used = dt0

    def result(status, crossing, t_end, peak_phi, min_dt):
        return {"dt0": dt0, "growth": growth, "status": status, "crossing": crossing, "t": t_end,
                "peak_phi": peak_phi, "steps": steps, "rejected": rejected, "min_dt": min_dt}

    while t < T * (1 - 1e-12):
        h = min(dt, T - t)
        with np.errstate(over="ignore", invalid="ignore"):
            if params.scheme == "semi_implicit":
                rhs = modes + h * (st.nonlinear_modes(grid) + params.gamma * modes)
                Fm = F.modes_at(t)
                if Fm is not None:
                    rhs = rhs + h * Fm
                new = st.solve(rhs, h)
            else:
                new = _rk4_modes(st, modes, t, h, F)
            ph_new = st.phi(new)
        if not (np.isfinite(ph_new) and np.all(np.isfinite(new))) or ph_new > (1 + growth) * ph + 1e-10:
            rejected += 1
            dt = h / 2
            if dt < policy.min_dt:
                return result("underflow", None, t, peak, dt)
            continue
        steps += 1
        min_used = min(min_used, h)
        if ph_new > theta:
            frac = (np.log(theta) - np.log(max(ph, 1e-300))) / (np.log(ph_new) - np.log(max(ph, 1e-300)))
            crossing = t + h * float(np.clip(frac, 0.0, 1.0))
            return result("crossed", crossing, t + h, ph_new, min_used)
        modes, grid, ph, t = new, from_modes(dom, new), ph_new, t + h
        peak = max(peak, ph)
        dt = min(dt0, 2 * h)
    return result("horizon", None, t, peak, min_used)


def detect_blowup(params: EvolutionParams, U0: ComplexField, F: Forcing | None = None, theta: float = 1e8,
                  policy: DtPolicy | None = None, T: float | None = None, dt0: float | None = None) -> BlowupVerdict:
    """Classify a run as ``blowup``, ``global_on_horizon`` or ``inconclusive``.

    Level ``k`` runs the adaptive scheme with the refinement of
    :class:`DtPolicy`. Two levels
    without a crossing give ``global_on_horizon``. Crossing times whose last
    ``policy.agreements`` relative changes are all below ``policy.rel_tol``
    give ``blowup``. Step underflow or running out of levels gives
    ``inconclusive``.
    """
    policy = policy or DtPolicy()
    T = params.T if T is None else float(T)
    dt0 = params.dt if dt0 is None else float(dt0)
    params.check_subcritical(U0.domain.dim)
    F = Forcing.zero(U0.domain) if F is None else F
    label = DEFOCUSING_LABEL if params.nonlinear_sign < 0 else ""
    history: list[dict] = []
    crossings: list[float] = []
    for level in range(policy.max_levels):
        run = _adaptive_run(U0, params, F, T, dt0 / 2 ** level, theta, policy, policy.growth / 2 ** level)
        history.append(run)
        peak = max(r["peak_phi"] for r in history)
        if run["status"] == "underflow":
            return BlowupVerdict("inconclusive", None, peak, theta, history, label)
        if run["status"] == "horizon":
            crossings = []
            if level >= 1 and history[-2]["status"] == "horizon":
                return BlowupVerdict("global_on_horizon", None, peak, theta, history, label)
            continue
        crossings.append(run["crossing"])
        if len(crossings) > policy.agreements:
            recent = crossings[-(policy.agreements + 1):]
            changes = [abs(b - a) / abs(b) for a, b in zip(recent[:-1], recent[1:])]
            if all(c < policy.rel_tol for c in changes):
                return BlowupVerdict("blowup", crossings[-1], peak, theta, history, label)
    peak = max(r["peak_phi"] for r in history)
    return BlowupVerdict("inconclusive", None, peak, theta, history, label)


# --------------------------------------------------------------------------- small-data certificate


def coercivity_constants(lam: float, gamma: float, kappa: float, q: float, lambda1: float, C: float):
    """``(delta0, delta, eps0)`` with

        delta0 = 2 (lam - gamma / lambda1),  delta = delta0 / 2,
        eps0 = (delta0 / (2 C kappa q))^(2 / (q - 2)).
    """
    if not gamma < lam * lambda1:
        raise NotApplicable(f"need gamma < lam * lambda1 = {lam * lambda1:g}, got gamma = {gamma:g}")
    if not kappa > 0:
        raise NotApplicable("the small-data constants need kappa > 0")
    delta0 = 2.0 * (lam - gamma / lambda1)
    delta = delta0 / 2.0
    eps0 = (delta0 / (2.0 * C * kappa * q)) ** (2.0 / (q - 2.0))
    return delta0, delta, eps0


def a_priori_constants(lam: float, gamma: float, lambda1: float, delta: float, C_eps: float):
    """``(N1, N2, N)`` of the a priori energy bound:

        N1 = sqrt(2 / lambda1) + 1 / (1 - exp(-delta lambda1 / 2)),
        N2 = (N1 + N1^2 / 2) / delta,
        N  = 2 + ((2 gamma_+ + C_eps) N2 + 1 / lam) / (1 - exp(-lam lambda1 / 4)).
    """
    gp = max(0.0, gamma)
    N1 = np.sqrt(2.0 / lambda1) + 1.0 / (1.0 - np.exp(-delta * lambda1 / 2.0))
    N2 = (N1 + 0.5 * N1 ** 2) / delta
    N = 2.0 + ((2.0 * gp + C_eps) * N2 + 1.0 / lam) / (1.0 - np.exp(-lam * lambda1 / 4.0))
    return float(N1), float(N2), float(N)


@dataclass
class SmallDataCertificate:
    """Small-data constants. ``C`` and ``C_eps_lambda`` are measured (lower-bound based)."""

    lam: float
    gamma: float
    kappa: float
    beta: float
    q: float
    lambda1: float
    delta0: float
    delta: float
    C: float
    eps0: float
    eps_lambda: float
    C_eps_lambda: float
    chi: float
    N1: float
    N2: float
    N: float
    eps1: float
    r: float
    trials: int
    seed: int
    note: str = "C and C_eps_lambda are maxima over trial fields: heuristic, lower-bound based"

    def to_dict(self) -> dict:
        return asdict(self)

    def with_radius(self, r: float) -> "SmallDataCertificate":
        from dataclasses import replace

        if not 0 < r < self.eps1:
            raise PreconditionError(f"radius {r:g} must lie in (0, eps1 = {self.eps1:g})")
        return replace(self, r=float(r))


def small_data_certificate(params: EvolutionParams, domain: Domain, trials: int = 200, seed: int = 0,
                           C: float | None = None, C_eps: float | None = None) -> SmallDataCertificate:
    """All small-data constants for ``params`` on ``domain``.

    ``eps1 = min(eps0, 1) / N`` since the splitting constant is measured on
    ``phi <= 1``; the admissible radius defaults to ``eps1 / 2``.
    Raises :class:`NotApplicable` when ``gamma >= lam lambda1`` or ``kappa = 0``.
    """
    lambda1 = build_basis(domain).lambda1
    p = params
    if not p.gamma < p.lam * lambda1:
        raise NotApplicable(f"need gamma < lam * lambda1 = {p.lam * lambda1:g}, got gamma = {p.gamma:g}")
    if not p.kappa > 0:
        raise NotApplicable("the small-data constants need kappa > 0")
    if C is None:
        C = estimate_sobolev_constant(domain, p.q, trials=trials, seed=seed)
    delta0, delta, eps0 = coercivity_constants(p.lam, p.gamma, p.kappa, p.q, lambda1, C)
    eps_lambda = p.lam ** 2 / (8.0 * (p.kappa ** 2 + p.beta ** 2))
    if C_eps is None:
        C_eps = estimate_splitting_constant(domain, p.q, eps_lambda, trials=trials, seed=seed, phi_max=1.0)
    N1, N2, N = a_priori_constants(p.lam, p.gamma, lambda1, delta, C_eps)
    eps1 = min(eps0, 1.0) / N
    chi = gns_exponents(p.q, domain.dim).chi
    return SmallDataCertificate(p.lam, p.gamma, p.kappa, p.beta, p.q, lambda1, delta0, delta, float(C), eps0,
                                eps_lambda, float(C_eps), chi, N1, N2, N, eps1, eps1 / 2.0, int(trials), int(seed))


@dataclass
class GlobalRunReport:
    """Outcome of a run checked against ``phi(U(t)) < N r^2``.

    ``margin_r2`` is ``max phi / (N r^2)`` and ``margin_r`` is
    ``max phi / (N r)``. ``coercivity_failures`` counts steps with
    ``phi <= eps0`` where ``2 lam phi - kappa q psi_q - gamma |U|^2 < delta phi``
    under the final certificate. ``energy_defect_max`` is the largest
    positive defect of the discrete inequality
    ``(|U_{j+1}|^2 - |U_j|^2) / (2 dt) + delta phi(U_{j+1}) <= |F| |U_{j+1}|``.
    """

    passed: bool
    blowup: bool
    bound_ok: bool
    margin_r2: float
    margin_r: float
    phi_max: float
    phi_monotone: bool
    coercivity_failures: int
    reestimated: bool
    energy_defect_max: float
    energy_defect_steps: int
    certificate: SmallDataCertificate
    trajectory: Trajectory | None = None

    @property
    def not_grazed(self) -> bool:
        """Bound held with at least a 5% margin."""
        return self.margin_r2 <= 0.95

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("trajectory", "certificate")}
        d["certificate"] = self.certificate.to_dict()
        d["not_grazed"] = self.not_grazed
        return d


def _coercivity_defects(traj: Trajectory, params: EvolutionParams, cert: SmallDataCertificate) -> int:
    q = params.q
    lhs = 2 * params.lam * traj.phi - params.kappa * q * traj.psi_q - params.gamma * traj.l2_sq
    below = traj.phi <= cert.eps0
    return int(np.sum(below & (lhs < cert.delta * traj.phi * (1 - 1e-12))))


def monitored_global_run(params: EvolutionParams, U0: ComplexField, F: Forcing | None,
                         certificate: SmallDataCertificate, T: float | None = None,
                         reestimate_trials: int | None = None) -> GlobalRunReport:
    """Run the full model and check ``phi(U(t)) < N r^2`` at every step.

    Preconditions (``phi(U0) <= r^2``, window norm of ``F`` at most ``r``,
    ``r < eps1``) are checked first; a violation raises
    :class:`PreconditionError` before anything runs. If static coercivity
    fails at some step below ``eps0``, ``C`` is re-estimated once with four
    times the trials and the certificate rebuilt.
    """
    dom = U0.domain
    cert = certificate
    T = params.T if T is None else float(T)
    F = Forcing.zero(dom) if F is None else F
    r = cert.r
    phi0 = phi(U0)
    if not r < cert.eps1:
        raise PreconditionError(f"radius r = {r:g} is not below eps1 = {cert.eps1:g}")
    if phi0 > r * r * (1 + 1e-12):
        raise PreconditionError(f"phi(U0) = {phi0:g} exceeds r^2 = {r * r:g}")
    wn = window_norm(F, "L2", T=T, dt=params.dt)
    if wn > r * (1 + 1e-12):
        raise PreconditionError(f"window norm of F = {wn:g} exceeds r = {r:g}")

    try:
        traj = simulate(U0, params, F, T=T, save_every=max(1, int(round(T / params.dt)) // 200))
    except BlowupSignal as exc:
        return GlobalRunReport(False, True, False, np.inf, np.inf, np.inf, False, 0, False, np.nan, 0, cert,
                               exc.trajectory)

    reestimated = False
    fails = _coercivity_defects(traj, params, cert)
    if fails:
        trials = reestimate_trials or 4 * cert.trials
        C_new = estimate_sobolev_constant(dom, params.q, trials=trials, seed=cert.seed + 1)
        rebuilt = small_data_certificate(params, dom, trials=cert.trials, seed=cert.seed,
                                         C=max(C_new, cert.C), C_eps=cert.C_eps_lambda)
        cert = rebuilt.with_radius(min(r, rebuilt.eps1 * (1 - 1e-12)))
        reestimated = True
        fails = _coercivity_defects(traj, params, cert)

    phi_max = float(np.max(traj.phi))
    bound = cert.N * r * r
    dt = np.diff(traj.times)
    fn = F.l2_norm_series(traj.times[1:])
    lhs = np.diff(traj.l2_sq) / (2 * dt) + cert.delta * traj.phi[1:]
    rhs = fn * np.sqrt(traj.l2_sq[1:])
    defect = lhs - rhs
    mask = traj.phi[1:] <= cert.eps0
    pos = np.where(mask, np.maximum(defect, 0.0), 0.0)
    bound_ok = bool(np.all(traj.phi < bound))
    passed = bound_ok and fails == 0
    return GlobalRunReport(
        passed=passed,
        blowup=False,
        bound_ok=bound_ok,
        margin_r2=phi_max / bound,
        margin_r=phi_max / (cert.N * r),
        phi_max=phi_max,
        phi_monotone=bool(np.all(np.diff(traj.phi) <= 1e-15 * max(phi_max, 1e-300))),
        coercivity_failures=fails,
        reestimated=reestimated,
        energy_defect_max=float(pos.max(initial=0.0)),
        energy_defect_steps=int(np.sum(pos > 0)),
        certificate=cert,
        trajectory=traj,
    )
