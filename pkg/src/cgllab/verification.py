"""Property suite: operator identities, subdifferential contracts, the
pointwise Lipschitz fuzz, Gronwall checks and the complex-oracle comparison.

Each check returns a :class:`CheckResult` with the measured worst value and
the tolerance it was held to. :func:`run_suite` runs them all.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .estimates import check_pointwise_lipschitz, gns_exponents, gronwall_envelope
from .evolution import EvolutionParams, Forcing, step_acgl
from .field_algebra import (
    ComplexField,
    apply_i,
    complex_scale,
    inner_l2,
    inner_l2_skew,
    l2_norm,
    l2_norm_sq,
    random_field,
)
from .monotone_ops import (
    grad_phi,
    grad_psi_r,
    moreau_yosida_phi,
    phi,
    psi_r,
    resolvent_phi,
    resolvent_psi_r,
    yosida_phi,
    yosida_psi_r,
)
from .oracles import ComplexOracle
from .spectral_core import Domain, build_basis, to_modes

__all__ = [
    "CheckResult",
    "check_operator_identities",
    "check_moreau_yosida",
    "check_subdifferential",
    "check_resolvent_identity",
    "check_lipschitz_fuzz",
    "check_gronwall",
    "check_complex_oracle",
    "check_spectral_inequalities",
    "check_exponents",
    "run_suite",
]

DOMAINS = (Domain.interval(np.pi, 64), Domain.rectangle(np.pi, 2.0, 24, 16))
LIPSCHITZ_R = (2.5, 3.0, 3.5, 4.0, 5.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _field(i: int, seed: int, decay: float = 1.0) -> ComplexField:
    dom = DOMAINS[i % len(DOMAINS)]
    rng = np.random.default_rng([seed, i, 7])
    return random_field(dom, seed=seed * 100003 + i, decay=decay, amplitude=float(10 ** rng.uniform(-1, 1)))


def _pair(i: int, seed: int) -> tuple[ComplexField, ComplexField]:
    U = _field(i, seed)
    V = random_field(U.domain, seed=seed * 100003 + i + 50_000_000, decay=1.0,
                     amplitude=float(10 ** np.random.default_rng([seed, i, 8]).uniform(-1, 1)))
    return U, V


def check_operator_identities(n_fields: int = 1000, seed: int = 0, tol: float = 1e-10,
                              mu: float = 0.05, r: float = 4.0) -> CheckResult:
    """``I^2 = -E``, isometry, skew-symmetry, commutativity, the orthogonality
    families (including the Yosida ones) and Bessel's inequality, relative to
    the natural scale of each quantity."""
    worst = {}

    def note(key, val):
        worst[key] = max(worst.get(key, 0.0), float(val))

    for i in range(n_fields):
        U, V = _pair(i, seed)
        nU, nV = l2_norm(U), l2_norm(V)
        IU = apply_i(U)
        note("I^2 = -E", np.max(np.abs(apply_i(IU).data + U.data)) / np.max(np.abs(U.data)))
        note("isometry", abs(l2_norm(IU) - nU) / nU)
        note("skew", abs(inner_l2(U, apply_i(V)) + inner_l2(IU, V)) / (nU * nV))
        note("skew form", abs(inner_l2_skew(U, V) - inner_l2(U, apply_i(V))) / (nU * nV))
        gU = grad_phi(U)
        note("commute phi", l2_norm(apply_i(gU) - grad_phi(IU)) / l2_norm(gU))
        pU = grad_psi_r(U, r)
        note("commute psi", l2_norm(apply_i(pU) - grad_psi_r(IU, r)) / l2_norm(pU))
        note("(U, IU)", abs(inner_l2(U, IU)) / nU ** 2)
        note("(dphi U, IU)", abs(inner_l2(gU, IU)) / (l2_norm(gU) * nU))
        note("(dpsi U, IU)", abs(inner_l2(pU, IU)) / (l2_norm(pU) * nU))
        yU = yosida_phi(U, mu)
        ny = l2_norm(yU)
        note("(dphi_mu U, IU)", abs(inner_l2(yU, IU)) / (ny * nU))
        note("(dphi_mu U, I dphi U)", abs(inner_l2(yU, apply_i(gU))) / (ny * l2_norm(gU)))
        yp = yosida_psi_r(U, mu, r)
        note("(dpsi_mu U, IU)", abs(inner_l2(yp, IU)) / (l2_norm(yp) * nU))
        JU = resolvent_psi_r(U, mu, r)
        gj = grad_psi_r(JU, r)
        note("(dpsi(J U), IU)", abs(inner_l2(gj, IU)) / (l2_norm(gj) * nU))
        note("(dpsi_mu U, I dpsi U)", abs(inner_l2(yp, apply_i(pU))) / (l2_norm(yp) * l2_norm(pU)))
        bessel = inner_l2(U, V) ** 2 + inner_l2_skew(U, V) ** 2 - (nU * nV) ** 2
        note("Bessel", max(0.0, bessel) / (nU * nV) ** 2)
        a, b = np.random.default_rng([seed, i, 9]).standard_normal(2)
        back = complex_scale(a, -b, complex_scale(a, b, U))
        note("(aE+bI)(aE-bI)", l2_norm(back - U * (a * a + b * b)) / ((a * a + b * b) * nU))
    value = max(worst.values())
    detail = ", ".join(f"{k}: {v:.1e}" for k, v in worst.items())
    return CheckResult("operator identities", value <= tol, value, tol, detail)


def check_moreau_yosida(n_fields: int = 1000, seed: int = 0, mus=(1e-4, 1e-2, 1.0)) -> CheckResult:
    """Mode-wise ``phi_mu <= phi`` and ``|dphi_mu| <= |dphi|`` (exact, no tolerance),
    plus the infimal characterization at the resolvent (relative 1e-12)."""
    violations = 0
    inf_err = 0.0
    for i in range(n_fields):
        U = _field(i, seed)
        basis = build_basis(U.domain)
        nu = basis.eigenvalues
        c = to_modes(U.domain, U.data)
        c2 = c[0] ** 2 + c[1] ** 2
        for mu in mus:
            yos = nu / (1.0 + mu * nu) * np.sqrt(c2)
            violations += int(np.sum(yos > nu * np.sqrt(c2)))
            jm = np.sqrt(c2) / (1.0 + mu * nu)
            per_mode = 0.5 * mu * yos ** 2 + 0.5 * nu * jm ** 2
            violations += int(np.sum(per_mode > 0.5 * nu * c2))
            val = moreau_yosida_phi(U, mu)
            J = resolvent_phi(U, mu)
            at_min = l2_norm_sq(U - J) / (2 * mu) + phi(J)
            inf_err = max(inf_err, abs(val - at_min) / max(val, 1e-300))
            rng = np.random.default_rng([seed, i, int(-np.log10(mu) * 10)])
            pert = random_field(U.domain, seed=int(rng.integers(2 ** 31)), decay=1.0, amplitude=1e-3 * l2_norm(J))
            W = J + pert
            if l2_norm_sq(U - W) / (2 * mu) + phi(W) < at_min * (1 - 1e-12):
                violations += 1
    passed = violations == 0 and inf_err <= 1e-12
    return CheckResult("Moreau-Yosida mode-wise", passed, float(violations), 0.0,
                       f"violations={violations}, infimum rel. error={inf_err:.1e}")


def check_subdifferential(n_pairs: int = 1000, seed: int = 0, q: float = 4.0, tol: float = 1e-8) -> CheckResult:
    """``(dF(U), V - U) <= F(V) - F(U)`` for ``F = phi`` and ``F = psi_q``."""
    worst = 0.0
    for i in range(n_pairs):
        U, V = _pair(i, seed + 1)
        for f, g in ((phi, grad_phi), (lambda W: psi_r(W, q), lambda W: grad_psi_r(W, q))):
            lhs = inner_l2(g(U), V - U)
            rhs = f(V) - f(U)
            scale = max(1.0, abs(f(U)), abs(f(V)))
            worst = max(worst, (lhs - rhs) / scale)
    return CheckResult("subdifferential inequality", worst <= tol, worst, tol)


def check_resolvent_identity(n_fields: int = 1000, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """``U = J_mu U + mu dphi_mu U`` and ``V + mu dpsi_r(V) = U`` for ``V = J^psi_mu U``."""
    worst = worst_psi = 0.0
    for i in range(n_fields):
        U = _field(i, seed + 2)
        mu = float(10 ** np.random.default_rng([seed, i, 3]).uniform(-5, 0))
        back = resolvent_phi(U, mu) + yosida_phi(U, mu) * mu
        worst = max(worst, float(np.max(np.abs(back.data - U.data)) / np.max(np.abs(U.data))))
        V = resolvent_psi_r(U, mu, 3.5)
        back = V + grad_psi_r(V, 3.5) * mu
        worst_psi = max(worst_psi, float(np.max(np.abs(back.data - U.data)) / np.max(np.abs(U.data))))
    value = max(worst, worst_psi)
    return CheckResult("resolvent identity", value <= tol, value, tol,
                       f"phi: {worst:.1e}, psi: {worst_psi:.1e}")


def check_lipschitz_fuzz(samples: int = 10 ** 6, seed: int = 0, rs=LIPSCHITZ_R) -> list[CheckResult]:
    out = []
    for r in rs:
        rep = check_pointwise_lipschitz(r, samples=samples, seed=seed)
        detail = (f"d_r={rep.d:g} worst={rep.worst_ratio:.12f} violations={rep.violations}; "
                  f"dtilde_r={rep.dtilde:g} worst={rep.worst_ratio_tilde:.12f} violations={rep.violations_tilde}")
        out.append(CheckResult(f"pointwise Lipschitz r={r:g}", rep.passed,
                               float(rep.violations + rep.violations_tilde), 0.0, detail))
    return out


def gronwall_cases(delta: float = 0.7, K: float = 1.3, j0: float = 2.0, T: float = 6.0, dt: float = 1e-3):
    """Exact solutions of ``j' + delta j = K f`` for ``f`` zero, constant and a
    unit pulse on ``[1, 1.5]``, plus a series that breaks the bound once."""
    t = np.arange(0.0, T + dt / 2, dt)
    cases = {}
    cases["zero"] = (np.zeros_like(t), j0 * np.exp(-delta * t))
    cases["constant"] = (np.ones_like(t), K / delta + (j0 - K / delta) * np.exp(-delta * t))
    a, b = 1.0, 1.5
    f = ((t >= a) & (t <= b)).astype(float)
    j = j0 * np.exp(-delta * t)
    mid = (t > a) & (t <= b)
    j = j + np.where(mid, K / delta * (1 - np.exp(-delta * (t - a))), 0.0)
    j = j + np.where(t > b, K / delta * (np.exp(-delta * (t - b)) - np.exp(-delta * (t - a))), 0.0)
    cases["pulse"] = (f, j)
    return t, cases


def check_gronwall(delta: float = 0.7, K: float = 1.3, j0: float = 2.0) -> CheckResult:
    t, cases = gronwall_cases(delta, K, j0)
    ok = True
    parts = []
    for name, (f, j) in cases.items():
        res = gronwall_envelope(j0, delta, K, t, f, j)
        ok &= res.holds
        parts.append(f"{name}: max j/env={res.max_ratio:.4f}")
    f, env_src = cases["constant"]
    env = gronwall_envelope(j0, delta, K, t, f).envelope
    bad = env_src.copy()
    k = len(t) // 2
    bad[k] = env[k] * 1.01
    flagged = gronwall_envelope(j0, delta, K, t, f, bad)
    caught = (not flagged.holds) and flagged.first_violation == k
    parts.append(f"violation flagged={caught}")
    return CheckResult("Gronwall envelope", bool(ok and caught), 0.0 if ok and caught else 1.0, 0.0, "; ".join(parts))


def check_complex_oracle(n_configs: int = 20, steps: int = 5, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """Real-pair semi-implicit step vs the complex-arithmetic stepper, from the same input state."""
    worst = 0.0
    for i in range(n_configs):
        rng = np.random.default_rng([seed, i, 11])
        dom = DOMAINS[i % len(DOMAINS)]
        lam = rng.uniform(0.5, 2.0)
        alpha, beta, gamma = (rng.uniform(0.2, 1.5) * rng.choice([-1, 1]) for _ in range(3))
        kappa = rng.uniform(0.2, 2.0)
        q = rng.uniform(2.5, 5.0)
        dt = 10 ** rng.uniform(-4, -2)
        p = EvolutionParams(lam=lam, alpha=alpha, kappa=kappa, beta=beta, gamma=gamma, q=q, dt=dt)
        U = random_field(dom, seed=seed * 1000 + i, decay=1.0)
        G = random_field(dom, seed=seed * 1000 + i + 500, decay=0.5)
        oracle = ComplexOracle(dom.lengths, dom.sizes, lam, alpha, kappa, beta, gamma, q)
        for _ in range(steps):
            mine = step_acgl(U, 0.0, p, Forcing.constant(G))
            ref = oracle.step(U.to_complex(), dt, G.to_complex())
            err = np.max(np.abs(mine.to_complex() - ref)) / np.max(np.abs(ref))
            worst = max(worst, float(err))
            U = mine
    return CheckResult("complex oracle", worst <= tol, worst, tol)


def check_spectral_inequalities(n_fields: int = 1000, seed: int = 0) -> CheckResult:
    """Poincare ``psi_2 <= phi / lambda1`` (equality on the first mode) and
    ``|dphi U|^2 >= 2 lambda1 phi(U)``."""
    worst = 0.0
    for i in range(n_fields):
        U = _field(i, seed + 4)
        l1 = build_basis(U.domain).lambda1
        worst = max(worst, (psi_r(U, 2.0) - phi(U) / l1) / phi(U))
        worst = max(worst, (2 * l1 * phi(U) - l2_norm_sq(grad_phi(U))) / phi(U))
    from .field_algebra import eigenmode

    eq = 0.0
    for dom in DOMAINS:
        E = eigenmode(dom, (1,) * dom.dim, 0.3 - 0.7j)
        eq = max(eq, abs(psi_r(E, 2.0) - phi(E) / build_basis(dom).lambda1) / phi(E))
    value = max(worst, eq)
    return CheckResult("Poincare and spectral gap", value <= 1e-12, value, 1e-12, f"first-mode equality error {eq:.1e}")


def check_exponents() -> CheckResult:
    worst = 0.0
    for N, qs in ((1, (2.5, 3.0, 4.0, 6.0, 10.0)), (2, (2.5, 3.0, 4.0, 8.0)), (3, (2.5, 3.0, 4.0, 5.5))):
        for q in qs:
            g = gns_exponents(q, N)
            e1 = (0.5 - 2.0 / N) * (1 - g.xi) + (0.5 - 1.0 / N) * g.xi - 1.0 / (2 * (q - 1))
            e2 = (0.5 - 1.0 / N) * (1 - g.eta) + g.eta / 2 - 1.0 / q
            worst = max(worst, abs(e1), abs(e2))
    return CheckResult("exponent identities", worst <= 1e-14, worst, 1e-14)


def run_suite(fast: bool = False, seed: int = 0, progress: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    n = 100 if fast else 1000
    samples = 10 ** 5 if fast else 10 ** 6
    jobs = [
        lambda: [check_operator_identities(n, seed)],
        lambda: [check_moreau_yosida(n, seed)],
        lambda: [check_subdifferential(n, seed)],
        lambda: [check_resolvent_identity(n, seed)],
        lambda: check_lipschitz_fuzz(samples, seed),
        lambda: [check_gronwall()],
        lambda: [check_complex_oracle(5 if fast else 20, seed=seed)],
        lambda: [check_spectral_inequalities(n, seed)],
        lambda: [check_exponents()],
    ]
    results = []
    for job in jobs:
        for res in job():
            results.append(res)
            if progress is not None:
                progress(res)
    return results
