import numpy as np
import pytest

from cgllab.errors import BlowupSignal, ConfigurationError, NonContractive, SupercriticalExponent
from cgllab.evolution import (
    EvolutionParams,
    Forcing,
    SourceSeries,
    acgl_residual,
    fixed_point_solve,
    simulate,
    solve_aeh_mu,
    solve_linear_aeh,
    step_acgl,
    time_grid,
)
from cgllab.field_algebra import ComplexField, eigenmode, l2_norm, l2_norm_sq, random_field
from cgllab.oracles import ComplexOracle
from cgllab.spectral_core import Domain, build_basis, to_modes

D = Domain.interval(np.pi, 64)
SIN = eigenmode(D, 1)


def _slope(dts, errs):
    return float(np.polyfit(np.log(dts), np.log(errs), 1)[0])


def test_params_validation():
    with pytest.raises(ConfigurationError):
        EvolutionParams(lam=0.0)
    with pytest.raises(ConfigurationError):
        EvolutionParams(q=2.0)
    with pytest.raises(ConfigurationError):
        EvolutionParams(scheme="euler")
    with pytest.raises(ConfigurationError):
        EvolutionParams(nonlinear_sign=0)
    with pytest.raises(SupercriticalExponent):
        EvolutionParams(q=6.0).check_subcritical(3)
    EvolutionParams(q=5.9).check_subcritical(3)


def test_time_grid():
    np.testing.assert_allclose(time_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    g = time_grid(1.0, 0.3)
    assert g[-1] == 1.0 and len(g) == 5


def test_heat_step_on_eigenmode(backend):
    p = EvolutionParams(kappa=0.0, dt=0.01)
    U1 = step_acgl(SIN, 0.0, p)
    np.testing.assert_allclose(U1.data, SIN.data / 1.01, atol=1e-14)


def test_rotation_step_contracts():
    p = EvolutionParams(lam=1.0, alpha=1.0, kappa=0.0, dt=0.05)
    U = random_field(D, seed=3)
    for _ in range(20):
        V = step_acgl(U, 0.0, p)
        assert l2_norm(V) <= l2_norm(U) * (1 + 1e-14)
        U = V


def test_linear_exact_decay():
    U0 = random_field(D, seed=1, decay=1.5)
    nu = build_basis(D).eigenvalues
    errs = []
    dts = [1e-2, 5e-3, 2.5e-3]
    for dt in dts:
        p = EvolutionParams(kappa=0.0, T=0.5, dt=dt)
        tr = solve_linear_aeh(None, None, U0, 0.5, p)
        exact = to_modes(D, U0.data) * np.exp(-nu * 0.5)
        errs.append(np.abs(to_modes(D, tr.fields[-1]) - exact).max())
    assert _slope(dts, errs) >= 0.9


def test_linear_steady_state():
    G = eigenmode(D, 1, 2.0) + eigenmode(D, 3, -1.0j)
    p = EvolutionParams(kappa=0.0, T=20.0, dt=0.05)
    tr = solve_linear_aeh(None, Forcing.constant(G), ComplexField(np.zeros((2, 64)), D), 20.0, p, save_every=400)
    nu = build_basis(D).eigenvalues
    np.testing.assert_allclose(to_modes(D, tr.fields[-1]), to_modes(D, G.data) / nu, atol=1e-7)


def test_schemes_agree_at_first_order():
    U0 = eigenmode(D, 1, 0.5) + eigenmode(D, 2, 0.2j)
    base = dict(lam=1.0, alpha=0.5, kappa=1.0, beta=0.3, gamma=0.2, T=0.2)
    ref = simulate(U0, EvolutionParams(**base, dt=1e-4, scheme="explicit_rk4")).fields[-1]
    dts = [1e-2, 5e-3, 2.5e-3]
    errs = [np.abs(simulate(U0, EvolutionParams(**base, dt=dt)).fields[-1] - ref).max() for dt in dts]
    assert _slope(dts, errs) >= 0.9


def test_simulate_residual_first_order():
    U0 = eigenmode(D, 1, 0.5)
    dts = [1e-2, 5e-3, 2.5e-3]
    res = [np.nanmax(simulate(U0, EvolutionParams(T=0.2, dt=dt)).residual) for dt in dts]
    assert _slope(dts, res) >= 0.9


def test_zero_solution_has_zero_residual():
    Z = ComplexField(np.zeros((2, 64)), D)
    tr = simulate(Z, EvolutionParams(T=0.1, dt=0.01))
    assert np.nanmax(tr.residual) == 0.0
    assert np.nanmax(acgl_residual(tr, None, EvolutionParams(T=0.1, dt=0.01))) == 0.0


def test_save_every_keeps_diagnostics():
    tr = simulate(SIN, EvolutionParams(T=0.1, dt=0.01), save_every=3)
    assert len(tr.times) == 11 and len(tr.l2_sq) == 11
    np.testing.assert_allclose(tr.frame_times, [0.0, 0.03, 0.06, 0.09, 0.1])


def test_blowup_signal_carries_partial_trajectory():
    p = EvolutionParams(kappa=5.0, T=0.1, dt=1e-3)
    with pytest.raises(BlowupSignal) as exc:
        simulate(eigenmode(D, 1, 10.0), p)
    tr = exc.value.trajectory
    assert tr is not None and np.all(np.isfinite(tr.phi))
    assert tr.blowup_index == exc.value.step


def test_yosida_variant_reduces_when_alpha_zero():
    U0 = random_field(D, seed=2)
    p = EvolutionParams(alpha=0.0, T=0.05, dt=1e-3)
    a = solve_linear_aeh(None, None, U0, 0.05, p)
    b = solve_aeh_mu(None, None, U0, 0.05, 1e-3, p)
    np.testing.assert_array_equal(a.fields, b.fields)


def test_yosida_step_guard():
    with pytest.raises(ConfigurationError):
        solve_aeh_mu(None, None, SIN, 0.1, 1e-3, EvolutionParams(alpha=1.0, dt=1e-3))


def test_fixed_point_without_coupling():
    p = EvolutionParams(kappa=0.0, beta=0.0, T=0.5, dt=1e-2)
    h, tr, rep = fixed_point_solve(eigenmode(D, 1, 0.3), None, 0.5, p)
    assert rep.converged and rep.iterations == 1
    assert rep.final_distance == 0.0


def test_fixed_point_matches_simulate():
    p = EvolutionParams(T=0.5, dt=1e-2)
    U0 = eigenmode(D, 1, 0.01)
    h, tr, rep = fixed_point_solve(U0, None, 0.5, p)
    assert rep.converged and rep.in_ball and all(r < 1 for r in rep.ratios)
    direct = simulate(U0, p)
    np.testing.assert_allclose(tr.fields, direct.fields, atol=1e-13)


def test_fixed_point_noncontractive_reports():
    p = EvolutionParams(kappa=1.0, T=0.5, dt=1e-2)
    with pytest.raises(NonContractive) as exc:
        fixed_point_solve(eigenmode(D, 1, 0.5), None, 0.5, p, tol=1e-30, max_iter=3)
    assert exc.value.report.iterations == 3


def test_source_series_norm():
    times = np.linspace(0, 1, 11)
    data = np.stack([SIN.data] * 11)
    h = SourceSeries(times, data, D)
    assert h.hs_norm() == pytest.approx(np.sqrt(np.pi / 2), rel=1e-12)
    assert (h - h).hs_norm() == 0.0


def test_forcing_kinds():
    F = Forcing.constant(SIN)
    assert F.l2_norm_at(3.0) == pytest.approx(np.sqrt(np.pi / 2))
    times = np.array([0.0, 1.0])
    S = Forcing.sampled(times, np.stack([0 * SIN.data, 2 * SIN.data]), D)
    np.testing.assert_allclose(S.at(0.5), SIN.data)
    assert S.covers(1.0) and not S.covers(2.0)
    assert Forcing.zero(D).is_zero


@pytest.mark.parametrize("seed", range(4))
def test_complex_oracle_per_step(seed):
    rng = np.random.default_rng(seed)
    dom = Domain.interval(np.pi, 32) if seed % 2 == 0 else Domain.rectangle(np.pi, 2.0, 12, 10)
    lam, alpha, kappa, beta, gamma = rng.uniform(0.2, 2.0, 5) * np.array([1, 1, 1, -1, 1])
    p = EvolutionParams(lam=lam, alpha=alpha, kappa=kappa, beta=beta, gamma=gamma, q=3.5, dt=1e-3)
    U = random_field(dom, seed=seed, decay=1.0, amplitude=0.5)
    G = random_field(dom, seed=seed + 7, decay=1.0)
    orc = ComplexOracle(dom.lengths, dom.sizes, lam, alpha, kappa, beta, gamma, 3.5)
    u = U.to_complex()
    for _ in range(3):
        U = step_acgl(U, 0.0, p, Forcing.constant(G))
        u = orc.step(u, 1e-3, G.to_complex())
        assert np.max(np.abs(U.to_complex() - u)) <= 1e-12 * max(1.0, np.abs(u).max())
