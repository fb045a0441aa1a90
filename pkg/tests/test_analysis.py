import numpy as np
import pytest

from cgllab.analysis import (
    DEFOCUSING_LABEL,
    DtPolicy,
    a_priori_constants,
    coercivity_constants,
    detect_blowup,
    monitored_global_run,
    small_data_certificate,
    window_norm,
)
from cgllab.errors import NotApplicable, PreconditionError
from cgllab.evolution import EvolutionParams, Forcing
from cgllab.field_algebra import eigenmode
from cgllab.monotone_ops import phi
from cgllab.spectral_core import Domain

D = Domain.interval(np.pi, 64)
SMALL = EvolutionParams(lam=1.0, kappa=1.0, q=4.0, T=10.0, dt=1e-2)


@pytest.fixture(scope="module")
def certificate():
    return small_data_certificate(SMALL, D, trials=50)


def test_window_norm_cases():
    assert window_norm(Forcing.zero(D), T=3.0) == 0.0
    G = eigenmode(D, 1, np.sqrt(2 / np.pi) * 0.7)
    assert window_norm(Forcing.constant(G), T=3.0) == pytest.approx(0.7, rel=1e-10)
    assert window_norm(Forcing.constant(G), T=0.5) == pytest.approx(0.7 * np.sqrt(0.5), rel=1e-10)
    t = np.linspace(0, 2, 201)
    assert window_norm((t, np.ones_like(t)), "L1") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        window_norm(Forcing.zero(D), "Linf", T=1.0)


def test_coercivity_hand_values():
    d0, d, eps0 = coercivity_constants(1.0, 0.0, 1.0, 4.0, 1.0, 1.0)
    assert (d0, d) == (2.0, 1.0)
    assert eps0 == pytest.approx(0.25)
    _, _, eps0 = coercivity_constants(0.5, 0.0, 1.0, 4.0, 1.0, 1.0)
    assert eps0 == pytest.approx(0.125)
    with pytest.raises(NotApplicable):
        coercivity_constants(1.0, 1.0, 1.0, 4.0, 1.0, 1.0)


def test_a_priori_hand_values():
    N1, N2, N = a_priori_constants(1.0, 0.0, 1.0, 1.0, 1.5)
    assert N1 == pytest.approx(np.sqrt(2) + 1 / (1 - np.exp(-0.5)), abs=1e-12)
    assert N1 == pytest.approx(3.9557, abs=1e-4)
    assert N2 == pytest.approx(N1 + 0.5 * N1 ** 2, abs=1e-12)
    assert N == pytest.approx(2 + (1.5 * N2 + 1) / (1 - np.exp(-0.25)), abs=1e-12)


def test_certificate_fields(certificate):
    c = certificate
    assert c.delta0 == 2.0 and c.delta == 1.0 and c.lambda1 == pytest.approx(1.0)
    assert c.eps1 == pytest.approx(min(c.eps0, 1) / c.N)
    assert c.r == pytest.approx(c.eps1 / 2)
    assert c.eps_lambda == pytest.approx(1 / 8)
    with pytest.raises(PreconditionError):
        c.with_radius(2 * c.eps1)


def test_certificate_not_applicable():
    with pytest.raises(NotApplicable):
        small_data_certificate(SMALL.replace(gamma=2.0), D, trials=5)
    with pytest.raises(NotApplicable):
        small_data_certificate(SMALL.replace(kappa=0.0), D, trials=5)


def _scaled_mode(target_phi):
    U = eigenmode(D, 1)
    return U * np.sqrt(target_phi / phi(U))


def test_monitored_run_passes_and_decays(certificate):
    U0 = _scaled_mode(certificate.r ** 2)
    rep = monitored_global_run(SMALL, U0, None, certificate)
    assert rep.passed and rep.phi_monotone and rep.not_grazed
    assert rep.coercivity_failures == 0 and rep.energy_defect_steps == 0


def test_monitored_run_with_forcing(certificate):
    r = certificate.r
    U0 = _scaled_mode(0.25 * r ** 2)
    G = eigenmode(D, 2, r * np.sqrt(2 / np.pi))
    rep = monitored_global_run(SMALL, U0, Forcing.constant(G), certificate)
    assert rep.passed and rep.phi_max < certificate.N * r ** 2


def test_monitored_run_rejects_large_data(certificate):
    with pytest.raises(PreconditionError):
        monitored_global_run(SMALL, _scaled_mode(1e4 * certificate.eps0), None, certificate)
    G = eigenmode(D, 1, 1.0)
    with pytest.raises(PreconditionError):
        monitored_global_run(SMALL, _scaled_mode(0.0), Forcing.constant(G), certificate)


def test_blowup_large_data():
    p = EvolutionParams(lam=1.0, kappa=5.0, q=4.0, T=1.0, dt=1e-3)
    v = detect_blowup(p, eigenmode(D, 1, 10.0))
    assert v.outcome == "blowup" and v.T_m < 1.0
    assert v.T_m == pytest.approx(1.0e-3, rel=0.1)
    assert v.label == ""


def test_blowup_small_data_global():
    p = EvolutionParams(lam=1.0, kappa=5.0, q=4.0, T=10.0, dt=1e-2)
    v = detect_blowup(p, eigenmode(D, 1, 0.01))
    assert v.outcome == "global_on_horizon" and v.T_m is None


@pytest.mark.parametrize("amp", [10.0, 100.0])
def test_defocusing_never_blows_up(amp):
    p = EvolutionParams(lam=1.0, kappa=5.0, q=4.0, T=1.0, dt=1e-3, nonlinear_sign=-1)
    v = detect_blowup(p, eigenmode(D, 1, amp))
    assert v.outcome == "global_on_horizon" and v.label == DEFOCUSING_LABEL


def test_blowup_inconclusive_when_levels_exhausted():
    p = EvolutionParams(lam=1.0, kappa=5.0, q=4.0, T=1.0, dt=1e-3)
    v = detect_blowup(p, eigenmode(D, 1, 10.0), policy=DtPolicy(max_levels=2))
    assert v.outcome == "inconclusive"
