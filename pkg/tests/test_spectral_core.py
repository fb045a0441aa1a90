import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgllab.spectral_core import Domain, build_basis, from_modes, grid_points, integrate, to_modes


def _power_iteration_lambda1(L, n, iters=20000):
    # smallest eigenvalue of the finite-difference Dirichlet Laplacian via shifted power iteration
    h = L / (n + 1)
    main = 2.0 / h ** 2
    shift = 4.0 / h ** 2
    v = np.sin(np.pi * np.arange(1, n + 1) / (n + 1)) + 0.01
    for _ in range(iters):
        Av = main * v
        Av[1:] -= v[:-1] / h ** 2
        Av[:-1] -= v[1:] / h ** 2
        w = shift * v - Av
        v = w / np.linalg.norm(w)
    Av = main * v
    Av[1:] -= v[:-1] / h ** 2
    Av[:-1] -= v[1:] / h ** 2
    return float(v @ Av)


def test_interval_eigenvalues():
    b = build_basis(Domain.interval(np.pi, 64))
    assert b.lambda1 == pytest.approx(1.0)
    np.testing.assert_allclose(b.eigenvalues, np.arange(1, 65) ** 2, rtol=1e-13)


def test_square_lambda1():
    assert build_basis(Domain.rectangle(np.pi, np.pi, 8, 8)).lambda1 == pytest.approx(2.0)


def test_long_interval_lambda1_matches_finite_differences():
    assert build_basis(Domain.interval(2 * np.pi, 16)).lambda1 == pytest.approx(0.25)
    fd = [_power_iteration_lambda1(2 * np.pi, n, iters=4000) for n in (16, 64)]
    assert abs(fd[1] - 0.25) < abs(fd[0] - 0.25) < 1e-2
    assert abs(fd[1] - 0.25) < 1e-3


def test_sine_is_first_mode():
    d = Domain.interval(np.pi, 64)
    (x,) = grid_points(d)
    m = to_modes(d, np.sin(x))
    e1 = np.zeros(64)
    e1[0] = 1.0
    np.testing.assert_allclose(m, e1, atol=1e-13)


def test_zero_grid():
    d = Domain.rectangle(1.0, 2.0, 5, 7)
    assert not np.any(to_modes(d, np.zeros(d.shape)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), n1=st.integers(4, 40), n2=st.integers(4, 12))
def test_round_trip(seed, n1, n2):
    rng = np.random.default_rng(seed)
    for d in (Domain.interval(1.7, n1), Domain.rectangle(1.0, 3.0, n1, n2)):
        g = rng.standard_normal((2,) + d.shape)
        np.testing.assert_allclose(from_modes(d, to_modes(d, g)), g, atol=1e-12)


def test_integrals():
    d = Domain.interval(np.pi, 256)
    (x,) = grid_points(d)
    assert integrate(d, np.sin(x) ** 2) == pytest.approx(np.pi / 2, rel=1e-4)
    assert integrate(d, np.sin(x) ** 4) == pytest.approx(3 * np.pi / 8, rel=1e-4)
    assert integrate(d, np.zeros(256)) == 0.0


def test_rectangle_integral():
    d = Domain.rectangle(np.pi, np.pi, 64, 64)
    x, y = grid_points(d)
    assert integrate(d, (np.sin(x) * np.sin(y)) ** 2) == pytest.approx(np.pi ** 2 / 4, rel=1e-10)


def test_unsupported_dimension():
    with pytest.raises(ValueError):
        Domain((1.0, 1.0, 1.0), (4, 4, 4))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        to_modes(Domain.interval(1.0, 8), np.zeros(9))
