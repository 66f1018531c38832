import numpy as np
import pytest

from clipsgd import generators as G
from clipsgd.errors import ConfigError, InputError
from clipsgd.numeric import CovModel, make_generator


def test_point_mass():
    h = G.point_mass([1.0, 2.0])
    gen = make_generator(0)
    for _ in range(5):
        np.testing.assert_array_equal(G.draw(h, gen), [1.0, 2.0])
    assert G.true_cov(h).trace == 0.0


def test_gaussian_covariance_lln():
    X = G.draw_many(G.gaussian(CovModel.identity(3)), make_generator(1), 10 ** 6)
    assert np.linalg.norm(np.cov(X.T, bias=True) - np.eye(3)) <= 0.02


def test_gaussian_full_covariance():
    M = np.array([[2.0, 0.8, 0.0], [0.8, 1.0, 0.3], [0.0, 0.3, 0.5]])
    X = G.draw_many(G.gaussian(CovModel.full(M)), make_generator(2), 10 ** 6)
    assert np.max(np.abs(np.cov(X.T, bias=True) - M)) <= 6 * np.sqrt(2 * 4 / 10 ** 6)


def test_student_t_variance():
    X = G.draw_many(G.student_t(3, CovModel.diagonal([1.0, 4.0])), make_generator(3), 10 ** 6)
    np.testing.assert_allclose(X.var(axis=0), [1.0, 4.0], rtol=0.05)


def test_pareto_and_scalar_variance():
    X = G.draw_many(G.pareto_radial(3.5, CovModel.diagonal([1.0, 1.0, 4.0])), make_generator(4), 10 ** 6)
    np.testing.assert_allclose(X.var(axis=0), [1.0, 1.0, 4.0], rtol=0.05)
    np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=0.01)
    assert np.min(np.linalg.norm(X / np.sqrt([1.0, 1.0, 4.0]), axis=1)) >= np.sqrt(3 * 1.5 / 3.5) * (1 - 1e-12)
    y = G.draw_many(G.scalar_t(5, 2.0), make_generator(5), 10 ** 6)
    assert y.shape == (10 ** 6, 1)
    assert y.var() == pytest.approx(2.0, rel=0.05)


def test_true_cov_is_exact():
    S = CovModel.diagonal([2.0, 3.0])
    assert G.true_cov(G.gaussian(S)) is S
    I = CovModel.identity(4)
    assert G.true_cov(G.student_t(5, I)) is I
    T = CovModel.diagonal([1.0, 1.0, 4.0])
    assert G.true_cov(G.pareto_radial(2.5, T)) is T
    assert G.true_cov(G.scalar_t(3, 0.5)).trace == 0.5


def test_heavy_tail_witness():
    x = G.draw_many(G.student_t(3, CovModel.identity(2)), make_generator(6), 10 ** 6)[:, 0]
    var = x.var()
    assert np.mean((x - x.mean()) ** 4) >= 2 * 3 * var ** 2


def test_parameter_guards():
    with pytest.raises(InputError):
        G.student_t(2.0, CovModel.identity(2))
    with pytest.raises(InputError):
        G.pareto_radial(2.0, CovModel.identity(2))
    with pytest.raises(InputError):
        G.pareto_radial(4.5, CovModel.identity(2))
    with pytest.raises(InputError):
        G.scalar_t(1.5, 1.0)


@pytest.mark.parametrize("h", [
    G.gaussian(CovModel.diagonal([1.0, 2.0])),
    G.student_t(3, CovModel.identity(3)),
    G.pareto_radial(2.5, CovModel.full([[2.0, 1.0], [1.0, 2.0]])),
    G.scalar_t(4, 1.5),
    G.point_mass([0.5, -1.0]),
])
def test_determinism_and_config_roundtrip(h):
    a = G.draw_many(h, make_generator(9, 2), 50)
    b = G.draw_many(h, make_generator(9, 2), 50)
    np.testing.assert_array_equal(a, b)
    h2 = G.parse_handle(G.describe(h))
    assert h2 == h
    np.testing.assert_array_equal(G.draw_many(h2, make_generator(9, 2), 50), a)


def test_parse_examples():
    h = G.parse_handle("kind=student_t, nu=3.0, cov=diag:[1,1,4]")
    assert h.kind == "student_t" and h.nu == 3.0
    np.testing.assert_array_equal(h.cov.entries, [1.0, 1.0, 4.0])
    assert G.parse_handle("kind=gaussian, cov=iso:0.5:3").cov.trace == 1.5
    for bad in ("kind=foo", "kind=student_t, cov=identity:2", "kind=gaussian, cov=diag:[1,-1]", "nonsense"):
        with pytest.raises(ConfigError):
            G.parse_handle(bad)
