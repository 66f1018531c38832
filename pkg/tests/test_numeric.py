import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from clipsgd.errors import DecompositionError, InputError
from clipsgd.numeric import ConvexSet, CovModel, make_generator, norm2, opnorm, project, spd_factor

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_norm2_examples():
    assert norm2([3.0, 4.0]) == 5.0
    assert norm2(np.zeros(7)) == 0.0
    assert norm2([1.0, 1.0, 1.0, 1.0]) == 2.0


def test_norm2_extreme_scales():
    assert norm2([3e200, 4e200]) == pytest.approx(5e200, rel=1e-15)
    assert norm2([3e-200, 4e-200]) == pytest.approx(5e-200, rel=1e-15)


def test_norm2_rejects_nonfinite():
    with pytest.raises(InputError):
        norm2([1.0, np.nan])
    with pytest.raises(InputError):
        norm2([np.inf])


def test_project_examples():
    np.testing.assert_array_equal(project(ConvexSet.unconstrained(), [5.0, -7.0]), [5.0, -7.0])
    np.testing.assert_allclose(project(ConvexSet.ball([0, 0], 1.0), [3.0, 4.0]), [0.6, 0.8], rtol=1e-15)
    np.testing.assert_array_equal(project(ConvexSet.box([0, 0], [1, 1]), [2.0, -1.0]), [1.0, 0.0])


def test_project_dimension_mismatch():
    with pytest.raises(InputError):
        project(ConvexSet.ball([0, 0, 0], 1.0), [1.0, 2.0])


def test_bad_sets():
    with pytest.raises(InputError):
        ConvexSet.ball([0.0], 0.0)
    with pytest.raises(InputError):
        ConvexSet.box([1.0], [0.0])


def _sets(d):
    rng = np.random.default_rng(d)
    c = rng.normal(size=d)
    lo = rng.normal(size=d)
    return [ConvexSet(), ConvexSet.ball(c, 0.7), ConvexSet.box(lo, lo + rng.uniform(0, 2, d))]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda d: st.tuples(arrays(np.float64, d, elements=finite),
                                                     arrays(np.float64, d, elements=finite))))
def test_project_nonexpansive_and_idempotent(xy):
    x, y = xy
    for s in _sets(x.size):
        px, py = project(s, x), project(s, y)
        assert norm2(px - py) <= norm2(x - y) * (1 + 1e-12) + 1e-12
        np.testing.assert_array_equal(project(s, px), px)
        assert s.contains(px)


def test_covmodel_diagonal():
    c = CovModel.diagonal([1.0, 5.0, 2.0])
    assert opnorm(c) == 5.0
    assert c.trace == 8.0
    assert c.trace == float(np.sum(c.entries)) and c.opnorm == float(np.max(c.entries))
    iso = CovModel.isotropic(0.25, 10)
    assert opnorm(iso) == 0.25
    assert iso.trace >= iso.opnorm and iso.trace <= 10 * iso.opnorm


def test_spd_factor_examples():
    np.testing.assert_array_equal(spd_factor(CovModel.identity(3)), np.eye(3))
    np.testing.assert_array_equal(spd_factor(CovModel.diagonal([4.0, 9.0])), np.diag([2.0, 3.0]))
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    L = spd_factor(CovModel.full(m))
    assert L[0, 1] == 0.0
    np.testing.assert_allclose(L @ L.T, m, rtol=1e-14)


def test_full_opnorm_matches_characteristic_polynomial():
    # eigenvalues of [[2,1],[1,2]] are 2 +- 1
    assert opnorm(CovModel.full([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("d", [2, 5, 20, 60])
def test_full_roundtrip_and_opnorm(d):
    rng = np.random.default_rng(d)
    Q = np.linalg.qr(rng.normal(size=(d, d)))[0]
    ev = rng.uniform(0.1, 3.0, d)
    ev[:2] = [4.0, 3.9999]  # tiny spectral gap
    M = (Q * ev) @ Q.T
    c = CovModel.full(M)
    L = c.factor
    assert np.linalg.norm(L @ L.T - c.full_matrix) <= 1e-10 * np.linalg.norm(c.full_matrix)
    assert c.opnorm == pytest.approx(4.0, rel=1e-10)
    assert c.lambda_min() == pytest.approx(ev.min(), abs=1e-8)
    assert c.trace >= c.opnorm


def test_factor_of_singular_psd():
    v = np.array([1.0, 2.0, 3.0])
    c = CovModel.full(np.outer(v, v))
    np.testing.assert_allclose(c.factor @ c.factor.T, np.outer(v, v), atol=1e-12)
    assert c.opnorm == pytest.approx(14.0, rel=1e-12)


def test_non_psd_rejected():
    with pytest.raises(DecompositionError):
        CovModel.full([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(InputError):
        CovModel.full([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(InputError):
        CovModel.diagonal([1.0, -1.0])


def test_generator_streams():
    a = make_generator(7, 3).standard_normal(5)
    b = make_generator(7, 3).standard_normal(5)
    c = make_generator(7, 4).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(InputError):
        make_generator(-1)
