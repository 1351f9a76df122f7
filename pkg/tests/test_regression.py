import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddpce.basis import build_basis
from ddpce.errors import (
    ConfigurationError,
    IllConditionedDesignError,
    NumericRangeError,
    UnderdeterminedSystemError,
)
from ddpce.regression import (
    CLS,
    OLS,
    Scheme,
    assemble_design,
    christoffel,
    fit,
    gram,
    load_fit,
    normal_equations_solve,
    save_fit,
    sparse_fit,
    stability_score,
    weights,
)
from ddpce.sampling import InputSpec, draw_samples


def leverage_oracle(psi):
    """M times the hat-matrix diagonal, from an SVD (independent of the Cholesky route)."""
    u, _, _ = np.linalg.svd(psi, full_matrices=False)
    return psi.shape[0] * np.sum(u * u, axis=1)


@pytest.fixture
def pce_design():
    spec = InputSpec(("uniform(0.8, 1.2)", "discrete_range(0, 23)", "discrete_range(2, 8)"))
    s = draw_samples(spec, 200, 1)
    basis = build_basis(s, 3)
    return basis, s, assemble_design(basis, s)


def random_design(rng, m, n):
    psi = rng.normal(size=(m, n))
    psi[:, 0] = 1.0
    return psi


def test_design_single_row_and_constant_column(pce_design):
    basis, s, psi = pce_design
    assert np.all(psi[:, 0] == 1.0)
    one = assemble_design(basis, s.x[:1])
    assert np.array_equal(one[0], basis.evaluate(s.x[:1])[0])


def test_design_three_point():
    x = np.array([[-1.0], [0.0], [1.0]])
    psi = assemble_design(build_basis(x, 2), x)
    np.testing.assert_allclose(psi.T @ psi / 3, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(gram(psi), np.eye(3), atol=1e-12)


def test_design_dimension_mismatch(pce_design):
    basis, _, _ = pce_design
    with pytest.raises(ConfigurationError):
        assemble_design(basis, np.zeros((3, 2)))


def test_gram_examples(rng):
    assert gram(np.array([[1.0]])).tolist() == [[1.0]]
    psi = random_design(rng, 30, 4)
    assert np.array_equal(gram(psi, np.ones(30)), gram(psi))
    g = gram(psi, rng.uniform(0.1, 2, 30))
    assert np.array_equal(g, g.T)


def test_christoffel_identity_gram():
    # columns orthonormal under (1/M) sum: scaled Hadamard rows
    psi = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], float)[:, :3]
    diag = christoffel(psi)
    np.testing.assert_allclose(diag.K, np.sum(psi**2, axis=1), rtol=1e-14)


def test_christoffel_matches_svd_oracle(rng):
    psi = random_design(rng, 120, 7)
    diag = christoffel(psi)
    np.testing.assert_allclose(diag.K, leverage_oracle(psi), rtol=1e-10)
    assert diag.K.sum() == pytest.approx(120 * 7, rel=1e-8)
    assert diag.kappa >= 7
    assert diag.kappa == diag.K.max()


def test_weighted_christoffel_trace(rng):
    psi = random_design(rng, 80, 5)
    w = rng.uniform(0.2, 3, 80)
    w *= 80 / w.sum()
    d = christoffel(psi, w)
    assert d.K.sum() == pytest.approx(80 * 5, rel=1e-8)
    np.testing.assert_allclose(d.K, leverage_oracle(psi * np.sqrt(w)[:, None]), rtol=1e-10)


def test_score_example():
    assert stability_score(100, 5.0) == pytest.approx(4.342944819, rel=1e-9)
    assert stability_score(1, 3.0) == math.inf


def test_christoffel_rank_deficient():
    psi = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
    with pytest.raises(IllConditionedDesignError) as err:
        christoffel(psi)
    assert "lower the degree" in str(err.value)


def test_weight_examples():
    K = np.array([2.0, 1.0])
    assert weights(K, Scheme.tempered(0)).w.tolist() == [1.0, 1.0]
    np.testing.assert_allclose(weights(K, Scheme.tempered(1)).w, [4 / 3, 2 / 3], rtol=1e-15)
    np.testing.assert_allclose(weights(K, CLS).w, [2 / 3, 4 / 3], rtol=1e-15)
    assert weights(K, "ols").w.tolist() == [1.0, 1.0]


def test_weight_scheme_limits_bitwise(rng):
    K = rng.uniform(1, 60, 200)
    assert np.array_equal(weights(K, Scheme.tempered(-1)).w, weights(K, CLS).w)
    assert np.array_equal(weights(K, Scheme.tempered(0)).w, weights(K, OLS).w)


@settings(max_examples=80, deadline=None)
@given(st.floats(-4, 4), st.integers(2, 400), st.integers(0, 2**31))
def test_weight_normalization(alpha, m, seed):
    K = np.random.default_rng(seed).uniform(0.5, 80, m)
    w = weights(K, Scheme.tempered(alpha)).w
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(m, rel=1e-12)


def test_weight_numeric_range():
    with pytest.raises(NumericRangeError):
        weights(np.array([1.0, 2.0, 3.0]), Scheme.tempered(1e308))
    with pytest.raises(NumericRangeError):
        weights(np.array([1.0, 0.0]), OLS)


def test_scheme_parse():
    assert Scheme.parse("tempered(0.5)") == Scheme.tempered(0.5)
    assert Scheme.parse("tempered:-1").alpha == -1.0
    assert CLS.alpha == -1.0 and OLS.alpha == 0.0
    with pytest.raises(ConfigurationError):
        Scheme.parse("ridge")


@pytest.mark.parametrize("scheme", [OLS, CLS, Scheme.tempered(0.7), Scheme.tempered(-2.5), Scheme.tempered(1.5)])
def test_exact_recovery(pce_design, scheme):
    _, _, psi = pce_design
    c_star = np.random.default_rng(3).normal(size=psi.shape[1])
    res = fit(psi, psi @ c_star, scheme)
    np.testing.assert_allclose(res.coefficients, c_star, atol=1e-10)
    assert res.residual_rms < 1e-10


def test_constant_fit():
    res = fit(np.array([[1.0], [1.0]]), np.array([1.0, 3.0]), OLS)
    assert res.coefficients.tolist() == pytest.approx([2.0])


def test_qr_matches_normal_equations(rng):
    psi = random_design(rng, 200, 10)
    y = psi @ rng.normal(size=10) + 0.3 * rng.normal(size=200)
    for scheme in (OLS, CLS, Scheme.tempered(0.8)):
        res = fit(psi, y, scheme)
        ref = normal_equations_solve(psi, y, res.weights.w)
        np.testing.assert_allclose(res.coefficients, ref, rtol=1e-8, atol=1e-10)


def test_scheme_limits_identical_fit(pce_design):
    _, s, psi = pce_design
    y = np.sin(s.x[:, 1] / 4) * s.x[:, 2] + s.x[:, 0]
    assert np.array_equal(fit(psi, y, Scheme.tempered(0)).coefficients, fit(psi, y, OLS).coefficients)
    assert np.array_equal(fit(psi, y, Scheme.tempered(-1)).coefficients, fit(psi, y, CLS).coefficients)


def test_fit_diagnostics(pce_design):
    _, s, psi = pce_design
    y = s.x[:, 2] ** 2
    ols = fit(psi, y, OLS)
    cls = fit(psi, y, CLS)
    assert ols.diagnostics.score_lr == cls.diagnostics.score_lr
    assert ols.weighted_diagnostics.score_lr == pytest.approx(ols.diagnostics.score_lr)
    # inverse-Christoffel weighting lowers the coherence of the weighted system
    assert cls.weighted_diagnostics.kappa < ols.diagnostics.kappa
    assert len(ols.active_set) == psi.shape[1]


def test_fit_errors():
    with pytest.raises(UnderdeterminedSystemError):
        fit(np.ones((2, 3)), np.ones(2))
    psi = np.column_stack([np.ones(6), np.arange(6.0), np.arange(6.0)])
    with pytest.raises(IllConditionedDesignError):
        fit(psi, np.arange(6.0))
    with pytest.raises(ConfigurationError):
        fit(np.ones((3, 1)), np.ones(2))


def test_permutation_equivariance(pce_design):
    _, s, psi = pce_design
    y = np.cos(s.x[:, 1]) + s.x[:, 0] * s.x[:, 2]
    perm = np.random.default_rng(1).permutation(psi.shape[0])
    for scheme in (OLS, CLS, Scheme.tempered(1.3)):
        a, b = fit(psi, y, scheme), fit(psi[perm], y[perm], scheme)
        np.testing.assert_allclose(b.weights.w, a.weights.w[perm], rtol=1e-9)
        np.testing.assert_allclose(b.coefficients, a.coefficients, rtol=1e-8, atol=1e-9)


def test_sparse_recovers_planted(pce_design):
    _, _, psi = pce_design
    c = np.zeros(psi.shape[1])
    c[[0, 5, 13]] = [2.0, -1.5, 0.8]
    for scheme in (OLS, CLS, Scheme.tempered(0.5)):
        res = sparse_fit(psi, psi @ c, scheme, target_sparsity=3)
        assert sorted(res.active_set.tolist()) == [0, 5, 13]
        np.testing.assert_allclose(res.coefficients, c, atol=1e-8)


def test_sparse_full_equals_fit(pce_design):
    _, s, psi = pce_design
    y = np.exp(s.x[:, 0]) * s.x[:, 2]
    full = fit(psi, y, CLS)
    sp = sparse_fit(psi, y, CLS, target_sparsity=psi.shape[1])
    np.testing.assert_allclose(sp.coefficients, full.coefficients, rtol=1e-8, atol=1e-8)
    assert sorted(sp.active_set.tolist()) == list(range(psi.shape[1]))


def test_sparse_terminates_on_noise(rng):
    psi = random_design(rng, 40, 60)
    res = sparse_fit(psi, rng.normal(size=40), OLS, epsilon=0.0)
    assert 1 <= len(res.active_set) <= 40
    assert np.count_nonzero(res.coefficients) == len(res.active_set)


def test_sparse_underdetermined_planted(rng):
    psi = random_design(rng, 30, 80)
    c = np.zeros(80)
    c[[0, 7, 33]] = [1.0, 2.0, -3.0]
    res = sparse_fit(psi, psi @ c, OLS, epsilon=1e-12)
    np.testing.assert_allclose(res.coefficients, c, atol=1e-8)


def test_sparse_tie_break_lowest_index():
    psi = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    res = sparse_fit(psi, np.array([1.0, 1.0, 0.0]), OLS, target_sparsity=1)
    assert res.active_set.tolist() == [0]


def test_fit_round_trip(tmp_path, pce_design):
    _, s, psi = pce_design
    res = fit(psi, s.x[:, 1] ** 2, Scheme.tempered(0.5))
    save_fit(res, tmp_path / "fit.ini")
    back = load_fit(tmp_path / "fit.ini")
    assert np.array_equal(back.coefficients, res.coefficients)
    assert back.scheme == res.scheme
    assert back.diagnostics.score_lr == res.diagnostics.score_lr
    assert back.weighted_diagnostics.gram_condition == res.weighted_diagnostics.gram_condition
