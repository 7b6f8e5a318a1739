"""Shapley attribution: axioms, closed forms, sampling estimator."""

from __future__ import annotations

import numpy as np
import pytest

from bedtwin.core import FEATURE_NAMES, DomainError
from bedtwin.gbm import TrainParams, fit, predict_batch
from bedtwin.sensitivity import (
    Attribution,
    default_background,
    global_importance,
    shap_exact,
    shap_sampled,
)


def linear_model(coef):
    coef = np.asarray(coef, dtype=np.float64)
    return lambda X: np.asarray(X) @ coef


class TestShapExactClosedForms:
    def test_constant_model_all_zeros(self):
        f = lambda X: np.full(len(X), 9.25)
        at = shap_exact(f, np.ones(13), np.zeros((3, 13)))
        assert at.phi == (0.0,) * 13
        assert at.base_value == 9.25
        assert at.prediction == 9.25

    def test_linear_model_closed_form(self):
        # Interventional SHAP of a linear model: phi_i = a_i (x_i - bg_i).
        coef = np.zeros(13)
        coef[0], coef[1] = 2.0, 5.0
        x = np.zeros(13)
        x[0] = x[1] = 1.0
        at = shap_exact(linear_model(coef), x, np.zeros((4, 13)))
        assert at.phi[0] == pytest.approx(2.0, abs=1e-12)
        assert at.phi[1] == pytest.approx(5.0, abs=1e-12)
        assert all(p == 0.0 for p in at.phi[2:])

    def test_product_model_hand_enumeration(self):
        # f = x0*x1, x = (1,1), background (0,0). The four subsets give
        # v(empty)=0, v({0})=0, v({1})=0, v(full)=1, so phi0 = phi1 = 1/2.
        f = lambda X: X[:, 0] * X[:, 1]
        at = shap_exact(f, np.array([1.0, 1.0]), np.array([[0.0, 0.0]]))
        assert at.phi == (0.5, 0.5)

    def test_dimension_guard(self):
        f = lambda X: X.sum(axis=1)
        with pytest.raises(DomainError, match="shap_sampled"):
            shap_exact(f, np.zeros(21), np.zeros((2, 21)))

    def test_empty_background_rejected(self):
        f = lambda X: X.sum(axis=1)
        with pytest.raises(DomainError, match="background"):
            shap_exact(f, np.zeros(5), [])


class TestAxioms:
    @staticmethod
    def surrogate_case(seed=0, n_trees=60):
        rng = np.random.default_rng(seed)
        X = rng.uniform(0.0, 40.0, (200, 13))
        y = 2.0 * X[:, 0] + 0.4 * X[:, 11] * X[:, 6] + rng.normal(0.0, 2.0, 200)
        model = fit(X, y, TrainParams(n_trees=n_trees))
        return X, (lambda Q: predict_batch(model, Q))

    def test_efficiency_within_1e9(self):
        X, f = self.surrogate_case()
        bg = default_background(X, 32, seed=1)
        for row in (0, 17, 105):
            at = shap_exact(f, X[row], bg)
            assert abs(sum(at.phi) - (at.prediction - at.base_value)) < 1e-9

    def test_dummy_feature_exactly_zero(self):
        # Model output never depends on features 2..12, so their
        # evaluations are bitwise equal and the phis are exactly zero.
        f = lambda X: 3.0 * X[:, 0] - X[:, 1] ** 2
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 10, 13)
        bg = rng.uniform(0, 10, (16, 13))
        at = shap_exact(f, x, bg)
        assert all(at.phi[i] == 0.0 for i in range(2, 13))

    def test_symmetry_for_interchangeable_features(self):
        f = lambda X: (X[:, 3] + X[:, 4]) ** 2
        x = np.zeros(13)
        x[3] = x[4] = 2.0
        bg = np.zeros((8, 13))
        bg[:, 3] = bg[:, 4] = np.linspace(0, 1, 8)
        at = shap_exact(f, x, bg)
        assert at.phi[3] == pytest.approx(at.phi[4], abs=1e-9)


class TestShapSampled:
    def test_exhaustive_permutations_match_exact(self):
        # Seed 13 makes the 6 drawn permutations exactly the 6 distinct
        # orderings of 3 features, so the estimator IS the exact value.
        rng = np.random.default_rng(13)
        drawn = {tuple(rng.permutation(3)) for _ in range(6)}
        assert len(drawn) == 6

        f = lambda X: 3.0 * X[:, 0] + X[:, 0] * X[:, 1] - 2.0 * X[:, 2] ** 2
        x = np.array([1.0, 2.0, 0.5])
        bg = np.random.default_rng(0).normal(0.0, 1.0, (8, 3))
        exact = shap_exact(f, x, bg)
        sampled = shap_sampled(f, x, bg, n_permutations=6, seed=13)
        assert sampled.phi == pytest.approx(exact.phi, abs=1e-9)

    def test_constant_model_zeros_any_n(self):
        f = lambda X: np.full(len(X), 4.0)
        for n in (1, 7):
            at = shap_sampled(f, np.ones(13), np.zeros((2, 13)), n, seed=2)
            assert at.phi == (0.0,) * 13

    def test_efficiency_by_construction(self):
        X, f = TestAxioms.surrogate_case(seed=1, n_trees=40)
        bg = default_background(X, 16, seed=0)
        at = shap_sampled(f, X[3], bg, n_permutations=25, seed=9)
        assert abs(sum(at.phi) - (at.prediction - at.base_value)) < 1e-9

    def test_deterministic_given_seed(self):
        X, f = TestAxioms.surrogate_case(seed=2, n_trees=30)
        bg = default_background(X, 16, seed=0)
        a = shap_sampled(f, X[0], bg, n_permutations=50, seed=4)
        b = shap_sampled(f, X[0], bg, n_permutations=50, seed=4)
        assert a == b

    def test_error_shrinks_with_more_permutations(self):
        # Monte-Carlo error scales like 1/sqrt(n); averaging over seeds
        # makes the 4-vs-1000 comparison statistically safe.
        X, f = TestAxioms.surrogate_case(seed=3, n_trees=40)
        bg = default_background(X, 16, seed=0)
        exact = shap_exact(f, X[11], bg)

        def mean_err(n, seed):
            s = shap_sampled(f, X[11], bg, n_permutations=n, seed=seed)
            return np.mean([abs(a - b) for a, b in zip(exact.phi, s.phi)])

        coarse = np.mean([mean_err(4, s) for s in range(5)])
        fine = np.mean([mean_err(1000, s) for s in range(5)])
        assert fine < coarse

    def test_bad_n_rejected(self):
        f = lambda X: X.sum(axis=1)
        with pytest.raises(DomainError, match="n_permutations"):
            shap_sampled(f, np.zeros(3), np.zeros((1, 3)), 0)


class TestGlobalImportance:
    def test_single_attribution(self):
        phi = [0.0] * 13
        phi[1] = -2.0
        phi[0] = 1.0
        at = Attribution(phi=tuple(phi), base_value=0.0, prediction=-1.0)
        gi = global_importance([at])
        assert gi.mean_abs_phi[0] == 1.0
        assert gi.mean_abs_phi[1] == 2.0
        assert gi.ranking[0] == 1

    def test_absolute_value_before_averaging(self):
        a = Attribution(phi=(1.0,) + (0.0,) * 12, base_value=0.0, prediction=1.0)
        b = Attribution(phi=(-1.0,) + (0.0,) * 12, base_value=0.0, prediction=-1.0)
        gi = global_importance([a, b])
        assert gi.mean_abs_phi[0] == 1.0

    def test_ties_break_by_ascending_index(self):
        at = Attribution(phi=(0.0,) * 13, base_value=0.0, prediction=0.0)
        gi = global_importance([at])
        assert gi.ranking == tuple(range(13))

    def test_empty_rejected(self):
        with pytest.raises(DomainError, match="non-empty"):
            global_importance([])

    def test_json_uses_feature_names(self):
        at = Attribution(phi=tuple(float(i) for i in range(13)),
                         base_value=1.0, prediction=79.0)
        d = at.to_dict()
        assert d["phi"]["day_discharges"] == 0.0
        gi = global_importance([at]).to_dict()
        assert gi["ranking"][0] == FEATURE_NAMES[12]


class TestDefaultBackground:
    def test_small_source_returned_whole(self):
        X = np.arange(20.0).reshape(4, 5)
        bg = default_background(X, size=64)
        assert np.array_equal(bg, X)

    def test_large_source_sampled_without_replacement(self):
        X = np.arange(500.0)[:, None] * np.ones(13)
        bg = default_background(X, size=64, seed=3)
        assert bg.shape == (64, 13)
        assert len(np.unique(bg[:, 0])) == 64

    def test_seeded(self):
        X = np.random.default_rng(0).uniform(0, 1, (200, 13))
        assert np.array_equal(default_background(X, 64, seed=5),
                              default_background(X, 64, seed=5))
