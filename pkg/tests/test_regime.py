import json

import numpy as np
import pytest

from smcal.data import Dataset, Propensity, contrast_weights
from smcal.exceptions import ValidationError
from smcal.regime import (
    Regime,
    ValueEstimate,
    bootstrap_value,
    bootstrap_value_diff,
    decide,
    fit_threshold,
    ipw_value,
    threshold_candidates,
)


def dataset_from(y, a, x):
    return Dataset(y=np.asarray(y, float), a=np.asarray(a, float), x=np.asarray(x, float))


def brute_threshold(scores, w):
    candidates = threshold_candidates(scores)
    best_c, best_val = None, -np.inf
    for c in candidates:
        val = sum(wi for si, wi in zip(scores, w) if si > c)
        if val > best_val:  # strict: keeps the smallest candidate on ties
            best_c, best_val = c, val
    return best_c


class TestFitThreshold:
    def test_all_positive_weights_treats_everyone(self):
        data = dataset_from([1, 2, 3], [1, 0, 1], [[0.1], [0.5], [0.9]])
        w = np.array([0.5, 1.0, 2.0])
        beta = np.array([1.0])
        c = fit_threshold(data, w, beta)
        scores = data.x @ beta
        assert c == pytest.approx(scores.min() - 1.0)
        assert np.all(scores > c)

    def test_all_negative_weights_treats_no_one(self):
        data = dataset_from([1, 2, 3], [1, 0, 1], [[0.1], [0.5], [0.9]])
        w = np.array([-0.5, -1.0, -2.0])
        c = fit_threshold(data, w, np.array([1.0]))
        scores = data.x @ np.array([1.0])
        assert c == pytest.approx(scores.max() + 1.0)
        assert not np.any(scores > c)

    def test_split_between_positive_and_negative(self):
        # ascending scores carry w = (-2, -1, 1, 2): optimum cuts between
        # the 2nd and 3rd score
        data = dataset_from([0, 0, 0, 0], [0, 1, 0, 1], [[1.0], [2.0], [3.0], [4.0]])
        w = np.array([-2.0, -1.0, 1.0, 2.0])
        c = fit_threshold(data, w, np.array([1.0]))
        assert c == pytest.approx(2.5)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_matches_brute_force_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = 30
        data = dataset_from(
            rng.standard_normal(n), rng.integers(0, 2, n), rng.standard_normal((n, 3))
        )
        w = rng.standard_normal(n)
        beta = rng.standard_normal(3)
        assert fit_threshold(data, w, beta) == pytest.approx(
            brute_threshold(data.x @ beta, w)
        )

    def test_returned_candidate_maximizes_objective(self):
        rng = np.random.default_rng(9)
        n = 50
        data = dataset_from(
            rng.standard_normal(n), rng.integers(0, 2, n), rng.standard_normal((n, 2))
        )
        w = rng.standard_normal(n)
        beta = np.array([1.0, -0.5])
        scores = data.x @ beta
        c = fit_threshold(data, w, beta)
        val_at = lambda cc: float(np.sum(w[scores > cc]))
        for cand in threshold_candidates(scores):
            assert val_at(c) >= val_at(cand) - 1e-12

    def test_accepts_contrast_weights_object(self):
        data = dataset_from([3.0, 1.0], [1, 0], [[1.0], [0.0]])
        w = contrast_weights(data, Propensity.constant(0.5))
        c = fit_threshold(data, w, np.array([1.0]))
        assert np.isfinite(c)


class TestDecide:
    def test_boundary_is_not_treated(self):
        regime = Regime(beta=np.array([1.0, 0.0]), c=0.5)
        assert decide(regime, np.array([0.5, 3.0])) == 0

    def test_simple_positive_case(self):
        regime = Regime(beta=np.array([1.0, 0.0]), c=0.0)
        assert decide(regime, np.array([0.5, -9.0])) == 1

    def test_batch_agrees_with_scalar_loop(self, rng):
        regime = Regime(beta=rng.standard_normal(4), c=0.3)
        x = rng.standard_normal((25, 4))
        batch = decide(regime, x)
        scalar = [decide(regime, row) for row in x]
        assert batch.tolist() == scalar

    def test_positive_rescaling_invariance(self, rng):
        beta = rng.standard_normal(3)
        x = rng.standard_normal((40, 3))
        base = decide(Regime(beta=beta, c=0.2), x)
        for k in (2.0, 0.001, 555.0):
            assert np.array_equal(decide(Regime(beta=k * beta, c=k * 0.2), x), base)

    def test_dimension_mismatch(self):
        regime = Regime(beta=np.array([1.0, 2.0]), c=0.0)
        with pytest.raises(ValidationError):
            decide(regime, np.array([1.0, 2.0, 3.0]))


class TestIpwValue:
    def test_regime_matching_every_treatment(self, rng):
        n = 30
        x = rng.standard_normal((n, 2))
        beta = np.array([1.0, -0.4])
        c = 0.1
        a = (x @ beta > c).astype(float)
        if a.sum() in (0, n):  # ensure both arms appear for this seed
            a[0] = 1.0 - a[0]
            x[0] = x[0] + 100.0 * np.sign(a[0] - 0.5) * beta
            a[0] = float(x[0] @ beta > c)
        y = rng.standard_normal(n) + 2.0
        data = dataset_from(y, a, x)
        value = ipw_value(data, Propensity.constant(0.5), Regime(beta=beta, c=c))
        assert value == pytest.approx(2.0 * np.mean(y), rel=1e-12)

    def test_regime_disagreeing_everywhere_is_zero(self, rng):
        n = 20
        x = rng.standard_normal((n, 2))
        beta = np.array([1.0, 0.0])
        a = (x @ beta <= 0.0).astype(float)  # always the opposite decision
        y = rng.standard_normal(n)
        data = dataset_from(y, a, x)
        assert ipw_value(data, Propensity.constant(0.5), Regime(beta=beta, c=0.0)) == 0.0

    def test_matches_hand_loop(self, rng):
        n = 20
        data = dataset_from(
            rng.standard_normal(n), rng.integers(0, 2, n), rng.standard_normal((n, 3))
        )
        pi = rng.uniform(0.2, 0.8, n)
        regime = Regime(beta=rng.standard_normal(3), c=0.0)
        total = 0.0
        for i in range(n):
            dec = 1 if data.x[i] @ regime.beta > regime.c else 0
            if data.a[i] == dec:
                denom = pi[i] if data.a[i] == 1 else 1.0 - pi[i]
                total += data.y[i] / denom
        expected = total / n
        assert ipw_value(data, Propensity.vector(pi), regime) == pytest.approx(
            expected, abs=1e-12
        )


class TestBootstrap:
    def make_data(self, seed=0, n=60):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1, 1, (n, 2))
        a = rng.integers(0, 2, n).astype(float)
        y = 0.5 * a + rng.standard_normal(n)
        return dataset_from(y, a, x)

    def test_identical_regimes_give_zero_diff(self):
        data = self.make_data()
        regime = Regime(beta=np.array([1.0, 0.0]), c=0.0)
        est = bootstrap_value_diff(
            data, Propensity.constant(0.5), regime, regime, n_boot=50, seed=1
        )
        assert est.value == 0.0
        assert est.ci_low == 0.0
        assert est.ci_high == 0.0

    def test_seeded_determinism(self):
        data = self.make_data(seed=1)
        treat_all = Regime(beta=np.array([1.0, 0.0]), c=-10.0)
        treat_none = Regime(beta=np.array([1.0, 0.0]), c=10.0)
        kwargs = dict(n_boot=100, boot_size=40, seed=42)
        e1 = bootstrap_value_diff(data, Propensity.constant(0.5), treat_all, treat_none, **kwargs)
        e2 = bootstrap_value_diff(data, Propensity.constant(0.5), treat_all, treat_none, **kwargs)
        assert e1 == e2

    def test_boot_size_defaults_to_n(self):
        data = self.make_data(seed=2, n=30)
        regime = Regime(beta=np.array([1.0, 0.0]), c=-10.0)
        est = bootstrap_value(data, Propensity.constant(0.5), regime, n_boot=25, seed=0)
        assert est.boot_size == 30
        assert est.n_boot == 25
        assert est.ci_low <= est.ci_high

    def test_n_boot_must_be_at_least_two(self):
        data = self.make_data()
        regime = Regime(beta=np.array([1.0, 0.0]), c=0.0)
        with pytest.raises(ValidationError):
            bootstrap_value(data, Propensity.constant(0.5), regime, n_boot=1)


class TestRegimeSerialization:
    def test_json_round_trip(self, tmp_path):
        regime = Regime(beta=np.array([1.0, -0.25, 0.0]), c=0.125, alpha=3.5, lam=0.01)
        path = tmp_path / "regime.json"
        regime.save(path)
        payload = json.loads(path.read_text())
        assert set(payload) == {"beta", "c", "alpha", "lambda"}
        back = Regime.load(path)
        assert np.array_equal(back.beta, regime.beta)
        assert back.c == regime.c
        assert back.alpha == regime.alpha
        assert back.lam == regime.lam

    def test_optional_tuning_fields(self, tmp_path):
        regime = Regime(beta=np.array([1.0]), c=0.0)
        path = tmp_path / "regime.json"
        regime.save(path)
        back = Regime.load(path)
        assert back.alpha is None and back.lam is None

    def test_malformed_payload(self):
        with pytest.raises(ValidationError):
            Regime.from_dict({"beta": [1.0]})

    def test_value_estimate_ordering_enforced(self):
        with pytest.raises(ValidationError):
            ValueEstimate(value=0.0, ci_low=1.0, ci_high=0.0, n_boot=10, boot_size=10)
