"""Tests for the hindsight oracle, regret curves and bounds."""

import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_components
from vrmix.exceptions import InvalidInputError
from vrmix.models import FeedbackMode, OracleDomain, RegretLedger
from vrmix.regret import (
    export_ledger_csv,
    fit_growth_exponent,
    hindsight_oracle,
    ons_regret_bound,
    oracle_prefix_values,
    regret_curve,
    regret_envelope,
    restriction_excess_bound,
)

DELTA = np.array([[1.0, 0.0], [0.0, 1.0]])


class TestHindsightOracle:
    def test_closed_form_instance(self):
        T = 50
        losses = np.tile([1.0, 4.0], (T, 1))
        result = hindsight_oracle(DELTA, losses)
        assert result.certified
        assert_allclose(result.weights, [1 / 3, 2 / 3], atol=1e-3)
        assert result.value == pytest.approx(9.0 * T, rel=1e-3)

    def test_restricted_domain(self):
        losses = np.tile([1.0, 4.0], (10, 1))
        result = hindsight_oracle(DELTA, losses, OracleDomain.RESTRICTED, gamma=0.9)
        assert_allclose(result.weights, [0.1, 0.9], atol=1e-9)
        assert result.value == pytest.approx(10 * (1 / 0.1 + 4 / 0.9))

    def test_restricted_needs_gamma(self):
        with pytest.raises(InvalidInputError):
            hindsight_oracle(DELTA, np.ones((2, 2)), OracleDomain.RESTRICTED)

    def test_zero_losses(self):
        result = hindsight_oracle(DELTA, np.zeros((5, 2)))
        assert result.value == 0.0
        assert result.certified

    def test_accepts_component_sets(self, small_components, rng):
        losses = rng.uniform(0.1, 1.0, size=(20, small_components.n))
        result = hindsight_oracle(small_components, losses)
        assert result.certified
        assert result.weights.sum() == pytest.approx(1.0)
        # no vertex beats the optimum
        for j in range(small_components.k):
            q = small_components.p[j]
            assert result.value <= np.sum(losses.sum(axis=0) / q) * (1.0 + 1e-6)

    def test_input_validation(self):
        with pytest.raises(InvalidInputError):
            hindsight_oracle(DELTA, np.ones((3, 3)))
        with pytest.raises(InvalidInputError):
            hindsight_oracle(DELTA, -np.ones((3, 2)))

    def test_prefix_values_are_nondecreasing(self, rng):
        cs = random_components(5, 3, rng)
        losses = rng.uniform(0.1, 1.0, size=(40, 5))
        values = oracle_prefix_values(cs, losses, [5, 10, 20, 40])
        assert np.all(np.diff(values) > 0)
        with pytest.raises(InvalidInputError):
            oracle_prefix_values(cs, losses, [41])


class TestRegretCurve:
    def _ledger(self, costs, true=True):
        ledger = RegretLedger()
        for t, c in enumerate(costs, start=1):
            ledger.append(t, cost_est=c + 1.0, weights=np.array([0.5, 0.5]), cost_true=c if true else None)
        return ledger

    def test_uses_true_costs(self):
        ledger = self._ledger([1.0, 2.0, 3.0])
        assert_allclose(regret_curve(ledger, [0.5, 1.0, 1.5]), [0.5, 2.0, 4.5])

    def test_estimates_when_requested_or_missing(self):
        assert_allclose(regret_curve(self._ledger([1.0, 1.0]), [0.0, 0.0], use_estimates=True), [2.0, 4.0])
        assert_allclose(regret_curve(self._ledger([1.0, 1.0], true=False), [0.0, 0.0]), [2.0, 4.0])

    def test_prefix_points(self):
        ledger = self._ledger([1.0, 2.0, 3.0, 4.0])
        assert_allclose(regret_curve(ledger, [1.0, 5.0], t_points=[2, 4]), [2.0, 5.0])

    def test_length_mismatch(self):
        ledger = self._ledger([1.0, 2.0])
        with pytest.raises(InvalidInputError):
            regret_curve(ledger, [1.0])
        with pytest.raises(InvalidInputError):
            regret_curve(ledger, [1.0], t_points=[3])


class TestGrowthAndBounds:
    def test_fit_growth_exponent(self):
        T = np.array([1e3, 1e4, 1e5])
        assert fit_growth_exponent(T, 3.0 * T**0.8) == pytest.approx(0.8)

    def test_fit_needs_positive_pairs(self):
        with pytest.raises(InvalidInputError):
            fit_growth_exponent([10], [1.0])
        with pytest.raises(InvalidInputError):
            fit_growth_exponent([10, 100], [1.0, -1.0])

    def test_bounds(self):
        assert restriction_excess_bound(2.0, 0.1, 100) == pytest.approx(20.0)
        full = ons_regret_bound(10, 1.0, 3, 0.2, 1000)
        partial = ons_regret_bound(10, 1.0, 3, 0.2, 1000, c=2.0, mode=FeedbackMode.PARTIAL)
        assert 0 < full < partial
        assert regret_envelope(1.0, 2, 10**6) < regret_envelope(1.0, 2, 10**7)


def test_export_ledger_csv(tmp_path):
    ledger = RegretLedger()
    ledger.append(1, 0.5, np.array([0.25, 0.75]), cost_true=0.4)
    ledger.append(2, 0.6, np.array([0.3, 0.7]))
    path = export_ledger_csv(ledger, tmp_path / "nested" / "ledger.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "cost_est", "cost_true", "w_1", "w_2"]
    assert rows[1][:3] == ["1", "0.5", "0.4"]
    assert rows[2][2] == ""
