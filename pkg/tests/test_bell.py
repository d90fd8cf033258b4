"""Tests for Bell correlation, correlated-pair search and the random-state survey."""

from dataclasses import replace

import numpy as np
import pytest

from ccpnet.bell import (
    TSIRELSON_BOUND,
    BellConfiguration,
    bell_correlation,
    bell_survey,
    bell_verdict,
    chsh_value,
    find_correlated_projections,
    is_bell_correlated,
    orient_pair,
    reduced_correlation,
)
from ccpnet.commoncause import correlation
from ccpnet.errors import ConfigError, InvalidOperator, ProductState, SupportOverlap
from ccpnet.qprob import Projection, State, TensorSpace, commutes, random_state

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class TestChsh:
    def test_optimal_singlet_settings(self, singlet):
        y1 = -(SIGMA_Z + SIGMA_X) / np.sqrt(2)
        y2 = -(SIGMA_Z - SIGMA_X) / np.sqrt(2)
        config = BellConfiguration((0,), (1,), SIGMA_Z, SIGMA_X, y1, y2)
        assert chsh_value(singlet, config) == pytest.approx(np.sqrt(2))

    def test_configuration_validation(self):
        with pytest.raises(InvalidOperator):
            BellConfiguration((0,), (1,), 2 * SIGMA_Z, SIGMA_X, SIGMA_Z, SIGMA_X)
        with pytest.raises(SupportOverlap):
            BellConfiguration((0,), (0,), SIGMA_Z, SIGMA_X, SIGMA_Z, SIGMA_X)


class TestBellCorrelation:
    def test_singlet_reaches_tsirelson(self, singlet):
        value, config = bell_correlation(singlet, [0], [1])
        assert value == pytest.approx(TSIRELSON_BOUND, abs=1e-6)
        assert chsh_value(singlet, config) == pytest.approx(value, abs=1e-9)
        assert is_bell_correlated(singlet, [0], [1])

    def test_product_state_is_classical(self, product_pure):
        value, _ = bell_correlation(product_pure, [0], [1])
        assert value == pytest.approx(1.0, abs=1e-8)
        assert not is_bell_correlated(product_pure, [0], [1])

    def test_never_exceeds_tsirelson(self):
        space = TensorSpace.qubits(2)
        for seed in range(5):
            value, _ = bell_correlation(random_state(space, seed=seed, faithful=False), [0], [1], seed=seed)
            assert value <= TSIRELSON_BOUND + 1e-9

    def test_overlapping_sites(self, singlet):
        with pytest.raises(SupportOverlap):
            bell_correlation(singlet, [0], [0])

    def test_verdict_metadata(self, singlet):
        verdict = bell_verdict(singlet, [0], [1])
        assert verdict.correlated
        assert verdict.starts >= 1
        assert 1 <= verdict.converged_starts <= verdict.starts

    def test_seed_reproducibility(self):
        phi = random_state(TensorSpace.qubits(2), seed=4)
        first, _ = bell_correlation(phi, [0], [1], seed=9)
        second, _ = bell_correlation(phi, [0], [1], seed=9)
        assert first == second


class TestCorrelatedProjections:
    def test_reduced_correlation_of_product_vanishes(self, product_pure):
        reduction = reduced_correlation(product_pure, [0], [1])
        assert reduction.distance == pytest.approx(0.0, abs=1e-12)
        assert len(reduction.factors_1) == 0

    def test_singlet_pair(self, singlet):
        a, b = find_correlated_projections(singlet, [0], [1])
        assert commutes(a, b)
        assert correlation(singlet, a, b) > 0.2

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_random_states(self, seed):
        phi = random_state(TensorSpace((2, 3)), seed=seed)
        a, b = find_correlated_projections(phi, [0], [1])
        assert correlation(phi, a, b) > 0

    def test_product_state_rejected(self):
        space = TensorSpace.qubits(2)
        phi = State(space, np.kron(np.diag([0.3, 0.7]), np.diag([0.6, 0.4])))
        with pytest.raises(ProductState):
            find_correlated_projections(phi, [0], [1])

    def test_orient_pair(self, singlet):
        space = singlet.space
        up = np.diag([1, 0])
        a = Projection.local(space, up, [0])
        b = Projection.local(space, up, [1])
        assert correlation(singlet, a, b) < 0
        a2, b2 = orient_pair(singlet, a, b)
        assert correlation(singlet, a2, b2) > 0


class TestSurvey:
    def test_entangled_sampling(self):
        result = bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=12, seed=5)
        assert len(result.rows) == 12
        assert result.fraction > 0.5
        assert all(v <= TSIRELSON_BOUND + 1e-9 for v in result.values)

    def test_separable_sampling(self):
        result = bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=6, seed=5, separable=True)
        assert result.fraction == 0.0

    def test_reproducible(self):
        first = bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=4, seed=2)
        second = bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=4, seed=2)
        assert first == second

    def test_rejects_empty_survey(self):
        with pytest.raises(ConfigError):
            bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=0, seed=1)


def flip_one_sign(h: np.ndarray, index: int) -> np.ndarray:
    values, vectors = np.linalg.eigh(h)
    values[index] = -values[index]
    return (vectors * values) @ vectors.conj().T


class TestSeesawBehaviour:
    def test_singlet_reaches_tsirelson_quickly(self, singlet):
        verdict = bell_verdict(singlet, [0], [1])
        assert verdict.history
        assert max(verdict.history[:51]) >= TSIRELSON_BOUND - 1e-6
        assert verdict.iterations <= 50

    @pytest.mark.parametrize("seed", range(10))
    def test_history_never_decreases(self, seed):
        phi = random_state(TensorSpace((2, 3)), seed=seed, faithful=False)
        verdict = bell_verdict(phi, [0], [1], seed=seed)
        assert len(verdict.history) == verdict.iterations + 1
        assert np.all(np.diff(verdict.history) >= -1e-12)
        assert verdict.history[-1] <= verdict.value + 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_single_sign_flip_does_not_improve(self, seed):
        phi = random_state(TensorSpace.qubits(2), seed=seed, faithful=False)
        verdict = bell_verdict(phi, [0], [1], seed=seed)
        config = verdict.configuration
        assert config is not None
        assert chsh_value(phi, config) == pytest.approx(verdict.value, abs=1e-9)
        for name in ("X1", "X2", "Y1", "Y2"):
            for index in range(2):
                flipped = replace(config, **{name: flip_one_sign(getattr(config, name), index)})
                assert chsh_value(phi, flipped) <= verdict.value + 1e-6

    def test_correlated_pairs_on_many_random_states(self):
        space = TensorSpace.qubits(2)
        for seed in range(200):
            phi = random_state(space, seed=seed)
            a, b = find_correlated_projections(phi, [0], [1], seed=seed)
            assert commutes(a, b)
            assert correlation(phi, a, b) > 0, seed


@pytest.mark.slow
def test_survey_of_five_hundred_states_is_reproducible():
    first = bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=500, seed=2024)
    second = bell_survey(TensorSpace.qubits(2), [0], [1], n_samples=500, seed=2024)
    assert first.rows == second.rows
    assert first.fraction == second.fraction
    assert 0.5 < first.fraction <= 1.0
