import itertools
import math

import numpy as np
import pytest

from icbt.bradley_terry import bt_pairwise_probabilities, fit_bt_mle
from icbt.data import ComparisonDataset
from icbt.errors import DataError
from icbt.model import transitive_bridge

from conftest import random_state, round_robin_dataset


def two_object_data():
    return ComparisonDataset.from_comparisons(
        [("a", "b"), ("a", "b"), ("a", "b"), ("b", "a")]
    )


def balanced_round_robin(n=4, games=2):
    labels = [f"x{i}" for i in range(n)]
    comparisons = []
    for i, j in itertools.combinations(range(n), 2):
        for _ in range(games):
            comparisons.append((labels[i], labels[j]))
            comparisons.append((labels[j], labels[i]))
    return ComparisonDataset.from_comparisons(comparisons)


class TestFit:
    def test_two_object_closed_form(self):
        fit = fit_bt_mle(two_object_data(), ridge=0.0)
        assert fit.converged
        # winner of 3 in 4 sits log(3) above the loser
        gap = fit.skills[0] - fit.skills[1]  # reference "a" first
        assert gap == pytest.approx(math.log(3.0), abs=1e-8)
        assert fit.skills[0] == 0.0

    def test_balanced_round_robin_all_zero(self):
        fit = fit_bt_mle(balanced_round_robin())
        assert fit.converged
        assert np.max(np.abs(fit.skills)) < 1e-6

    def test_beats_flat_skills(self, rng):
        for _ in range(5):
            truth = random_state(rng, n=5, k_max=0)
            data = round_robin_dataset(rng, truth, m=4)
            fit = fit_bt_mle(data)
            flat = ComparisonDataset.from_comparisons
            zero_ll = float(np.sum(data.totals) * math.log(0.5))
            assert fit.loglik >= zero_ll

    def test_gradient_small_at_optimum(self, rng):
        truth = random_state(rng, n=6, k_max=0)
        data = round_robin_dataset(rng, truth, m=5)
        fit = fit_bt_mle(data, ridge=1e-6, tol=1e-10)
        assert fit.converged
        # numerical gradient of the penalised log likelihood at the optimum
        from icbt.bradley_terry import _loglik

        eps = 1e-6
        for i in range(1, 6):
            up = fit.skills.copy()
            up[i] += eps
            down = fit.skills.copy()
            down[i] -= eps
            grad = (
                _loglik(data.pair_i, data.pair_j, data.wins, data.totals, up, 1e-6)
                - _loglik(data.pair_i, data.pair_j, data.wins, data.totals, down, 1e-6)
            ) / (2 * eps)
            assert abs(grad) < 1e-4

    def test_empty_data_returns_zeros(self):
        data = ComparisonDataset.from_comparisons([], objects=["a", "b", "c"])
        fit = fit_bt_mle(data)
        assert fit.converged
        assert np.all(fit.skills == 0.0)

    def test_ridge_zero_requires_connected_graph(self):
        data = ComparisonDataset.from_comparisons([("a", "b"), ("c", "d"), ("b", "c")])
        sparse = data.subset(np.array([0, 1]))  # drops the b-c bridge games
        with pytest.raises(DataError):
            fit_bt_mle(sparse, ridge=0.0)
        fit = fit_bt_mle(sparse, ridge=1e-4)  # penalised fit still fine
        assert np.all(np.isfinite(fit.skills))

    def test_negative_ridge_rejected(self):
        with pytest.raises(ValueError):
            fit_bt_mle(two_object_data(), ridge=-1.0)


class TestPairwiseProbabilities:
    def test_equal_skills_everywhere_half(self):
        fit = fit_bt_mle(balanced_round_robin())
        p = bt_pairwise_probabilities(fit)
        off = ~np.eye(4, dtype=bool)
        assert np.max(np.abs(p[off] - 0.5)) < 1e-6

    def test_complement(self, rng):
        truth = random_state(rng, n=5, k_max=0)
        data = round_robin_dataset(rng, truth, m=3)
        p = bt_pairwise_probabilities(fit_bt_mle(data))
        off = ~np.eye(5, dtype=bool)
        assert np.max(np.abs((p + p.T)[off] - 1.0)) < 1e-12

    def test_two_object_matches_empirical_rate(self):
        fit = fit_bt_mle(two_object_data(), ridge=0.0)
        p = bt_pairwise_probabilities(fit)
        assert p[0, 1] == pytest.approx(0.75, abs=1e-8)

    def test_reference_change_shifts_skills_not_probabilities(self, rng):
        truth = random_state(rng, n=5, k_max=0)
        data = round_robin_dataset(rng, truth, m=6)
        labels = data.objects.labels
        comparisons = [
            (labels[w], labels[l]) for w, l in zip(data.winners.tolist(), data.losers.tolist())
        ]
        other = ComparisonDataset.from_comparisons(comparisons, reference=labels[3])
        fit_a = fit_bt_mle(data, tol=1e-12)
        fit_b = fit_bt_mle(other, tol=1e-12)
        pa = bt_pairwise_probabilities(fit_a)
        pb = bt_pairwise_probabilities(fit_b)
        # align object order before comparing
        order = [other.objects.position(x) for x in labels]
        pb_aligned = pb[np.ix_(order, order)]
        off = ~np.eye(5, dtype=bool)
        assert np.max(np.abs(pa[off] - pb_aligned[off])) < 1e-8
        shift = fit_b.skills[order] - fit_a.skills
        assert np.max(np.abs(shift - shift.mean())) < 1e-6

    def test_bridge_identity_on_all_triples(self, rng):
        truth = random_state(rng, n=6, k_max=0)
        data = round_robin_dataset(rng, truth, m=4)
        p = bt_pairwise_probabilities(fit_bt_mle(data))
        for i, j, k in itertools.permutations(range(6), 3):
            assert p[i, k] == pytest.approx(transitive_bridge(p[i, j], p[j, k]), abs=1e-10)
