import itertools
import math

import numpy as np
import pytest
from scipy.special import gammaln

from icbt.priors import (
    Hyperparameters,
    log_dma_intransitivity,
    log_dma_skill,
    log_posterior_unnorm,
    log_prior_A,
    log_prior_joint,
    log_prior_K,
    log_prior_phi,
    log_prior_theta,
)
from icbt.model import log_likelihood
from icbt.data import ComparisonDataset

from conftest import empty_dataset, make_state, random_state, round_robin_dataset


class TestDmaIntransitivity:
    def test_k_zero_single_cluster(self):
        assert log_dma_intransitivity(np.zeros(7, dtype=int), 1.0, 0) == pytest.approx(0.0, abs=1e-12)
        assert log_dma_intransitivity(
            np.zeros(7, dtype=int), 1.0, 0, include_coefficient=False
        ) == pytest.approx(0.0, abs=1e-12)

    def test_monte_carlo_oracle_counts_mass(self, rng):
        # 3 free pairs, one per label: Dirichlet-average of the multinomial mass
        z = np.array([-1, 0, 1])
        draws = rng.dirichlet(np.ones(3), size=1_000_000)
        coef = math.factorial(3)  # occupancy (1,1,1)
        mc = float(np.mean(coef * draws[:, 0] * draws[:, 1] * draws[:, 2]))
        exact = math.exp(log_dma_intransitivity(z, 1.0, 1))
        assert exact == pytest.approx(mc, rel=0.01)
        assert exact == pytest.approx(0.1, rel=1e-9)  # 6 * 1/60

    def test_depends_only_on_occupancy(self, rng):
        for _ in range(20):
            k = 2
            z = rng.integers(-k, k + 1, size=8)
            perm = rng.permutation(8)
            assert log_dma_intransitivity(z, 0.7, k) == pytest.approx(
                log_dma_intransitivity(z[perm], 0.7, k), abs=1e-12
            )

    def test_label_range_checked(self):
        with pytest.raises(ValueError):
            log_dma_intransitivity(np.array([2]), 1.0, 1)

    def test_normalization_over_allocations(self):
        # specific-allocation form sums to one over every labelling
        k, n_free, gamma = 1, 4, 0.8
        total = sum(
            math.exp(log_dma_intransitivity(np.array(z), gamma, k, include_coefficient=False))
            for z in itertools.product(range(-k, k + 1), repeat=n_free)
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_normalization_over_occupancies(self):
        # counts form (with the multinomial coefficient) sums to one over compositions
        k, n_free, gamma = 1, 5, 1.3
        labels = 2 * k + 1
        total = 0.0
        for counts in itertools.product(range(n_free + 1), repeat=labels):
            if sum(counts) != n_free:
                continue
            z = np.repeat(np.arange(-k, k + 1), counts)
            total += math.exp(log_dma_intransitivity(z, gamma, k))
        assert total == pytest.approx(1.0, abs=1e-9)


class TestDmaSkill:
    def test_a_zero(self):
        assert log_dma_skill(np.zeros(5, dtype=int), 1.0, 0) == pytest.approx(0.0, abs=1e-12)

    def test_monte_carlo_oracle(self, rng):
        # 4 objects (3 free), two labels, occupancy (2, 1)
        y = np.array([0, 0, 1])
        w = rng.dirichlet(np.ones(2), size=1_000_000)
        coef = math.factorial(3) / (math.factorial(2) * math.factorial(1))
        mc = float(np.mean(coef * w[:, 0] ** 2 * w[:, 1]))
        exact = math.exp(log_dma_skill(y, 1.0, 1))
        assert exact == pytest.approx(mc, rel=0.01)
        assert exact == pytest.approx(0.25, rel=1e-9)

    def test_relabeling_invariance(self, rng):
        y = np.array([0, 1, 1, 2, 0])
        perm = rng.permutation(y.shape[0])
        assert log_dma_skill(y, 1.0, 2) == pytest.approx(log_dma_skill(y[perm], 1.0, 2), abs=1e-12)

    def test_normalization_over_allocations(self):
        a, n_free, gamma = 1, 4, 1.0
        total = sum(
            math.exp(log_dma_skill(np.array(y), gamma, a, include_coefficient=False))
            for y in itertools.product(range(a + 1), repeat=n_free)
        )
        assert total == pytest.approx(1.0, abs=1e-9)


class TestPriorK:
    def test_zero_count(self):
        assert log_prior_K(0, 2.0) == pytest.approx(-2.0, abs=1e-12)

    def test_direct_pmf(self):
        assert log_prior_K(2, 2.0) == pytest.approx(math.log(2.0) - 2.0, abs=1e-12)
        assert log_prior_K(2, 2.0) == pytest.approx(-1.3068528194400546, abs=1e-12)

    def test_normalizes(self):
        total = sum(math.exp(log_prior_K(k, 2.0)) for k in range(201))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_prior_K(-1, 2.0)


class TestPriorA:
    def test_zero_count_printed_normalizer(self):
        expected = -math.log(sum(1.0 / math.factorial(i) for i in range(6)))
        assert log_prior_A(0, 1.0, 5) == pytest.approx(expected, abs=1e-12)

    def test_truncation_mismatch_of_printed_normalizer(self):
        # the printed normaliser runs one term past the support, so the pmf
        # sums to slightly less than one; the support-consistent variant sums to one
        n, lam = 6, 2.0
        printed = sum(math.exp(log_prior_A(a, lam, n)) for a in range(n))
        consistent = sum(
            math.exp(log_prior_A(a, lam, n, printed_normalizer=False)) for a in range(n)
        )
        top = sum(lam**i / math.factorial(i) for i in range(n))
        full = top + lam**n / math.factorial(n)
        assert printed == pytest.approx(top / full, abs=1e-12)
        assert printed < 1.0
        assert consistent == pytest.approx(1.0, abs=1e-12)

    def test_poisson_recurrence(self):
        for a in range(5):
            ratio = math.exp(log_prior_A(a + 1, 1.7, 8) - log_prior_A(a, 1.7, 8))
            assert ratio == pytest.approx(1.7 / (a + 1), abs=1e-12)

    def test_support_enforced(self):
        with pytest.raises(ValueError):
            log_prior_A(6, 1.0, 6)
        with pytest.raises(ValueError):
            log_prior_A(-1, 1.0, 6)


class TestPriorTheta:
    def test_k_zero_convention(self):
        assert log_prior_theta(np.zeros(0), 2.0, 2.0) == 0.0

    def test_exponential_case(self):
        # alpha = beta = 1 makes each level standard exponential
        assert log_prior_theta(np.array([0.7]), 1.0, 1.0) == pytest.approx(-0.7, abs=1e-12)

    def test_order_statistic_density_by_monte_carlo(self, rng):
        # bin-integrated mass of the K=2 order-statistic density vs sorted draws
        alpha, beta = 2.0, 2.0
        draws = np.sort(rng.gamma(alpha, 1.0 / beta, size=(2_000_000, 2)), axis=1)
        probes = [(0.3, 0.8), (0.5, 1.2), (0.2, 0.5), (0.9, 1.4), (0.6, 2.0)]
        half = 0.15
        for x1, x2 in probes:
            lo1, hi1, lo2, hi2 = x1 - half, x1 + half, x2 - half, x2 + half
            inside = (
                (draws[:, 0] > lo1) & (draws[:, 0] < hi1) & (draws[:, 1] > lo2) & (draws[:, 1] < hi2)
            )
            empirical = float(np.mean(inside))
            grid1 = np.linspace(lo1, hi1, 61)
            grid2 = np.linspace(lo2, hi2, 61)
            dens = np.zeros((61, 61))
            for i, a in enumerate(grid1):
                for j, b in enumerate(grid2):
                    if a < b:
                        dens[i, j] = math.exp(log_prior_theta(np.array([a, b]), alpha, beta))
            mass = float(np.trapezoid(np.trapezoid(dens, grid2, axis=1), grid1))
            assert empirical == pytest.approx(mass, rel=0.01)

    def test_rejects_unordered(self):
        with pytest.raises(ValueError):
            log_prior_theta(np.array([0.9, 0.5]), 2.0, 2.0)
        with pytest.raises(ValueError):
            log_prior_theta(np.array([-0.1, 0.5]), 2.0, 2.0)


class TestPriorPhi:
    def test_a_zero(self):
        assert log_prior_phi(np.array([0.0]), 0, 2.0) == 0.0

    def test_single_level_value(self):
        expected = math.log(2.0) - 0.5 - 0.5 * math.log(2 * math.pi)
        got = log_prior_phi(np.array([0.0, 1.0]), 0, 1.0)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(-0.7257913526447274, abs=1e-10)

    def test_side_symmetry(self):
        up = log_prior_phi(np.array([0.0, 1.3]), 0, 2.0)
        down = log_prior_phi(np.array([-1.3, 0.0]), 1, 2.0)
        assert up == pytest.approx(down, abs=1e-12)

    def test_proper_variant_by_monte_carlo(self, rng):
        # sorted pairs of independent normals follow the proper (A!) density;
        # probe bins avoid the zero lines and the diagonal
        nu = 2.0
        draws = np.sort(rng.normal(0.0, nu, size=(4_000_000, 2)), axis=1)
        probes = [(-1.0, 0.5), (-2.5, 1.0), (0.4, 2.0), (-1.5, -0.6), (1.0, 3.0)]
        half = 0.25
        for x1, x2 in probes:
            lo1, hi1, lo2, hi2 = x1 - half, x1 + half, x2 - half, x2 + half
            inside = (
                (draws[:, 0] > lo1) & (draws[:, 0] < hi1) & (draws[:, 1] > lo2) & (draws[:, 1] < hi2)
            )
            empirical = float(np.mean(inside))
            grid1 = np.linspace(lo1, hi1, 61)
            grid2 = np.linspace(lo2, hi2, 61)
            dens = np.zeros((61, 61))
            for i, a in enumerate(grid1):
                for j, b in enumerate(grid2):
                    if a < b:
                        phi = np.sort(np.array([a, b, 0.0]))
                        zero = int(np.nonzero(phi == 0.0)[0][0])
                        dens[i, j] = math.exp(log_prior_phi(phi, zero, nu, proper=True))
            mass = float(np.trapezoid(np.trapezoid(dens, grid2, axis=1), grid1))
            assert empirical == pytest.approx(mass, rel=0.01)

    def test_proper_and_default_variants_differ_by_position_count(self, rng):
        # the default order factor is (A+1)!, the proper one A!
        for _ in range(50):
            a = int(rng.integers(1, 4))
            free = np.sort(rng.normal(0.0, 2.0, size=a))
            phi = np.sort(np.concatenate((free, [0.0])))
            zero = int(np.nonzero(phi == 0.0)[0][0])
            gap = log_prior_phi(phi, zero, 2.0) - log_prior_phi(phi, zero, 2.0, proper=True)
            assert gap == pytest.approx(math.log(a + 1.0), abs=1e-12)

    def test_rejects_bad_sequences(self):
        with pytest.raises(ValueError):
            log_prior_phi(np.array([0.5, 1.0]), 0, 1.0)
        with pytest.raises(ValueError):
            log_prior_phi(np.array([1.0, 0.0]), 1, 1.0)


class TestJointAndPosterior:
    def test_additivity(self, rng):
        h = Hyperparameters.defaults(6)
        for _ in range(100):
            state = random_state(rng, n=6)
            parts = (
                log_prior_K(state.intrans.k, h.lambda_k)
                + log_prior_theta(state.intrans.theta, h.alpha, h.beta)
                + log_dma_intransitivity(
                    state.intrans.allocation, h.gamma_k, state.intrans.k, include_coefficient=False
                )
                + log_prior_A(state.skills.a, h.lambda_a, 6)
                + log_prior_phi(state.skills.phi, state.skills.zero_index, h.nu_a, proper=True)
                + log_dma_skill(
                    state.skills.allocation[1:], h.gamma_a, state.skills.a, include_coefficient=False
                )
            )
            assert log_prior_joint(state, h) == pytest.approx(parts, abs=1e-10)
            assert math.isfinite(log_prior_joint(state, h))

    def test_transitive_state_reduces_to_count_priors(self):
        h = Hyperparameters.defaults(5)
        state = make_state(5, [0.0], 0, [0] * 5, [], [0] * 6)
        expected = log_prior_K(0, h.lambda_k) + log_prior_A(0, h.lambda_a, 5)
        assert log_prior_joint(state, h) == pytest.approx(expected, abs=1e-12)

    def test_posterior_is_prior_on_empty_data(self, rng):
        state = random_state(rng, n=5)
        h = Hyperparameters.defaults(5)
        data = empty_dataset(5)
        assert log_posterior_unnorm(state, data, h) == pytest.approx(
            log_prior_joint(state, h), abs=1e-12
        )

    def test_adding_uncertain_comparison_decreases_posterior(self, rng):
        state = random_state(rng, n=4)
        h = Hyperparameters.defaults(4)
        labels = [f"o{i:02d}" for i in range(4)]
        base = [(labels[i], labels[j]) for i in range(4) for j in range(i)]
        one = ComparisonDataset.from_comparisons(base, objects=labels)
        two = ComparisonDataset.from_comparisons(base + [base[0]], objects=labels)
        lp0 = log_prior_joint(state, h)
        lp1 = log_posterior_unnorm(state, one, h)
        lp2 = log_posterior_unnorm(state, two, h)
        assert lp1 < lp0
        assert lp2 < lp1

    def test_matches_component_sum_on_tiny_instance(self, rng):
        state = random_state(rng, n=4)
        data = round_robin_dataset(rng, state, m=2)
        h = Hyperparameters.defaults(4)
        assert log_posterior_unnorm(state, data, h) == pytest.approx(
            log_likelihood(state, data) + log_prior_joint(state, h), abs=1e-12
        )

    def test_hyperparameters_validated(self):
        with pytest.raises(ValueError):
            Hyperparameters(lambda_k=0.0)
        with pytest.raises(ValueError):
            Hyperparameters(nu_a=-1.0)
