import numpy as np
import pytest

from icbt.model import pairwise_probability_matrix, validate_state
from icbt.simulate import TournamentSpec, scenario_preset, simulate_round_robin


class TestScenarioPresets:
    def test_scenario_one_fully_transitive(self):
        state = scenario_preset(1, seed=0)
        assert state.intrans.k == 0
        assert np.all(state.intrans.allocation == 0)
        assert state.n == 20

    def test_scenario_two_single_level(self):
        state = scenario_preset(2, seed=0)
        assert state.intrans.theta.tolist() == [0.7]

    def test_scenario_three_levels(self):
        assert scenario_preset(3, seed=1).intrans.theta.tolist() == [0.5, 0.9]

    def test_scenario_four_levels(self):
        assert scenario_preset(4, seed=1).intrans.theta.tolist() == [0.4, 0.8, 1.2]

    def test_ten_skill_levels_two_objects_each(self):
        state = scenario_preset(2, seed=5)
        assert state.skills.phi.shape[0] == 10
        counts = np.bincount(state.skills.allocation, minlength=10)
        assert counts.tolist() == [2] * 10

    def test_states_validate(self):
        for scenario in (1, 2, 3, 4):
            validate_state(scenario_preset(scenario, seed=9))

    def test_bad_scenario_rejected(self):
        with pytest.raises(ValueError):
            scenario_preset(5, seed=0)


class TestRoundRobin:
    def test_comparison_count(self):
        truth = scenario_preset(1, seed=2)
        data = simulate_round_robin(truth, TournamentSpec(n=20, m=4, seed=3))
        assert data.n_comparisons == 4 * 20 * 19 // 2 == 760
        assert np.all(data.totals == 4)

    def test_seed_reproducibility(self):
        truth = scenario_preset(3, seed=2)
        spec = TournamentSpec(n=20, m=3, seed=11)
        a = simulate_round_robin(truth, spec)
        b = simulate_round_robin(truth, spec)
        assert np.array_equal(a.winners, b.winners)
        assert np.array_equal(a.losers, b.losers)

    def test_even_truth_converges_to_half(self):
        truth = scenario_preset(1, seed=4)
        flat = truth.skills
        # flatten the skills so every pair is a fair coin
        from icbt.model import ModelState, SkillClustering

        flat_state = ModelState(
            skills=SkillClustering(
                phi=np.zeros(1), zero_index=0, allocation=np.zeros(20, dtype=np.int32)
            ),
            intrans=truth.intrans,
        )
        data = simulate_round_robin(flat_state, TournamentSpec(n=20, m=400, seed=5))
        rates = data.wins / data.totals
        # binomial CI check: every pair within 4 standard errors of one half
        se = np.sqrt(0.25 / 400)
        assert np.all(np.abs(rates - 0.5) < 4 * se + 1e-12)

    def test_pair_frequencies_track_truth(self):
        truth = scenario_preset(4, seed=6)
        data = simulate_round_robin(truth, TournamentSpec(n=20, m=400, seed=7))
        p = pairwise_probability_matrix(truth)
        ok = 0
        total = 0
        for c in range(data.pair_i.shape[0]):
            i, j = int(data.pair_i[c]), int(data.pair_j[c])
            p_true = p[i, j]
            se = np.sqrt(p_true * (1 - p_true) / data.totals[c])
            total += 1
            ok += abs(data.wins[c] / data.totals[c] - p_true) < 4 * se + 1e-12
        assert ok / total >= 0.95

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            TournamentSpec(n=1, m=5)
        with pytest.raises(ValueError):
            TournamentSpec(n=5, m=0)
        truth = scenario_preset(1, seed=0)
        with pytest.raises(ValueError):
            simulate_round_robin(truth, TournamentSpec(n=10, m=2, seed=0))
