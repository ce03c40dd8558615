import json
from pathlib import Path

import numpy as np
import pytest

from icbt import io
from icbt.cli import main
from icbt.data import ComparisonDataset
from icbt.errors import DataError
from icbt.model import validate_state
from icbt.simulate import TournamentSpec, scenario_preset, simulate_round_robin

from conftest import random_state, round_robin_dataset


class TestComparisonsCsv:
    def test_round_trip(self, rng, tmp_path):
        truth = random_state(rng, n=5)
        data = round_robin_dataset(rng, truth, m=3)
        path = tmp_path / "games.csv"
        io.write_comparisons_csv(path, data, "digest", 7)
        again = io.read_comparisons_csv(path)
        assert again.objects.labels == data.objects.labels
        assert np.array_equal(again.winners, data.winners)
        assert np.array_equal(again.losers, data.losers)

    def test_provenance_comment_present(self, rng, tmp_path):
        truth = random_state(rng, n=4)
        data = round_robin_dataset(rng, truth, m=1)
        path = tmp_path / "games.csv"
        io.write_comparisons_csv(path, data, "abc123", 9)
        first = path.read_text().splitlines()[0]
        assert first.startswith("#") and "abc123" in first and "9" in first

    def test_extra_columns_ignored(self, tmp_path):
        path = tmp_path / "games.csv"
        path.write_text("winner,loser,date,season\na,b,2018-04-01,2018\nb,c,2018-04-02,2018\n")
        data = io.read_comparisons_csv(path)
        assert data.n_comparisons == 2

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "games.csv"
        path.write_text("home,away\na,b\n")
        with pytest.raises(DataError):
            io.read_comparisons_csv(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError):
            io.read_comparisons_csv(tmp_path / "nope.csv")


class TestStateJson:
    def test_round_trip_bit_exact(self, rng, tmp_path):
        for _ in range(5):
            state = random_state(rng, n=6)
            labels = [f"t{i:02d}" for i in range(6)]
            path = tmp_path / "state.json"
            io.write_state_json(path, state, labels, "d", 1)
            loaded, loaded_labels = io.read_state_json(path)
            assert loaded_labels == labels
            assert np.array_equal(loaded.skills.phi, state.skills.phi)
            assert loaded.skills.zero_index == state.skills.zero_index
            assert np.array_equal(loaded.skills.allocation, state.skills.allocation)
            assert np.array_equal(loaded.intrans.theta, state.intrans.theta)
            assert np.array_equal(loaded.intrans.allocation, state.intrans.allocation)
            validate_state(loaded)


class TestSamplesJsonl:
    def test_round_trip(self, rng, tmp_path):
        from icbt.priors import Hyperparameters
        from icbt.sampler import SamplerSchedule, run_chain

        truth = random_state(rng, n=5)
        data = round_robin_dataset(rng, truth, m=3)
        samples = run_chain(
            truth, data, Hyperparameters.defaults(5), SamplerSchedule(iterations=200, burn_in=50, thin=4), 3
        )
        path = tmp_path / "samples.jsonl"
        io.write_samples_jsonl(path, samples, "d", 3)
        loaded = io.read_samples_jsonl(path)
        assert len(loaded) == len(samples)
        assert loaded.layout.fixed_pairs == samples.layout.fixed_pairs
        for a, b in zip(loaded.records, samples.records):
            assert a.k == b.k and a.a == b.a
            assert a.theta == b.theta and a.phi == b.phi
            assert np.array_equal(a.z, b.z) and np.array_equal(a.y, b.y)
            assert a.log_post == b.log_post


class TestCli:
    def _simulate(self, tmp_path, scenario=2, rounds=5, objects=8, seed=3):
        out = tmp_path / "sim"
        code = main(
            [
                "simulate",
                "--scenario", str(scenario),
                "--rounds", str(rounds),
                "--objects", str(objects),
                "--seed", str(seed),
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        return out

    def _config(self, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            "seed = 4\n"
            "[init]\nstage_lengths = [150, 150]\n"
            "[schedule]\niterations = 1200\nburn_in = 400\nthin = 4\n"
        )
        return cfg

    def test_simulate_writes_dataset_and_truth(self, tmp_path):
        out = self._simulate(tmp_path)
        data = io.read_comparisons_csv(out / "comparisons.csv")
        assert data.n_comparisons == 5 * 8 * 7 // 2
        truth, labels = io.read_state_json(out / "truth.json")
        validate_state(truth)
        assert labels == list(data.objects.labels)

    def test_simulate_deterministic(self, tmp_path):
        a = self._simulate(tmp_path / "a")
        b = self._simulate(tmp_path / "b")
        assert (a / "comparisons.csv").read_text() == (b / "comparisons.csv").read_text()
        assert (a / "truth.json").read_text() == (b / "truth.json").read_text()

    def test_fit_rank_summarize_evaluate(self, tmp_path):
        sim = self._simulate(tmp_path)
        cfg = self._config(tmp_path)
        fit_dir = tmp_path / "fit"
        code = main(
            [
                "fit",
                "--data", str(sim / "comparisons.csv"),
                "--config", str(cfg),
                "--out-dir", str(fit_dir),
            ]
        )
        assert code in (0, 3)
        summary = io.read_summary_json(fit_dir / "summary.json")
        assert sum(summary.k_histogram.values()) == pytest.approx(1.0)

        rank_out = tmp_path / "ranks.csv"
        assert main(["rank", "--summary", str(fit_dir / "summary.json"), "--out", str(rank_out)]) == 0
        lines = rank_out.read_text().splitlines()
        assert lines[0].startswith("method,rank,object")
        assert len(lines) == 1 + 2 * 8

        sum2 = tmp_path / "summary2.json"
        code = main(
            [
                "summarize",
                "--samples", str(fit_dir / "samples.jsonl"),
                "--data", str(sim / "comparisons.csv"),
                "--out", str(sum2),
            ]
        )
        assert code == 0
        rebuilt = io.read_summary_json(sum2)
        assert np.allclose(rebuilt.p_matrix[1:, 0], summary.p_matrix[1:, 0])

        eval_dir = tmp_path / "eval"
        code = main(
            [
                "evaluate",
                "--data", str(sim / "comparisons.csv"),
                "--config", str(cfg),
                "--replicates", "2",
                "--out-dir", str(eval_dir),
            ]
        )
        assert code == 0
        metrics = json.loads((eval_dir / "metrics.json").read_text())
        assert metrics["n_replicates"] == 2
        assert "relative_log_loss_ci" in metrics

    def test_fit_deterministic_given_seed(self, tmp_path):
        sim = self._simulate(tmp_path)
        cfg = self._config(tmp_path)
        out_a, out_b = tmp_path / "fa", tmp_path / "fb"
        for out in (out_a, out_b):
            code = main(
                ["fit", "--data", str(sim / "comparisons.csv"), "--config", str(cfg), "--out-dir", str(out)]
            )
            assert code in (0, 3)
        assert (out_a / "summary.json").read_text() == (out_b / "summary.json").read_text()
        assert (out_a / "samples.jsonl").read_text() == (out_b / "samples.jsonl").read_text()

    def test_evaluate_with_explicit_train_test(self, tmp_path):
        sim = self._simulate(tmp_path, rounds=6)
        cfg = self._config(tmp_path)
        full = io.read_comparisons_csv(sim / "comparisons.csv")
        from icbt.evaluation import train_test_split

        train, test = train_test_split(full, 0.7, seed=5)
        io.write_comparisons_csv(tmp_path / "train.csv", train)
        io.write_comparisons_csv(tmp_path / "test.csv", test)
        code = main(
            [
                "evaluate",
                "--train", str(tmp_path / "train.csv"),
                "--test", str(tmp_path / "test.csv"),
                "--config", str(cfg),
                "--out-dir", str(tmp_path / "ev"),
            ]
        )
        assert code == 0
        metrics = json.loads((tmp_path / "ev" / "metrics.json").read_text())
        assert metrics["n_replicates"] == 1
        assert "log_loss_model" in metrics

    def test_prior_only_fit_supported(self, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            "n_objects = 6\nseed = 2\n"
            "[init]\nstage_lengths = [50, 50]\n"
            "[schedule]\niterations = 400\nburn_in = 100\nthin = 4\n"
        )
        empty = tmp_path / "empty.csv"
        empty.write_text("winner,loser\n")
        code = main(
            ["fit", "--data", str(empty), "--config", str(cfg), "--out-dir", str(tmp_path / "prior")]
        )
        assert code in (0, 3)
        summary = io.read_summary_json(tmp_path / "prior" / "summary.json")
        assert len(summary.labels) == 6

    def test_evaluate_replicates_on_divisional_schedule(self, tmp_path, rng):
        # unbalanced schedule: two divisions of four, 8 meetings inside a
        # division and 2 across; the replicate protocol (split, refit, score,
        # percentile interval) must run end to end on it
        labels = [f"d{d}t{t}" for d in range(2) for t in range(4)]
        truth = random_state(rng, n=8, k_max=1, a_max=2)
        from icbt.model import pairwise_probability_matrix

        p = pairwise_probability_matrix(truth)
        games = []
        for i in range(8):
            for j in range(i):
                meetings = 8 if i // 4 == j // 4 else 2
                for _ in range(meetings):
                    if rng.random() < p[i, j]:
                        games.append((labels[i], labels[j]))
                    else:
                        games.append((labels[j], labels[i]))
        path = tmp_path / "season.csv"
        with path.open("w") as fh:
            fh.write("winner,loser\n")
            for w, l in games:
                fh.write(f"{w},{l}\n")
        cfg = self._config(tmp_path)
        code = main(
            [
                "evaluate",
                "--data", str(path),
                "--train-fraction", "0.7",
                "--replicates", "3",
                "--config", str(cfg),
                "--out-dir", str(tmp_path / "div"),
            ]
        )
        assert code == 0
        metrics = json.loads((tmp_path / "div" / "metrics.json").read_text())
        assert metrics["n_replicates"] == 3
        lo, hi = metrics["relative_log_loss_ci"]
        assert lo <= metrics["relative_log_loss_mean"] <= hi

    def test_data_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("winner,loser\na,a\n")
        assert main(["fit", "--data", str(bad), "--out-dir", str(tmp_path / "x")]) == 2

    def test_disconnected_graph_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("winner,loser\na,b\nc,d\n")
        assert main(["fit", "--data", str(bad), "--out-dir", str(tmp_path / "x")]) == 2

    def test_config_digest_embedded(self, tmp_path):
        sim = self._simulate(tmp_path)
        cfg = self._config(tmp_path)
        fit_dir = tmp_path / "fit"
        main(["fit", "--data", str(sim / "comparisons.csv"), "--config", str(cfg), "--out-dir", str(fit_dir)])
        doc = json.loads((fit_dir / "summary.json").read_text())
        assert doc["_meta"]["config_digest"] not in ("", "defaults")
        assert doc["_meta"]["seed"] == 4
