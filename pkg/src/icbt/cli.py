"""Command-line interface.

Commands: ``simulate`` (synthetic tournaments), ``fit`` (baseline +
initialisation + chains + summary), ``evaluate`` (train/test scoring
against the baseline), ``rank`` (rankings from a summary file) and
``summarize`` (rebuild a summary from a samples file).

Exit codes: 0 success, 2 data error, 3 convergence warning, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .bradley_terry import bt_pairwise_probabilities, fit_bt_mle
from .config import RunConfig, load_config
from .data import ComparisonDataset
from .errors import DataError, InvariantError
from .evaluation import (
    log_loss,
    rank_by_average_probability,
    ranking_accuracy,
    relative_log_loss,
    summarize,
    train_test_split,
)
from .initialize import build_initial_state
from .sampler import ChainSamples, run_chain
from .simulate import TournamentSpec, scenario_preset, simulate_round_robin

GELMAN_RUBIN_THRESHOLD = 1.05


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 0
    try:
        return int(args.func(args) or 0)
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except InvariantError as err:
        print(f"internal invariant violation: {err}", file=sys.stderr)
        return 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icbt", description=__doc__)
    sub = parser.add_subparsers()

    p = sub.add_parser("simulate", help="simulate a round-robin tournament from a scenario preset")
    p.add_argument("--scenario", type=int, required=True, choices=(1, 2, 3, 4))
    p.add_argument("--rounds", type=int, required=True, help="meetings per pair")
    p.add_argument("--objects", type=int, default=20, help="number of objects (even)")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the model: baseline, initialisation, chains, summary")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--chains", type=int, default=None)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="train/test predictive comparison against the baseline")
    p.add_argument("--data", type=Path, help="single file, split by --train-fraction")
    p.add_argument("--train", type=Path, help="explicit training file")
    p.add_argument("--test", type=Path, help="explicit test file")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="emit rankings from a summary file")
    p.add_argument("--summary", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="CSV output (default stdout)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("summarize", help="rebuild a posterior summary from a samples file")
    p.add_argument("--samples", type=Path, required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_summarize)

    return parser


def _load(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = RunConfig(
            hyper_overrides=cfg.hyper_overrides,
            init=cfg.init,
            schedule=cfg.schedule,
            seed=args.seed,
            chains=cfg.chains,
            n_objects=cfg.n_objects,
            digest=cfg.digest,
        )
    return cfg


def _read_data(path: Path, cfg: RunConfig) -> ComparisonDataset:
    objects = None
    if cfg.n_objects:
        width = max(2, len(str(cfg.n_objects)))
        objects = [f"t{i + 1:0{width}d}" for i in range(cfg.n_objects)]
    return io.read_comparisons_csv(path, objects=objects)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    truth = scenario_preset(args.scenario, cfg.seed, n=args.objects)
    data = simulate_round_robin(truth, TournamentSpec(n=args.objects, m=args.rounds, seed=cfg.seed))
    io.write_comparisons_csv(args.out_dir / "comparisons.csv", data, cfg.digest, cfg.seed)
    io.write_state_json(
        args.out_dir / "truth.json", truth, data.objects.labels, cfg.digest, cfg.seed
    )
    print(f"wrote {data.n_comparisons} comparisons to {args.out_dir}")
    return 0


def _run_one_chain(payload):
    init, data, h, schedule, seed = payload
    return run_chain(init, data, h, schedule, seed)


def fit_pipeline(data: ComparisonDataset, cfg: RunConfig, chains: int = 1):
    """Baseline fit, BIC start, staged warmup, then the requested chains.

    Returns (merged samples, per-chain samples, baseline fit, summary).
    """
    h = cfg.hyperparameters(data.n)
    bt = fit_bt_mle(data)
    init = build_initial_state(data, bt, h, cfg.init, cfg.seed)
    payloads = [(init, data, h, cfg.schedule, cfg.seed + 1000 * c) for c in range(chains)]
    if chains > 1:
        with ProcessPoolExecutor(max_workers=min(chains, 4)) as pool:
            chain_list = list(pool.map(_run_one_chain, payloads))
    else:
        chain_list = [_run_one_chain(payloads[0])]
    merged = ChainSamples.merged(chain_list) if len(chain_list) > 1 else chain_list[0]
    summary = summarize(merged, data, bt)
    return merged, chain_list, bt, summary


def gelman_rubin(traces: list[np.ndarray], burn_in: int) -> float:
    """Potential scale reduction of the log-posterior traces.

    A single chain is split in half so the screen still has two sequences
    to compare.
    """
    kept = [t[burn_in:] for t in traces if t.shape[0] > burn_in + 10]
    if not kept:
        return float("nan")
    if len(kept) == 1:
        half = kept[0].shape[0] // 2
        kept = [kept[0][:half], kept[0][half:]]
    n = min(t.shape[0] for t in kept)
    block = np.array([t[-n:] for t in kept])
    within = float(np.mean(np.var(block, axis=1, ddof=1)))
    between = float(n * np.var(np.mean(block, axis=1), ddof=1))
    if within == 0.0:
        return 1.0
    var_hat = (n - 1) / n * within + between / n
    return float(np.sqrt(var_hat / within))


def cmd_fit(args) -> int:
    cfg = _load(args)
    data = _read_data(args.data, cfg)
    chains = args.chains if args.chains is not None else cfg.chains
    args.out_dir.mkdir(parents=True, exist_ok=True)
    merged, chain_list, bt, summary = fit_pipeline(data, cfg, chains)
    io.write_samples_jsonl(args.out_dir / "samples.jsonl", merged, cfg.digest, cfg.seed)
    io.write_summary_json(
        args.out_dir / "summary.json", summary, cfg.digest, cfg.seed, acceptance=merged.acceptance
    )
    rhat = gelman_rubin([ch.trace for ch in chain_list], cfg.schedule.burn_in)
    print(f"kept {len(merged)} samples across {chains} chain(s); log-posterior R-hat {rhat:.4f}")
    if math.isfinite(rhat) and rhat > GELMAN_RUBIN_THRESHOLD:
        print(
            f"warning: R-hat {rhat:.4f} exceeds {GELMAN_RUBIN_THRESHOLD}; treat the summary with care",
            file=sys.stderr,
        )
        return 3
    return 0


def _predictions_for(test: ComparisonDataset, p_matrix: np.ndarray) -> np.ndarray:
    return p_matrix[test.winners, test.losers]


def _evaluate_once(train: ComparisonDataset, test: ComparisonDataset, cfg: RunConfig) -> dict:
    merged, _, bt, summary = fit_pipeline(train, cfg, chains=1)
    bt_matrix = bt_pairwise_probabilities(bt)
    model_ll = log_loss(_predictions_for(test, summary.p_matrix), test)
    baseline_ll = log_loss(_predictions_for(test, bt_matrix), test)
    _, bt_order = rank_by_average_probability(bt_matrix, summary.labels)
    correct_model = float(
        np.mean(_predictions_for(test, summary.p_matrix) > 0.5)
    )
    correct_bt = float(np.mean(_predictions_for(test, bt_matrix) > 0.5))
    return {
        "log_loss_model": model_ll,
        "log_loss_baseline": baseline_ll,
        "relative_log_loss": relative_log_loss(model_ll, baseline_ll),
        "percent_correct_model": correct_model,
        "percent_correct_baseline": correct_bt,
        "ranking_accuracy_by_probability": ranking_accuracy(summary.ranking_by_probability, test),
        "ranking_accuracy_by_ability": ranking_accuracy(summary.ranking_by_ability, test),
        "ranking_accuracy_baseline": ranking_accuracy(bt_order, test),
        "k_mode": max(summary.k_histogram, key=summary.k_histogram.get),
        "a_mode": max(summary.a_histogram, key=summary.a_histogram.get),
    }


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if args.train and args.test:
        train = _read_data(args.train, cfg)
        test_raw = io.read_comparisons_csv(args.test, objects=train.objects.labels)
        replicates = [(train, train.realign(test_raw))]
    elif args.data:
        full = _read_data(args.data, cfg)
        replicates = [
            train_test_split(full, args.train_fraction, cfg.seed + rep)
            for rep in range(max(args.replicates, 1))
        ]
    else:
        raise DataError("evaluate needs either --data or both --train and --test")

    rows = [_evaluate_once(train, test, cfg) for train, test in replicates]
    metrics: dict = {"replicates": rows, "n_replicates": len(rows)}
    if len(rows) > 1:
        rel = np.array([r["relative_log_loss"] for r in rows])
        metrics["relative_log_loss_mean"] = float(rel.mean())
        metrics["relative_log_loss_ci"] = [
            float(np.quantile(rel, 0.025)),
            float(np.quantile(rel, 0.975)),
        ]
    else:
        metrics.update(rows[0])
    io.write_metrics_json(args.out_dir / "metrics.json", metrics, cfg.digest, cfg.seed)
    print(f"wrote metrics for {len(rows)} replicate(s) to {args.out_dir / 'metrics.json'}")
    return 0


def _scaled(scores: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(scores)), float(np.max(scores))
    if hi - lo <= 0:
        return np.full_like(scores, 0.5)
    return (scores - lo) / (hi - lo)


def cmd_rank(args) -> int:
    summary = io.read_summary_json(args.summary)
    n = len(summary.labels)
    out = args.out.open("w", newline="") if args.out else sys.stdout
    writer = csv.writer(out)
    writer.writerow(
        ["method", "rank", "object", "score", "score_scaled", "ci_low", "ci_high"]
    )
    if n == 1:
        print("warning: single object; scaling skipped", file=sys.stderr)
    for method, order, scores, cis in (
        ("average_probability", summary.ranking_by_probability, summary.p_dot, summary.p_dot_ci),
        ("ability", summary.ranking_by_ability, summary.ability, summary.ability_ci),
    ):
        scaled = _scaled(scores) if n > 1 else np.asarray(scores)
        for rank_pos, obj in enumerate(order, start=1):
            writer.writerow(
                [
                    method,
                    rank_pos,
                    summary.labels[obj],
                    f"{scores[obj]:.6f}",
                    f"{scaled[obj]:.6f}",
                    f"{cis[obj][0]:.6f}",
                    f"{cis[obj][1]:.6f}",
                ]
            )
    if args.out:
        out.close()
        print(f"wrote rankings to {args.out}")
    return 0


def cmd_summarize(args) -> int:
    cfg = _load(args)
    samples = io.read_samples_jsonl(args.samples)
    data = _read_data(args.data, cfg)
    if data.layout.fixed_pairs != samples.layout.fixed_pairs:
        raise DataError("samples file and dataset disagree on the pinned-pair layout")
    bt = fit_bt_mle(data)
    summary = summarize(samples, data, bt)
    io.write_summary_json(args.out, summary, cfg.digest, cfg.seed, acceptance=samples.acceptance)
    print(f"wrote summary of {len(samples)} samples to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
