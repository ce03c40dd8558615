"""Posterior summarisation, rankings and predictive scoring."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .bradley_terry import BtFit
from .data import ComparisonDataset
from .model import ModelState, pairwise_probability_matrix
from .sampler import ChainSamples

__all__ = [
    "PosteriorSummary",
    "rank_by_average_probability",
    "rank_by_ability",
    "adjusted_intransitivity",
    "log_loss",
    "relative_log_loss",
    "ranking_accuracy",
    "spearman_comparison",
    "train_test_split",
    "summarize",
    "predict_matrix",
]

_CLAMP = 1e-12


def rank_by_average_probability(p: np.ndarray, labels=None) -> tuple[np.ndarray, list[int]]:
    """Average win probability of each object and the induced ranking.

    Ties break by object label (stable, ascending), so the ranking is a
    deterministic function of the table.
    """
    n = p.shape[0]
    off = ~np.eye(n, dtype=bool)
    p_dot = np.array([np.mean(p[i][off[i]]) for i in range(n)])
    keys = labels if labels is not None else list(range(n))
    order = sorted(range(n), key=lambda i: (-p_dot[i], keys[i]))
    return p_dot, order


def rank_by_ability(state: ModelState) -> tuple[np.ndarray, list[int]]:
    """Skill plus mean intransitivity boost per object, and the induced ranking."""
    n = state.n
    a = state.skills.skills().astype(np.float64).copy()
    for i in range(n):
        boost = 0.0
        for j in range(n):
            if j != i:
                boost += state.intrans.level_of(i, j)
        a[i] += boost / n
    order = sorted(range(n), key=lambda i: (-a[i], i))
    return a, order


def adjusted_intransitivity(state: ModelState, bt: BtFit) -> np.ndarray:
    """Logit gap between the model's and the baseline's pairwise probabilities.

    theta*_ij = theta_ij + (r_i - r_j) - (r_i_baseline - r_j_baseline);
    unlike the raw offsets it is not pinned to zero on the reference pairs.
    """
    if bt.skills.shape[0] != state.n:
        raise ValueError("baseline fit covers a different object set")
    r = state.skills.skills()
    out = np.zeros((state.n, state.n))
    for i in range(state.n):
        for j in range(state.n):
            if i == j:
                continue
            out[i, j] = (
                state.intrans.level_of(i, j)
                + (r[i] - r[j])
                - (bt.skills[i] - bt.skills[j])
            )
    np.fill_diagonal(out, np.nan)
    return out


def log_loss(predictions: np.ndarray, test: ComparisonDataset) -> float:
    """Average negative log likelihood per test comparison.

    ``predictions`` holds the predicted win probability of the recorded
    winner of each comparison.  Boundary predictions are clamped at 1e-12
    with a warning when they contradict the outcome.
    """
    p = np.asarray(predictions, dtype=np.float64)
    if p.shape[0] != test.n_comparisons:
        raise ValueError("one prediction per test comparison required")
    if p.shape[0] == 0:
        raise ValueError("empty test set")
    if np.any(p <= _CLAMP):
        warnings.warn("clamping boundary predictions that contradict observed outcomes")
    p = np.clip(p, _CLAMP, 1.0 - _CLAMP)
    return float(-np.mean(np.log(p)))


def relative_log_loss(model_ll: float, baseline_ll: float) -> float:
    """Baseline log-loss minus model log-loss; positive favours the model."""
    return baseline_ll - model_ll


def ranking_accuracy(ranking, data: ComparisonDataset) -> float:
    """Fraction of comparisons won by the better-ranked participant."""
    position = {obj: k for k, obj in enumerate(ranking)}
    if len(position) != data.n:
        raise ValueError("ranking must cover every object exactly once")
    if data.n_comparisons == 0:
        raise ValueError("no comparisons to score")
    correct = sum(
        1
        for w, l in zip(data.winners.tolist(), data.losers.tolist())
        if position[w] < position[l]
    )
    return correct / data.n_comparisons


def spearman_comparison(rank_a, rank_b, permutations: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Spearman's rho between two aligned score vectors, with a permutation p-value.

    The two-sided p-value resamples one vector's alignment; +1 smoothing
    keeps it strictly positive.
    """
    a = rankdata(np.asarray(rank_a, dtype=np.float64))
    b = rankdata(np.asarray(rank_b, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError("rankings must cover the same objects")

    def rho(x, y):
        xc = x - x.mean()
        yc = y - y.mean()
        return float(np.dot(xc, yc) / np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))

    observed = rho(a, b)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(permutations):
        if abs(rho(a, rng.permutation(b))) >= abs(observed) - 1e-15:
            hits += 1
    p_value = (hits + 1) / (permutations + 1)
    return observed, p_value


def train_test_split(data: ComparisonDataset, train_fraction: float, seed: int):
    """Uniform random partition of the comparisons, deterministic per seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    n = data.n_comparisons
    perm = rng.permutation(n)
    cut = int(train_fraction * n)
    return data.subset(np.sort(perm[:cut])), data.subset(np.sort(perm[cut:]))


@dataclass
class PosteriorSummary:
    """Posterior means, credible intervals, histograms and rankings."""

    labels: tuple[str, ...]
    r_mean: np.ndarray
    r_ci: np.ndarray
    theta_mean: np.ndarray
    theta_star: np.ndarray
    p_matrix: np.ndarray
    p_dot: np.ndarray
    p_dot_ci: np.ndarray
    ability: np.ndarray
    ability_ci: np.ndarray
    k_histogram: dict[int, float]
    a_histogram: dict[int, float]
    ranking_by_probability: list[int]
    ranking_by_ability: list[int]
    bt_skills: np.ndarray
    n_samples: int = 0
    extras: dict = field(default_factory=dict)


def summarize(samples: ChainSamples, data: ComparisonDataset, bt: BtFit) -> PosteriorSummary:
    """Averages over the recorded states.

    The pairwise probability matrix is the mean of the per-sample
    matrices (a posterior-predictive point estimate for a Bernoulli
    outcome), skills and offsets are posterior means with equal-tailed
    95% intervals, and the adjusted offsets are evaluated at the
    posterior means.
    """
    if len(samples) == 0:
        raise ValueError("no recorded samples to summarise")
    layout = samples.layout
    n = layout.n
    free = layout.free_pairs
    n_rec = len(samples.records)

    r_draws = np.empty((n_rec, n))
    p_dot_draws = np.empty((n_rec, n))
    ability_draws = np.empty((n_rec, n))
    theta_sum = np.zeros((n, n))
    p_sum = np.zeros((n, n))
    k_counts: dict[int, int] = {}
    a_counts: dict[int, int] = {}

    fi = np.array([p[0] for p in free], dtype=np.int64)
    fj = np.array([p[1] for p in free], dtype=np.int64)
    eye = np.eye(n, dtype=bool)

    for s, rec in enumerate(samples.records):
        phi = np.asarray(rec.phi)
        r = phi[rec.y.astype(np.int64)]
        r_draws[s] = r
        theta_levels = np.concatenate(([0.0], np.asarray(rec.theta)))
        zz = rec.z.astype(np.int64)
        signed = np.sign(zz) * theta_levels[np.abs(zz)]
        th = np.zeros((n, n))
        th[fi, fj] = signed
        th[fj, fi] = -signed
        theta_sum += th
        eta = th + r[:, None] - r[None, :]
        p = 1.0 / (1.0 + np.exp(-eta))
        p[eye] = 0.0
        p_sum += p
        p_dot_draws[s] = p.sum(axis=1) / (n - 1)
        ability_draws[s] = r + th.sum(axis=1) / n
        k_counts[rec.k] = k_counts.get(rec.k, 0) + 1
        a_counts[rec.a] = a_counts.get(rec.a, 0) + 1

    theta_mean = theta_sum / n_rec
    p_matrix = p_sum / n_rec
    p_matrix[eye] = np.nan
    r_mean = r_draws.mean(axis=0)
    quantiles = lambda draws: np.quantile(draws, [0.025, 0.975], axis=0).T
    p_dot = p_dot_draws.mean(axis=0)
    ability = ability_draws.mean(axis=0)

    theta_star = theta_mean + (r_mean[:, None] - r_mean[None, :]) - (
        bt.skills[:, None] - bt.skills[None, :]
    )
    np.fill_diagonal(theta_star, np.nan)

    labels = tuple(object_labels_from(data, n))
    _, order_p = rank_by_average_probability(p_matrix, labels)
    order_a = sorted(range(n), key=lambda i: (-ability[i], labels[i]))

    return PosteriorSummary(
        labels=labels,
        r_mean=r_mean,
        r_ci=quantiles(r_draws),
        theta_mean=theta_mean,
        theta_star=theta_star,
        p_matrix=p_matrix,
        p_dot=p_dot,
        p_dot_ci=quantiles(p_dot_draws),
        ability=ability,
        ability_ci=quantiles(ability_draws),
        k_histogram={k: v / n_rec for k, v in sorted(k_counts.items())},
        a_histogram={a: v / n_rec for a, v in sorted(a_counts.items())},
        ranking_by_probability=order_p,
        ranking_by_ability=order_a,
        bt_skills=bt.skills.copy(),
        n_samples=n_rec,
    )


def object_labels_from(data: ComparisonDataset, n: int) -> list[str]:
    if data.n != n:
        raise ValueError("dataset does not match the sampled layout")
    return list(data.objects.labels)


def predict_matrix(summary_or_state, plug_in: bool = False) -> np.ndarray:
    """Pairwise probability table used for scoring.

    For a posterior summary the default is the posterior-mean probability
    matrix; ``plug_in`` instead evaluates the probabilities at the
    posterior-mean parameters.  A plain state evaluates directly.
    """
    if isinstance(summary_or_state, ModelState):
        return pairwise_probability_matrix(summary_or_state)
    summary = summary_or_state
    if not plug_in:
        return summary.p_matrix
    eta = summary.theta_mean + summary.r_mean[:, None] - summary.r_mean[None, :]
    p = 1.0 / (1.0 + np.exp(-eta))
    np.fill_diagonal(p, np.nan)
    return p
