"""Chain initialisation.

Pipeline: fit the Bradley-Terry baseline, form Beta-regularised empirical
pair probabilities, take the log-odds displacement of each free pair from
its baseline probability, cluster those displacements with 1-d k-means
over a range of level counts and keep the BIC-best, then cluster the
baseline skills the same way conditional on that choice.  Two short
restricted chains (levels only, then levels plus reallocation) warm the
state up before the full trans-dimensional run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bradley_terry import BtFit, bt_pairwise_probabilities
from .data import ComparisonDataset
from .model import ModelState, SkillClustering, IntransitivityClustering, validate_state
from .priors import Hyperparameters
from .sampler import SamplerSchedule, run_chain
from . import kernels

__all__ = [
    "InitConfig",
    "naive_pair_probabilities",
    "empirical_intransitivity",
    "kmeans_1d",
    "select_by_bic",
    "staged_warmup",
    "build_initial_state",
]


@dataclass(frozen=True)
class InitConfig:
    """Initialisation constants.

    ``k_range`` are the candidate intransitivity level counts; the skill
    candidates run 0..min(n-1, a_max).  ``stage_lengths`` are the
    iteration counts of the two warmup stages.
    """

    alpha_p: float = 2.0
    beta_p: float = 2.0
    k_range: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    a_max: int = 12
    kmeans_restarts: int = 10
    stage_lengths: tuple[int, int] = (1000, 1000)

    def __post_init__(self) -> None:
        if self.alpha_p <= 0 or self.beta_p <= 0:
            raise ValueError("pseudo-counts must be positive")
        if not self.k_range:
            raise ValueError("k_range must be non-empty")
        if self.a_max < 0 or self.kmeans_restarts < 1:
            raise ValueError("invalid candidate ranges")

    def a_range(self, n: int) -> tuple[int, ...]:
        return tuple(range(0, min(n - 1, self.a_max) + 1))


def naive_pair_probabilities(data: ComparisonDataset, alpha_p: float = 2.0, beta_p: float = 2.0) -> np.ndarray:
    """Beta-regularised empirical win probabilities, as an n x n table.

    Entry (i, j) is (w_ij + alpha_p) / (n_ij + alpha_p + beta_p); pairs
    never compared sit at the prior mean.  The regularisation keeps every
    entry strictly inside (0, 1).
    """
    n = data.n
    p = np.full((n, n), alpha_p / (alpha_p + beta_p))
    for c in range(data.pair_i.shape[0]):
        i, j = int(data.pair_i[c]), int(data.pair_j[c])
        w, m = float(data.wins[c]), float(data.totals[c])
        p[i, j] = (w + alpha_p) / (m + alpha_p + beta_p)
        p[j, i] = (m - w + alpha_p) / (m + alpha_p + beta_p)
    np.fill_diagonal(p, np.nan)
    return p


def empirical_intransitivity(naive: np.ndarray, bt: np.ndarray) -> np.ndarray:
    """Log-odds displacement of the observed table from the baseline table.

    Antisymmetric by construction; requires both tables strictly inside
    (0, 1) off the diagonal.
    """
    if naive.shape != bt.shape:
        raise ValueError("tables must share a shape")
    off = ~np.eye(naive.shape[0], dtype=bool)
    for name, tab in (("naive", naive), ("baseline", bt)):
        vals = tab[off]
        if np.any(vals <= 0.0) or np.any(vals >= 1.0):
            raise ValueError(f"{name} table has entries on the boundary")
    logit = lambda x: np.log(x) - np.log1p(-x)
    out = np.where(off, logit(np.where(off, naive, 0.5)) - logit(np.where(off, bt, 0.5)), np.nan)
    return out


def kmeans_1d(values: np.ndarray, k: int, restarts: int = 10, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm on a 1-d sample; best of ``restarts`` random starts.

    Returns (sorted centers, assignment into them).  Requires k distinct
    values at least.
    """
    values = np.asarray(values, dtype=np.float64)
    uniq = np.unique(values)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > uniq.size:
        raise ValueError(f"k = {k} exceeds the {uniq.size} distinct values")
    rng = np.random.default_rng(seed)
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for _ in range(restarts):
        centers = np.sort(rng.choice(uniq, size=k, replace=False))
        for _ in range(200):
            mids = 0.5 * (centers[:-1] + centers[1:])
            assign = np.searchsorted(mids, values)
            new_centers = centers.copy()
            for c in range(k):
                members = values[assign == c]
                if members.size:
                    new_centers[c] = members.mean()
            new_centers = np.sort(new_centers)
            if np.allclose(new_centers, centers, rtol=0.0, atol=1e-12):
                centers = new_centers
                break
            centers = new_centers
        mids = 0.5 * (centers[:-1] + centers[1:])
        assign = np.searchsorted(mids, values)
        wcss = float(np.sum((values - centers[assign]) ** 2))
        if best is None or wcss < best[0] - 1e-15:
            best = (wcss, centers, assign)
    assert best is not None
    return best[1], best[2]


def _loglik_arrays(data: ComparisonDataset, theta_by_slot: np.ndarray, theta_levels: np.ndarray, r: np.ndarray) -> float:
    layout = data.layout
    slots = np.array([layout.slot(int(i), int(j)) for i, j in zip(data.pair_i, data.pair_j)], dtype=np.int32)
    return float(
        kernels.dataset_loglik(
            slots,
            data.pair_i.astype(np.int32),
            data.pair_j.astype(np.int32),
            data.wins.astype(np.float64),
            data.totals.astype(np.float64),
            np.ascontiguousarray(theta_by_slot, dtype=np.int32),
            np.ascontiguousarray(theta_levels, dtype=np.float64),
            np.ascontiguousarray(r, dtype=np.float64),
        )
    )


def _cluster_intransitivity(theta_hat: np.ndarray, se: np.ndarray, k: int, restarts: int, seed: int):
    """Signed clustering of the free-pair displacements into k positive levels.

    Clusters |theta_hat|; a pair falls into the zero level when its
    magnitude sits below half the smallest center or below twice its own
    standard error (without the noise floor the allocation chases the
    noise signs and the level count is never pruned), and otherwise takes
    the sign of its displacement.  Degenerate (non-positive) centers
    dissolve into the zero level.
    """
    n_free = theta_hat.shape[0]
    if k == 0 or n_free == 0:
        return np.zeros(0), np.zeros(n_free, dtype=np.int32)
    magnitudes = np.abs(theta_hat)
    k_eff = min(k, np.unique(magnitudes).size)
    centers, assign = kmeans_1d(magnitudes, k_eff, restarts=restarts, seed=seed)
    keep = centers > 1e-8
    centers_kept = centers[keep]
    remap = np.cumsum(keep) - 1
    # merge any duplicated centers so the level sequence stays strictly ordered
    if centers_kept.size:
        uniq, inverse = np.unique(centers_kept, return_inverse=True)
        centers_kept = uniq
        remap = inverse[remap]
    labels = np.zeros(n_free, dtype=np.int32)
    for f in range(n_free):
        c = assign[f]
        if not keep[c]:
            continue
        if magnitudes[f] < max(0.5 * centers_kept[0], 2.0 * se[f]):
            continue
        labels[f] = (remap[c] + 1) * (1 if theta_hat[f] >= 0 else -1)
    return centers_kept, labels


def _cluster_skills(r_bt: np.ndarray, a: int, restarts: int, seed: int):
    """Cluster the baseline skills into a+1 levels with the reference level at 0."""
    n = r_bt.shape[0]
    if a == 0:
        return np.zeros(1), 0, np.zeros(n, dtype=np.int32)
    centers, assign = kmeans_1d(r_bt, a + 1, restarts=restarts, seed=seed)
    ref_cluster = int(assign[0])
    centers = centers.copy()
    centers[ref_cluster] = 0.0
    # collapse any center that now coincides with the pinned zero
    for c in range(centers.size):
        if c != ref_cluster and abs(centers[c]) < 1e-9:
            assign[assign == c] = ref_cluster
    used = np.unique(assign)
    centers = centers[used]
    remap = {int(old): new for new, old in enumerate(used)}
    assign = np.array([remap[int(c)] for c in assign], dtype=np.int32)
    # sort levels, merging any exact duplicates to keep the ordering strict
    phi, inverse = np.unique(centers, return_inverse=True)
    y = inverse[assign].astype(np.int32)
    zero_index = int(np.nonzero(phi == 0.0)[0][0])
    return phi, zero_index, y


def select_by_bic(
    data: ComparisonDataset,
    bt_fit: BtFit,
    config: InitConfig,
    seed: int = 0,
) -> ModelState:
    """Two-phase BIC selection of the starting state.

    Phase one scores the intransitivity level count against the raw
    baseline skills; phase two, conditional on the winner, scores the
    skill level count.  BIC = -2 loglik + p log(#comparisons) with p the
    number of level values (K + A).
    """
    layout = data.layout
    n_obs = max(data.n_comparisons, 1)
    log_n = math.log(n_obs)
    naive = naive_pair_probabilities(data, config.alpha_p, config.beta_p)
    bt_probs = bt_pairwise_probabilities(bt_fit)
    theta_hat_full = empirical_intransitivity(naive, bt_probs)
    theta_hat = np.array([theta_hat_full[i, j] for i, j in layout.free_pairs])

    # standard error of each displacement; pairs never compared get no signal
    counts = {}
    for c in range(data.pair_i.shape[0]):
        counts[(int(data.pair_i[c]), int(data.pair_j[c]))] = float(data.totals[c])
    se = np.empty(len(layout.free_pairs))
    for f, (i, j) in enumerate(layout.free_pairs):
        m = counts.get((i, j), 0.0)
        if m <= 0:
            se[f] = np.inf
        else:
            p = naive[i, j]
            se[f] = 1.0 / math.sqrt((m + config.alpha_p + config.beta_p) * p * (1.0 - p))

    best_k: tuple[float, np.ndarray, np.ndarray] | None = None
    for k in config.k_range:
        theta_levels, labels = _cluster_intransitivity(theta_hat, se, k, config.kmeans_restarts, seed)
        ll = _loglik_arrays(data, labels, theta_levels, bt_fit.skills)
        bic = -2.0 * ll + theta_levels.shape[0] * log_n
        if best_k is None or bic < best_k[0] - 1e-12:
            best_k = (bic, theta_levels, labels)
    assert best_k is not None
    _, theta_levels, labels = best_k

    best_a: tuple[float, np.ndarray, int, np.ndarray] | None = None
    for a in config.a_range(data.n):
        if a + 1 > np.unique(bt_fit.skills).size:
            continue
        phi, zero_index, y = _cluster_skills(bt_fit.skills, a, config.kmeans_restarts, seed)
        r = phi[y]
        ll = _loglik_arrays(data, labels, theta_levels, r)
        bic = -2.0 * ll + (theta_levels.shape[0] + phi.shape[0] - 1) * log_n
        if best_a is None or bic < best_a[0] - 1e-12:
            best_a = (bic, phi, zero_index, y)
    assert best_a is not None
    _, phi, zero_index, y = best_a

    state = ModelState(
        skills=SkillClustering(phi=phi, zero_index=zero_index, allocation=y),
        intrans=IntransitivityClustering(theta=theta_levels, allocation=labels, layout=layout),
    )
    validate_state(state)
    return state


def staged_warmup(
    state: ModelState,
    data: ComparisonDataset,
    h: Hyperparameters,
    config: InitConfig,
    seed: int,
) -> ModelState:
    """Two restricted chains before the full run.

    Stage one updates only the level values (allocations and dimensions
    fixed); stage two additionally reallocates pairs and objects.  Both
    stages keep the dimensions (K, A) untouched.
    """
    stage1, stage2 = config.stage_lengths
    current = state
    if stage1 > 0:
        schedule = SamplerSchedule(
            iterations=0,
            burn_in=stage1,
            thin=1,
            move_probabilities={"update_levels": 1.0},
            adapt_burnin=True,
        )
        current = run_chain(current, data, h, schedule, seed).final_state
    if stage2 > 0:
        schedule = SamplerSchedule(
            iterations=0,
            burn_in=stage2,
            thin=1,
            move_probabilities={"update_levels": 0.5, "reallocate": 0.5},
            adapt_burnin=True,
        )
        current = run_chain(current, data, h, schedule, seed + 1).final_state
    return current


def build_initial_state(
    data: ComparisonDataset,
    bt_fit: BtFit,
    h: Hyperparameters,
    config: InitConfig,
    seed: int,
) -> ModelState:
    """BIC selection followed by the staged warmup."""
    state = select_by_bic(data, bt_fit, config, seed)
    return staged_warmup(state, data, h, config, seed)
