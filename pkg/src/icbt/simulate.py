"""Synthetic tournament generation from a ground-truth state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ComparisonDataset, PairLayout
from .model import ModelState, SkillClustering, IntransitivityClustering, validate_state

__all__ = ["TournamentSpec", "simulate_round_robin", "scenario_preset", "object_labels"]

_SCENARIO_THETA = {
    1: (),
    2: (0.7,),
    3: (0.5, 0.9),
    4: (0.4, 0.8, 1.2),
}


@dataclass(frozen=True)
class TournamentSpec:
    """An m-fold round robin: every pair meets exactly m times."""

    n: int
    m: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2 or self.m < 1:
            raise ValueError("need n >= 2 objects and m >= 1 rounds")


def object_labels(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"t{i + 1:0{width}d}" for i in range(n)]


def simulate_round_robin(truth: ModelState, spec: TournamentSpec) -> ComparisonDataset:
    """Bernoulli outcomes for m meetings of every pair under the truth state.

    Object position p of the truth state gets label ``t<p+1>``; the
    reference object is the lexicographically first label, so refitting
    the simulated data reproduces the truth state's pinned-pair layout.
    """
    if truth.n != spec.n:
        raise ValueError("truth state and spec disagree on the number of objects")
    rng = np.random.default_rng(spec.seed)
    labels = object_labels(spec.n)
    r = truth.skills.skills()
    comparisons: list[tuple[str, str]] = []
    for i in range(spec.n):
        for j in range(i):
            p_ij = 1.0 / (1.0 + np.exp(-(truth.intrans.level_of(i, j) + r[i] - r[j])))
            wins_i = rng.random(spec.m) < p_ij
            for won in wins_i:
                if won:
                    comparisons.append((labels[i], labels[j]))
                else:
                    comparisons.append((labels[j], labels[i]))
    return ComparisonDataset.from_comparisons(comparisons, objects=labels)


def scenario_preset(
    scenario: int,
    seed: int,
    *,
    n: int = 20,
    skill_sd: float = 1.0,
    min_level_gap: float = 0.2,
) -> ModelState:
    """Ground-truth states for the four simulation scenarios.

    n/2 skill levels (one pinned at zero, the rest standard-normal scaled
    by ``skill_sd``, redrawn until consecutive levels sit at least
    ``min_level_gap`` apart so the clusters are actually distinct) with
    objects assigned two per level; scenario k has k intransitivity levels
    (0: none, then (0.7), (0.5, 0.9) and (0.4, 0.8, 1.2)) with the free
    pairs allocated uniformly at random over the signed labels.
    """
    if scenario not in _SCENARIO_THETA:
        raise ValueError(f"scenario must be 1..4, got {scenario}")
    if n < 2 or n % 2:
        raise ValueError("n must be even and at least 2")
    rng = np.random.default_rng(seed)
    n_levels = n // 2
    for _ in range(100_000):
        free_levels = rng.normal(0.0, skill_sd, size=n_levels - 1)
        phi = np.sort(np.concatenate((free_levels, [0.0])))
        if np.all(np.diff(phi) >= min_level_gap):
            break
    else:
        raise ValueError("could not draw levels with the requested separation")
    zero_index = int(np.nonzero(phi == 0.0)[0][0])

    # two objects per level; the reference object takes one of the zero level's seats
    others = rng.permutation(np.arange(1, n))
    allocation = np.empty(n, dtype=np.int32)
    allocation[0] = zero_index
    seats: list[int] = []
    for lev in range(n_levels):
        seats.extend([lev] * (1 if lev == zero_index else 2))
    for obj, lev in zip(others, seats):
        allocation[obj] = lev

    layout = PairLayout.build(n, [(i, 0) for i in range(1, n)])
    theta = np.array(_SCENARIO_THETA[scenario], dtype=np.float64)
    k = theta.shape[0]
    z = rng.integers(-k, k + 1, size=layout.n_free).astype(np.int32) if k else np.zeros(
        layout.n_free, dtype=np.int32
    )
    state = ModelState(
        skills=SkillClustering(phi=phi, zero_index=zero_index, allocation=allocation),
        intrans=IntransitivityClustering(theta=theta, allocation=z, layout=layout),
    )
    validate_state(state)
    return state
