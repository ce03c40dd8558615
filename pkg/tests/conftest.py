import numpy as np
import pytest

from icbt.data import ComparisonDataset, PairLayout
from icbt.model import IntransitivityClustering, ModelState, SkillClustering


def star_layout(n: int) -> PairLayout:
    return PairLayout.build(n, [(i, 0) for i in range(1, n)])


def make_state(n, phi, zero_index, y, theta, z) -> ModelState:
    layout = star_layout(n)
    return ModelState(
        skills=SkillClustering(
            phi=np.asarray(phi, dtype=np.float64),
            zero_index=zero_index,
            allocation=np.asarray(y, dtype=np.int32),
        ),
        intrans=IntransitivityClustering(
            theta=np.asarray(theta, dtype=np.float64),
            allocation=np.asarray(z, dtype=np.int32),
            layout=layout,
        ),
    )


def random_state(rng, n=5, k_max=3, a_max=2) -> ModelState:
    layout = star_layout(n)
    k = int(rng.integers(0, k_max + 1))
    theta = np.sort(rng.uniform(0.1, 3.0, size=k))
    while k and np.any(np.diff(theta) < 1e-6):
        theta = np.sort(rng.uniform(0.1, 3.0, size=k))
    z = rng.integers(-k, k + 1, size=layout.n_free).astype(np.int32) if k else np.zeros(
        layout.n_free, dtype=np.int32
    )
    a = int(rng.integers(0, a_max + 1))
    free_levels = rng.normal(0.0, 1.5, size=a)
    phi = np.sort(np.concatenate((free_levels, [0.0])))
    while np.unique(phi).size != a + 1:
        free_levels = rng.normal(0.0, 1.5, size=a)
        phi = np.sort(np.concatenate((free_levels, [0.0])))
    zero_index = int(np.nonzero(phi == 0.0)[0][0])
    y = rng.integers(0, a + 1, size=n).astype(np.int32)
    y[0] = zero_index
    return make_state(n, phi, zero_index, y, theta, z)


def empty_dataset(n: int) -> ComparisonDataset:
    labels = [f"o{i:02d}" for i in range(n)]
    return ComparisonDataset.from_comparisons([], objects=labels)


def round_robin_dataset(rng, state: ModelState, m: int) -> ComparisonDataset:
    """Small Bernoulli round robin drawn directly from a state's probabilities."""
    n = state.n
    labels = [f"o{i:02d}" for i in range(n)]
    r = state.skills.skills()
    comparisons = []
    for i in range(n):
        for j in range(i):
            p = 1.0 / (1.0 + np.exp(-(state.intrans.level_of(i, j) + r[i] - r[j])))
            for _ in range(m):
                if rng.random() < p:
                    comparisons.append((labels[i], labels[j]))
                else:
                    comparisons.append((labels[j], labels[i]))
    return ComparisonDataset.from_comparisons(comparisons, objects=labels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
