"""Model state and probability operations.

The model extends Bradley-Terry win probabilities with a per-pair
intransitivity offset on the logit scale:

    p_ik = logistic(theta_ik + r_i - r_k)

Object skills r are clustered into ordered levels ``phi`` (one pinned to
zero, holding the reference object), and the pairwise offsets theta are
clustered into ordered positive levels ``theta`` with mirrored negative
twins and a zero level.  Pairs in the pinned layout always carry offset
zero, which keeps the parametrisation identifiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import ComparisonDataset, PairLayout
from .errors import DataError, InvariantError

__all__ = [
    "bt_probability",
    "probability_from_bt_and_theta",
    "icbt_probability",
    "transitive_bridge",
    "SkillClustering",
    "IntransitivityClustering",
    "ModelState",
    "skill_of",
    "theta_of",
    "log_likelihood",
    "pairwise_probability_matrix",
    "validate_state",
]


def _require_finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


def log_sigmoid(x: np.ndarray | float):
    """Numerically stable log(logistic(x))."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def bt_probability(r_i: float, r_k: float) -> float:
    """Bradley-Terry probability that an object with skill r_i beats one with r_k."""
    _require_finite(r_i=r_i, r_k=r_k)
    return float(1.0 / (1.0 + math.exp(-(r_i - r_k))))


def probability_from_bt_and_theta(p_bt: float, theta: float) -> float:
    """Shift a Bradley-Terry probability by an intransitivity offset.

    Computed as logistic(logit(p_bt) + theta), algebraically equal to
    p_bt * e^theta / (p_bt * e^theta + 1 - p_bt).  Reduces to p_bt at
    theta = 0.
    """
    if not 0.0 < p_bt < 1.0:
        raise ValueError(f"p_bt must lie strictly inside (0, 1), got {p_bt!r}")
    _require_finite(theta=theta)
    logit = math.log(p_bt) - math.log1p(-p_bt)
    return float(1.0 / (1.0 + math.exp(-(logit + theta))))


def icbt_probability(theta_ik: float, r_i: float, r_k: float) -> float:
    """Win probability under skills (r_i, r_k) and pair offset theta_ik."""
    _require_finite(theta_ik=theta_ik, r_i=r_i, r_k=r_k)
    return float(1.0 / (1.0 + math.exp(-(theta_ik + r_i - r_k))))


def transitive_bridge(p_ij: float, p_jk: float) -> float:
    """Probability of i beating k implied by p_ij and p_jk under pure Bradley-Terry.

    The bridge value is independent of the choice of middle object j; any
    fully transitive probability matrix satisfies it exactly.
    """
    for name, p in (("p_ij", p_ij), ("p_jk", p_jk)):
        if not 0.0 < p < 1.0:
            raise ValueError(f"{name} must lie strictly inside (0, 1), got {p!r}")
    return p_ij * p_jk / (1.0 + 2.0 * p_ij * p_jk - (p_ij + p_jk))


@dataclass(frozen=True)
class SkillClustering:
    """Ordered skill levels and the per-object allocation.

    ``phi`` is strictly increasing and contains 0.0 at ``zero_index``
    (so A_minus = zero_index levels are negative and the rest positive).
    ``allocation`` holds a level offset 0..A for every object; the
    reference object (position 0) always sits at ``zero_index``.
    """

    phi: np.ndarray
    zero_index: int
    allocation: np.ndarray

    @property
    def a(self) -> int:
        """Number of unknown (non-zero) skill levels."""
        return len(self.phi) - 1

    @property
    def a_minus(self) -> int:
        return self.zero_index

    @property
    def a_plus(self) -> int:
        return len(self.phi) - 1 - self.zero_index

    @property
    def n(self) -> int:
        return int(self.allocation.shape[0])

    def label_of(self, obj: int) -> int:
        """Signed cluster label of an object (0 is the pinned level)."""
        return int(self.allocation[obj]) - self.zero_index

    def skill(self, obj: int) -> float:
        return float(self.phi[self.allocation[obj]])

    def skills(self) -> np.ndarray:
        return self.phi[self.allocation]


@dataclass(frozen=True)
class IntransitivityClustering:
    """Ordered positive intransitivity levels and the free-pair allocation.

    ``allocation`` holds a signed label in -K..K for every free pair of the
    layout; the mirrored orientation of a pair carries the negated label by
    construction, and pinned pairs always carry label 0.
    """

    theta: np.ndarray
    allocation: np.ndarray
    layout: PairLayout

    @property
    def k(self) -> int:
        return len(self.theta)

    def label_of(self, i: int, j: int) -> int:
        """Signed label of the ordered pair (i, j)."""
        if i == j:
            raise ValueError("a pair needs two distinct objects")
        slot = self.layout.slot(i, j)
        if slot < 0:
            return 0
        label = int(self.allocation[slot])
        return label if i > j else -label

    def level_of(self, i: int, j: int) -> float:
        label = self.label_of(i, j)
        if label == 0:
            return 0.0
        return float(self.theta[abs(label) - 1]) * (1.0 if label > 0 else -1.0)

    def signed_levels(self) -> np.ndarray:
        """Per-slot offset values for the canonical (i > j) orientation."""
        padded = np.concatenate(([0.0], self.theta))
        return np.sign(self.allocation) * padded[np.abs(self.allocation)]


@dataclass(frozen=True)
class ModelState:
    """Full parameter tuple: skill clustering plus intransitivity clustering."""

    skills: SkillClustering
    intrans: IntransitivityClustering

    @property
    def n(self) -> int:
        return self.skills.n

    @classmethod
    def transitive(cls, layout: PairLayout) -> "ModelState":
        """The pure Bradley-Terry reduction: no levels at all."""
        skills = SkillClustering(
            phi=np.zeros(1),
            zero_index=0,
            allocation=np.zeros(layout.n, dtype=np.int32),
        )
        intrans = IntransitivityClustering(
            theta=np.zeros(0),
            allocation=np.zeros(layout.n_free, dtype=np.int32),
            layout=layout,
        )
        return cls(skills=skills, intrans=intrans)


def skill_of(state: ModelState, i: int) -> float:
    """Skill of object position i; exactly 0 for the reference object."""
    return state.skills.skill(i)


def theta_of(state: ModelState, i: int, k: int) -> float:
    """Intransitivity offset of the ordered pair (i, k); antisymmetric exactly."""
    return state.intrans.level_of(i, k)


def log_likelihood(state: ModelState, data: ComparisonDataset) -> float:
    """Bernoulli log likelihood of the comparisons under the state.

    Evaluated through stable log-sigmoid terms so extreme logits never
    produce a materialised 0 or 1 probability.
    """
    if data.n != state.n:
        label = data.objects.label(min(state.n, data.n - 1)) if data.n > state.n else "?"
        raise DataError(
            f"dataset has {data.n} objects but the state covers {state.n}"
            + (f" (first unknown object: {label!r})" if data.n > state.n else "")
        )
    if data.pair_i.size == 0:
        return 0.0
    r = state.skills.skills()
    slots = np.array(
        [state.intrans.layout.slot(int(i), int(j)) for i, j in zip(data.pair_i, data.pair_j)],
        dtype=np.int64,
    )
    signed = state.intrans.signed_levels()
    th = np.zeros(slots.shape[0])
    free_mask = slots >= 0
    if np.any(free_mask):
        th[free_mask] = signed[slots[free_mask]]
    eta = th + r[data.pair_i] - r[data.pair_j]
    ll = data.wins * log_sigmoid(eta) + (data.totals - data.wins) * log_sigmoid(-eta)
    return float(np.sum(ll))


def pairwise_probability_matrix(state: ModelState) -> np.ndarray:
    """n x n win-probability table; the diagonal is undefined (NaN)."""
    n = state.n
    r = state.skills.skills()
    eta = r[:, None] - r[None, :]
    for i in range(n):
        for j in range(i):
            t = state.intrans.level_of(i, j)
            eta[i, j] += t
            eta[j, i] -= t
    p = 1.0 / (1.0 + np.exp(-eta))
    np.fill_diagonal(p, np.nan)
    return p


def validate_state(state: ModelState, *, atol: float = 0.0) -> None:
    """Raise InvariantError if any structural invariant is broken.

    Checks the strict ordering of both level sequences, the pinned zero
    level and reference allocation, label ranges, and the agreement of the
    allocation vectors with the pair layout.
    """
    sk, it = state.skills, state.intrans
    problems = []
    if not (0 <= sk.zero_index < len(sk.phi)):
        problems.append("zero_index outside phi")
    elif sk.phi[sk.zero_index] != 0.0:
        problems.append(f"phi[{sk.zero_index}] = {sk.phi[sk.zero_index]!r}, expected exactly 0.0")
    if np.any(np.diff(sk.phi) <= atol):
        problems.append(f"phi not strictly increasing: {sk.phi!r}")
    if sk.allocation.shape[0] != it.layout.n:
        problems.append("skill allocation length disagrees with the layout")
    if np.any(sk.allocation < 0) or np.any(sk.allocation >= len(sk.phi)):
        problems.append("skill allocation outside level range")
    if sk.allocation.shape[0] and sk.allocation[0] != sk.zero_index:
        problems.append("reference object not allocated to the zero level")
    if it.k:
        if it.theta[0] <= 0.0:
            problems.append(f"theta must be strictly positive: {it.theta!r}")
        if np.any(np.diff(it.theta) <= atol):
            problems.append(f"theta not strictly increasing: {it.theta!r}")
    if it.allocation.shape[0] != it.layout.n_free:
        problems.append("pair allocation length disagrees with the layout")
    if np.any(np.abs(it.allocation) > it.k):
        problems.append("pair allocation outside -K..K")
    if problems:
        raise InvariantError("; ".join(problems) + f"\nstate: {state!r}")
