"""Pairwise comparison data.

Holds the object index (stable labels mapped to positions, with the
reference object first), aggregated win/total counts per unordered pair,
and the identifiability layout: the set of pairs whose intransitivity is
pinned to zero, which must form a connected graph spanning all objects.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

Pair = tuple[int, int]


def pair_id(i: int, j: int) -> int:
    """Canonical index of the unordered pair {i, j} with i > j."""
    if i < j:
        i, j = j, i
    return i * (i - 1) // 2 + j


@dataclass(frozen=True)
class ObjectIndex:
    """Bijection between external labels and positions 0..n-1.

    Position 0 is the designated reference object: its skill is pinned to
    zero and the zero-intransitivity pairs are anchored at it.  External
    one-based indices (1..n, reference = 1) are exposed via :meth:`idx`.
    """

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise DataError("duplicate object labels")
        if not self.labels:
            raise DataError("empty object set")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def reference(self) -> str:
        return self.labels[0]

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"unknown object {label!r}") from None

    def idx(self, label: str) -> int:
        """One-based index; the reference object has idx 1."""
        return self.position(label) + 1

    def label(self, position: int) -> str:
        return self.labels[position]


@dataclass(frozen=True)
class PairLayout:
    """Partition of all unordered pairs into pinned (zero) and free pairs.

    ``fixed_pairs`` always spans the n objects as a connected graph, which
    is exactly the condition for the intransitivity parameters to be
    identifiable.  Free pairs are enumerated in a canonical order; the
    allocation vector of a model state is aligned to that order.
    """

    n: int
    fixed_pairs: tuple[Pair, ...]
    free_pairs: tuple[Pair, ...] = field(repr=False)
    _slot_of: dict[int, int] = field(repr=False, hash=False, compare=False)

    @classmethod
    def build(cls, n: int, fixed_pairs: Iterable[Pair]) -> "PairLayout":
        fixed = tuple(sorted((max(i, j), min(i, j)) for (i, j) in fixed_pairs))
        fixed_ids = {pair_id(i, j) for i, j in fixed}
        if len(fixed_ids) != len(fixed):
            raise DataError("duplicate fixed pairs")
        _check_spanning(n, fixed)
        free = tuple(
            (i, j)
            for i in range(1, n)
            for j in range(i)
            if pair_id(i, j) not in fixed_ids
        )
        slot_of = {pair_id(i, j): s for s, (i, j) in enumerate(free)}
        return cls(n=n, fixed_pairs=fixed, free_pairs=free, _slot_of=slot_of)

    @property
    def n_free(self) -> int:
        return len(self.free_pairs)

    def slot(self, i: int, j: int) -> int:
        """Free-pair slot of {i, j}, or -1 if the pair is pinned."""
        return self._slot_of.get(pair_id(i, j), -1)

    def is_fixed(self, i: int, j: int) -> bool:
        return self.slot(i, j) < 0


def _check_spanning(n: int, pairs: Sequence[Pair]) -> None:
    if n == 1:
        return
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    if not all(seen):
        missing = seen.index(False)
        raise DataError(f"pinned pairs do not span all objects (object position {missing} unreached)")


@dataclass(frozen=True)
class ComparisonDataset:
    """Immutable set of binary paired comparisons plus aggregated counts.

    ``winners``/``losers`` store one entry per comparison (positions into
    ``objects``).  ``pair_i > pair_j`` enumerate the compared unordered
    pairs, with ``wins`` counting victories of ``pair_i`` over ``pair_j``
    out of ``totals`` meetings.
    """

    objects: ObjectIndex
    winners: np.ndarray
    losers: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    wins: np.ndarray
    totals: np.ndarray
    layout: PairLayout

    @property
    def n(self) -> int:
        return self.objects.n

    @property
    def n_comparisons(self) -> int:
        return int(self.winners.shape[0])

    @classmethod
    def from_comparisons(
        cls,
        comparisons: Iterable[tuple[str, str]],
        *,
        objects: Sequence[str] | None = None,
        reference: str | None = None,
    ) -> "ComparisonDataset":
        """Build a dataset from (winner_label, loser_label) records.

        The reference object defaults to the one with the most distinct
        opponents (ties broken by label).  If it met every other object the
        pinned pairs are the star around it; otherwise they are a
        breadth-first spanning tree of the comparison graph.  A comparison
        graph that does not connect all objects is rejected.  An empty
        comparison list is allowed (prior-only runs) when ``objects`` is
        given explicitly; the pinned pairs are then the star around the
        reference.
        """
        pairs = [(str(w), str(l)) for w, l in comparisons]
        for w, l in pairs:
            if w == l:
                raise DataError(f"object {w!r} compared with itself")
        seen = sorted({x for p in pairs for x in p})
        if objects is not None:
            labels = [str(x) for x in objects]
            extra = set(seen) - set(labels)
            if extra:
                raise DataError(f"comparisons mention unknown objects: {sorted(extra)}")
        else:
            labels = seen
        if not labels:
            raise DataError("no objects")

        opponents: dict[str, set[str]] = {x: set() for x in labels}
        for w, l in pairs:
            opponents[w].add(l)
            opponents[l].add(w)
        if reference is None:
            reference = min(labels, key=lambda x: (-len(opponents[x]), x))
        elif reference not in labels:
            raise DataError(f"reference {reference!r} is not an object")

        ordered = [reference] + sorted(x for x in labels if x != reference)
        index = ObjectIndex(tuple(ordered))
        pos = {x: k for k, x in enumerate(ordered)}
        n = len(ordered)

        winners = np.array([pos[w] for w, _ in pairs], dtype=np.int32)
        losers = np.array([pos[l] for _, l in pairs], dtype=np.int32)

        fixed = _pinned_pairs(n, winners, losers, has_data=bool(pairs))
        layout = PairLayout.build(n, fixed)
        pi, pj, w_arr, m_arr = _aggregate(winners, losers)
        return cls(
            objects=index,
            winners=winners,
            losers=losers,
            pair_i=pi,
            pair_j=pj,
            wins=w_arr,
            totals=m_arr,
            layout=layout,
        )

    def subset(self, indices: np.ndarray) -> "ComparisonDataset":
        """Dataset restricted to the given comparison indices.

        Objects and the pinned-pair layout are inherited from the parent,
        so train/test partitions stay mutually consistent.
        """
        winners = self.winners[indices]
        losers = self.losers[indices]
        pi, pj, w_arr, m_arr = _aggregate(winners, losers)
        return ComparisonDataset(
            objects=self.objects,
            winners=winners,
            losers=losers,
            pair_i=pi,
            pair_j=pj,
            wins=w_arr,
            totals=m_arr,
            layout=self.layout,
        )

    def realign(self, other: "ComparisonDataset") -> "ComparisonDataset":
        """Rebuild ``other``'s comparisons on this dataset's index and layout.

        Used to score a separately loaded test file against a model fitted
        on this dataset: object positions and the pinned-pair layout must
        agree for the probability tables to line up.
        """
        pos = {x: k for k, x in enumerate(self.objects.labels)}
        try:
            winners = np.array(
                [pos[other.objects.labels[w]] for w in other.winners.tolist()], dtype=np.int32
            )
            losers = np.array(
                [pos[other.objects.labels[l]] for l in other.losers.tolist()], dtype=np.int32
            )
        except KeyError as err:
            raise DataError(f"test data mentions unknown object {err}") from None
        pi, pj, w_arr, m_arr = _aggregate(winners, losers)
        return ComparisonDataset(
            objects=self.objects,
            winners=winners,
            losers=losers,
            pair_i=pi,
            pair_j=pj,
            wins=w_arr,
            totals=m_arr,
            layout=self.layout,
        )

    def win_count(self, i: int, j: int) -> tuple[float, float]:
        """(wins of i over j, total meetings) for positions i, j."""
        mask = (self.pair_i == max(i, j)) & (self.pair_j == min(i, j))
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            return 0.0, 0.0
        k = int(idx[0])
        w, m = float(self.wins[k]), float(self.totals[k])
        if i > j:
            return w, m
        return m - w, m


def _aggregate(winners: np.ndarray, losers: np.ndarray):
    counts: dict[tuple[int, int], list[float]] = {}
    for w, l in zip(winners.tolist(), losers.tolist()):
        i, j = (w, l) if w > l else (l, w)
        rec = counts.setdefault((i, j), [0.0, 0.0])
        rec[1] += 1.0
        if w == i:
            rec[0] += 1.0
    keys = sorted(counts)
    pi = np.array([k[0] for k in keys], dtype=np.int32)
    pj = np.array([k[1] for k in keys], dtype=np.int32)
    w_arr = np.array([counts[k][0] for k in keys], dtype=np.float64)
    m_arr = np.array([counts[k][1] for k in keys], dtype=np.float64)
    return pi, pj, w_arr, m_arr


def _pinned_pairs(n: int, winners: np.ndarray, losers: np.ndarray, has_data: bool) -> list[Pair]:
    """Star around the reference when possible, else a BFS spanning tree."""
    if not has_data:
        return [(i, 0) for i in range(1, n)]
    adj: list[set[int]] = [set() for _ in range(n)]
    for w, l in zip(winners.tolist(), losers.tolist()):
        adj[w].add(l)
        adj[l].add(w)
    if len(adj[0]) == n - 1:
        return [(i, 0) for i in range(1, n)]
    parent = [-1] * n
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in sorted(adj[v]):
            if not seen[w]:
                seen[w] = True
                parent[w] = v
                queue.append(w)
    if not all(seen):
        missing = seen.index(False)
        raise DataError(
            f"comparison graph is disconnected (object position {missing} unreachable from the reference)"
        )
    return [(max(v, parent[v]), min(v, parent[v])) for v in order[1:]]
