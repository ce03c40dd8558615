"""Split-merge reversible-jump MCMC over the clustered model.

Move families per iteration: bounded random-walk updates of the level
values (on a logit-transformed scale so ordering is preserved by
construction), collapsed Gibbs reallocation of pairs and objects,
split/merge of levels (trans-dimensional, driven by a scaled chi-square
auxiliary variable), and add/delete of empty levels.

Symmetry is structural: only the canonical (i > j) orientation of each
free pair carries a label, and every update of a positive intransitivity
level is automatically an update of its mirrored negative twin.  The
acceptance ratios include the change-of-variables terms of the level
transforms; their correctness is established behaviourally by the
prior-only marginal oracles and the micro-instance enumeration oracle in
the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
from scipy.special import gammaincinv, gammaln, ndtr, ndtri
from scipy.special import gammainc

from . import kernels
from .data import ComparisonDataset, PairLayout
from .errors import InvariantError
from .model import (
    IntransitivityClustering,
    ModelState,
    SkillClustering,
    validate_state,
)
from .priors import (
    Hyperparameters,
    log_dma_intransitivity,
    log_dma_skill,
    log_prior_A,
    log_prior_K,
    log_prior_phi,
    log_prior_theta,
)

__all__ = [
    "SamplerSchedule",
    "SampleRecord",
    "ChainSamples",
    "run_chain",
    "matching_transform",
    "matching_inverse",
    "mh_update_theta_level",
    "mh_update_phi_level",
    "gibbs_reallocate_pair",
    "gibbs_reallocate_object",
    "split_intransitivity",
    "merge_intransitivity",
    "split_skill",
    "merge_skill",
    "add_empty_intransitivity",
    "delete_empty_intransitivity",
    "add_empty_skill",
    "delete_empty_skill",
]

MOVE_NAMES = (
    "update_levels",
    "reallocate",
    "split_merge_theta",
    "split_merge_phi",
    "add_delete_theta",
    "add_delete_phi",
)

_DEFAULT_MOVES = {
    "update_levels": 0.35,
    "reallocate": 0.35,
    "split_merge_theta": 0.10,
    "split_merge_phi": 0.10,
    "add_delete_theta": 0.05,
    "add_delete_phi": 0.05,
}

_LOG2 = math.log(2.0)
_LOG3 = math.log(3.0)


# ---------------------------------------------------------------------------
# transforms and small densities


def matching_transform(x: float, lower: float, upper: float) -> float:
    """Map x in (lower, upper) to the real line: logit((x - lower)/(upper - lower))."""
    if not lower < x < upper:
        raise ValueError(f"x must lie strictly inside ({lower}, {upper}), got {x}")
    return math.log(x - lower) - math.log(upper - x)


def matching_inverse(t: float, lower: float, upper: float) -> float:
    """Inverse of :func:`matching_transform`."""
    return lower + (upper - lower) * _expit(t)


def _expit(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _log_sig(t: float) -> float:
    if t >= 0.0:
        return -math.log1p(math.exp(-t))
    return t - math.log1p(math.exp(t))


def _log_sig_prime(t: float) -> float:
    """log of d/dt expit(t)."""
    return _log_sig(t) + _log_sig(-t)


def _gamma_logpdf(x: float, a: float, b: float) -> float:
    return a * math.log(b) - float(gammaln(a)) + (a - 1.0) * math.log(x) - b * x


def _gamma_cdf(x: float, a: float, b: float) -> float:
    if math.isinf(x):
        return 1.0
    return float(gammainc(a, b * x))


def _gamma_ppf(q: float, a: float, b: float) -> float:
    return float(gammaincinv(a, q)) / b


def _norm_logpdf(x: float, nu: float) -> float:
    return -0.5 * (x / nu) ** 2 - math.log(nu) - 0.5 * math.log(2.0 * math.pi)


def _norm_cdf(x: float, nu: float) -> float:
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    return float(ndtr(x / nu))


def _norm_ppf(q: float, nu: float) -> float:
    return float(ndtri(q)) * nu


def _scaled_chi2_logpdf(u: float, sigma: float) -> float:
    """Density of sigma times a chi-square(1) variable."""
    x = u / sigma
    return -0.5 * math.log(2.0 * math.pi * x) - 0.5 * x - math.log(sigma)


# ---------------------------------------------------------------------------
# pure level arithmetic for the trans-dimensional moves


def split_theta_levels(theta: np.ndarray, k: int, u: float) -> tuple[np.ndarray, float]:
    """Levels after splitting cluster k with auxiliary u > 0, plus the log Jacobian.

    For k = 0 the transitive cluster splits: the lower proposal stays
    pinned at zero and a single new level appears below theta_1 (requires
    K >= 1 here; the dimension-from-zero case draws the level directly).
    For k >= 1 the two proposals replace theta_k inside its neighbour
    bounds; the upper bound of the top level reflects around it.
    """
    big_k = theta.shape[0]
    if u <= 0.0:
        raise ValueError("auxiliary u must be positive")
    if k == 0:
        if big_k == 0:
            raise ValueError("splitting the transitive cluster at K = 0 has no bounds")
        th1 = float(theta[0])
        x_new = th1 * math.tanh(0.5 * u)
        if not 0.0 < x_new < th1:
            raise FloatingPointError("degenerate transitive split")
        log_jac = math.log(2.0 * th1) + _log_sig_prime(u)
        return np.concatenate(([x_new], theta)), log_jac
    idx = k - 1
    x = float(theta[idx])
    lower = float(theta[idx - 1]) if idx >= 1 else 0.0
    top = k == big_k
    if top:
        upper = 2.0 * x - lower
        t = 0.0
    else:
        upper = float(theta[idx + 1])
        t = matching_transform(x, lower, upper)
    lo = matching_inverse(t - u, lower, upper)
    hi = matching_inverse(t + u, lower, upper)
    if not lower < lo < hi < upper:
        raise FloatingPointError("degenerate split proposal")
    if top:
        log_jac = math.log(2.0 * (upper - lower)) + _log_sig_prime(u)
    else:
        log_jac = (
            math.log(2.0 * (upper - lower))
            + _log_sig_prime(t - u)
            + _log_sig_prime(t + u)
            - _log_sig_prime(t)
        )
    out = np.empty(big_k + 1)
    out[:idx] = theta[:idx]
    out[idx] = lo
    out[idx + 1] = hi
    out[idx + 2 :] = theta[idx + 1 :]
    return out, log_jac


def merge_theta_levels(theta: np.ndarray, c: int) -> tuple[np.ndarray, float, float]:
    """Inverse of :func:`split_theta_levels` for the adjacent pair (c, c+1).

    Returns the merged levels, the auxiliary u that the matching split
    would have used, and the log Jacobian of that split at the preimage.
    c = 0 merges the lowest positive level into the transitive cluster
    (requires K >= 2 here; K = 1 removes the dimension entirely).
    """
    big_k = theta.shape[0]
    if c == 0:
        if big_k < 2:
            raise ValueError("merging into the transitive cluster at K = 1 removes the dimension")
        x_rm = float(theta[0])
        th_next = float(theta[1])
        w = x_rm / th_next
        u_star = 2.0 * math.atanh(w)
        if u_star <= 0.0:
            raise FloatingPointError("degenerate transitive merge")
        log_jac = math.log(2.0 * th_next) + _log_sig_prime(u_star)
        return theta[1:].copy(), u_star, log_jac
    lo = float(theta[c - 1])
    hi = float(theta[c])
    lower = float(theta[c - 2]) if c >= 2 else 0.0
    top = c + 1 == big_k
    if top:
        upper = lo + hi - lower
        t = 0.0
        u_star = matching_transform(hi, lower, upper)
    else:
        upper = float(theta[c + 1])
        y_lo = matching_transform(lo, lower, upper)
        y_hi = matching_transform(hi, lower, upper)
        t = 0.5 * (y_lo + y_hi)
        u_star = 0.5 * (y_hi - y_lo)
    merged = matching_inverse(t, lower, upper)
    if not (lower < merged < upper and u_star > 0.0):
        raise FloatingPointError("degenerate merge preimage")
    if top:
        log_jac = math.log(2.0 * (upper - lower)) + _log_sig_prime(u_star)
    else:
        log_jac = (
            math.log(2.0 * (upper - lower))
            + _log_sig_prime(t - u_star)
            + _log_sig_prime(t + u_star)
            - _log_sig_prime(t)
        )
    out = np.empty(big_k - 1)
    out[: c - 1] = theta[: c - 1]
    out[c - 1] = merged
    out[c:] = theta[c + 1 :]
    return out, u_star, log_jac


def split_phi_levels(
    phi: np.ndarray, zero_index: int, off: int, u: float, upper_side: bool
) -> tuple[np.ndarray, int, float]:
    """Levels after splitting the level at ``off``; returns (phi', insert_pos, log_jac).

    Splitting the pinned zero level keeps zero and places one new level on
    the chosen side, inside the neighbouring interval when a neighbour
    exists on that side (the caller handles the unbounded half-line case).
    Splitting any other level mirrors the intransitivity construction,
    with reflected bounds at the extremes.
    """
    a = phi.shape[0] - 1
    if u <= 0.0:
        raise ValueError("auxiliary u must be positive")
    if off == zero_index:
        if upper_side:
            if zero_index >= a:
                raise ValueError("no neighbour above zero; draw the level directly")
            upper = float(phi[zero_index + 1])
            lower = float(phi[zero_index - 1]) if zero_index >= 1 else -upper
            t = matching_transform(0.0, lower, upper)
            x_new = matching_inverse(t + u, lower, upper)
            if not 0.0 < x_new < upper:
                raise FloatingPointError("degenerate zero split")
            log_jac = math.log(upper - lower) + _log_sig_prime(t + u)
            insert_pos = zero_index + 1
        else:
            if zero_index == 0:
                raise ValueError("no neighbour below zero; draw the level directly")
            lower = float(phi[zero_index - 1])
            upper = float(phi[zero_index + 1]) if zero_index < a else -lower
            t = matching_transform(0.0, lower, upper)
            x_new = matching_inverse(t - u, lower, upper)
            if not lower < x_new < 0.0:
                raise FloatingPointError("degenerate zero split")
            log_jac = math.log(upper - lower) + _log_sig_prime(t - u)
            insert_pos = zero_index
        out = np.insert(phi, insert_pos, x_new)
        return out, insert_pos, log_jac
    x = float(phi[off])
    if off == a:
        lower = float(phi[off - 1])
        upper = 2.0 * x - lower
        t = 0.0
    elif off == 0:
        upper = float(phi[1])
        lower = 2.0 * x - upper
        t = 0.0
    else:
        lower = float(phi[off - 1])
        upper = float(phi[off + 1])
        t = matching_transform(x, lower, upper)
    lo = matching_inverse(t - u, lower, upper)
    hi = matching_inverse(t + u, lower, upper)
    if not lower < lo < hi < upper:
        raise FloatingPointError("degenerate split proposal")
    if off == a or off == 0:
        log_jac = math.log(2.0 * (upper - lower)) + _log_sig_prime(u)
    else:
        log_jac = (
            math.log(2.0 * (upper - lower))
            + _log_sig_prime(t - u)
            + _log_sig_prime(t + u)
            - _log_sig_prime(t)
        )
    out = np.insert(phi, off, lo)
    out[off + 1] = hi
    return out, off, log_jac


def merge_phi_levels(
    phi: np.ndarray, zero_index: int, p: int
) -> tuple[np.ndarray, float, float]:
    """Inverse of :func:`split_phi_levels` for adjacent level indices (p, p+1).

    Returns the merged levels, the auxiliary the matching split would have
    used, and its log Jacobian.  When one side of the pair is the pinned
    zero the merged level is zero and the removed value determines the
    one-dimensional preimage (the caller handles the unbounded half-line
    case where no further level exists on that side).
    """
    a = phi.shape[0] - 1
    lo_i, hi_i = p, p + 1
    if zero_index in (lo_i, hi_i):
        other = hi_i if zero_index == lo_i else lo_i
        x_rm = float(phi[other])
        if other == hi_i:
            if other + 1 > a:
                raise ValueError("no neighbour above zero after the merge; direct-draw case")
            upper = float(phi[other + 1])
            lower = float(phi[zero_index - 1]) if zero_index >= 1 else -upper
            t = matching_transform(0.0, lower, upper)
            u_star = matching_transform(x_rm, lower, upper) - t
            if u_star <= 0.0:
                raise FloatingPointError("degenerate zero merge")
            log_jac = math.log(upper - lower) + _log_sig_prime(t + u_star)
        else:
            if other - 1 < 0:
                raise ValueError("no neighbour below zero after the merge; direct-draw case")
            lower = float(phi[other - 1])
            upper = float(phi[zero_index + 1]) if zero_index < a else -lower
            t = matching_transform(0.0, lower, upper)
            u_star = t - matching_transform(x_rm, lower, upper)
            if u_star <= 0.0:
                raise FloatingPointError("degenerate zero merge")
            log_jac = math.log(upper - lower) + _log_sig_prime(t - u_star)
        return np.delete(phi, other), u_star, log_jac
    lo = float(phi[lo_i])
    hi = float(phi[hi_i])
    top = hi_i == a
    bottom = lo_i == 0
    if top:
        lower = float(phi[lo_i - 1])
        upper = lo + hi - lower
        t = 0.0
        u_star = matching_transform(hi, lower, upper)
    elif bottom:
        upper = float(phi[hi_i + 1])
        lower = lo + hi - upper
        t = 0.0
        u_star = matching_transform(hi, lower, upper)
    else:
        lower = float(phi[lo_i - 1])
        upper = float(phi[hi_i + 1])
        y_lo = matching_transform(lo, lower, upper)
        y_hi = matching_transform(hi, lower, upper)
        t = 0.5 * (y_lo + y_hi)
        u_star = 0.5 * (y_hi - y_lo)
    merged = matching_inverse(t, lower, upper)
    if not (lower < merged < upper and u_star > 0.0):
        raise FloatingPointError("degenerate merge preimage")
    if top or bottom:
        log_jac = math.log(2.0 * (upper - lower)) + _log_sig_prime(u_star)
    else:
        log_jac = (
            math.log(2.0 * (upper - lower))
            + _log_sig_prime(t - u_star)
            + _log_sig_prime(t + u_star)
            - _log_sig_prime(t)
        )
    out = np.delete(phi, hi_i)
    out[lo_i] = merged
    return out, u_star, log_jac


# ---------------------------------------------------------------------------
# schedule, records and chain output


@dataclass(frozen=True)
class SamplerSchedule:
    """Move mix, proposal scales and chain lengths.

    ``iterations`` counts post-burn-in sampling iterations; every
    ``thin``-th of them is recorded.  Robbins-Monro step adaptation toward
    30% acceptance runs during burn-in only when ``adapt_burnin`` is set,
    so the recorded part of the chain has fixed proposal scales.  The
    optional level caps restrict the explored dimensions (used by the
    enumeration oracle); proposals beyond a cap are rejected.
    """

    iterations: int = 100_000
    burn_in: int = 20_000
    thin: int = 10
    move_probabilities: dict[str, float] = field(default_factory=lambda: dict(_DEFAULT_MOVES))
    rw_step_theta: float = 0.5
    rw_step_phi: float = 0.5
    sigma_split: float = 1.0
    adapt_burnin: bool = True
    max_theta_levels: int | None = None
    max_skill_levels: int | None = None
    debug_validate: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 0 or self.burn_in < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        for name in ("rw_step_theta", "rw_step_phi", "sigma_split"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        unknown = set(self.move_probabilities) - set(MOVE_NAMES)
        if unknown:
            raise ValueError(f"unknown move names: {sorted(unknown)}")
        total = sum(self.move_probabilities.values())
        if any(p < 0 for p in self.move_probabilities.values()) or abs(total - 1.0) > 1e-9:
            raise ValueError("move probabilities must be non-negative and sum to 1")


@dataclass(frozen=True)
class SampleRecord:
    """Compact snapshot of one recorded state."""

    iteration: int
    log_post: float
    k: int
    a: int
    zero_index: int
    theta: tuple[float, ...]
    phi: tuple[float, ...]
    z: np.ndarray
    y: np.ndarray

    def to_state(self, layout: PairLayout) -> ModelState:
        skills = SkillClustering(
            phi=np.asarray(self.phi, dtype=np.float64),
            zero_index=self.zero_index,
            allocation=self.y.astype(np.int32),
        )
        intrans = IntransitivityClustering(
            theta=np.asarray(self.theta, dtype=np.float64),
            allocation=self.z.astype(np.int32),
            layout=layout,
        )
        return ModelState(skills=skills, intrans=intrans)


@dataclass
class ChainSamples:
    """Recorded states, per-move acceptance statistics and the trace."""

    layout: PairLayout
    records: list[SampleRecord]
    trace: np.ndarray
    acceptance: dict[str, dict[str, int]]
    seed: int
    schedule: SamplerSchedule
    final_state: ModelState

    def __len__(self) -> int:
        return len(self.records)

    def states(self) -> Iterator[ModelState]:
        for rec in self.records:
            yield rec.to_state(self.layout)

    def k_values(self) -> np.ndarray:
        return np.array([rec.k for rec in self.records], dtype=np.int64)

    def a_values(self) -> np.ndarray:
        return np.array([rec.a for rec in self.records], dtype=np.int64)

    def log_posts(self) -> np.ndarray:
        return np.array([rec.log_post for rec in self.records])

    @classmethod
    def merged(cls, chains: Sequence["ChainSamples"]) -> "ChainSamples":
        """Pool the records of several chains (post burn-in, already thinned)."""
        if not chains:
            raise ValueError("no chains to merge")
        records = [rec for ch in chains for rec in ch.records]
        acceptance: dict[str, dict[str, int]] = {}
        for ch in chains:
            for name, stats in ch.acceptance.items():
                agg = acceptance.setdefault(name, {"attempts": 0, "accepted": 0, "infeasible": 0})
                for key in agg:
                    agg[key] += stats.get(key, 0)
        return cls(
            layout=chains[0].layout,
            records=records,
            trace=np.concatenate([ch.trace for ch in chains]),
            acceptance=acceptance,
            seed=chains[0].seed,
            schedule=chains[0].schedule,
            final_state=chains[-1].final_state,
        )


# ---------------------------------------------------------------------------
# workspace


class _Workspace:
    """Mutable arrays for one chain; exclusively owned while running."""

    def __init__(self, state: ModelState, data: ComparisonDataset):
        layout = state.intrans.layout
        if data.layout.n != layout.n:
            raise ValueError("dataset and state cover different numbers of objects")
        self.layout = layout
        self.n = layout.n
        self.n_free = layout.n_free

        free = layout.free_pairs
        self.fp_i = np.array([p[0] for p in free], dtype=np.int32)
        self.fp_j = np.array([p[1] for p in free], dtype=np.int32)
        self.fp_w = np.zeros(self.n_free)
        self.fp_m = np.zeros(self.n_free)

        self.cp_i = data.pair_i.astype(np.int32)
        self.cp_j = data.pair_j.astype(np.int32)
        self.cp_w = data.wins.astype(np.float64)
        self.cp_m = data.totals.astype(np.float64)
        self.cp_slot = np.array(
            [layout.slot(int(i), int(j)) for i, j in zip(self.cp_i, self.cp_j)], dtype=np.int32
        )
        for c, slot in enumerate(self.cp_slot):
            if slot >= 0:
                self.fp_w[slot] = self.cp_w[c]
                self.fp_m[slot] = self.cp_m[c]

        entries: list[list[tuple[int, float, float, int, int]]] = [[] for _ in range(self.n)]
        for c in range(self.cp_i.shape[0]):
            i, j = int(self.cp_i[c]), int(self.cp_j[c])
            w, m = float(self.cp_w[c]), float(self.cp_m[c])
            slot = int(self.cp_slot[c])
            entries[i].append((j, w, m, slot, 1))
            entries[j].append((i, m - w, m, slot, -1))
        counts = [len(e) for e in entries]
        self.adj_ptr = np.zeros(self.n + 1, dtype=np.int32)
        np.cumsum(counts, out=self.adj_ptr[1:])
        flat = [item for e in entries for item in e]
        self.adj_opp = np.array([f[0] for f in flat], dtype=np.int32)
        self.adj_w = np.array([f[1] for f in flat], dtype=np.float64)
        self.adj_m = np.array([f[2] for f in flat], dtype=np.float64)
        self.adj_slot = np.array([f[3] for f in flat], dtype=np.int32)
        self.adj_sign = np.array([f[4] for f in flat], dtype=np.int32)

        self.phi = np.asarray(state.skills.phi, dtype=np.float64).copy()
        self.zero_index = int(state.skills.zero_index)
        self.y = np.asarray(state.skills.allocation, dtype=np.int32).copy()
        self.r = self.phi[self.y]
        self.theta = np.asarray(state.intrans.theta, dtype=np.float64).copy()
        self.z = np.asarray(state.intrans.allocation, dtype=np.int32).copy()
        self.refresh_occupancy()
        self.ll = self.loglik()

    # -- derived quantities ------------------------------------------------

    @property
    def big_k(self) -> int:
        return int(self.theta.shape[0])

    @property
    def big_a(self) -> int:
        return int(self.phi.shape[0]) - 1

    def refresh_occupancy(self) -> None:
        k = self.big_k
        self.occ_z = np.bincount(self.z + k, minlength=2 * k + 1).astype(np.int32)
        self.occ_y = np.bincount(self.y[1:], minlength=self.phi.shape[0]).astype(np.int32)

    def loglik(self, theta=None, z=None, r=None) -> float:
        return float(
            kernels.dataset_loglik(
                self.cp_slot,
                self.cp_i,
                self.cp_j,
                self.cp_w,
                self.cp_m,
                np.ascontiguousarray(self.z if z is None else z, dtype=np.int32),
                np.ascontiguousarray(self.theta if theta is None else theta, dtype=np.float64),
                np.ascontiguousarray(self.r if r is None else r, dtype=np.float64),
            )
        )

    def log_prior(self, h: Hyperparameters, theta=None, z=None, phi=None, zero_index=None, y=None) -> float:
        theta = self.theta if theta is None else theta
        z = self.z if z is None else z
        phi = self.phi if phi is None else phi
        zero_index = self.zero_index if zero_index is None else zero_index
        y = self.y if y is None else y
        lp = log_prior_K(theta.shape[0], h.lambda_k)
        lp += log_prior_theta(theta, h.alpha, h.beta)
        lp += log_dma_intransitivity(z, h.gamma_k, theta.shape[0], include_coefficient=False)
        lp += log_prior_A(phi.shape[0] - 1, h.lambda_a, self.n, printed_normalizer=h.a_normalizer_printed)
        lp += log_prior_phi(phi, zero_index, h.nu_a, proper=True)
        lp += log_dma_skill(y[1:], h.gamma_a, phi.shape[0] - 1, include_coefficient=False)
        return lp

    def to_state(self) -> ModelState:
        skills = SkillClustering(
            phi=self.phi.copy(), zero_index=self.zero_index, allocation=self.y.copy()
        )
        intrans = IntransitivityClustering(
            theta=self.theta.copy(), allocation=self.z.copy(), layout=self.layout
        )
        return ModelState(skills=skills, intrans=intrans)

    def snapshot(self, iteration: int, log_post: float) -> SampleRecord:
        return SampleRecord(
            iteration=iteration,
            log_post=log_post,
            k=self.big_k,
            a=self.big_a,
            zero_index=self.zero_index,
            theta=tuple(self.theta.tolist()),
            phi=tuple(self.phi.tolist()),
            z=self.z.astype(np.int16),
            y=self.y.astype(np.int16),
        )

    def set_theta_state(self, theta: np.ndarray, z: np.ndarray, ll: float) -> None:
        self.theta = np.ascontiguousarray(theta, dtype=np.float64)
        self.z = np.ascontiguousarray(z, dtype=np.int32)
        self.ll = ll
        self.refresh_occupancy()

    def set_phi_state(self, phi: np.ndarray, zero_index: int, y: np.ndarray, ll: float) -> None:
        self.phi = np.ascontiguousarray(phi, dtype=np.float64)
        self.zero_index = int(zero_index)
        self.y = np.ascontiguousarray(y, dtype=np.int32)
        self.r = self.phi[self.y]
        self.ll = ll
        self.refresh_occupancy()


# ---------------------------------------------------------------------------
# the chain


class _Chain:
    def __init__(self, ws: _Workspace, h: Hyperparameters, schedule: SamplerSchedule, rng):
        self.ws = ws
        self.h = h
        self.schedule = schedule
        self.rng = rng
        self.step_theta = schedule.rw_step_theta
        self.step_phi = schedule.rw_step_phi
        self._move_names = tuple(schedule.move_probabilities)
        self._move_cum = np.cumsum([schedule.move_probabilities[m] for m in self._move_names])
        self.stats: dict[str, dict[str, int]] = {}
        self._adapt_counts = {"theta": [0, 0], "phi": [0, 0]}
        self._adapt_calls = 0
        self.lp = ws.log_prior(h)

    # -- bookkeeping ---------------------------------------------------------

    def _tally(self, name: str, accepted: bool, infeasible: bool = False) -> None:
        rec = self.stats.setdefault(name, {"attempts": 0, "accepted": 0, "infeasible": 0})
        if infeasible:
            rec["infeasible"] += 1
            return
        rec["attempts"] += 1
        if accepted:
            rec["accepted"] += 1

    def _accept(self, log_alpha: float) -> bool:
        if log_alpha >= 0.0:
            return True
        return math.log(self.rng.random()) < log_alpha

    def log_posterior(self) -> float:
        return self.ws.ll + self.lp

    # -- iteration -----------------------------------------------------------

    def iterate(self, adapting: bool = False) -> str:
        pick = int(np.searchsorted(self._move_cum, self.rng.random(), side="right"))
        move = self._move_names[min(pick, len(self._move_names) - 1)]
        if move == "update_levels":
            self._move_update_levels(adapting)
        elif move == "reallocate":
            self._move_reallocate()
        elif move == "split_merge_theta":
            if self.rng.random() < 0.5:
                self.split_theta()
            else:
                self.merge_theta()
        elif move == "split_merge_phi":
            if self.rng.random() < 0.5:
                self.split_phi()
            else:
                self.merge_phi()
        elif move == "add_delete_theta":
            if self.rng.random() < 0.5:
                self.add_theta()
            else:
                self.delete_theta()
        else:
            if self.rng.random() < 0.5:
                self.add_phi()
            else:
                self.delete_phi()
        return move

    def adapt_steps(self) -> None:
        """Robbins-Monro nudge of the random-walk scales toward 30% acceptance."""
        for key in ("theta", "phi"):
            att, acc = self._adapt_counts[key]
            if att == 0:
                continue
            rate = acc / att
            step = self.step_theta if key == "theta" else self.step_phi
            step *= math.exp((rate - 0.30) / math.sqrt(1.0 + self._adapt_calls))
            step = min(max(step, 1e-3), 50.0)
            if key == "theta":
                self.step_theta = step
            else:
                self.step_phi = step
            self._adapt_counts[key] = [0, 0]

    # -- fixed-dimension moves -------------------------------------------------

    def _move_update_levels(self, adapting: bool) -> None:
        for k in range(1, self.ws.big_k + 1):
            acc = self.mh_theta_level(k)
            if adapting:
                self._adapt_counts["theta"][0] += 1
                self._adapt_counts["theta"][1] += int(acc)
        for off in range(self.ws.phi.shape[0]):
            if off == self.ws.zero_index:
                continue
            acc = self.mh_phi_level(off)
            if adapting:
                self._adapt_counts["phi"][0] += 1
                self._adapt_counts["phi"][1] += int(acc)
        if adapting:
            self._adapt_calls += 1
            self.adapt_steps()

    def mh_theta_level(self, k: int) -> bool:
        ws, h = self.ws, self.h
        idx = k - 1
        big_k = ws.big_k
        x = float(ws.theta[idx])
        lower = float(ws.theta[idx - 1]) if idx >= 1 else 0.0
        top = k == big_k
        upper = 2.0 * x - lower if top else float(ws.theta[idx + 1])
        t = 0.0 if top else matching_transform(x, lower, upper)
        t2 = t + self.step_theta * self.rng.standard_normal()
        x2 = matching_inverse(t2, lower, upper)
        if not (lower < x2 < upper) or x2 <= 0.0:
            self._tally("theta_level", False)
            return False
        if top:
            upper2 = 2.0 * x2 - lower
            if not lower < x < upper2:
                self._tally("theta_level", False)
                return False
            t_rev = matching_transform(x, lower, upper2)
            s = self.step_theta
            corr = (
                -0.5 * (t_rev / s) ** 2
                - math.log(upper2 - lower)
                - _log_sig_prime(t_rev)
                - (-0.5 * (t2 / s) ** 2 - math.log(upper - lower) - _log_sig_prime(t2))
            )
        else:
            corr = _log_sig_prime(t2) - _log_sig_prime(t)
        d_prior = (h.alpha - 1.0) * (math.log(x2) - math.log(x)) - h.beta * (x2 - x)
        theta2 = ws.theta.copy()
        theta2[idx] = x2
        ll2 = ws.loglik(theta=theta2)
        if self._accept(ll2 - ws.ll + d_prior + corr):
            ws.theta = theta2
            ws.ll = ll2
            self.lp += d_prior
            self._tally("theta_level", True)
            return True
        self._tally("theta_level", False)
        return False

    def mh_phi_level(self, off: int) -> bool:
        ws, h = self.ws, self.h
        phi = ws.phi
        a = ws.big_a
        x = float(phi[off])
        top = off == a
        bottom = off == 0
        if top:
            lower = float(phi[off - 1])
            upper = 2.0 * x - lower
            t = 0.0
        elif bottom:
            upper = float(phi[1])
            lower = 2.0 * x - upper
            t = 0.0
        else:
            lower = float(phi[off - 1])
            upper = float(phi[off + 1])
            t = matching_transform(x, lower, upper)
        t2 = t + self.step_phi * self.rng.standard_normal()
        x2 = matching_inverse(t2, lower, upper)
        if not (lower < x2 < upper) or x2 == 0.0:
            self._tally("phi_level", False)
            return False
        s = self.step_phi
        if top:
            upper2 = 2.0 * x2 - lower
            if not lower < x < upper2:
                self._tally("phi_level", False)
                return False
            t_rev = matching_transform(x, lower, upper2)
            corr = (
                -0.5 * (t_rev / s) ** 2
                - math.log(upper2 - lower)
                - _log_sig_prime(t_rev)
                - (-0.5 * (t2 / s) ** 2 - math.log(upper - lower) - _log_sig_prime(t2))
            )
        elif bottom:
            lower2 = 2.0 * x2 - upper
            if not lower2 < x < upper:
                self._tally("phi_level", False)
                return False
            t_rev = matching_transform(x, lower2, upper)
            corr = (
                -0.5 * (t_rev / s) ** 2
                - math.log(upper - lower2)
                - _log_sig_prime(t_rev)
                - (-0.5 * (t2 / s) ** 2 - math.log(upper - lower) - _log_sig_prime(t2))
            )
        else:
            corr = _log_sig_prime(t2) - _log_sig_prime(t)
        d_prior = -(x2 * x2 - x * x) / (2.0 * h.nu_a * h.nu_a)
        r2 = ws.r.copy()
        r2[ws.y == off] = x2
        ll2 = ws.loglik(r=r2)
        if self._accept(ll2 - ws.ll + d_prior + corr):
            ws.phi = phi.copy()
            ws.phi[off] = x2
            ws.r = r2
            ws.ll = ll2
            self.lp += d_prior
            self._tally("phi_level", True)
            return True
        self._tally("phi_level", False)
        return False

    def _move_reallocate(self) -> None:
        ws = self.ws
        changed = 0
        attempts = 0
        if ws.big_k > 0 and ws.n_free > 0:
            u = self.rng.random(ws.n_free)
            changed += kernels.gibbs_pair_sweep(
                ws.fp_i, ws.fp_j, ws.fp_w, ws.fp_m, ws.z, ws.occ_z, ws.theta,
                self.h.gamma_k, ws.r, u,
            )
            attempts += ws.n_free
        if ws.big_a > 0 and ws.n > 1:
            u = self.rng.random(ws.n - 1)
            changed += kernels.gibbs_object_sweep(
                ws.adj_ptr, ws.adj_opp, ws.adj_w, ws.adj_m, ws.adj_slot, ws.adj_sign,
                ws.z, ws.theta, ws.phi, ws.y, ws.r, ws.occ_y, self.h.gamma_a, u, 1, ws.n,
            )
            attempts += ws.n - 1
        if attempts:
            ws.ll = ws.loglik()
            self.lp = ws.log_prior(self.h)
        rec = self.stats.setdefault("reallocate", {"attempts": 0, "accepted": 0, "infeasible": 0})
        rec["attempts"] += attempts
        rec["accepted"] += changed

    # -- intransitivity split/merge -------------------------------------------

    def split_theta(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        big_k = ws.big_k
        cap = self.schedule.max_theta_levels
        if cap is not None and big_k + 1 > cap:
            self._tally("split_theta", False, infeasible=True)
            return False
        k = int(rng.integers(0, big_k + 1))
        log_q_alloc = 0.0
        if k == 0:
            if big_k == 0:
                x_new = rng.gamma(h.alpha, 1.0 / h.beta)
                if x_new <= 0.0:
                    self._tally("split_theta", False)
                    return False
                theta2 = np.array([x_new])
                log_q_level = _gamma_logpdf(x_new, h.alpha, h.beta)
                log_jac = 0.0
            else:
                u = self.schedule.sigma_split * rng.chisquare(1.0)
                if u <= 0.0:
                    self._tally("split_theta", False)
                    return False
                try:
                    theta2, log_jac = split_theta_levels(ws.theta, 0, u)
                except FloatingPointError:
                    self._tally("split_theta", False)
                    return False
                log_q_level = _scaled_chi2_logpdf(u, self.schedule.sigma_split)
            members = np.nonzero(ws.z == 0)[0]
            choices = rng.integers(0, 3, size=members.size)
            z2 = ws.z.copy()
            z2[z2 > 0] += 1
            z2[z2 < 0] -= 1
            z2[members[choices == 1]] = 1
            z2[members[choices == 2]] = -1
            log_q_alloc = -members.size * _LOG3
        else:
            u = self.schedule.sigma_split * rng.chisquare(1.0)
            if u <= 0.0:
                self._tally("split_theta", False)
                return False
            try:
                theta2, log_jac = split_theta_levels(ws.theta, k, u)
            except FloatingPointError:
                self._tally("split_theta", False)
                return False
            log_q_level = _scaled_chi2_logpdf(u, self.schedule.sigma_split)
            members_pos = np.nonzero(ws.z == k)[0]
            members_neg = np.nonzero(ws.z == -k)[0]
            z2 = ws.z.copy()
            z2[z2 > k] += 1
            z2[z2 < -k] -= 1
            coins_pos = rng.integers(0, 2, size=members_pos.size)
            coins_neg = rng.integers(0, 2, size=members_neg.size)
            z2[members_pos[coins_pos == 1]] = k + 1
            z2[members_neg[coins_neg == 1]] = -(k + 1)
            log_q_alloc = -(members_pos.size + members_neg.size) * _LOG2
        ll2 = ws.loglik(theta=theta2, z=z2)
        lp2 = ws.log_prior(h, theta=theta2, z=z2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        if self._accept(d_post - log_q_level - log_q_alloc + log_jac):
            ws.set_theta_state(theta2, z2, ll2)
            self.lp = lp2
            self._tally("split_theta", True)
            return True
        self._tally("split_theta", False)
        return False

    def merge_theta(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        big_k = ws.big_k
        if big_k == 0:
            self._tally("merge_theta", False, infeasible=True)
            return False
        c = int(rng.integers(0, big_k))
        if c == 0:
            x_rm = float(ws.theta[0])
            if big_k == 1:
                theta2 = ws.theta[1:].copy()
                log_q_level = _gamma_logpdf(x_rm, h.alpha, h.beta)
                log_jac = 0.0
            else:
                try:
                    theta2, u_star, log_jac = merge_theta_levels(ws.theta, 0)
                except FloatingPointError:
                    self._tally("merge_theta", False)
                    return False
                log_q_level = _scaled_chi2_logpdf(u_star, self.schedule.sigma_split)
            merged_members = int(np.sum(np.abs(ws.z) <= 1))
            log_q_alloc = -merged_members * _LOG3
        else:
            try:
                theta2, u_star, log_jac = merge_theta_levels(ws.theta, c)
            except FloatingPointError:
                self._tally("merge_theta", False)
                return False
            log_q_level = _scaled_chi2_logpdf(u_star, self.schedule.sigma_split)
            merged_members = int(np.sum((np.abs(ws.z) == c) | (np.abs(ws.z) == c + 1)))
            log_q_alloc = -merged_members * _LOG2
        z2 = ws.z.copy()
        z2[z2 == c + 1] = c
        z2[z2 == -(c + 1)] = -c
        z2[z2 > c + 1] -= 1
        z2[z2 < -(c + 1)] += 1
        ll2 = ws.loglik(theta=theta2, z=z2)
        lp2 = ws.log_prior(h, theta=theta2, z=z2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        if self._accept(d_post + log_q_level + log_q_alloc - log_jac):
            ws.set_theta_state(theta2, z2, ll2)
            self.lp = lp2
            self._tally("merge_theta", True)
            return True
        self._tally("merge_theta", False)
        return False

    # -- skill split/merge ------------------------------------------------------

    def split_phi(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        a = ws.big_a
        cap = self.schedule.max_skill_levels
        if a + 1 > ws.n - 1 or (cap is not None and a + 1 > cap):
            self._tally("split_phi", False, infeasible=True)
            return False
        nlev = a + 1
        off = int(rng.integers(0, nlev))
        extra = 0.0
        if off == ws.zero_index:
            upper_side = rng.random() < 0.5
            extra = _LOG2  # the side coin appears only in the forward proposal
            no_neighbour = (upper_side and ws.zero_index >= a) or (not upper_side and ws.zero_index == 0)
            if no_neighbour:
                x_new = abs(rng.standard_normal()) * h.nu_a
                if x_new == 0.0:
                    self._tally("split_phi", False)
                    return False
                if not upper_side:
                    x_new = -x_new
                log_q_level = _LOG2 + _norm_logpdf(x_new, h.nu_a)
                log_jac = 0.0
                insert_pos = ws.zero_index + 1 if upper_side else ws.zero_index
                phi2 = np.insert(ws.phi, insert_pos, x_new)
            else:
                u = self.schedule.sigma_split * rng.chisquare(1.0)
                if u <= 0.0:
                    self._tally("split_phi", False)
                    return False
                try:
                    phi2, insert_pos, log_jac = split_phi_levels(ws.phi, ws.zero_index, off, u, upper_side)
                except FloatingPointError:
                    self._tally("split_phi", False)
                    return False
                log_q_level = _scaled_chi2_logpdf(u, self.schedule.sigma_split)
            members = np.nonzero(ws.y == ws.zero_index)[0]
            members = members[members != 0]
            coins = rng.integers(0, 2, size=members.size)
            y2 = ws.y.copy()
            y2[y2 >= insert_pos] += 1
            y2[members[coins == 1]] = insert_pos
            zero2 = ws.zero_index + (1 if insert_pos <= ws.zero_index else 0)
            log_q_alloc = -members.size * _LOG2
        else:
            u = self.schedule.sigma_split * rng.chisquare(1.0)
            if u <= 0.0:
                self._tally("split_phi", False)
                return False
            try:
                phi2, insert_pos, log_jac = split_phi_levels(ws.phi, ws.zero_index, off, u, True)
            except FloatingPointError:
                self._tally("split_phi", False)
                return False
            log_q_level = _scaled_chi2_logpdf(u, self.schedule.sigma_split)
            members = np.nonzero(ws.y == off)[0]
            coins = rng.integers(0, 2, size=members.size)
            y2 = ws.y.copy()
            y2[y2 > off] += 1
            y2[members[coins == 1]] = off + 1
            zero2 = ws.zero_index + (1 if off < ws.zero_index else 0)
            log_q_alloc = -members.size * _LOG2
        r2 = phi2[y2]
        ll2 = ws.loglik(r=r2)
        lp2 = ws.log_prior(h, phi=phi2, zero_index=zero2, y=y2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        if self._accept(d_post - log_q_level - log_q_alloc + log_jac + extra):
            ws.set_phi_state(phi2, zero2, y2, ll2)
            self.lp = lp2
            self._tally("split_phi", True)
            return True
        self._tally("split_phi", False)
        return False

    def merge_phi(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        a = ws.big_a
        if a == 0:
            self._tally("merge_phi", False, infeasible=True)
            return False
        p = int(rng.integers(0, a))
        lo_i, hi_i = p, p + 1
        extra = 0.0
        if ws.zero_index in (lo_i, hi_i):
            other = hi_i if ws.zero_index == lo_i else lo_i
            x_rm = float(ws.phi[other])
            extra = -_LOG2  # reverse split pays the side coin
            upper_side = other == hi_i
            no_neighbour = (upper_side and other + 1 > a) or (not upper_side and other == 0)
            if no_neighbour:
                phi2 = np.delete(ws.phi, other)
                log_q_level = _LOG2 + _norm_logpdf(x_rm, h.nu_a)
                log_jac = 0.0
            else:
                try:
                    phi2, u_star, log_jac = merge_phi_levels(ws.phi, ws.zero_index, p)
                except FloatingPointError:
                    self._tally("merge_phi", False)
                    return False
                log_q_level = _scaled_chi2_logpdf(u_star, self.schedule.sigma_split)
            merged_members = int(np.sum((ws.y == lo_i) | (ws.y == hi_i))) - 1  # reference excluded
            zero2 = ws.zero_index - (1 if other < ws.zero_index else 0)
            y2 = ws.y.copy()
            y2[y2 == other] = ws.zero_index
            y2[y2 > other] -= 1
            removed = other
        else:
            try:
                phi2, u_star, log_jac = merge_phi_levels(ws.phi, ws.zero_index, p)
            except FloatingPointError:
                self._tally("merge_phi", False)
                return False
            log_q_level = _scaled_chi2_logpdf(u_star, self.schedule.sigma_split)
            merged_members = int(np.sum((ws.y == lo_i) | (ws.y == hi_i)))
            zero2 = ws.zero_index - (1 if hi_i < ws.zero_index else 0)
            y2 = ws.y.copy()
            y2[y2 == hi_i] = lo_i
            y2[y2 > hi_i] -= 1
            removed = hi_i
        log_q_alloc = -merged_members * _LOG2
        r2 = phi2[y2]
        ll2 = ws.loglik(r=r2)
        lp2 = ws.log_prior(h, phi=phi2, zero_index=zero2, y=y2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        if self._accept(d_post + log_q_level + log_q_alloc - log_jac + extra):
            ws.set_phi_state(phi2, zero2, y2, ll2)
            self.lp = lp2
            self._tally("merge_phi", True)
            return True
        self._tally("merge_phi", False)
        return False

    # -- empty-cluster add/delete ------------------------------------------------

    def add_theta(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        big_k = ws.big_k
        cap = self.schedule.max_theta_levels
        if cap is not None and big_k + 1 > cap:
            self._tally("add_theta", False, infeasible=True)
            return False
        i_int = int(rng.integers(0, big_k + 1))
        a = float(ws.theta[i_int - 1]) if i_int >= 1 else 0.0
        b = float(ws.theta[i_int]) if i_int < big_k else math.inf
        f_a = _gamma_cdf(a, h.alpha, h.beta)
        f_b = _gamma_cdf(b, h.alpha, h.beta)
        mass = f_b - f_a
        if mass <= 1e-300:
            self._tally("add_theta", False)
            return False
        x_new = _gamma_ppf(f_a + rng.random() * mass, h.alpha, h.beta)
        if not a < x_new < b:
            self._tally("add_theta", False)
            return False
        log_q = _gamma_logpdf(x_new, h.alpha, h.beta) - math.log(mass)
        theta2 = np.insert(ws.theta, i_int, x_new)
        z2 = ws.z.copy()
        z2[z2 > i_int] += 1
        z2[z2 < -i_int] -= 1
        occ2 = np.bincount(z2 + big_k + 1, minlength=2 * big_k + 3)
        n_empty2 = sum(
            1 for kk in range(1, big_k + 2) if occ2[kk + big_k + 1] == 0 and occ2[-kk + big_k + 1] == 0
        )
        ll2 = ws.loglik(theta=theta2, z=z2)
        lp2 = ws.log_prior(h, theta=theta2, z=z2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        log_alpha = d_post - log_q + math.log(big_k + 1.0) - math.log(n_empty2)
        if self._accept(log_alpha):
            ws.set_theta_state(theta2, z2, ll2)
            self.lp = lp2
            self._tally("add_theta", True)
            return True
        self._tally("add_theta", False)
        return False

    def delete_theta(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        big_k = ws.big_k
        empties = [
            kk
            for kk in range(1, big_k + 1)
            if ws.occ_z[kk + big_k] == 0 and ws.occ_z[-kk + big_k] == 0
        ]
        if not empties:
            self._tally("delete_theta", False, infeasible=True)
            return False
        k_del = empties[int(rng.integers(0, len(empties)))]
        x_del = float(ws.theta[k_del - 1])
        a = float(ws.theta[k_del - 2]) if k_del >= 2 else 0.0
        b = float(ws.theta[k_del]) if k_del < big_k else math.inf
        mass = _gamma_cdf(b, h.alpha, h.beta) - _gamma_cdf(a, h.alpha, h.beta)
        if mass <= 1e-300:
            self._tally("delete_theta", False)
            return False
        log_q_rev = _gamma_logpdf(x_del, h.alpha, h.beta) - math.log(mass)
        theta2 = np.delete(ws.theta, k_del - 1)
        z2 = ws.z.copy()
        z2[z2 > k_del] -= 1
        z2[z2 < -k_del] += 1
        ll2 = ws.loglik(theta=theta2, z=z2)
        lp2 = ws.log_prior(h, theta=theta2, z=z2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        log_alpha = d_post + log_q_rev - math.log(float(big_k)) + math.log(float(len(empties)))
        if self._accept(log_alpha):
            ws.set_theta_state(theta2, z2, ll2)
            self.lp = lp2
            self._tally("delete_theta", True)
            return True
        self._tally("delete_theta", False)
        return False

    def add_phi(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        a = ws.big_a
        cap = self.schedule.max_skill_levels
        if a + 1 > ws.n - 1 or (cap is not None and a + 1 > cap):
            self._tally("add_phi", False, infeasible=True)
            return False
        n_int = a + 2
        i_int = int(rng.integers(0, n_int))
        lo = float(ws.phi[i_int - 1]) if i_int >= 1 else -math.inf
        hi = float(ws.phi[i_int]) if i_int <= a else math.inf
        f_lo = _norm_cdf(lo, h.nu_a)
        f_hi = _norm_cdf(hi, h.nu_a)
        mass = f_hi - f_lo
        if mass <= 1e-300:
            self._tally("add_phi", False)
            return False
        x_new = _norm_ppf(f_lo + rng.random() * mass, h.nu_a)
        if not (lo < x_new < hi) or x_new == 0.0:
            self._tally("add_phi", False)
            return False
        log_q = _norm_logpdf(x_new, h.nu_a) - math.log(mass)
        phi2 = np.insert(ws.phi, i_int, x_new)
        zero2 = ws.zero_index + (1 if i_int <= ws.zero_index else 0)
        y2 = ws.y.copy()
        y2[y2 >= i_int] += 1
        occ2 = np.bincount(y2[1:], minlength=a + 2)
        n_empty2 = sum(1 for off in range(a + 2) if off != zero2 and occ2[off] == 0)
        r2 = phi2[y2]
        ll2 = ws.loglik(r=r2)
        lp2 = ws.log_prior(h, phi=phi2, zero_index=zero2, y=y2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        log_alpha = d_post - log_q + math.log(float(n_int)) - math.log(float(n_empty2))
        if self._accept(log_alpha):
            ws.set_phi_state(phi2, zero2, y2, ll2)
            self.lp = lp2
            self._tally("add_phi", True)
            return True
        self._tally("add_phi", False)
        return False

    def delete_phi(self) -> bool:
        ws, h, rng = self.ws, self.h, self.rng
        a = ws.big_a
        empties = [off for off in range(a + 1) if off != ws.zero_index and ws.occ_y[off] == 0]
        if not empties:
            self._tally("delete_phi", False, infeasible=True)
            return False
        off = empties[int(rng.integers(0, len(empties)))]
        x_del = float(ws.phi[off])
        lo = float(ws.phi[off - 1]) if off >= 1 else -math.inf
        hi = float(ws.phi[off + 1]) if off + 1 <= a else math.inf
        mass = _norm_cdf(hi, h.nu_a) - _norm_cdf(lo, h.nu_a)
        if mass <= 1e-300:
            self._tally("delete_phi", False)
            return False
        log_q_rev = _norm_logpdf(x_del, h.nu_a) - math.log(mass)
        phi2 = np.delete(ws.phi, off)
        zero2 = ws.zero_index - (1 if off < ws.zero_index else 0)
        y2 = ws.y.copy()
        y2[y2 > off] -= 1
        r2 = phi2[y2]
        ll2 = ws.loglik(r=r2)
        lp2 = ws.log_prior(h, phi=phi2, zero_index=zero2, y=y2)
        d_post = (ll2 + lp2) - (ws.ll + self.lp)
        log_alpha = d_post + log_q_rev - math.log(a + 1.0) + math.log(float(len(empties)))
        if self._accept(log_alpha):
            ws.set_phi_state(phi2, zero2, y2, ll2)
            self.lp = lp2
            self._tally("delete_phi", True)
            return True
        self._tally("delete_phi", False)
        return False


# ---------------------------------------------------------------------------
# driver


def run_chain(
    init: ModelState,
    data: ComparisonDataset,
    h: Hyperparameters,
    schedule: SamplerSchedule,
    seed: int,
) -> ChainSamples:
    """Run one chain from ``init`` and return the recorded samples.

    Fully reproducible from the seed (on a given kernel backend).  Every
    recorded state is validated; a violation aborts with a diagnostic dump
    of the offending state and move.
    """
    validate_state(init)
    ws = _Workspace(init, data)
    rng = np.random.default_rng(seed)
    chain = _Chain(ws, h, schedule, rng)
    total = schedule.burn_in + schedule.iterations
    trace = np.empty(total)
    records: list[SampleRecord] = []
    move = "(none)"
    for i in range(total):
        adapting = schedule.adapt_burnin and i < schedule.burn_in
        move = chain.iterate(adapting=adapting)
        log_post = chain.log_posterior()
        trace[i] = log_post
        record_due = i >= schedule.burn_in and (i - schedule.burn_in) % schedule.thin == 0
        if schedule.debug_validate or record_due:
            try:
                validate_state(ws.to_state())
                _check_workspace(ws)
            except InvariantError as err:
                raise InvariantError(
                    f"invariant violated at iteration {i} after move {move!r}: {err}"
                ) from err
        if record_due:
            records.append(ws.snapshot(i, log_post))
    return ChainSamples(
        layout=ws.layout,
        records=records,
        trace=trace,
        acceptance=chain.stats,
        seed=seed,
        schedule=schedule,
        final_state=ws.to_state(),
    )


def _check_workspace(ws: _Workspace) -> None:
    k = ws.big_k
    occ_z = np.bincount(ws.z + k, minlength=2 * k + 1)
    if not np.array_equal(occ_z, ws.occ_z):
        raise InvariantError("pair occupancy counts out of sync")
    occ_y = np.bincount(ws.y[1:], minlength=ws.phi.shape[0])
    if not np.array_equal(occ_y, ws.occ_y):
        raise InvariantError("skill occupancy counts out of sync")
    if int(occ_y.sum()) != ws.n - 1 or int(occ_z.sum()) != ws.n_free:
        raise InvariantError("occupancy totals disagree with the layout")
    if not np.array_equal(ws.r, ws.phi[ws.y]):
        raise InvariantError("cached skills out of sync")


# ---------------------------------------------------------------------------
# public single-move wrappers (used by the behavioural tests)


def _single(state: ModelState, data: ComparisonDataset, h: Hyperparameters, rng, **sched):
    schedule = SamplerSchedule(iterations=0, burn_in=0, thin=1, adapt_burnin=False, **sched)
    ws = _Workspace(state, data)
    return ws, _Chain(ws, h, schedule, rng)


def mh_update_theta_level(state, data, h, k, step, rng):
    """One bounded random-walk update of intransitivity level k (1-based)."""
    if not 1 <= k <= state.intrans.k:
        raise ValueError(f"level index {k} outside 1..{state.intrans.k}")
    ws, chain = _single(state, data, h, rng, rw_step_theta=step)
    accepted = chain.mh_theta_level(k)
    return ws.to_state(), accepted


def mh_update_phi_level(state, data, h, label, step, rng):
    """One bounded random-walk update of the skill level with signed label != 0."""
    if label == 0:
        raise ValueError("the zero skill level never moves")
    off = label + state.skills.zero_index
    if not 0 <= off <= state.skills.a:
        raise ValueError(f"no skill level with label {label}")
    ws, chain = _single(state, data, h, rng, rw_step_phi=step)
    accepted = chain.mh_phi_level(off)
    return ws.to_state(), accepted


def gibbs_reallocate_pair(state, data, h, pair, rng):
    """Resample the label of one free pair from its full conditional."""
    i, j = max(pair), min(pair)
    slot = state.intrans.layout.slot(i, j)
    if slot < 0:
        raise ValueError(f"pair {pair!r} is pinned to the zero level")
    ws, _ = _single(state, data, h, rng)
    if ws.big_k > 0:
        u = rng.random(1)
        kernels.gibbs_pair_sweep(
            ws.fp_i[slot : slot + 1],
            ws.fp_j[slot : slot + 1],
            ws.fp_w[slot : slot + 1],
            ws.fp_m[slot : slot + 1],
            ws.z[slot : slot + 1],
            ws.occ_z,
            ws.theta,
            h.gamma_k,
            ws.r,
            u,
        )
        ws.ll = ws.loglik()
    return ws.to_state()


def gibbs_reallocate_object(state, data, h, obj, rng):
    """Resample the skill label of one non-reference object from its full conditional."""
    if obj == 0:
        raise ValueError("the reference object is never reallocated")
    if not 0 < obj < state.n:
        raise ValueError(f"no object position {obj}")
    ws, _ = _single(state, data, h, rng)
    if ws.big_a > 0:
        u = rng.random(1)
        kernels.gibbs_object_sweep(
            ws.adj_ptr, ws.adj_opp, ws.adj_w, ws.adj_m, ws.adj_slot, ws.adj_sign,
            ws.z, ws.theta, ws.phi, ws.y, ws.r, ws.occ_y, h.gamma_a, u, obj, obj + 1,
        )
        ws.ll = ws.loglik()
    return ws.to_state()


def _wrap_move(state, data, h, schedule, rng, method):
    ws = _Workspace(state, data)
    chain = _Chain(ws, h, schedule, rng)
    accepted = getattr(chain, method)()
    return ws.to_state(), accepted


def split_intransitivity(state, data, h, schedule, rng):
    return _wrap_move(state, data, h, schedule, rng, "split_theta")


def merge_intransitivity(state, data, h, schedule, rng):
    return _wrap_move(state, data, h, schedule, rng, "merge_theta")


def split_skill(state, data, h, schedule, rng):
    return _wrap_move(state, data, h, schedule, rng, "split_phi")


def merge_skill(state, data, h, schedule, rng):
    return _wrap_move(state, data, h, schedule, rng, "merge_phi")


def add_empty_intransitivity(state, data, h, rng, schedule=None):
    return _wrap_move(state, data, h, schedule or SamplerSchedule(), rng, "add_theta")


def delete_empty_intransitivity(state, data, h, rng, schedule=None):
    return _wrap_move(state, data, h, schedule or SamplerSchedule(), rng, "delete_theta")


def add_empty_skill(state, data, h, rng, schedule=None):
    return _wrap_move(state, data, h, schedule or SamplerSchedule(), rng, "add_phi")


def delete_empty_skill(state, data, h, rng, schedule=None):
    return _wrap_move(state, data, h, schedule or SamplerSchedule(), rng, "delete_phi")
