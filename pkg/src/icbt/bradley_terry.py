"""Maximum-likelihood Bradley-Terry baseline.

Fitted by damped Newton iterations on the concave log likelihood, with the
reference object's skill pinned to zero.  A small ridge penalty (default
1e-6) keeps the optimum finite under quasi-separation in small datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ComparisonDataset
from .errors import DataError
from .model import log_sigmoid

__all__ = ["BtFit", "fit_bt_mle", "bt_pairwise_probabilities"]


@dataclass(frozen=True)
class BtFit:
    """Fitted skills (reference pinned at 0), attained log likelihood, and status."""

    skills: np.ndarray
    loglik: float
    converged: bool
    iterations: int


def _loglik(pi, pj, w, m, r, ridge):
    eta = r[pi] - r[pj]
    ll = float(np.sum(w * log_sigmoid(eta) + (m - w) * log_sigmoid(-eta)))
    return ll - 0.5 * ridge * float(np.dot(r, r))


def fit_bt_mle(
    data: ComparisonDataset,
    ridge: float = 1e-6,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> BtFit:
    """Fit Bradley-Terry skills by penalised maximum likelihood.

    Returns once the max-norm of the (penalised) gradient over the free
    skills drops below ``tol``; non-convergence is flagged on the result
    rather than raised.  With ``ridge = 0`` the comparison graph must be
    connected or the optimum need not exist.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    n = data.n
    pi, pj, w, m = data.pair_i, data.pair_j, data.wins, data.totals
    if pi.size == 0:
        return BtFit(skills=np.zeros(n), loglik=0.0, converged=True, iterations=0)
    if ridge == 0.0 and not _connected(n, pi, pj):
        raise DataError("comparison graph is disconnected; the MLE need not exist (use ridge > 0)")

    r = np.zeros(n)
    ll = _loglik(pi, pj, w, m, r, ridge)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = r[pi] - r[pj]
        p = 1.0 / (1.0 + np.exp(-eta))
        resid = w - m * p
        grad = np.zeros(n)
        np.add.at(grad, pi, resid)
        np.add.at(grad, pj, -resid)
        grad -= ridge * r

        if float(np.max(np.abs(grad[1:]))) < tol:
            converged = True
            break

        weight = m * p * (1.0 - p)
        hess = np.zeros((n, n))
        hess[pi, pj] += weight
        hess[pj, pi] += weight
        diag = np.zeros(n)
        np.add.at(diag, pi, weight)
        np.add.at(diag, pj, weight)
        hess[np.diag_indices(n)] = -diag - ridge
        try:
            step = np.linalg.solve(-hess[1:, 1:], grad[1:])
        except np.linalg.LinAlgError:
            break

        scale = 1.0
        improved = False
        for _ in range(40):
            cand = r.copy()
            cand[1:] += scale * step
            cand_ll = _loglik(pi, pj, w, m, cand, ridge)
            if cand_ll >= ll:
                r, ll = cand, cand_ll
                improved = True
                break
            scale *= 0.5
        if not improved:
            break

    loglik = float(np.sum(w * log_sigmoid(r[pi] - r[pj]) + (m - w) * log_sigmoid(-(r[pi] - r[pj]))))
    return BtFit(skills=r, loglik=loglik, converged=converged, iterations=it)


def bt_pairwise_probabilities(fit: BtFit) -> np.ndarray:
    """n x n win-probability table at the fitted skills; diagonal NaN."""
    r = fit.skills
    p = 1.0 / (1.0 + np.exp(-(r[:, None] - r[None, :])))
    np.fill_diagonal(p, np.nan)
    return p


def _connected(n: int, pi: np.ndarray, pj: np.ndarray) -> bool:
    adj = [[] for _ in range(n)]
    for i, j in zip(pi.tolist(), pj.tolist()):
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return all(seen)
