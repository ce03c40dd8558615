"""Pure-Python compute kernels.

Fallback used when the compiled extension is unavailable.  The collapsed
Gibbs sweeps are inherently sequential (each draw conditions on the ones
before it), so the loops stay; the per-pair likelihood tables are
vectorised where the sweep semantics allow it.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _logsig(x):
    return -np.logaddexp(0.0, -x)


def dataset_loglik(cp_slot, cp_i, cp_j, cp_w, cp_m, z, theta, r):
    """Log likelihood of the aggregated compared pairs."""
    if cp_i.shape[0] == 0:
        return 0.0
    signed = np.concatenate(([0.0], theta))
    safe = np.where(cp_slot >= 0, cp_slot, 0)
    lab = np.where(cp_slot >= 0, z[safe], 0)
    th = np.sign(lab) * signed[np.abs(lab)]
    eta = th + r[cp_i] - r[cp_j]
    return float(np.sum(cp_w * _logsig(eta) + (cp_m - cp_w) * _logsig(-eta)))


def gibbs_pair_sweep(fp_i, fp_j, fp_w, fp_m, z, occ, theta, gamma, r, u):
    """One full-conditional sweep over the free-pair labels.

    Mutates ``z`` and ``occ`` in place; returns the number of label
    changes.  ``u`` supplies one uniform draw per pair.  Levels and skills
    are fixed during the sweep, so the likelihood table is precomputed.
    """
    k = theta.shape[0]
    n_free = z.shape[0]
    if k == 0 or n_free == 0:
        return 0
    labels = np.arange(-k, k + 1)
    signed = np.sign(labels) * np.concatenate(([0.0], theta))[np.abs(labels)]
    d = r[fp_i] - r[fp_j]
    eta = signed[None, :] + d[:, None]
    table = np.zeros((n_free, 2 * k + 1))
    has = fp_m > 0
    if np.any(has):
        table[has] = (
            fp_w[has, None] * _logsig(eta[has])
            + (fp_m[has] - fp_w[has])[:, None] * _logsig(-eta[has])
        )
    changed = 0
    for f in range(n_free):
        cur = int(z[f])
        wts = table[f] + np.log(gamma + occ - (labels == cur))
        wts -= wts.max()
        cum = np.cumsum(np.exp(wts))
        pick = int(np.searchsorted(cum, u[f] * cum[-1], side="right"))
        new = min(pick, 2 * k) - k
        if new != cur:
            occ[cur + k] -= 1
            occ[new + k] += 1
            z[f] = new
            changed += 1
    return changed


def gibbs_object_sweep(adj_ptr, adj_opp, adj_w, adj_m, adj_slot, adj_sign, z, theta, phi, y, r, occ, gamma, u, start, stop):
    """Full-conditional sweep over the skill allocations of objects start..stop-1.

    Mutates ``y``, ``r`` and ``occ`` in place; returns the number of
    changes.  Updated skills feed into the conditionals of later objects,
    so the outer loop is sequential.  ``start`` is at least 1: the
    reference object is never reallocated.
    """
    n_levels = phi.shape[0]
    n = y.shape[0]
    if n_levels <= 1 or n <= 1:
        return 0
    signed = np.concatenate(([0.0], theta))
    offsets = np.arange(n_levels)
    changed = 0
    for i in range(start, stop):
        lo, hi = int(adj_ptr[i]), int(adj_ptr[i + 1])
        cur = int(y[i])
        wts = np.log(gamma + occ - (offsets == cur))
        if hi > lo:
            slot = adj_slot[lo:hi]
            safe = np.where(slot >= 0, slot, 0)
            lab = np.where(slot >= 0, z[safe], 0)
            th = np.sign(lab) * signed[np.abs(lab)] * adj_sign[lo:hi]
            w = adj_w[lo:hi]
            m = adj_m[lo:hi]
            eta = th[None, :] + phi[:, None] - r[adj_opp[lo:hi]][None, :]
            wts = wts + np.sum(w[None, :] * _logsig(eta) + (m - w)[None, :] * _logsig(-eta), axis=1)
        wts -= wts.max()
        cum = np.cumsum(np.exp(wts))
        pick = int(np.searchsorted(cum, u[i - start] * cum[-1], side="right"))
        new = min(pick, n_levels - 1)
        if new != cur:
            occ[cur] -= 1
            occ[new] += 1
            y[i] = new
            r[i] = phi[new]
            changed += 1
    return changed
