"""Pure-Python (NumPy) reference implementation of the batch kernels.

The per-round reputation pass evaluates the opinion algebra for every
(rater, candidate) pair at once.  This module is the fallback backend,
selected at import time when the compiled extension ``repdpos._core`` is
unavailable (see ``repdpos.backend``).  Both backends expose the same six
functions over float64 arrays of shape (raters, candidates) and must
agree to floating-point noise; ``tests/test_backend_parity.py`` enforces
that.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"


def weighted_counts_batch(rec_pos, past_pos, rec_neg, past_neg,
                          recent_w, past_w, positive_w, negative_w):
    """Multi-weight evidence counts: (alpha, beta) per pair."""
    rec_pos = np.asarray(rec_pos, dtype=np.float64)
    past_pos = np.asarray(past_pos, dtype=np.float64)
    rec_neg = np.asarray(rec_neg, dtype=np.float64)
    past_neg = np.asarray(past_neg, dtype=np.float64)
    alpha = recent_w * positive_w * rec_pos + past_w * positive_w * past_pos
    beta = recent_w * negative_w * rec_neg + past_w * negative_w * past_neg
    return alpha, beta


def local_opinions_batch(alpha, beta, link_quality):
    """Evidence -> opinion per pair; zero evidence maps to vacuous."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    link_quality = np.asarray(link_quality, dtype=np.float64)
    total = alpha + beta
    has = total > 0.0
    u = np.where(has, 1.0 - link_quality, 1.0)
    certain = 1.0 - u
    safe_total = np.where(has, total, 1.0)
    # ratio first, matching the scalar operation's underflow-safe form
    b = np.where(has, certain * (alpha / safe_total), 0.0)
    d = np.where(has, certain * (beta / safe_total), 0.0)
    return b, d, u


def recommendation_weights_batch(alpha, beta, scale):
    """delta = scale * IF per pair; raters with no interactions get 0."""
    totals = np.asarray(alpha, dtype=np.float64) + np.asarray(beta, dtype=np.float64)
    active = totals > 0.0
    n_active = active.sum(axis=1)
    sums = totals.sum(axis=1)
    rater_has = n_active > 0
    mean = np.where(rater_has, sums / np.where(rater_has, n_active, 1), 1.0)
    delta = scale * totals / mean[:, None]
    delta[~rater_has, :] = 0.0
    return delta


def aggregate_excluding_self_batch(delta, stored_b, stored_d, stored_u, valid):
    """Weighted mean of the other raters' stored opinions, per pair.

    ``valid`` marks which (rater, candidate) cells hold a stored opinion;
    each stored opinion is weighted by its rater's current delta.  Cells
    with no positively-weighted peer opinion get have=0.
    """
    delta = np.asarray(delta, dtype=np.float64)
    stored_b = np.asarray(stored_b, dtype=np.float64)
    stored_d = np.asarray(stored_d, dtype=np.float64)
    stored_u = np.asarray(stored_u, dtype=np.float64)
    w = delta * np.asarray(valid, dtype=np.float64)
    sum_w = w.sum(axis=0)
    sum_b = (w * stored_b).sum(axis=0)
    sum_d = (w * stored_d).sum(axis=0)
    sum_u = (w * stored_u).sum(axis=0)
    denom = sum_w[None, :] - w
    have = denom > 0.0
    safe = np.where(have, denom, 1.0)
    rb = np.where(have, (sum_b[None, :] - w * stored_b) / safe, 0.0)
    rd = np.where(have, (sum_d[None, :] - w * stored_d) / safe, 0.0)
    ru = np.where(have, (sum_u[None, :] - w * stored_u) / safe, 0.0)
    return rb, rd, ru, have.astype(np.float64)


def fuse_batch(local_b, local_d, local_u, rec_b, rec_d, rec_u, have):
    """Consensus fusion per pair; have=0 keeps the local opinion.

    Mirrors the exact identities of the scalar operation: a dogmatic
    local opinion or a vacuous recommendation leaves the local opinion
    untouched.
    """
    lb = np.asarray(local_b, dtype=np.float64)
    ld = np.asarray(local_d, dtype=np.float64)
    lu = np.asarray(local_u, dtype=np.float64)
    rb = np.asarray(rec_b, dtype=np.float64)
    rd = np.asarray(rec_d, dtype=np.float64)
    ru = np.asarray(rec_u, dtype=np.float64)
    keep_local = (
        (np.asarray(have, dtype=np.float64) == 0.0)
        | (lu == 0.0)
        | ((ru == 1.0) & (rb == 0.0) & (rd == 0.0))
    )
    denom = lu + ru - ru * lu
    safe = np.where(keep_local, 1.0, denom)
    fb = np.where(keep_local, lb, (lb * ru + rb * lu) / safe)
    fd = np.where(keep_local, ld, (ld * ru + rd * lu) / safe)
    fu = np.where(keep_local, lu, (ru * lu) / safe)
    return fb, fd, fu


def tsl_average_batch(stored_b, stored_u, valid):
    """Unweighted mean of other raters' stored scores (b + u/2) per pair.

    Pairs with no peer opinions fall back to the neutral 0.5.
    """
    stored_b = np.asarray(stored_b, dtype=np.float64)
    stored_u = np.asarray(stored_u, dtype=np.float64)
    v = np.asarray(valid, dtype=np.float64)
    t = v * (stored_b + 0.5 * stored_u)
    sum_t = t.sum(axis=0)
    cnt = v.sum(axis=0)
    denom = cnt[None, :] - v
    have = denom > 0.0
    safe = np.where(have, denom, 1.0)
    t_ave = np.where(have, (sum_t[None, :] - t) / safe, 0.5)
    return t_ave, have.astype(np.float64)
