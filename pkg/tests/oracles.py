"""Independent direct-evaluation oracles for the reputation calculus.

Straight transcriptions of the defining formulas, written against raw
floats with no reuse of package internals.  The acceptance suite checks
every library operation against these on thousands of random inputs.
"""

from __future__ import annotations


def opinion_oracle(alpha: float, beta: float, s: float) -> tuple[float, float, float]:
    """(b, d, u) from evidence; vacuous when alpha + beta == 0."""
    if alpha + beta == 0:
        return (0.0, 0.0, 1.0)
    u = 1.0 - s
    b = (1.0 - u) * alpha / (alpha + beta)
    d = (1.0 - u) * beta / (alpha + beta)
    return (b, d, u)


def score_oracle(b: float, u: float, gamma: float) -> float:
    return b + gamma * u


def weighted_counts_oracle(
    events: list[tuple[float, str]],
    now: float,
    zeta: float,
    sigma: float,
    theta: float,
    tau: float,
    t_recent: float,
    window: float,
) -> tuple[float, float]:
    a1 = a2 = b1 = b2 = 0.0
    for ts, outcome in events:
        age = now - ts
        if age > window:
            continue
        if outcome == "positive":
            if age <= t_recent:
                a1 += 1
            else:
                a2 += 1
        else:
            if age <= t_recent:
                b1 += 1
            else:
                b2 += 1
    return (zeta * theta * a1 + sigma * theta * a2, zeta * tau * b1 + sigma * tau * b2)


def interaction_frequency_oracle(
    target_total: float, peer_totals: list[float]
) -> float:
    mean = sum(peer_totals) / len(peer_totals)
    return target_total / mean


def aggregate_oracle(
    recs: list[tuple[float, tuple[float, float, float]]]
) -> tuple[float, float, float]:
    total = sum(w for w, _ in recs)
    b = sum(w * op[0] for w, op in recs) / total
    d = sum(w * op[1] for w, op in recs) / total
    u = sum(w * op[2] for w, op in recs) / total
    return (b, d, u)


def fuse_oracle(
    local: tuple[float, float, float], rec: tuple[float, float, float]
) -> tuple[float, float, float]:
    lb, ld, lu = local
    rb, rd, ru = rec
    denom = lu + ru - ru * lu
    b = (lb * ru + rb * lu) / denom
    d = (ld * ru + rd * lu) / denom
    u = (ru * lu) / denom
    return (b, d, u)


def tsl_oracle(
    avg: tuple[float, float, float],
    latest: tuple[float, float, float],
    kappa: float,
) -> float:
    t_ave = avg[0] + 0.5 * avg[2]
    t_las = latest[0] + 0.5 * latest[2]
    return (1.0 - kappa) * t_ave + kappa * t_las
