"""Multi-weight subjective-logic opinion algebra.

Trust between a rater (vehicle) and a ratee (road-side unit acting as a
miner candidate) is carried by an *opinion*, a triple

    omega = (belief, disbelief, uncertainty),  b + d + u = 1,

mapped from interaction evidence as follows:

    u = 1 - s                      (s: packet-delivery probability of the link)
    b = (1 - u) * alpha / (alpha + beta)
    d = (1 - u) * beta  / (alpha + beta)

where ``alpha``/``beta`` are (possibly fractional) positive/negative
interaction counts.  The scalar reputation read off an opinion is the
expected belief

    score = b + gamma * u,   gamma in [0, 1].

The *multi-weight* part re-weights raw counts before they enter the
mapping: recent interactions count more than past ones (weights
``zeta > sigma``, ``zeta + sigma = 1``) and negative interactions count
more than positive ones (``tau > theta``, ``theta + tau = 1``):

    alpha_w = zeta*theta*alpha_recent + sigma*theta*alpha_past
    beta_w  = zeta*tau *beta_recent  + sigma*tau *beta_past

Recommendations from other raters are combined as a weighted arithmetic
mean, each recommender weighted by delta = rho * IF, where IF is the
recommender's interaction frequency with the ratee relative to its mean
frequency across all units it interacted with.  The aggregate is then
fused with the rater's own local opinion by consensus fusion:

    denom = u_loc + u_rec - u_rec * u_loc
    b     = (b_loc * u_rec + b_rec * u_loc) / denom
    d     = (d_loc * u_rec + d_rec * u_loc) / denom
    u     = (u_rec * u_loc) / denom

A traditional, single-weight baseline (``tsl_reputation``) blends the
average of other raters' opinion scores with the rater's latest local
opinion score through a linear mixing weight kappa.

All operations are pure functions over immutable values and are safe to
call concurrently.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

# Tolerance for the b + d + u = 1 constraint.
ADDITIVITY_TOL = 1e-9

POSITIVE = "positive"
NEGATIVE = "negative"


def _check_unit(value: float, name: str) -> None:
    if math.isnan(value) or not -ADDITIVITY_TOL <= value <= 1.0 + ADDITIVITY_TOL:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True, slots=True)
class Opinion:
    """A subjective-logic opinion (belief, disbelief, uncertainty).

    Invariant: components lie in [0, 1] and sum to 1 within
    ``ADDITIVITY_TOL``.
    """

    belief: float
    disbelief: float
    uncertainty: float

    def __post_init__(self) -> None:
        _check_unit(self.belief, "belief")
        _check_unit(self.disbelief, "disbelief")
        _check_unit(self.uncertainty, "uncertainty")
        total = self.belief + self.disbelief + self.uncertainty
        if abs(total - 1.0) > ADDITIVITY_TOL:
            raise ValueError(f"opinion components must sum to 1, got {total}")

    def score(self, uncertainty_effect: float = 0.5) -> float:
        return reputation_score(self, uncertainty_effect)


#: Total ignorance: no evidence either way.
VACUOUS = Opinion(0.0, 0.0, 1.0)


@dataclass(frozen=True, slots=True)
class EvidenceCounts:
    """Weighted interaction evidence plus the link quality behind it.

    ``positive``/``negative`` are nonnegative reals (multi-weighting makes
    them fractional); ``link_quality`` is the packet-delivery probability
    of the rater-ratee link and sets the uncertainty mass.
    """

    positive: float
    negative: float
    link_quality: float = 1.0

    def __post_init__(self) -> None:
        if self.positive < 0 or self.negative < 0:
            raise ValueError("evidence counts must be nonnegative")
        _check_unit(self.link_quality, "link_quality")

    @property
    def total(self) -> float:
        return self.positive + self.negative


@dataclass(frozen=True, slots=True)
class ReputationWeights:
    """Weighting profile of the multi-weight calculus.

    Invariants: recent_weight + past_weight = 1 with recent dominating;
    positive_weight + negative_weight = 1 with negative dominating;
    scale and uncertainty_effect in [0, 1].  ``recent_horizon`` and
    ``window`` are durations in seconds: interactions younger than
    ``recent_horizon`` are "recent", interactions older than ``window``
    are out of scope.
    """

    recent_weight: float = 0.6
    past_weight: float = 0.4
    positive_weight: float = 0.4
    negative_weight: float = 0.6
    scale: float = 1.0
    uncertainty_effect: float = 0.5
    recent_horizon: float = 259_200.0  # three days
    window: float = 2_592_000.0  # thirty days

    def __post_init__(self) -> None:
        if abs(self.recent_weight + self.past_weight - 1.0) > ADDITIVITY_TOL:
            raise ValueError("recent_weight + past_weight must equal 1")
        if self.recent_weight <= self.past_weight:
            raise ValueError("recent_weight must exceed past_weight")
        if abs(self.positive_weight + self.negative_weight - 1.0) > ADDITIVITY_TOL:
            raise ValueError("positive_weight + negative_weight must equal 1")
        if self.positive_weight >= self.negative_weight:
            raise ValueError("positive_weight must be below negative_weight")
        _check_unit(self.scale, "scale")
        _check_unit(self.uncertainty_effect, "uncertainty_effect")
        if self.recent_horizon <= 0 or self.window <= 0:
            raise ValueError("durations must be positive")
        if self.recent_horizon > self.window:
            raise ValueError("recent_horizon cannot exceed the window")


@dataclass(frozen=True, slots=True)
class TslParams:
    """Mixing weight of the traditional subjective-logic baseline."""

    blend: float = 0.5

    def __post_init__(self) -> None:
        _check_unit(self.blend, "blend")


def opinion_from_evidence(counts: EvidenceCounts) -> Opinion:
    """Map interaction evidence to an opinion.

    With zero evidence the opinion is vacuous regardless of link quality:
    no interactions means total uncertainty.
    """
    total = counts.positive + counts.negative
    if total == 0.0:
        return VACUOUS
    uncertainty = 1.0 - counts.link_quality
    certain = 1.0 - uncertainty
    # ratio first: certain * positive can underflow for subnormal counts,
    # the ratio is always a clean value in [0, 1]
    return Opinion(
        belief=certain * (counts.positive / total),
        disbelief=certain * (counts.negative / total),
        uncertainty=uncertainty,
    )


def reputation_score(op: Opinion, uncertainty_effect: float) -> float:
    """Expected belief: b + gamma * u, in [0, 1] for gamma in [0, 1]."""
    _check_unit(uncertainty_effect, "uncertainty_effect")
    return op.belief + uncertainty_effect * op.uncertainty


def weighted_counts(
    events: Iterable[tuple[float, str]],
    now: float,
    weights: ReputationWeights,
    link_quality: float = 1.0,
) -> EvidenceCounts:
    """Collapse timestamped outcomes into multi-weight evidence counts.

    ``events`` are (timestamp, outcome) pairs with outcome "positive" or
    "negative".  Events younger than ``weights.recent_horizon`` are
    recent, the rest (up to ``weights.window``) are past; older events
    are ignored.  Future-dated events are rejected.  ``link_quality`` is
    passed through to the result; the caller owns it.
    """
    recent_pos = recent_neg = past_pos = past_neg = 0.0
    for timestamp, outcome in events:
        age = now - timestamp
        if age < 0:
            raise ValueError(f"event timestamp {timestamp} is in the future of {now}")
        if age > weights.window:
            continue
        if outcome == POSITIVE:
            if age <= weights.recent_horizon:
                recent_pos += 1.0
            else:
                past_pos += 1.0
        elif outcome == NEGATIVE:
            if age <= weights.recent_horizon:
                recent_neg += 1.0
            else:
                past_neg += 1.0
        else:
            raise ValueError(f"unknown outcome {outcome!r}")
    alpha = (
        weights.recent_weight * weights.positive_weight * recent_pos
        + weights.past_weight * weights.positive_weight * past_pos
    )
    beta = (
        weights.recent_weight * weights.negative_weight * recent_neg
        + weights.past_weight * weights.negative_weight * past_neg
    )
    return EvidenceCounts(positive=alpha, negative=beta, link_quality=link_quality)


def interaction_frequency(
    target_counts: EvidenceCounts, peer_counts: Sequence[EvidenceCounts]
) -> float:
    """Ratio of the target's interaction volume to the mean across peers.

    ``peer_counts`` must cover every unit the rater interacted with in
    the window, the target included.  The overall recommendation weight
    is ``delta = scale * interaction_frequency(...)``.

    Raises ValueError when the rater interacted with nobody (zero mean);
    callers treat such raters as carrying no recommendation weight.
    """
    if not peer_counts:
        raise ValueError("peer_counts must be non-empty")
    mean_total = sum(c.total for c in peer_counts) / len(peer_counts)
    if mean_total == 0.0:
        raise ValueError("rater has no interactions in the window")
    return target_counts.total / mean_total


def aggregate_recommendations(
    recs: Sequence[tuple[float, Opinion]],
) -> Opinion:
    """Combine weighted recommendations into one opinion.

    Weighted arithmetic mean of the components; invariant under uniform
    positive scaling of the weights.  Raises ValueError when there is
    nothing to aggregate (no recommendations, or all weights zero) — the
    caller then skips fusion and keeps the local opinion.
    """
    total_weight = 0.0
    belief = disbelief = uncertainty = 0.0
    for weight, op in recs:
        if weight < 0:
            raise ValueError("recommendation weights must be nonnegative")
        total_weight += weight
        belief += weight * op.belief
        disbelief += weight * op.disbelief
        uncertainty += weight * op.uncertainty
    if total_weight == 0.0:
        raise ValueError("no recommendations with positive weight")
    return Opinion(
        belief / total_weight, disbelief / total_weight, uncertainty / total_weight
    )


def fuse(local: Opinion, rec: Opinion) -> Opinion:
    """Consensus-fuse a local opinion with an aggregated recommendation.

    Identities handled exactly (not merely to rounding): a vacuous
    recommendation leaves the local opinion unchanged, and a dogmatic
    local opinion (u = 0) dominates any recommendation.  When both sides
    are dogmatic the denominator vanishes; the local opinion wins and the
    event is logged, since direct evidence takes precedence.
    """
    if local.uncertainty == 0.0:
        if rec.uncertainty == 0.0:
            logger.warning(
                "dogmatic-dogmatic fusion (local=%r, rec=%r): keeping local", local, rec
            )
        return local
    if rec.uncertainty == 1.0 and rec.belief == 0.0 and rec.disbelief == 0.0:
        return local
    denom = local.uncertainty + rec.uncertainty - rec.uncertainty * local.uncertainty
    return Opinion(
        belief=(local.belief * rec.uncertainty + rec.belief * local.uncertainty) / denom,
        disbelief=(local.disbelief * rec.uncertainty + rec.disbelief * local.uncertainty)
        / denom,
        uncertainty=(rec.uncertainty * local.uncertainty) / denom,
    )


def tsl_reputation(avg: Opinion, latest: Opinion, params: TslParams) -> float:
    """Traditional subjective-logic baseline score.

    Linear blend of the population-average opinion score and the rater's
    latest local opinion score, both read with a fixed 0.5 uncertainty
    effect.
    """
    t_avg = avg.belief + 0.5 * avg.uncertainty
    t_latest = latest.belief + 0.5 * latest.uncertainty
    return (1.0 - params.blend) * t_avg + params.blend * t_latest
