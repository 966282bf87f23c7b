"""Reputation-weighted DPoS consensus simulator and incentive engine."""

from repdpos.backend import BACKEND
from repdpos.opinions import (
    EvidenceCounts,
    Opinion,
    ReputationWeights,
    TslParams,
    VACUOUS,
    aggregate_recommendations,
    fuse,
    interaction_frequency,
    opinion_from_evidence,
    reputation_score,
    tsl_reputation,
    weighted_counts,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EvidenceCounts",
    "Opinion",
    "ReputationWeights",
    "TslParams",
    "VACUOUS",
    "__version__",
    "aggregate_recommendations",
    "fuse",
    "interaction_frequency",
    "opinion_from_evidence",
    "reputation_score",
    "tsl_reputation",
    "weighted_counts",
]
