"""Append-only in-process reputation ledger.

Stands in for the on-chain reputation store: every consensus round,
raters upload signed opinion records about candidates; later rounds read
them back as recommended opinions ("latest per rater" semantics — a new
record supersedes the same rater's earlier opinion on the same ratee,
older records stay stored).  Appends are serialized by the simulation
loop; reads are side-effect free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from repdpos.opinions import Opinion, reputation_score


@dataclass(frozen=True, slots=True)
class ReputationRecord:
    """One rater's signed opinion on a ratee at a given round."""

    rater: str
    ratee: str
    opinion: Opinion
    round: int
    signed: bool = True

    def __post_init__(self) -> None:
        if self.round < 0:
            raise ValueError("round must be nonnegative")


class LedgerError(ValueError):
    pass


class Ledger:
    """Ordered, append-only sequence of reputation records."""

    def __init__(self) -> None:
        self._records: list[ReputationRecord] = []
        self._head_round = 0
        # ratee -> rater -> (round, opinion), latest per rater
        self._latest: dict[str, dict[str, tuple[int, Opinion]]] = {}

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[ReputationRecord, ...]:
        return tuple(self._records)

    @property
    def head_round(self) -> int:
        return self._head_round

    def append(self, batch: list[ReputationRecord], round_: int) -> None:
        """Append a round's records in deterministic (rater, ratee) order.

        Rejects unsigned records (the stand-in for signature verification),
        records tagged with a different round, and round regressions; on
        rejection the ledger is left unchanged.
        """
        if round_ < self._head_round:
            raise LedgerError(
                f"round regression: {round_} < head round {self._head_round}"
            )
        for record in batch:
            if not record.signed:
                raise LedgerError(f"unsigned record from {record.rater!r} rejected")
            if record.round != round_:
                raise LedgerError(
                    f"record round {record.round} does not match batch round {round_}"
                )
        ordered = sorted(batch, key=lambda r: (r.rater, r.ratee))
        self._records.extend(ordered)
        if batch:
            self._head_round = round_
        for record in ordered:
            self._latest.setdefault(record.ratee, {})[record.rater] = (
                record.round,
                record.opinion,
            )

    def recommended_opinions(
        self, ratee: str, exclude_rater: str, max_age_rounds: int = 10
    ) -> list[tuple[str, Opinion]]:
        """Latest opinion per rater on ``ratee``, excluding the asker.

        Only opinions no older than ``max_age_rounds`` behind the head
        round are served.  Deterministic order by rater ID.
        """
        cutoff = self._head_round - max_age_rounds
        by_rater = self._latest.get(ratee, {})
        return [
            (rater, opinion)
            for rater, (rnd, opinion) in sorted(by_rater.items())
            if rater != exclude_rater and rnd >= cutoff
        ]

    def average_reputation(
        self,
        ratee: str,
        uncertainty_effect: float = 0.5,
        max_age_rounds: int = 10,
        neutral_prior: float = 0.5,
    ) -> float:
        """Unweighted mean score of the latest per-rater opinions.

        Candidates with no (fresh) history score the neutral prior so the
        admission threshold check always has a defined value.
        """
        cutoff = self._head_round - max_age_rounds
        scores = [
            reputation_score(opinion, uncertainty_effect)
            for rnd, opinion in self._latest.get(ratee, {}).values()
            if rnd >= cutoff
        ]
        if not scores:
            return neutral_prior
        return sum(scores) / len(scores)

    def export_lines(self) -> Iterator[str]:
        """Line-delimited dump: rater,ratee,b,d,u,round."""
        for r in self._records:
            yield (
                f"{r.rater},{r.ratee},{r.opinion.belief!r},"
                f"{r.opinion.disbelief!r},{r.opinion.uncertainty!r},{r.round}"
            )
