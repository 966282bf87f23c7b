"""Round-based state machine of the reputation-weighted DPoS protocol.

One consensus round per reputation update period:

1. ingest the round's interaction events;
2. every stakeholder computes final reputations for every candidate
   (multi-weight scheme, traditional baseline, and the no-reputation
   baseline in parallel, for comparison);
3. detected candidates (system-average reputation below the detection
   threshold) are removed; the trust authority admits candidates whose
   ledger-average reputation clears the admission threshold;
4. stakeholders vote equal-weight ballots of their top-y candidates;
   compromised stakeholders rank their collusion targets first and pad
   with the weakest others;
5. the top-k form the active miner set, the next y-k stand by; active
   miners rotate the block-manager role across k slots;
6. each slot's block is quorum-verified (accepted only when agreeing
   reports strictly exceed two thirds of the verifier set; contracted
   standby miners join the verifier set when standby verification is on);
7. stakeholders upload their current evidence-based opinions for
   candidates they interacted with (compromised ones upload fake
   full-belief opinions for their targets) to the reputation ledger;
   later rounds read those back as recommendations.

Everything is a pure function of (config, seed): reruns are
byte-identical.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from repdpos import backend
from repdpos.config import ScenarioConfig
from repdpos.contracts import (
    ContractMenu,
    ContractParams,
    VerifierTypeProfile,
    check_menu,
    profile_from_reputations,
    solve_optimal_contract,
)
from repdpos.ledger import Ledger, ReputationRecord
from repdpos.mobility import (
    BehaviorProfile,
    InteractionRecord,
    deploy_rsus,
    filter_region,
    interaction_events,
    load_trace_dir,
    synthetic_traces,
)
from repdpos.opinions import (
    Opinion,
    ReputationWeights,
    aggregate_recommendations,
    fuse,
    opinion_from_evidence,
    reputation_score,
    weighted_counts,
)

TRACE_DIR_ENV = "REPDPOS_TRACE_DIR"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class MinerGroup:
    """Elected miner group: odd-sized active set plus standby set."""

    active: tuple[str, ...]
    standby: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.active) % 2 == 0 or not self.active:
            raise ValueError("active set size must be odd")
        if not self.standby:
            raise ValueError("group must include standby miners")
        if set(self.active) & set(self.standby):
            raise ValueError("active and standby sets must be disjoint")


@dataclass(frozen=True, slots=True)
class Ballot:
    """Equal-weight ranked vote for y candidates."""

    voter: str
    ranked_choices: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.ranked_choices)) != len(self.ranked_choices):
            raise ValueError(f"ballot of {self.voter} lists duplicate candidates")


@dataclass(frozen=True, slots=True)
class BlockOutcome:
    round: int
    slot: int
    manager: str
    verifiers: frozenset[str]
    agree_count: int
    accepted: bool
    truthful: bool

    def __post_init__(self) -> None:
        quorum = self.agree_count > (2 * len(self.verifiers)) // 3
        if self.accepted != quorum:
            raise ValueError("accepted flag contradicts the two-thirds rule")


def vote_and_select(ballots: Sequence[Ballot], k: int, y: int) -> MinerGroup:
    """Plurality-by-mention selection with lexicographic tie-break.

    Every ballot must list exactly y distinct candidates; candidates are
    scored by total mentions (equal voter weight), the top k become
    active miners and the next y-k stand by.
    """
    if not ballots:
        raise ValueError("need at least one ballot")
    if not 0 < k < y:
        raise ValueError("need 0 < k < y")
    mentions: dict[str, int] = {}
    for ballot in ballots:
        if len(ballot.ranked_choices) != y:
            raise ValueError(
                f"ballot of {ballot.voter} lists {len(ballot.ranked_choices)} "
                f"candidates, expected {y}"
            )
        for candidate in ballot.ranked_choices:
            mentions[candidate] = mentions.get(candidate, 0) + 1
    ranked = sorted(mentions, key=lambda c: (-mentions[c], c))
    return MinerGroup(active=tuple(ranked[:k]), standby=tuple(ranked[k:y]))


def rotate_manager(group: MinerGroup, slot: int) -> str:
    """Active miners take turns as block manager, one per time slot."""
    if slot < 0:
        raise ValueError("slot must be nonnegative")
    return group.active[slot % len(group.active)]


def _resolve_block(
    round_: int,
    slot: int,
    manager: str,
    verifiers: Sequence[str],
    colluders: frozenset[str],
    validity: bool,
) -> BlockOutcome:
    """Tally verification votes: honest report the truth, colluders lie."""
    agree = sum(
        1 for v in verifiers if (validity if v not in colluders else not validity)
    )
    accepted = agree > (2 * len(verifiers)) // 3
    return BlockOutcome(
        round=round_,
        slot=slot,
        manager=manager,
        verifiers=frozenset(verifiers),
        agree_count=agree,
        accepted=accepted,
        truthful=accepted == validity,
    )


def verify_block(
    round_: int,
    manager: str,
    verifiers: Sequence[str],
    colluders: Iterable[str] = (),
    seed: int = 0,
    corruption_probability: float = 1.0,
    slot: int = 0,
) -> BlockOutcome:
    """One quorum verification: colluders report the negation of truth.

    A colluding manager proposes a corrupted block with the given
    probability; honest managers propose valid blocks.  Deterministic for
    fixed inputs and seed.
    """
    if manager not in verifiers:
        raise ValueError("the manager belongs to the verifier set")
    colluders = frozenset(colluders)
    rng = np.random.default_rng(seed)
    corrupted = manager in colluders and rng.uniform() < corruption_probability
    return _resolve_block(round_, slot, manager, verifiers, colluders, not corrupted)


def admit_candidates(
    ledger: Ledger,
    roster: Iterable[str],
    ta_threshold: float,
    uncertainty_effect: float = 0.5,
    max_age_rounds: int = 10,
    neutral_prior: float = 0.5,
) -> set[str]:
    """Trust-authority admission: ledger-average reputation must clear
    the threshold (candidates without history get the neutral prior)."""
    return {
        candidate
        for candidate in roster
        if ledger.average_reputation(
            candidate, uncertainty_effect, max_age_rounds, neutral_prior
        )
        > ta_threshold
    }


def compute_final_reputations(
    rater: str,
    candidates: Sequence[str],
    own_events: Mapping[str, Sequence[tuple[float, str]]],
    ledger: Ledger,
    weights: ReputationWeights,
    now: float,
    link_quality: Mapping[str, float] | None = None,
    delta_of: Callable[[str, str], float] | None = None,
    max_age_rounds: int = 10,
) -> dict[str, float]:
    """Final reputation scores of one rater for every candidate.

    Local opinion from the rater's own events, recommendation aggregate
    from the ledger (each recommender weighted by ``delta_of(recommender,
    candidate)``, default 1), consensus fusion, then the expected-belief
    score.  Degenerate cases fall back to the local opinion; the round is
    never aborted.
    """
    link_quality = link_quality or {}
    scores: dict[str, float] = {}
    for candidate in candidates:
        counts = weighted_counts(
            own_events.get(candidate, ()),
            now,
            weights,
            link_quality=link_quality.get(candidate, 1.0),
        )
        local = opinion_from_evidence(counts)
        recs = ledger.recommended_opinions(candidate, rater, max_age_rounds)
        weighted = [
            ((delta_of(source, candidate) if delta_of else 1.0), opinion)
            for source, opinion in recs
        ]
        try:
            final = fuse(local, aggregate_recommendations(weighted))
        except ValueError:
            final = local  # no usable recommendations: keep the local view
        scores[candidate] = reputation_score(final, weights.uncertainty_effect)
    return scores


@dataclass
class SimulationReport:
    """Everything a run produced, ready for metric extraction/export."""

    seed: int
    rounds: int
    scheme: str
    vehicles: tuple[str, ...]
    candidates: tuple[str, ...]
    malicious: tuple[str, ...]
    compromised: tuple[str, ...]
    partners: dict[str, tuple[str, ...]]
    victims: dict[str, tuple[str, ...]]
    reputation: dict[str, np.ndarray]  # scheme -> [rounds, vehicles, candidates]
    system_average: dict[str, np.ndarray]  # scheme -> [rounds, candidates]
    groups: tuple[MinerGroup, ...]
    outcomes: tuple[BlockOutcome, ...]
    detected_round: dict[str, int]
    active_collusion: np.ndarray  # [rounds]
    ledger: Ledger
    events: tuple[InteractionRecord, ...]
    menu: ContractMenu | None = None
    menu_profile: VerifierTypeProfile | None = None
    menu_params: "ContractParams | None" = None
    joiners_per_round: dict[int, int] = field(default_factory=dict)


class ReputationEngine:
    """Vectorized per-round reputation pass over all rater/candidate pairs.

    Holds the event count prefixes and the stored-opinion state that
    stands in for the ledger contents; the batch kernels (compiled or
    pure backend) do the math.
    """

    def __init__(
        self,
        events: Sequence[InteractionRecord],
        vehicles: Sequence[str],
        candidates: Sequence[str],
        config: ScenarioConfig,
        fake_pairs: Sequence[tuple[int, int]] = (),
    ) -> None:
        self.vehicles = tuple(vehicles)
        self.candidates = tuple(candidates)
        self.config = config
        self.v_index = {v: i for i, v in enumerate(vehicles)}
        self.c_index = {c: i for i, c in enumerate(candidates)}
        w = config.weights
        self.rec_rounds = max(1, round(w.recent_horizon / config.round_seconds))
        self.win_rounds = max(
            self.rec_rounds, round(w.window / config.round_seconds)
        )
        rounds = config.rounds
        n_v, n_c = len(vehicles), len(candidates)
        pos = np.zeros((rounds + 1, n_v, n_c))
        neg = np.zeros_like(pos)
        link_sum = np.zeros_like(pos)
        link_cnt = np.zeros_like(pos)
        for event in events if rounds > 0 else ():
            r = min(int(event.timestamp // config.round_seconds), rounds - 1)
            i = self.v_index[event.vehicle]
            j = self.c_index[event.rsu]
            if event.outcome == "positive":
                pos[r + 1, i, j] += 1.0
            else:
                neg[r + 1, i, j] += 1.0
            link_sum[r + 1, i, j] += event.link_quality
            link_cnt[r + 1, i, j] += 1.0
        self.pos = np.cumsum(pos, axis=0)
        self.neg = np.cumsum(neg, axis=0)
        self.link_sum = np.cumsum(link_sum, axis=0)
        self.link_cnt = np.cumsum(link_cnt, axis=0)
        # stored (uploaded) opinions: multi-weight and unweighted locals
        self.st_b = np.zeros((n_v, n_c))
        self.st_d = np.zeros((n_v, n_c))
        self.st_u = np.ones((n_v, n_c))
        self.st_round = np.full((n_v, n_c), -(10**9))
        self.ts_b = np.zeros((n_v, n_c))
        self.ts_d = np.zeros((n_v, n_c))
        self.ts_u = np.ones((n_v, n_c))
        self.ts_valid = np.zeros((n_v, n_c))
        self.fake_pairs = tuple(fake_pairs)

    def round_views(self, r: int) -> dict[str, np.ndarray]:
        """Compute every scheme's reputation matrix at the end of round r."""
        cfg = self.config
        w = cfg.weights
        hi = r + 1
        rec_lo = max(0, hi - self.rec_rounds)
        win_lo = max(0, hi - self.win_rounds)
        rec_pos = self.pos[hi] - self.pos[rec_lo]
        past_pos = self.pos[rec_lo] - self.pos[win_lo]
        rec_neg = self.neg[hi] - self.neg[rec_lo]
        past_neg = self.neg[rec_lo] - self.neg[win_lo]
        raw_pos = self.pos[hi] - self.pos[win_lo]
        raw_neg = self.neg[hi] - self.neg[win_lo]
        cnt = self.link_cnt[hi] - self.link_cnt[win_lo]
        link = np.where(
            cnt > 0, (self.link_sum[hi] - self.link_sum[win_lo]) / np.maximum(cnt, 1), 1.0
        )

        alpha, beta = backend.weighted_counts_batch(
            rec_pos, past_pos, rec_neg, past_neg,
            w.recent_weight, w.past_weight, w.positive_weight, w.negative_weight,
        )
        lb, ld, lu = backend.local_opinions_batch(alpha, beta, link)
        delta = backend.recommendation_weights_batch(alpha, beta, w.scale)
        # the ledger head at query time is round r-1: staleness is
        # measured from there, matching Ledger.recommended_opinions
        fresh = (self.st_round >= r - 1 - cfg.max_age_rounds).astype(float)
        rb, rd, ru, have = backend.aggregate_excluding_self_batch(
            delta, self.st_b, self.st_d, self.st_u, fresh
        )
        fb, fd, fu = backend.fuse_batch(lb, ld, lu, rb, rd, ru, have)
        mwsl = fb + w.uncertainty_effect * fu

        tb, td, tu = backend.local_opinions_batch(raw_pos, raw_neg, link)
        t_las = tb + 0.5 * tu
        t_ave, _ = backend.tsl_average_batch(self.ts_b, self.ts_u, self.ts_valid)
        tsl = (1.0 - cfg.tsl.blend) * t_ave + cfg.tsl.blend * t_las

        none = np.minimum(
            1.0, 0.5 + cfg.none_slope * (self.pos[hi] + self.neg[hi])
        )
        return {
            "mwsl": mwsl, "tsl": tsl, "none": none,
            "final_b": fb, "final_d": fd, "final_u": fu,
            "local_b": lb, "local_d": ld, "local_u": lu,
            "tsl_b": tb, "tsl_d": td, "tsl_u": tu,
            "interacted": (raw_pos + raw_neg) > 0,
            "delta": delta, "link": link,
        }

    def ledger_average(self, r: int) -> np.ndarray:
        """Per-candidate unweighted mean of fresh stored opinion scores."""
        cfg = self.config
        fresh = self.st_round >= r - 1 - cfg.max_age_rounds
        scores = self.st_b + cfg.weights.uncertainty_effect * self.st_u
        total = np.where(fresh, scores, 0.0).sum(axis=0)
        count = fresh.sum(axis=0)
        return np.where(count > 0, total / np.maximum(count, 1), cfg.neutral_prior)

    def record_uploads(self, r: int, views: Mapping[str, np.ndarray], onset: bool,
                       fakes_enabled: bool) -> list[ReputationRecord]:
        """Store this round's uploads and return the signed ledger batch.

        Raters upload their evidence-based local opinions (their direct
        assessments).  Uploading already-fused finals and re-fusing them
        next round double-counts evidence: uncertainty collapses
        geometrically and beliefs lock at 1, so recommendations must stay
        independent of past recommendations.
        """
        upload = views["interacted"].copy()
        sb, sd, su = views["local_b"], views["local_d"], views["local_u"]
        tb, td, tu = views["tsl_b"], views["tsl_d"], views["tsl_u"]
        fake = np.zeros_like(upload)
        if onset and fakes_enabled:
            for i, j in self.fake_pairs:
                fake[i, j] = True
        both = upload | fake
        self.st_b[both] = np.where(fake, 1.0, sb)[both]
        self.st_d[both] = np.where(fake, 0.0, sd)[both]
        self.st_u[both] = np.where(fake, 0.0, su)[both]
        self.st_round[both] = r
        self.ts_b[both] = np.where(fake, 1.0, tb)[both]
        self.ts_d[both] = np.where(fake, 0.0, td)[both]
        self.ts_u[both] = np.where(fake, 0.0, tu)[both]
        self.ts_valid[both] = 1.0
        batch = []
        for i, j in zip(*np.nonzero(both)):
            if fake[i, j]:
                opinion = Opinion(1.0, 0.0, 0.0)
            else:
                opinion = Opinion(float(sb[i, j]), float(sd[i, j]), float(su[i, j]))
            batch.append(
                ReputationRecord(
                    rater=self.vehicles[i],
                    ratee=self.candidates[j],
                    opinion=opinion,
                    round=r,
                )
            )
        return batch

    def own_events_of(self, rater: str, events: Sequence[InteractionRecord]
                      ) -> dict[str, list[tuple[float, str]]]:
        """Per-candidate (timestamp, outcome) lists for one rater."""
        out: dict[str, list[tuple[float, str]]] = {}
        for event in events:
            if event.vehicle == rater:
                out.setdefault(event.rsu, []).append((event.timestamp, event.outcome))
        return out


def _build_world(config: ScenarioConfig):
    """Traces, sites, attack roster, and the interaction event stream."""
    root = np.random.SeedSequence(config.seed)
    ss_rsus, ss_traces, ss_events, ss_attack, ss_blocks = root.spawn(5)
    bbox = config.mobility.to_bbox()
    duration = config.rounds * config.round_seconds

    sites = deploy_rsus(
        config.candidates, bbox, config.mobility.radius_range_m,
        seed=int(ss_rsus.generate_state(1)[0]),
    )
    candidates = tuple(s.rsu for s in sites)

    trace_dir = os.environ.get(TRACE_DIR_ENV) or config.mobility.trace_dir
    if trace_dir:
        traces = filter_region(load_trace_dir(trace_dir), bbox)
        if len(traces) < config.vehicles:
            raise SimulationError(
                f"trace directory holds {len(traces)} in-region vehicles, "
                f"need {config.vehicles}"
            )
        chosen = sorted(traces)[: config.vehicles]
        start = min(traces[v][0].timestamp for v in chosen)
        traces = {
            v: [
                replace(p, timestamp=p.timestamp - start)
                for p in traces[v]
                if p.timestamp - start <= duration
            ]
            for v in chosen
        }
        traces = {v: pts for v, pts in traces.items() if pts}
    else:
        traces = synthetic_traces(
            config.vehicles, bbox, config.mobility.speed_range_kmh,
            duration=duration, step=config.mobility.step_s,
            seed=int(ss_traces.generate_state(1)[0]),
            home_range_m=config.mobility.home_range_m,
        )
    vehicles = tuple(sorted(traces))

    attack_rng = np.random.default_rng(ss_attack)
    attack = config.attack
    malicious = tuple(
        sorted(
            attack_rng.choice(
                candidates, size=attack.malicious_candidates, replace=False
            ).tolist()
        )
    )
    pool = tuple(
        sorted(
            attack_rng.choice(
                vehicles, size=attack.compromised_vehicles, replace=False
            ).tolist()
        )
    )
    partners: dict[str, tuple[str, ...]] = {}
    behaviors: dict[str, BehaviorProfile] = {}
    onset_t = attack.onset_round * config.round_seconds
    for rsu in malicious:
        if pool:
            chosen = attack_rng.choice(
                pool, size=min(attack.colluders_per_candidate, len(pool)),
                replace=False,
            )
            partners[rsu] = tuple(sorted(chosen.tolist()))
        else:
            partners[rsu] = ()
        behaviors[rsu] = BehaviorProfile(
            entity=rsu,
            schedule=((onset_t, duration + config.round_seconds, "malicious"),),
            collusion_partners=frozenset(partners[rsu]),
        )

    events = interaction_events(
        traces, sites, behaviors,
        seed=int(ss_events.generate_state(1)[0]),
        link_quality_range=config.mobility.link_quality_range,
        fire_probability=config.mobility.fire_probability,
        weekly_target=config.mobility.weekly_target,
    )
    return vehicles, candidates, malicious, pool, partners, events, ss_blocks


def _ballots(
    scores: np.ndarray,
    vehicles: Sequence[str],
    candidates: Sequence[str],
    admitted_idx: Sequence[int],
    targets_of: Mapping[int, tuple[int, ...]],
    ballot_collusion: bool,
    y_eff: int,
) -> list[Ballot]:
    ballots = []
    admitted = list(admitted_idx)
    for v, voter in enumerate(vehicles):
        targets = [j for j in targets_of.get(v, ()) if j in admitted] \
            if ballot_collusion else []
        if targets:
            rest = [j for j in admitted if j not in targets]
            rest.sort(key=lambda j: (scores[v, j], candidates[j]))
            # pad with the weakest candidates only, rotated per voter:
            # spreading the filler keeps its mention counts strictly
            # below the targets' so padding never elects a rival
            need = max(0, y_eff - len(targets))
            pool = rest[: min(len(rest), need + 2)]
            if pool:
                offset = v % len(pool)
                pool = pool[offset:] + pool[:offset]
            leftover = [j for j in rest if j not in pool]
            ranked = (targets + pool + leftover)[:y_eff]
        else:
            ranked = sorted(admitted, key=lambda j: (-scores[v, j], candidates[j]))
            ranked = ranked[:y_eff]
        ballots.append(
            Ballot(voter=voter, ranked_choices=tuple(candidates[j] for j in ranked))
        )
    return ballots


def run_simulation(config: ScenarioConfig) -> SimulationReport:
    """Execute the configured scenario; deterministic in (config, seed)."""
    config.validate()
    vehicles, candidates, malicious, pool, partners, events, ss_blocks = _build_world(
        config
    )
    n_v, n_c = len(vehicles), len(candidates)
    v_index = {v: i for i, v in enumerate(vehicles)}
    c_index = {c: i for i, c in enumerate(candidates)}
    fake_pairs = [
        (v_index[v], c_index[c]) for c in malicious for v in partners[c]
    ]
    targets_of: dict[int, tuple[int, ...]] = {}
    for c in malicious:
        for v in partners[c]:
            targets_of.setdefault(v_index[v], ())
            targets_of[v_index[v]] += (c_index[c],)
    targets_of = {v: tuple(sorted(set(t))) for v, t in targets_of.items()}

    engine = ReputationEngine(events, vehicles, candidates, config, fake_pairs)
    ledger = Ledger()
    block_rng = np.random.default_rng(ss_blocks)

    schemes = ("mwsl", "tsl", "none")
    reputation = {s: np.zeros((config.rounds, n_v, n_c)) for s in schemes}
    system_average = {s: np.zeros((config.rounds, n_c)) for s in schemes}
    groups: list[MinerGroup] = []
    outcomes: list[BlockOutcome] = []
    detected_round: dict[str, int] = {}
    active_collusion = np.zeros(config.rounds)
    last_menu: ContractMenu | None = None
    last_profile: VerifierTypeProfile | None = None
    last_params = None
    joiner_counts: dict[int, int] = {}

    for r in range(config.rounds):
        views = engine.round_views(r)
        for s in schemes:
            reputation[s][r] = views[s]
            system_average[s][r] = views[s].mean(axis=0)

        operative = system_average[config.scheme][r]
        if config.thresholds.detection > 0.0:
            for j in range(n_c):
                cand = candidates[j]
                if cand not in detected_round and operative[j] < config.thresholds.detection:
                    detected_round[cand] = r

        eligible = [j for j in range(n_c) if candidates[j] not in detected_round]
        if config.thresholds.ta_admission > 0.0:
            ledger_avg = engine.ledger_average(r)
            eligible = [
                j for j in eligible
                if ledger_avg[j] > config.thresholds.ta_admission
            ]
        y_eff = min(config.y, len(eligible))
        if y_eff <= config.k:
            raise SimulationError(
                f"round {r}: only {len(eligible)} eligible candidates for "
                f"k={config.k}; scenario is over-filtered"
            )

        scores = views[config.scheme]
        ballots = _ballots(
            scores, vehicles, candidates, eligible, targets_of,
            config.attack.ballot_collusion, y_eff,
        )
        group = vote_and_select(ballots, config.k, y_eff)
        groups.append(group)

        post_onset = r >= config.attack.onset_round
        colluding = frozenset(
            c for c in group.active + group.standby
            if c in partners and post_onset
        )
        active_collusion[r] = sum(
            1 for c in group.active if c in colluding
        ) / len(group.active)

        joiners: tuple[str, ...] = ()
        if config.standby_verification and group.standby:
            standby_scores = [operative[c_index[c]] for c in group.standby]
            if config.contract.enabled:
                profile = profile_from_reputations(
                    standby_scores, config.contract.types
                )
                params = replace(config.contract.params, verifier_count=y_eff)
                menu = solve_optimal_contract(profile, params)
                audit = check_menu(menu, profile, params.unit_cost)
                # IR holds for every type by construction, so all standby
                # types sign their items and join verification
                if all(slack >= -1e-9 for slack in audit.ir_slack):
                    joiners = group.standby
                last_menu, last_profile, last_params = menu, profile, params
            else:
                count = math.ceil(config.contract.standby_fraction * len(group.standby))
                ranked = sorted(
                    group.standby, key=lambda c: (-operative[c_index[c]], c)
                )
                joiners = tuple(ranked[:count])
            if config.contract.standby_cap is not None and joiners:
                ranked = sorted(
                    joiners, key=lambda c: (-operative[c_index[c]], c)
                )
                joiners = tuple(ranked[: config.contract.standby_cap])

        joiner_counts[r] = len(joiners)
        verifiers = tuple(group.active) + tuple(joiners)
        for slot in range(config.k):
            manager = rotate_manager(group, slot)
            corrupted = (
                manager in colluding
                and block_rng.uniform() < config.attack.corruption_probability
            )
            outcomes.append(
                _resolve_block(r, slot, manager, verifiers, colluding, not corrupted)
            )

        batch = engine.record_uploads(
            r, views, post_onset, config.attack.fake_positive_opinions
        )
        ledger.append(batch, r)

    seen: dict[str, set[str]] = {c: set() for c in malicious}
    for event in events:
        if event.outcome == "negative" and event.rsu in seen:
            seen[event.rsu].add(event.vehicle)
    victims = {c: tuple(sorted(vs)) for c, vs in seen.items()}

    return SimulationReport(
        seed=config.seed,
        rounds=config.rounds,
        scheme=config.scheme,
        vehicles=vehicles,
        candidates=candidates,
        malicious=malicious,
        compromised=pool,
        partners=partners,
        victims=victims,
        reputation=reputation,
        system_average=system_average,
        groups=tuple(groups),
        outcomes=tuple(outcomes),
        detected_round=detected_round,
        active_collusion=active_collusion,
        ledger=ledger,
        events=tuple(events),
        menu=last_menu,
        menu_profile=last_profile,
        menu_params=last_params,
        joiners_per_round=joiner_counts,
    )


def detection_rate(
    report: SimulationReport,
    threshold: float,
    horizon: int | None = None,
    scheme: str = "mwsl",
) -> float:
    """Fraction of malicious candidates whose system-average reputation
    drops strictly below the threshold within the horizon."""
    if not report.malicious:
        raise ValueError("scenario has no malicious candidates")
    horizon = report.rounds if horizon is None else min(horizon, report.rounds)
    c_index = {c: i for i, c in enumerate(report.candidates)}
    series = report.system_average[scheme]
    detected = 0
    for cand in report.malicious:
        if bool((series[:horizon, c_index[cand]] < threshold).any()):
            detected += 1
    return detected / len(report.malicious)


def correct_block_probability(report: SimulationReport) -> float:
    """Fraction of block outcomes whose verdict matches ground truth."""
    if not report.outcomes:
        raise ValueError("report holds no block outcomes")
    return sum(1 for o in report.outcomes if o.truthful) / len(report.outcomes)


def first_crossing_round(
    report: SimulationReport,
    candidate: str,
    threshold: float,
    scheme: str,
    view: str = "victims",
) -> int | None:
    """First round a candidate's reputation drops below the threshold.

    ``view="victims"`` averages the views of vehicles the candidate
    misbehaved toward; ``"system"`` uses the system average.
    """
    c = report.candidates.index(candidate)
    if view == "system":
        series = report.system_average[scheme][:, c]
    elif view == "victims":
        rows = [report.vehicles.index(v) for v in report.victims.get(candidate, ())]
        if not rows:
            return None
        series = report.reputation[scheme][:, rows, c].mean(axis=1)
    else:
        raise ValueError(f"unknown view {view!r}")
    below = np.nonzero(series < threshold)[0]
    return int(below[0]) if below.size else None
