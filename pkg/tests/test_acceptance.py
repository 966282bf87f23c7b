"""Acceptance suite.

One test per acceptance criterion, each printing a PASS line with its
headline numbers (run with ``pytest tests/test_acceptance.py -v -s``).
Criteria with runtime budgets assert them; the final test asserts the
whole module stayed under the five-minute budget.
"""

import time

import numpy as np
import pytest

from oracles import (
    aggregate_oracle,
    fuse_oracle,
    interaction_frequency_oracle,
    opinion_oracle,
    score_oracle,
    tsl_oracle,
    weighted_counts_oracle,
)
from repdpos.config import (
    AttackConfig,
    ScenarioConfig,
    ThresholdConfig,
    spec_from_dict,
)
from repdpos.consensus import (
    correct_block_probability,
    detection_rate,
    first_crossing_round,
    run_simulation,
)
from repdpos.contracts import (
    ContractParams,
    VerifierTypeProfile,
    brute_force_contract,
    check_menu,
    manager_profit,
    solve_optimal_contract,
    stackelberg_symmetric,
)
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
from repdpos.reporting import run_experiment, write_outputs

MODULE_START = time.perf_counter()
ORACLE_TOL = 1e-12
SEEDS = (1, 2, 3, 4, 5)


def _announce(criterion: int, message: str) -> None:
    print(f"\nACCEPTANCE {criterion} PASS: {message}")


def _random_opinion(rng) -> Opinion:
    b = rng.uniform()
    d = rng.uniform(0.0, 1.0 - b)
    return Opinion(b, d, 1.0 - b - d)


# ---------------------------------------------------------------------------
# scenario fixtures shared by criteria 3-5


def detection_scenario(seed: int) -> ScenarioConfig:
    # desk scale of the collusion scenario: 10 malicious candidates turn
    # malicious after 5 honest minutes, each colluding with 10 compromised
    # vehicles; misbehaved-against vehicles emerge from mobility (about a
    # quarter of the fleet, the "50 of 200" scaled)
    return ScenarioConfig(
        vehicles=60, candidates=40, rounds=60, k=9, y=21, seed=seed,
        attack=AttackConfig(
            malicious_candidates=10, onset_round=5,
            colluders_per_candidate=10, compromised_vehicles=20,
        ),
    )


def standby_scenario(seed: int, standby: bool) -> ScenarioConfig:
    return ScenarioConfig(
        vehicles=60, candidates=40, rounds=60, k=9, y=17, seed=seed,
        standby_verification=standby,
        thresholds=ThresholdConfig(detection=0.2),
        attack=AttackConfig(
            malicious_candidates=5, onset_round=5,
            colluders_per_candidate=36, compromised_vehicles=36,
        ),
    )


@pytest.fixture(scope="module")
def detection_reports():
    start = time.perf_counter()
    reports = {seed: run_simulation(detection_scenario(seed)) for seed in SEEDS}
    return reports, time.perf_counter() - start


# ---------------------------------------------------------------------------


def test_criterion_1_opinion_oracle_equivalence():
    """Every opinion-algebra operation matches the independent
    transcription on >= 1000 seeded random inputs to 1e-12."""
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    weights = ReputationWeights(recent_horizon=120.0, window=900.0)
    for trial in range(1000):
        alpha = 0.0 if trial % 50 == 0 else rng.uniform(0, 100)
        beta = 0.0 if trial % 50 == 0 else rng.uniform(0, 100)
        s = rng.uniform()
        op = opinion_from_evidence(EvidenceCounts(alpha, beta, s))
        ob, od, ou = opinion_oracle(alpha, beta, s)
        worst = max(worst, abs(op.belief - ob), abs(op.disbelief - od),
                    abs(op.uncertainty - ou))

        gamma = rng.uniform()
        any_op = _random_opinion(rng)
        worst = max(
            worst,
            abs(reputation_score(any_op, gamma)
                - score_oracle(any_op.belief, any_op.uncertainty, gamma)),
        )

        now = 1000.0
        events = [
            (now - float(rng.uniform(0, 1200)),
             "positive" if rng.uniform() < 0.5 else "negative")
            for _ in range(int(rng.integers(0, 12)))
        ]
        got = weighted_counts(events, now, weights)
        want = weighted_counts_oracle(
            events, now, weights.recent_weight, weights.past_weight,
            weights.positive_weight, weights.negative_weight,
            weights.recent_horizon, weights.window,
        )
        worst = max(worst, abs(got.positive - want[0]), abs(got.negative - want[1]))

        peers = [
            EvidenceCounts(rng.uniform(0.1, 20), rng.uniform(0.1, 20))
            for _ in range(int(rng.integers(1, 6)))
        ]
        target = peers[int(rng.integers(0, len(peers)))]
        got_if = interaction_frequency(target, peers)
        want_if = interaction_frequency_oracle(
            target.total, [p.total for p in peers]
        )
        worst = max(worst, abs(got_if - want_if))

        recs = [
            (float(rng.uniform(0.01, 5)), _random_opinion(rng))
            for _ in range(int(rng.integers(1, 6)))
        ]
        agg = aggregate_recommendations(recs)
        wb, wd, wu = aggregate_oracle(
            [(w, (o.belief, o.disbelief, o.uncertainty)) for w, o in recs]
        )
        worst = max(worst, abs(agg.belief - wb), abs(agg.disbelief - wd),
                    abs(agg.uncertainty - wu))

        local, rec = _random_opinion(rng), _random_opinion(rng)
        denom = (local.uncertainty + rec.uncertainty
                 - rec.uncertainty * local.uncertainty)
        if denom > 1e-9:
            fused = fuse(local, rec)
            fb, fd, fu = fuse_oracle(
                (local.belief, local.disbelief, local.uncertainty),
                (rec.belief, rec.disbelief, rec.uncertainty),
            )
            worst = max(worst, abs(fused.belief - fb), abs(fused.disbelief - fd),
                        abs(fused.uncertainty - fu))

        kappa = rng.uniform()
        avg, latest = _random_opinion(rng), _random_opinion(rng)
        worst = max(
            worst,
            abs(tsl_reputation(avg, latest, TslParams(kappa)) - tsl_oracle(
                (avg.belief, avg.disbelief, avg.uncertainty),
                (latest.belief, latest.disbelief, latest.uncertainty), kappa,
            )),
        )
    elapsed = time.perf_counter() - start
    assert worst <= ORACLE_TOL
    assert elapsed < 5.0
    _announce(1, f"max abs deviation {worst:.2e} over 1000 trials in {elapsed:.2f}s")


def test_criterion_2_fusion_identities_exact():
    """fuse(w, vacuous) == w and fuse(dogmatic, .) == dogmatic, exactly,
    over 10^4 random opinions."""
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        op = _random_opinion(rng)
        fused = fuse(op, VACUOUS)
        assert (fused.belief, fused.disbelief, fused.uncertainty) == (
            op.belief, op.disbelief, op.uncertainty
        )
        b = rng.uniform()
        dogmatic = Opinion(b, 1.0 - b, 0.0)
        rec = _random_opinion(rng)
        fused = fuse(dogmatic, rec)
        assert (fused.belief, fused.disbelief, fused.uncertainty) == (
            dogmatic.belief, dogmatic.disbelief, dogmatic.uncertainty
        )
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    _announce(2, f"2x10^4 exact identities in {elapsed:.2f}s")


def test_criterion_3_detection_rate(detection_reports):
    """MWSL detection rate at threshold 0.5 is exactly 1.0 and strictly
    above TSL's, on every seed."""
    reports, build_time = detection_reports
    start = time.perf_counter()
    rates = {}
    for seed, report in reports.items():
        mwsl = detection_rate(report, 0.5, scheme="mwsl")
        tsl = detection_rate(report, 0.5, scheme="tsl")
        assert mwsl == 1.0, f"seed {seed}: MWSL rate {mwsl}"
        assert mwsl > tsl, f"seed {seed}: TSL rate {tsl} not below MWSL"
        rates[seed] = (mwsl, tsl)
    elapsed = build_time + (time.perf_counter() - start)
    assert elapsed < 60.0
    _announce(3, f"MWSL 1.0 vs TSL {[round(t, 2) for _, t in rates.values()]} "
                 f"across seeds {list(rates)} in {elapsed:.1f}s")


def test_criterion_4_reputation_drop_ordering(detection_reports):
    """From the misbehaved-against vehicles' view, the reputation of every
    malicious candidate crosses 0.5 strictly earlier under MWSL than under
    TSL; the no-reputation baseline never drops."""
    reports, _ = detection_reports
    margins = []
    for seed, report in reports.items():
        for candidate in report.malicious:
            assert report.victims.get(candidate), (seed, candidate)
            mwsl = first_crossing_round(report, candidate, 0.5, "mwsl")
            tsl = first_crossing_round(report, candidate, 0.5, "tsl")
            none = first_crossing_round(report, candidate, 0.5, "none")
            assert mwsl is not None, (seed, candidate)
            assert tsl is None or mwsl < tsl, (seed, candidate, mwsl, tsl)
            assert none is None, (seed, candidate)
            if tsl is not None:
                margins.append(tsl - mwsl)
    _announce(4, f"crossing lead over TSL: min {min(margins)} rounds, "
                 f"median {sorted(margins)[len(margins) // 2]}")


def test_criterion_5_standby_verification_benefit():
    """With >1/3 active collusion at detection threshold 0.2, standby
    verification lifts correct-block probability by >= 5 points."""
    start = time.perf_counter()
    diffs = []
    for seed in SEEDS:
        with_sb = run_simulation(standby_scenario(seed, True))
        without = run_simulation(standby_scenario(seed, False))
        onset = without.active_collusion[5:]
        assert onset.min() > 1.0 / 3.0, f"seed {seed}: collusion {onset.min()}"
        p_with = correct_block_probability(with_sb)
        p_without = correct_block_probability(without)
        assert p_with >= p_without + 0.05, (seed, p_with, p_without)
        diffs.append(p_with - p_without)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _announce(5, f"benefit {min(diffs):.3f}..{max(diffs):.3f} across seeds "
                 f"in {elapsed:.1f}s")


TABLE_PARAMS = ContractParams(verifier_count=40)


def uniform_profile(q, lo=0.1, hi=1.0):
    if q == 1:
        return VerifierTypeProfile.uniform([hi])
    return VerifierTypeProfile.uniform([lo + (hi - lo) * i / (q - 1) for i in range(q)])


def test_criterion_6_contract_feasibility():
    """Q=10 uniform types: IR slack >= -1e-9 with type-1 binding, all
    pairwise IC slacks >= -1e-9, diagonally row-maximal utilities."""
    start = time.perf_counter()
    profile = uniform_profile(10)
    menu = solve_optimal_contract(profile, TABLE_PARAMS)
    audit = check_menu(menu, profile, TABLE_PARAMS.unit_cost)
    assert min(audit.ir_slack) >= -1e-9
    assert audit.ir_type1_gap <= 1e-9
    assert audit.worst_ic_violation <= 1e-9
    assert audit.diagonally_row_maximal
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _announce(6, f"IR slack min {min(audit.ir_slack):.1e}, worst IC "
                 f"{audit.worst_ic_violation:.1e} in {elapsed * 1e3:.0f}ms")


def _random_instance(rng):
    q = int(rng.integers(1, 6))
    thetas = np.sort(rng.uniform(0.3, 2.0, q))
    while len(np.unique(thetas)) < q:
        thetas = np.sort(rng.uniform(0.3, 2.0, q))
    priors = rng.uniform(0.5, 1.5, q)
    priors /= priors.sum()
    profile = VerifierTypeProfile(tuple(thetas), tuple(priors))
    params = ContractParams(
        gain=float(rng.uniform(0.8, 2.0)),
        scale_coeff=float(rng.uniform(10.0, 25.0)),
        latency_coeff=float(rng.uniform(5.0, 15.0)),
        scale_exp=2.0,
        latency_exp=1.0,
        reward_weight=float(rng.uniform(2.0, 8.0)),
        unit_cost=float(rng.uniform(0.5, 2.0)),
        max_latency=float(rng.uniform(100.0, 500.0)),
        budget=float(rng.uniform(500.0, 2000.0)),
        verifier_count=int(rng.integers(15, 60)),
    )
    return profile, params


@pytest.fixture(scope="module")
def solved_instances():
    rng = np.random.default_rng(99)
    instances = []
    while len(instances) < 20:
        profile, params = _random_instance(rng)
        menu = solve_optimal_contract(profile, params)
        instances.append((profile, params, menu))
    return instances


def test_criterion_7_solver_vs_oracle(solved_instances):
    """Solver profit >= brute-force grid profit - 1% on 20 random
    instances, Q in 1..5, >= 50 grid points per type."""
    start = time.perf_counter()
    worst_gap = 0.0
    for profile, params, menu in solved_instances:
        oracle_menu = brute_force_contract(profile, params, grid_resolution=50)
        p_solver = manager_profit(menu, profile, params)
        p_oracle = manager_profit(oracle_menu, profile, params)
        assert p_solver >= p_oracle - 0.01 * abs(p_oracle), (
            len(profile), p_solver, p_oracle
        )
        if p_oracle != 0:
            worst_gap = max(worst_gap, (p_oracle - p_solver) / abs(p_oracle))
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    _announce(7, f"20 instances, worst relative gap {worst_gap:.2e} "
                 f"in {elapsed:.1f}s")


def test_criterion_8_monotonicity_lemmas(solved_instances):
    """Rewards and inverse latencies nondecreasing in type on every solved
    instance; menus built from the reward schedule over any monotone
    inverse-latency vector pass the full pairwise IC check."""
    from repdpos.contracts import ContractItem, ContractMenu, reward_schedule

    checked = 0
    for profile, params, menu in solved_instances + [
        (uniform_profile(10), TABLE_PARAMS,
         solve_optimal_contract(uniform_profile(10), TABLE_PARAMS))
    ]:
        rewards = menu.rewards
        inv_lat = menu.inv_latencies
        assert all(b - a >= -1e-9 for a, b in zip(rewards, rewards[1:]))
        assert all(b - a >= -1e-9 for a, b in zip(inv_lat, inv_lat[1:]))
        audit = check_menu(menu, profile, params.unit_cost)
        assert audit.worst_ic_violation <= 1e-9
        assert min(audit.ir_slack) >= -1e-9
        assert audit.reward_monotone_consistent
        assert audit.latency_monotone_consistent
        checked += 1
    # local-downward-IC construction implies full IC for arbitrary
    # monotone latency vectors, not just solver outputs
    rng = np.random.default_rng(4)
    for _ in range(50):
        q = int(rng.integers(1, 7))
        thetas = np.sort(rng.uniform(0.2, 3.0, q))
        if len(np.unique(thetas)) < q:
            continue
        priors = rng.uniform(0.5, 1.5, q)
        profile = VerifierTypeProfile(tuple(thetas), tuple(priors / priors.sum()))
        unit_cost = float(rng.uniform(0.5, 2.0))
        linv = np.sort(rng.uniform(0.01, 5.0, q))
        menu = ContractMenu(tuple(
            ContractItem(r, float(v))
            for r, v in zip(reward_schedule(linv, profile, unit_cost), linv)
        ))
        audit = check_menu(menu, profile, unit_cost)
        assert audit.worst_ic_violation <= 1e-9
        assert min(audit.ir_slack) >= -1e-9
        assert audit.ir_type1_gap <= 1e-9
        checked += 1
    _announce(8, f"{checked} menus: zero monotonicity or IC violations "
                 f"beyond 1e-9")


def test_criterion_9_profit_vs_types_trend():
    """Contract profit nondecreasing in the number of types (4 verifiers
    per type); the symmetric-Stackelberg curve is emitted alongside."""
    contract_curve = []
    stackelberg_curve = []
    for q in (2, 4, 6, 8, 10):
        params = ContractParams(verifier_count=4 * q)
        profile = uniform_profile(q)
        contract_curve.append(
            manager_profit(solve_optimal_contract(profile, params), profile, params)
        )
        stackelberg_curve.append(
            manager_profit(stackelberg_symmetric(profile, params), profile, params)
        )
    assert all(b >= a - 1e-9 for a, b in zip(contract_curve, contract_curve[1:]))
    _announce(9, "contract profits "
                 + ", ".join(f"{p:.0f}" for p in contract_curve)
                 + " | stackelberg_sym "
                 + ", ".join(f"{p:.0f}" for p in stackelberg_curve))


SMALL_SIM_SPEC = {
    "name": "determinism_probe",
    "kind": "simulation",
    "seed": 11,
    "outputs": ["reputation_timeseries", "detection_rate", "ledger_dump",
                "event_dump"],
    "scenario": {
        "vehicles": 24, "candidates": 12, "rounds": 12, "k": 3, "y": 8,
        "attack": {
            "malicious_candidates": 3, "onset_round": 2,
            "colluders_per_candidate": 4, "compromised_vehicles": 6,
        },
        "mobility": {"home_range_m": 1200.0, "fire_probability": 0.8},
    },
}

CONTRACT_SPEC = {
    "name": "contract_probe",
    "kind": "contract",
    "seed": 11,
    "outputs": ["verifier_utilities", "profit_vs_types", "contract_menu"],
    "contract": {"types": 10, "verifiers_per_type": 4},
}


def test_criterion_10_byte_identical_outputs(tmp_path):
    """Running any spec twice with the same seed yields byte-identical
    output files."""
    for payload in (SMALL_SIM_SPEC, CONTRACT_SPEC):
        spec = spec_from_dict(payload)
        dirs = []
        for tag in ("a", "b"):
            out = tmp_path / payload["name"] / tag
            write_outputs(spec, run_experiment(spec), str(out))
            dirs.append(out)
        files_a = sorted(p.name for p in dirs[0].iterdir())
        files_b = sorted(p.name for p in dirs[1].iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()
    _announce(10, "simulation and contract spec reruns byte-identical")


def test_criterion_10_total_runtime():
    """The acceptance module finishes well inside the five-minute budget."""
    elapsed = time.perf_counter() - MODULE_START
    assert elapsed < 300.0
    _announce(10, f"acceptance module wall time {elapsed:.1f}s < 300s")
