"""Contract-theoretic incentive engine for block verification.

A block manager prices verification work for Q reputation types
``theta_1 < ... < theta_Q`` (prior weights ``p_q``) by publishing a menu
of (reward, inverse-latency) items.  A type-q verifier signing item
(R, Linv) gets utility

    U_q = theta_q * eta(R) - l' * Linv,        eta(R) = R

and the manager earns, per type,

    |M| * p_q * (g1 * phi_q(L) - l * R_q)

where phi_q is the security-latency benefit

    phi_q(L) = e1*(theta_q*|M|*p_q)^z1 - e2*(L/T_max)^z2   for 0 < L < A,
               0 otherwise,
    A = T_max * (e1/e2)^(1/z2) * (theta_q*|M|*p_q)^(z1/z2).

Feasible menus satisfy individual rationality (IR: nonnegative utility at
the own item) and incentive compatibility (IC: the own item maximizes
utility).  With monotone rewards the full IC set collapses to binding
local downward constraints, which yields the closed-form reward schedule

    R_q = l'*Linv_1/theta_1 + sum_{k<=q} (l'*Linv_k - l'*Linv_{k-1})/theta_k

and eliminates rewards from the manager's problem through the cost
coefficients

    f_q = l'*p_q/theta_q + (l'/theta_q - l'/theta_{q+1}) * sum_{i>q} p_i
    f_Q = l'*p_Q/theta_Q,

leaving a concave separable maximization over the inverse latencies with
a latency floor 1/T_max and the reward budget |M| * sum f_q * Linv_q <=
R_max.  ``solve_optimal_contract`` solves it in closed form per type,
pools adjacent types whose unconstrained optima violate monotonicity
(infeasible sub-sequence replacement), and prices a binding budget by
bisecting the common multiplier (or, optionally, by a uniform rescale).
``brute_force_contract`` is the independent grid-search oracle, and
``stackelberg_symmetric`` the complete-information first-best baseline
where every type's IR binds individually.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement, islice
from typing import Callable, Sequence

import numpy as np

SLACK_TOL = 1e-9


class ContractInfeasibleError(ValueError):
    """Even the floor allocation violates the reward budget."""


def _identity(reward: float) -> float:
    return reward


@dataclass(frozen=True, slots=True)
class VerifierTypeProfile:
    """Ascending reputation types and their prior probabilities."""

    types: tuple[float, ...]
    priors: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.types) != len(self.priors) or not self.types:
            raise ValueError("types and priors must be non-empty and aligned")
        if any(t <= 0 for t in self.types):
            raise ValueError("types must be positive")
        if any(b <= a for a, b in zip(self.types, self.types[1:])):
            raise ValueError("types must be strictly ascending")
        if any(p < 0 for p in self.priors):
            raise ValueError("priors must be nonnegative")
        if abs(sum(self.priors) - 1.0) > 1e-12:
            raise ValueError("priors must sum to 1")

    def __len__(self) -> int:
        return len(self.types)

    @classmethod
    def uniform(cls, types: Sequence[float]) -> "VerifierTypeProfile":
        q = len(types)
        return cls(tuple(float(t) for t in types), tuple([1.0 / q] * q))


@dataclass(frozen=True, slots=True)
class ContractItem:
    reward: float
    inv_latency: float

    def __post_init__(self) -> None:
        if self.reward < 0:
            raise ValueError("reward must be nonnegative")
        if self.inv_latency <= 0:
            raise ValueError("inv_latency must be positive")


@dataclass(frozen=True, slots=True)
class ContractMenu:
    items: tuple[ContractItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    @property
    def rewards(self) -> tuple[float, ...]:
        return tuple(item.reward for item in self.items)

    @property
    def inv_latencies(self) -> tuple[float, ...]:
        return tuple(item.inv_latency for item in self.items)


@dataclass(frozen=True, slots=True)
class ContractParams:
    """Manager-side pricing constants (benefit, costs, bounds)."""

    gain: float = 1.2  # g1: unit profit gain on the benefit term
    scale_coeff: float = 15.0  # e1: network-scale coefficient
    latency_coeff: float = 10.0  # e2: latency penalty coefficient
    scale_exp: float = 2.0  # z1
    latency_exp: float = 1.0  # z2
    reward_weight: float = 5.0  # l: weight on paid rewards
    unit_cost: float = 1.0  # l': verifier's unit resource cost
    max_latency: float = 300.0  # T_max, seconds
    budget: float = 1000.0  # R_max
    verifier_count: int = 20  # |M|

    def __post_init__(self) -> None:
        values = (
            self.gain, self.scale_coeff, self.latency_coeff, self.reward_weight,
            self.unit_cost, self.max_latency, self.budget,
        )
        if any(v <= 0 for v in values) or self.verifier_count <= 0:
            raise ValueError("contract parameters must be positive")
        if self.scale_exp < 1 or self.latency_exp < 1:
            raise ValueError("exponents must be at least 1")


@dataclass(frozen=True, slots=True)
class VerificationTask:
    cpu_cycles: float
    input_size: float  # bits
    output_size: float  # bits
    broadcast_coeff: float  # seconds per (bit * verifier)

    def __post_init__(self) -> None:
        if min(self.cpu_cycles, self.input_size, self.output_size, self.broadcast_coeff) <= 0:
            raise ValueError("task fields must be positive")


@dataclass(frozen=True, slots=True)
class RadioParams:
    bandwidth: float  # Hz
    tx_powers: tuple[float, ...]  # watts, per verifier
    channel_gains: tuple[float, ...]  # amplitude, per verifier
    noise_density: float  # W/Hz

    def __post_init__(self) -> None:
        if self.bandwidth <= 0 or self.noise_density <= 0:
            raise ValueError("bandwidth and noise density must be positive")
        if len(self.tx_powers) != len(self.channel_gains):
            raise ValueError("per-verifier arrays must be aligned")


def link_rate(m: int, radio: RadioParams, active_set: Sequence[int]) -> float:
    """Interference-limited Shannon rate for verifier m, bits/second.

    Uplink equals downlink under time-division sharing of one channel;
    every other active verifier contributes interference.
    """
    if m not in active_set:
        raise ValueError("verifier must belong to the active set")
    own = radio.tx_powers[m] * radio.channel_gains[m] ** 2
    interference = sum(
        radio.tx_powers[j] * radio.channel_gains[j] ** 2
        for j in active_set
        if j != m
    )
    noise = radio.noise_density * radio.bandwidth
    return radio.bandwidth * math.log2(1.0 + own / (interference + noise))


def verification_latency(
    task: VerificationTask,
    compute_rate: float,
    rate_down: float,
    rate_up: float,
    verifier_count: int,
) -> float:
    """End-to-end verification latency (seconds) for one verifier.

    Download of the unverified block, local verification, result
    broadcast/comparison across the verifier set, and feedback upload.
    """
    if min(compute_rate, rate_down, rate_up) <= 0 or verifier_count <= 0:
        raise ValueError("rates and verifier count must be positive")
    return (
        task.input_size / rate_down
        + task.cpu_cycles / compute_rate
        + task.broadcast_coeff * task.input_size * verifier_count
        + task.output_size / rate_up
    )


def _phi_cutoff(scale: float, params: ContractParams) -> float:
    """Latency A above which the security-latency benefit is zero."""
    return (
        params.max_latency
        * (params.scale_coeff / params.latency_coeff) ** (1.0 / params.latency_exp)
        * scale ** (params.scale_exp / params.latency_exp)
    )


def security_latency_metric(
    theta: float, prior: float, verifier_count: int, latency: float, params: ContractParams
) -> float:
    """Security-latency benefit phi; zero outside 0 < L < A (strictly)."""
    if latency <= 0:
        return 0.0
    scale = theta * verifier_count * prior
    if latency >= _phi_cutoff(scale, params):
        return 0.0
    return (
        params.scale_coeff * scale ** params.scale_exp
        - params.latency_coeff * (latency / params.max_latency) ** params.latency_exp
    )


def verifier_utility(
    theta: float,
    item: ContractItem,
    unit_cost: float,
    valuation: Callable[[float], float] = _identity,
) -> float:
    """U = theta * eta(R) - l' * Linv (eta defaults to the identity)."""
    return theta * valuation(item.reward) - unit_cost * item.inv_latency


def manager_profit(
    menu: ContractMenu, profile: VerifierTypeProfile, params: ContractParams
) -> float:
    """Expected manager profit of a menu under the piecewise benefit."""
    if len(menu) != len(profile):
        raise ValueError("menu and profile sizes differ")
    total = 0.0
    for item, theta, prior in zip(menu.items, profile.types, profile.priors):
        phi = security_latency_metric(
            theta, prior, params.verifier_count, 1.0 / item.inv_latency, params
        )
        total += params.verifier_count * prior * (
            params.gain * phi - params.reward_weight * item.reward
        )
    return total


def reward_schedule(
    inv_latencies: Sequence[float], profile: VerifierTypeProfile, unit_cost: float
) -> tuple[float, ...]:
    """Rewards from binding type-1 IR and local downward IC equalities."""
    if len(inv_latencies) != len(profile):
        raise ValueError("inv_latencies and profile sizes differ")
    rewards = []
    reward = unit_cost * inv_latencies[0] / profile.types[0]
    rewards.append(reward)
    for q in range(1, len(profile)):
        reward += (
            unit_cost * inv_latencies[q] - unit_cost * inv_latencies[q - 1]
        ) / profile.types[q]
        rewards.append(reward)
    return tuple(rewards)


def f_coefficients(profile: VerifierTypeProfile, unit_cost: float) -> tuple[float, ...]:
    """Per-type reward-cost coefficients of the reduced manager problem.

    Satisfy sum_q p_q * R_q == sum_q f_q * Linv_q for every inverse-latency
    vector with rewards from ``reward_schedule``.
    """
    q_total = len(profile)
    coeffs = []
    for q in range(q_total):
        theta = profile.types[q]
        if q == q_total - 1:
            coeffs.append(unit_cost * profile.priors[q] / theta)
        else:
            tail = sum(profile.priors[q + 1:])
            coeffs.append(
                unit_cost * profile.priors[q] / theta
                + (unit_cost / theta - unit_cost / profile.types[q + 1]) * tail
            )
    return tuple(coeffs)


def _pooled_stationary(
    priors: np.ndarray, coeffs: np.ndarray, params: ContractParams, multiplier: float
) -> float:
    """Common optimum of a pooled run of adjacent types."""
    num = params.gain * params.latency_coeff * params.latency_exp * priors.sum()
    den = (
        params.max_latency ** params.latency_exp
        * (params.reward_weight + multiplier)
        * coeffs.sum()
    )
    if den <= 0 or num <= 0:
        return 1.0 / params.max_latency
    return (num / den) ** (1.0 / (params.latency_exp + 1.0))


def _ironed_allocation(
    profile: VerifierTypeProfile,
    coeffs: Sequence[float],
    params: ContractParams,
    multiplier: float,
) -> np.ndarray:
    """Per-type stationary points, pooled to nondecreasing, floor-clamped."""
    priors = np.asarray(profile.priors)
    f = np.asarray(coeffs)
    # pool-adjacent-violators over maximal decreasing runs
    blocks: list[tuple[list[int], float]] = []
    for q in range(len(profile)):
        indices = [q]
        value = _pooled_stationary(priors[[q]], f[[q]], params, multiplier)
        while blocks and blocks[-1][1] > value:
            prev_idx, _ = blocks.pop()
            indices = prev_idx + indices
            value = _pooled_stationary(priors[indices], f[indices], params, multiplier)
        blocks.append((indices, value))
    out = np.empty(len(profile))
    floor = 1.0 / params.max_latency
    for indices, value in blocks:
        out[indices] = max(value, floor)
    return out


def _budget_used(inv_latencies: np.ndarray, coeffs: Sequence[float], params: ContractParams) -> float:
    return params.verifier_count * float(np.dot(coeffs, inv_latencies))


def solve_optimal_contract(
    profile: VerifierTypeProfile,
    params: ContractParams,
    budget_mode: str = "bisection",
) -> ContractMenu:
    """Closed-form screening optimum with ironing and budget pricing.

    ``budget_mode="bisection"`` (default) finds the exact budget
    multiplier; ``"scale"`` applies the uniform-rescale heuristic
    instead.  Raises ContractInfeasibleError when even the latency floor
    exceeds the budget.
    """
    coeffs = f_coefficients(profile, params.unit_cost)
    floor = 1.0 / params.max_latency
    floor_budget = _budget_used(np.full(len(profile), floor), coeffs, params)
    if floor_budget > params.budget + SLACK_TOL:
        raise ContractInfeasibleError(
            f"floor allocation needs {floor_budget:.6g} > budget {params.budget:.6g}"
        )
    alloc = _ironed_allocation(profile, coeffs, params, 0.0)
    if _budget_used(alloc, coeffs, params) > params.budget:
        if budget_mode == "scale":
            # uniform rescale of the entries above the floor; entries the
            # rescale would push below the floor are pinned there and the
            # remainder rescaled again (at most Q passes)
            for _ in range(len(profile)):
                free = alloc > floor
                if not free.any():
                    break
                pinned = _budget_used(np.where(free, 0.0, alloc), coeffs, params)
                used = _budget_used(np.where(free, alloc, 0.0), coeffs, params)
                scale = max(params.budget - pinned, 0.0) / used
                if scale >= 1.0:
                    break
                alloc = np.maximum(np.where(free, alloc * scale, alloc), floor)
        elif budget_mode == "bisection":
            lo, hi = 0.0, 1.0
            while _budget_used(
                _ironed_allocation(profile, coeffs, params, hi), coeffs, params
            ) > params.budget:
                hi *= 2.0
                if hi > 1e18:  # floor check above makes this unreachable
                    raise ContractInfeasibleError("budget multiplier diverged")
            for _ in range(200):
                mid = (lo + hi) / 2.0
                if _budget_used(
                    _ironed_allocation(profile, coeffs, params, mid), coeffs, params
                ) > params.budget:
                    lo = mid
                else:
                    hi = mid
            alloc = _ironed_allocation(profile, coeffs, params, hi)
        else:
            raise ValueError(f"unknown budget_mode {budget_mode!r}")
    rewards = reward_schedule(alloc, profile, params.unit_cost)
    return ContractMenu(
        tuple(ContractItem(r, float(v)) for r, v in zip(rewards, alloc))
    )


def stackelberg_symmetric(
    profile: VerifierTypeProfile, params: ContractParams
) -> ContractMenu:
    """Complete-information first best: every type's IR binds individually.

    Per-type reward R_q = l' * Linv_q / theta_q; latencies maximize
    per-type profit subject to the same floor and budget.
    """
    floor = 1.0 / params.max_latency
    priors = np.asarray(profile.priors)
    thetas = np.asarray(profile.types)
    # budget cost per unit Linv for type q: |M| * p_q * l' / theta_q
    cost = priors * params.unit_cost / thetas

    def alloc_for(multiplier: float) -> np.ndarray:
        num = params.gain * params.latency_coeff * params.latency_exp * thetas
        den = (
            params.max_latency ** params.latency_exp
            * params.unit_cost
            * (params.reward_weight + multiplier)
        )
        return np.maximum((num / den) ** (1.0 / (params.latency_exp + 1.0)), floor)

    def used(alloc: np.ndarray) -> float:
        return params.verifier_count * float(np.dot(cost, alloc))

    if used(np.full(len(profile), floor)) > params.budget + SLACK_TOL:
        raise ContractInfeasibleError("floor allocation exceeds the budget")
    alloc = alloc_for(0.0)
    if used(alloc) > params.budget:
        lo, hi = 0.0, 1.0
        while used(alloc_for(hi)) > params.budget:
            hi *= 2.0
        for _ in range(200):
            mid = (lo + hi) / 2.0
            if used(alloc_for(mid)) > params.budget:
                lo = mid
            else:
                hi = mid
        alloc = alloc_for(hi)
    rewards = params.unit_cost * alloc / thetas
    return ContractMenu(
        tuple(ContractItem(float(r), float(v)) for r, v in zip(rewards, alloc))
    )


def brute_force_contract(
    profile: VerifierTypeProfile,
    params: ContractParams,
    grid_resolution: int = 50,
    _chunk: int = 200_000,
) -> ContractMenu:
    """Independent oracle: exhaustive search over a geometric latency grid.

    Enumerates monotone inverse-latency tuples on a shared grid, prices
    each with the reward schedule, filters by floor and budget, and
    returns the menu with the highest (piecewise-benefit) profit.
    """
    q_total = len(profile)
    if q_total > 6:
        raise ValueError("brute force limited to Q <= 6")
    coeffs = np.asarray(f_coefficients(profile, params.unit_cost))
    floor = 1.0 / params.max_latency
    unconstrained = _ironed_allocation(profile, coeffs, params, 0.0)
    hi = max(float(unconstrained.max()) * 2.0, floor * 10.0)
    grid = np.geomspace(floor, hi, grid_resolution)
    grid[0] = floor

    thetas = np.asarray(profile.types)
    priors = np.asarray(profile.priors)
    m_count = params.verifier_count
    scale = thetas * m_count * priors
    benefit_const = params.scale_coeff * scale ** params.scale_exp
    cutoff = (
        params.max_latency
        * (params.scale_coeff / params.latency_coeff) ** (1.0 / params.latency_exp)
        * scale ** (params.scale_exp / params.latency_exp)
    )

    best_profit = -np.inf
    best: np.ndarray | None = None
    combos = combinations_with_replacement(range(grid_resolution), q_total)
    while True:
        chunk = np.array(list(islice(combos, _chunk)), dtype=np.int32)
        if chunk.size == 0:
            break
        linv = grid[chunk]
        rewards = np.empty_like(linv)
        rewards[:, 0] = params.unit_cost * linv[:, 0] / thetas[0]
        for q in range(1, q_total):
            rewards[:, q] = rewards[:, q - 1] + params.unit_cost * (
                linv[:, q] - linv[:, q - 1]
            ) / thetas[q]
        budget_used = m_count * (priors[None, :] * rewards).sum(axis=1)
        latency = 1.0 / linv
        phi = np.where(
            latency < cutoff[None, :],
            benefit_const[None, :]
            - params.latency_coeff
            * (latency / params.max_latency) ** params.latency_exp,
            0.0,
        )
        profit = (
            m_count
            * priors[None, :]
            * (params.gain * phi - params.reward_weight * rewards)
        ).sum(axis=1)
        profit[budget_used > params.budget + SLACK_TOL] = -np.inf
        idx = int(np.argmax(profit))
        if profit[idx] > best_profit:
            best_profit = float(profit[idx])
            best = linv[idx].copy()
    if best is None or not np.isfinite(best_profit):
        raise ContractInfeasibleError("no feasible grid point (grid too coarse)")
    rewards = reward_schedule(best, profile, params.unit_cost)
    return ContractMenu(
        tuple(ContractItem(float(r), float(v)) for r, v in zip(rewards, best))
    )


@dataclass(frozen=True, slots=True)
class MenuReport:
    """IR/IC audit of a menu against a type profile."""

    ir_slack: tuple[float, ...]
    ir_type1_gap: float
    worst_ic_violation: float
    reward_monotone_consistent: bool
    latency_monotone_consistent: bool
    utility_matrix: tuple[tuple[float, ...], ...]
    diagonally_row_maximal: bool

    def ok(self, tol: float = SLACK_TOL) -> bool:
        return (
            min(self.ir_slack) >= -tol
            and self.worst_ic_violation <= tol
            and self.reward_monotone_consistent
            and self.latency_monotone_consistent
            and self.diagonally_row_maximal
        )


def check_menu(
    menu: ContractMenu,
    profile: VerifierTypeProfile,
    unit_cost: float,
    valuation: Callable[[float], float] = _identity,
    tol: float = SLACK_TOL,
) -> MenuReport:
    """Audit IR, pairwise IC, ordering consistency, and self-selection."""
    if len(menu) != len(profile):
        raise ValueError("menu and profile sizes differ")
    q_total = len(profile)
    utilities = tuple(
        tuple(
            verifier_utility(profile.types[i], menu.items[j], unit_cost, valuation)
            for j in range(q_total)
        )
        for i in range(q_total)
    )
    ir_slack = tuple(utilities[q][q] for q in range(q_total))
    worst_ic = max(
        (
            utilities[i][j] - utilities[i][i]
            for i in range(q_total)
            for j in range(q_total)
            if i != j
        ),
        default=0.0,
    )
    rewards = menu.rewards
    inv_lat = menu.inv_latencies
    reward_ok = all(
        (profile.types[i] - profile.types[j]) * (rewards[i] - rewards[j]) >= -tol
        for i in range(q_total)
        for j in range(q_total)
    )
    latency_ok = all(
        (rewards[i] - rewards[j]) * (inv_lat[i] - inv_lat[j]) >= -tol
        for i in range(q_total)
        for j in range(q_total)
    )
    diag_max = all(
        utilities[i][i] >= utilities[i][j] - tol
        for i in range(q_total)
        for j in range(q_total)
    )
    return MenuReport(
        ir_slack=ir_slack,
        ir_type1_gap=abs(ir_slack[0]),
        worst_ic_violation=max(worst_ic, 0.0),
        reward_monotone_consistent=reward_ok,
        latency_monotone_consistent=latency_ok,
        utility_matrix=utilities,
        diagonally_row_maximal=diag_max,
    )


def profile_from_reputations(scores: Sequence[float], q_types: int) -> VerifierTypeProfile:
    """Equal-frequency binning of reputation scores into a type profile.

    Bin means become the type values (floored away from zero, merged when
    they collide so the ascending invariant holds); bin counts become the
    priors.
    """
    if not scores:
        raise ValueError("need at least one reputation score")
    ordered = np.sort(np.asarray(scores, dtype=float))
    q_types = max(1, min(q_types, len(ordered)))
    bins = np.array_split(ordered, q_types)
    types: list[float] = []
    counts: list[int] = []
    for chunk in bins:
        if chunk.size == 0:
            continue
        mean = max(float(chunk.mean()), 1e-6)
        if types and mean <= types[-1]:
            # merge into the previous bin to keep types strictly ascending
            total = counts[-1] + chunk.size
            types[-1] = (types[-1] * counts[-1] + mean * chunk.size) / total
            counts[-1] = total
        else:
            types.append(mean)
            counts.append(int(chunk.size))
    total = sum(counts)
    return VerifierTypeProfile(
        tuple(types), tuple(c / total for c in counts)
    )
