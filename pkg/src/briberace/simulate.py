"""Independent Monte Carlo oracle for the fork race.

Simulates the race block by block: each event lands on the fork with the
probability given by the current state's fork power (miners re-apply their
chain choice at every event, which for state-indexed policies reduces to a
per-state lookup). Used to validate the absorbing-chain analysis and the
strategy outcomes: success probability, per-state visit counts, step counts
and both cost figures.

Trials run in fixed-size chunks; each chunk draws from its own Philox
(counter-based) stream keyed by (seed, chunk index), so reports are
bit-identical for a given seed and independent of scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CHUNK = 1 << 16


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0
    max_events: int | None = None  # default: 200 * number of states

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise SimulationError("trials must be >= 1")


@dataclass(frozen=True)
class RacePolicy:
    """State-indexed race description: per-state fork power and bribe.

    ``sticky_memberships`` switches the retention rule: instead of the newest
    recruit dropping off on every upward move (membership a function of the
    state alone), miners stay aboard once joined for the rest of the trial.
    """

    fork_power: tuple[float, ...]
    bribe: tuple[float, ...]  # zero-padded to the same length
    start_state: int
    scheduled_states: int | None = None  # bribed region; default: whole chain
    mu: float | None = None
    sticky_memberships: tuple[tuple[int, ...], ...] | None = None  # roster indices
    roster_powers: tuple[float, ...] | None = None

    @classmethod
    def from_outcome(cls, outcome) -> "RacePolicy":
        chain = outcome.final_chain
        bribes = list(outcome.schedule.per_state_bribe)
        bribes += [0.0] * (chain.h - len(bribes))
        return cls(
            tuple(float(p) for p in chain.fork_power),
            tuple(bribes),
            outcome.start_state,
            scheduled_states=outcome.schedule.h,
        )


@dataclass(frozen=True)
class MetricEstimate:
    mean: float
    se: float


@dataclass(frozen=True)
class SimReport:
    trials: int
    seed: int
    empirical_success: MetricEstimate
    mean_steps: MetricEstimate
    visit_counts: tuple[MetricEstimate, ...]  # per state, bribed region only
    cost_unconditional: MetricEstimate
    cost_on_success: MetricEstimate | None  # None when no trial succeeded
    successes: int
    discarded: int  # trials that hit the event cap


def _mk_estimate(total: float, total_sq: float, n: int) -> MetricEstimate:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return MetricEstimate(mean, math.sqrt(var / n))


def simulate_race(policy: RacePolicy, config: SimConfig, tracked_states: int | None = None) -> SimReport:
    """Run independent race trials and aggregate outcome statistics.

    ``tracked_states`` limits per-state visit tracking (defaults to the
    scheduled region, i.e. states with a bribe entry).
    """
    h = len(policy.fork_power)
    if not (0 <= policy.start_state < h):
        raise SimulationError("start state outside the chain")
    if len(policy.bribe) != h:
        raise SimulationError("bribe vector must match the chain length")
    fork = np.asarray(policy.fork_power)
    bribe = np.asarray(policy.bribe)
    if tracked_states is not None:
        n_track = tracked_states
    elif policy.scheduled_states is not None:
        n_track = policy.scheduled_states
    else:
        n_track = h
    n_track = min(max(n_track, 1), h)
    if np.any(bribe[n_track:] != 0.0):
        raise SimulationError("bribes outside the tracked region would go uncounted")
    max_events = config.max_events if config.max_events is not None else 200 * h
    if max_events < h:
        raise SimulationError("max_events too small to traverse the chain")

    sticky = policy.sticky_memberships is not None
    if sticky:
        masks, mask_power = _sticky_tables(policy, h)

    succ = 0
    disc = 0
    steps_sum = steps_sq = 0.0
    cost_sum = cost_sq = 0.0
    cost_succ_sum = cost_succ_sq = 0.0
    visit_sum = np.zeros(n_track)
    visit_sq = np.zeros(n_track)

    done = 0
    chunk_idx = 0
    while done < config.trials:
        n = min(CHUNK, config.trials - done)
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=config.seed, spawn_key=(chunk_idx,)))
        )
        state = np.full(n, policy.start_state, dtype=np.int64)
        visits = np.zeros((n, n_track), dtype=np.int64)
        if policy.start_state < n_track:
            visits[:, policy.start_state] = 1
        steps = np.zeros(n, dtype=np.int64)
        result = np.full(n, -1, dtype=np.int8)  # -1 running, 1 success, 0 failure
        if sticky:
            member = np.zeros(n, dtype=np.int64)
            member |= masks[policy.start_state]

        active = np.arange(n)
        for _ in range(max_events):
            if active.size == 0:
                break
            u = rng.random(active.size)
            if sticky:
                p = np.minimum(policy.mu + mask_power[member[active]], 1.0 - 1e-12)
            else:
                p = fork[state[active]]
            down = u < p
            state[active] += np.where(down, -1, 1)
            steps[active] += 1

            s = state[active]
            result[active[s < 0]] = 1
            result[active[s >= h]] = 0
            still = (s >= 0) & (s < h)
            moved = active[still]
            s = state[moved]
            if sticky:
                member[moved] |= masks[s]
            in_track = s < n_track
            np.add.at(visits, (moved[in_track], s[in_track]), 1)
            active = moved

        discarded = result == -1
        kept = ~discarded
        disc += int(discarded.sum())
        nk = int(kept.sum())
        if nk:
            k_visits = visits[kept]
            k_state = result[kept]
            cost = k_visits @ bribe[:n_track]
            succ += int((k_state == 1).sum())
            steps_k = steps[kept].astype(float)
            steps_sum += steps_k.sum()
            steps_sq += (steps_k**2).sum()
            cost_sum += cost.sum()
            cost_sq += (cost**2).sum()
            on_s = cost[k_state == 1]
            cost_succ_sum += on_s.sum()
            cost_succ_sq += (on_s**2).sum()
            visit_sum += k_visits.sum(axis=0)
            visit_sq += (k_visits.astype(float) ** 2).sum(axis=0)
        done += n
        chunk_idx += 1

    kept_total = config.trials - disc
    if kept_total == 0:
        raise SimulationError("all trials exceeded the event cap")
    p_hat = succ / kept_total
    # boundary-safe standard error: the plug-in estimate collapses to zero
    # when no (or every) trial succeeds, so widen it toward the adjusted
    # proportion (succ+2)/(n+4)
    p_adj = (succ + 2) / (kept_total + 4)
    se_succ = max(
        math.sqrt(p_hat * (1.0 - p_hat) / kept_total),
        math.sqrt(p_adj * (1.0 - p_adj) / kept_total) if succ in (0, kept_total) else 0.0,
    )
    return SimReport(
        trials=config.trials,
        seed=config.seed,
        empirical_success=MetricEstimate(p_hat, se_succ),
        mean_steps=_mk_estimate(steps_sum, steps_sq, kept_total),
        visit_counts=tuple(
            _mk_estimate(visit_sum[i], visit_sq[i], kept_total) for i in range(n_track)
        ),
        cost_unconditional=_mk_estimate(cost_sum, cost_sq, kept_total),
        cost_on_success=(
            _mk_estimate(cost_succ_sum, cost_succ_sq, succ) if succ > 0 else None
        ),
        successes=succ,
        discarded=disc,
    )


def _sticky_tables(policy: RacePolicy, h: int):
    members = policy.sticky_memberships
    powers = policy.roster_powers
    if policy.mu is None or powers is None:
        raise SimulationError("sticky retention needs mu and roster powers")
    if len(powers) > 62:
        raise SimulationError("sticky retention supports at most 62 roster miners")
    masks = np.zeros(h, dtype=np.int64)
    for s in range(h):
        mask = 0
        if s < len(members):
            for idx in members[s]:
                mask |= 1 << idx
        masks[s] = mask
    n_bits = len(powers)
    table = np.zeros(1 << n_bits)
    for idx, p in enumerate(powers):
        bit = 1 << idx
        half = (np.arange(1 << n_bits) & bit) > 0
        table[half] += p
    return masks, table


@dataclass(frozen=True)
class MetricComparison:
    name: str
    analytic: float
    empirical: float
    se: float
    z: float
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    metrics: tuple[MetricComparison, ...]

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)


def compare_reports(outcome, report: SimReport, z: float = 3.0) -> ComparisonReport:
    """Flag every analytic metric farther than z standard errors from its
    Monte Carlo estimate."""
    if report.trials < 1:
        raise SimulationError("empty simulation report")

    rows: list[MetricComparison] = []

    def add(name: str, analytic: float, est: MetricEstimate) -> None:
        tol = max(z * est.se, 1e-9)
        delta = abs(analytic - est.mean)
        zscore = delta / est.se if est.se > 0 else (0.0 if delta <= 1e-9 else math.inf)
        rows.append(MetricComparison(name, analytic, est.mean, est.se, zscore, delta <= tol))

    add("success_prob", outcome.success_prob, report.empirical_success)
    add("expected_steps", outcome.expected_steps, report.mean_steps)
    for i, est in enumerate(report.visit_counts):
        add(f"visits[{i}]", float(outcome.visits[i]), est)
    add("cost_unconditional", outcome.cost_unconditional, report.cost_unconditional)
    if outcome.cost_on_success is not None and report.cost_on_success is not None:
        add("cost_on_success", outcome.cost_on_success, report.cost_on_success)
    return ComparisonReport(tuple(rows))
