"""Command line interface: analyze, sweep-start, sweep-reward, validate.

Reports are deterministic for fixed inputs and seed: CSV with a header row,
LF line endings and 2-decimal BTC amounts, or JSON carrying a schema-version
field. Dust-level bribe entries are rendered as ``1e-8``, never as zero.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import model, simulate, strategies

SCHEMA_VERSION = 1
STRATEGIES = ("bs", "bff", "crb1", "crb2", "gvc")


class CliError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    pools_path: str
    attacker_id: str | None
    target_id: str | None
    confirmations: int
    premined: int
    reward: float
    start_state: int | None
    strategy: str
    objective: str | None
    trials: int
    seed: int
    out_format: str
    out_path: str | None


def fixture_path(name: str) -> Path:
    """Path to a pool file shipped with the package (table2, whale20)."""
    return Path(__file__).parent / "data" / f"{name}.pools"


def format_btc(x: float) -> str:
    if x == 0:
        return "0.00"
    if 0 < x < 0.005:
        return "1e-8"  # dust placeholder, never rendered as zero
    return f"{x:.2f}"


def format_prob(p: float) -> str:
    return f"{p:.4g}"


def _load_scenario(cfg: RunConfig) -> model.Scenario:
    try:
        raw = Path(cfg.pools_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read pool file: {exc}") from exc
    miner_set = model.load_pool_distribution(raw, cfg.attacker_id)
    target = cfg.target_id or miner_set.miners[0].id  # biggest main-chain miner
    return model.make_scenario(
        miner_set, target, cfg.confirmations, cfg.premined, cfg.reward
    )


def _run_strategy(cfg: RunConfig, scenario: model.Scenario, reward: float | None = None):
    if reward is not None and reward != scenario.reward:
        scenario = model.make_scenario(
            scenario.miner_set,
            scenario.target_id,
            scenario.confirmations,
            scenario.premined,
            reward,
        )
    start = cfg.start_state
    if cfg.strategy == "bs":
        return strategies.run_bs(scenario, start)
    if cfg.strategy == "bff":
        return strategies.run_bff(scenario, start)
    if cfg.strategy in ("crb1", "crb2"):
        return strategies.run_crb(scenario, cfg.strategy, start)
    if cfg.strategy == "gvc":
        _, outcome = strategies.optimize_gvc(
            scenario, cfg.objective or "ac", start, seed=cfg.seed
        )
        return outcome
    raise CliError(f"unknown strategy {cfg.strategy!r}")


def _outcome_record(outcome) -> dict:
    rec = {
        "strategy": outcome.strategy_tag,
        "start_state": outcome.start_state,
        "success_prob": outcome.success_prob,
        "success_prob_basic": outcome.success_prob_basic,
        "expected_steps": outcome.expected_steps,
        "cost_unconditional": outcome.cost_unconditional,
        "cost_on_success": outcome.cost_on_success,
        "single_visit_cost": outcome.single_visit_cost,
        "attacker_recapture": outcome.attacker_recapture,
        "target_recapture": outcome.target_recapture,
        "schedule": list(outcome.schedule.per_state_bribe),
        "committed": outcome.schedule.committed,
    }
    return rec


def _summary_lines(outcome) -> list[str]:
    lines = [
        f"strategy                 {outcome.strategy_tag}",
        f"start state              {outcome.start_state}",
        f"success probability      {format_prob(outcome.success_prob * 100)}%",
        f"success (constant view)  {format_prob(outcome.success_prob_basic * 100)}%",
        f"expected steps           {outcome.expected_steps:.2f}",
        f"expected cost            {format_btc(outcome.cost_unconditional)} BTC",
        (
            f"expected cost | success  {format_btc(outcome.cost_on_success)} BTC"
            if outcome.cost_on_success is not None
            else "expected cost | success  n/a (success unreachable)"
        ),
        f"single-visit cost        {format_btc(outcome.single_visit_cost)} BTC",
        f"attacker recapture       {format_btc(outcome.attacker_recapture)} BTC",
        f"target recapture         {format_btc(outcome.target_recapture)} BTC",
        "bribe schedule (totals per gap state; a fork block claims the pot,",
        "a main-chain block leaves it, so backsliding only needs a top-up):",
    ]
    bribes = outcome.schedule.per_state_bribe
    for i in reversed(range(len(bribes))):
        if i == 0:
            topup = "n/a"
        else:
            topup = format_btc(max(bribes[i] - bribes[i - 1], 0.0))
        lines.append(f"  state {i}: total {format_btc(bribes[i])}  rollover top-up {topup}")
    return lines


def _emit_csv(rows: list[dict], out_path: str | None) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _write_text(buf.getvalue(), out_path)


def _emit_json(payload: dict, out_path: str | None) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    _write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", out_path)


def _write_text(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).write_text(text, encoding="utf-8", newline="")


def _fmt_row_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format_prob(v) if abs(v) < 1 and v != 0 else f"{v:.6g}"
    return str(v)


def cmd_analyze(cfg: RunConfig) -> int:
    scenario = _load_scenario(cfg)
    outcome = _run_strategy(cfg, scenario)
    for line in _summary_lines(outcome):
        print(line)
    rec = _outcome_record(outcome)
    if cfg.out_path is not None:
        if cfg.out_format == "json":
            _emit_json({"report": "analyze", "outcome": rec}, cfg.out_path)
        else:
            rows = [
                {"metric": k, "value": _fmt_row_value(v)}
                for k, v in rec.items()
                if k != "schedule"
            ]
            rows += [
                {"metric": f"bribe_state_{i}", "value": format_btc(b)}
                for i, b in enumerate(outcome.schedule.per_state_bribe)
            ]
            _emit_csv(rows, cfg.out_path)
    return 0


def cmd_sweep_start(cfg: RunConfig, states: list[int]) -> int:
    if not states:
        raise CliError("state list must not be empty")
    scenario = _load_scenario(cfg)
    strategy_list = STRATEGIES if cfg.strategy == "all" else [cfg.strategy]
    rows = []
    for strat in strategy_list:
        sub = _replace(cfg, strategy=strat)
        for s in sorted(states):
            outcome = _run_strategy(_replace(sub, start_state=s), scenario)
            rows.append(
                {
                    "strategy": outcome.strategy_tag,
                    "start_state": s,
                    "success_prob": format_prob(outcome.success_prob),
                    "cost_unconditional": f"{outcome.cost_unconditional:.2f}",
                    "cost_on_success": (
                        f"{outcome.cost_on_success:.2f}"
                        if outcome.cost_on_success is not None
                        else ""
                    ),
                }
            )
    if cfg.out_format == "json":
        _emit_json({"report": "sweep-start", "rows": rows}, cfg.out_path)
    else:
        _emit_csv(rows, cfg.out_path)
    return 0


def cmd_sweep_reward(cfg: RunConfig, rewards: list[float]) -> int:
    if not rewards:
        raise CliError("reward list must not be empty")
    if any(r <= 0 for r in rewards):
        raise CliError("rewards must be positive")
    scenario = _load_scenario(cfg)
    rows = []
    for r in sorted(rewards):
        outcome = _run_strategy(cfg, scenario, reward=r)
        rows.append(
            {
                "strategy": outcome.strategy_tag,
                "reward_btc": f"{r:.6g}",
                "start_state": outcome.start_state,
                "success_prob": format_prob(outcome.success_prob),
                "cost_unconditional": f"{outcome.cost_unconditional:.2f}",
                "single_visit_cost": f"{outcome.single_visit_cost:.2f}",
            }
        )
    if cfg.out_format == "json":
        _emit_json({"report": "sweep-reward", "rows": rows}, cfg.out_path)
    else:
        _emit_csv(rows, cfg.out_path)
    return 0


def cmd_validate(cfg: RunConfig, corrupt: bool = False) -> int:
    scenario = _load_scenario(cfg)
    outcome = _run_strategy(cfg, scenario)
    policy = simulate.RacePolicy.from_outcome(outcome)
    if corrupt:  # negative-control aid for testing the validator itself
        fork = tuple(min(p + 0.05, 1.0 - 1e-9) for p in policy.fork_power)
        policy = simulate.RacePolicy(
            fork, policy.bribe, policy.start_state, policy.scheduled_states
        )
    report = simulate.simulate_race(
        policy, simulate.SimConfig(trials=cfg.trials, seed=cfg.seed)
    )
    comparison = simulate.compare_reports(outcome, report, z=3.0)
    rows = [
        {
            "metric": m.name,
            "analytic": f"{m.analytic:.6g}",
            "empirical": f"{m.empirical:.6g}",
            "se": f"{m.se:.3g}",
            "z": f"{m.z:.3g}" if m.z != float("inf") else "inf",
            "passed": str(m.passed).lower(),
        }
        for m in comparison.metrics
    ]
    if cfg.out_format == "json":
        _emit_json(
            {"report": "validate", "passed": comparison.passed, "rows": rows},
            cfg.out_path,
        )
    else:
        _emit_csv(rows, cfg.out_path)
    for m in comparison.metrics:
        status = "ok " if m.passed else "FAIL"
        print(f"{status} {m.name}: analytic {m.analytic:.6g} vs empirical {m.empirical:.6g} (z={m.z:.2f})")
    print("validation", "PASSED" if comparison.passed else "FAILED")
    return 0 if comparison.passed else 1


def _replace(cfg: RunConfig, **kw) -> RunConfig:
    data = cfg.__dict__ | kw
    return RunConfig(**data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="briberace",
        description="Fork-race bribery attack analysis and Monte Carlo validation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, need_strategy: bool = True) -> None:
        p.add_argument("--pools", required=True, help="pool distribution file")
        p.add_argument("--attacker", default=None, help="attacker id (default: flagged in file)")
        p.add_argument("--target", default=None, help="target miner id (default: biggest)")
        p.add_argument("--confirmations", type=int, default=6)
        p.add_argument("--premined", type=int, default=1)
        p.add_argument("--reward", type=float, default=6.25)
        p.add_argument("--start-state", type=int, default=None)
        if need_strategy:
            p.add_argument("--strategy", required=True, choices=STRATEGIES + ("all",))
        p.add_argument("--objective", choices=("ac", "rac"), default=None)
        p.add_argument("--trials", type=int, default=1_000_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", dest="out_format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", dest="out_path", default=None)

    p_analyze = sub.add_parser("analyze", help="run one strategy and report the outcome")
    common(p_analyze)

    p_sweep = sub.add_parser("sweep-start", help="outcomes across starting gap states")
    common(p_sweep)
    p_sweep.add_argument("--states", required=True, help="comma-separated start states")

    p_reward = sub.add_parser("sweep-reward", help="outcomes across block rewards")
    common(p_reward)
    p_reward.add_argument("--rewards", required=True, help="comma-separated BTC rewards")

    p_validate = sub.add_parser("validate", help="cross-check analytics against simulation")
    common(p_validate)
    p_validate.add_argument("--debug-corrupt", action="store_true", help=argparse.SUPPRESS)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        pools_path=args.pools,
        attacker_id=args.attacker,
        target_id=args.target,
        confirmations=args.confirmations,
        premined=args.premined,
        reward=args.reward,
        start_state=args.start_state,
        strategy=getattr(args, "strategy", "bs"),
        objective=args.objective,
        trials=args.trials,
        seed=args.seed,
        out_format=args.out_format,
        out_path=args.out_path,
    )
    if cfg.start_state is not None and cfg.start_state > cfg.confirmations:
        raise CliError("start state must not exceed the confirmation depth")
    if cfg.strategy == "gvc" and cfg.objective is None:
        raise CliError("gvc requires --objective ac|rac")
    if cfg.strategy != "gvc" and cfg.objective is not None:
        raise CliError("--objective only applies to gvc")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "sweep-start":
            states = [int(s) for s in args.states.split(",") if s.strip() != ""]
            return cmd_sweep_start(cfg, states)
        if args.command == "sweep-reward":
            rewards = [float(r) for r in args.rewards.split(",") if r.strip() != ""]
            return cmd_sweep_reward(cfg, rewards)
        if args.command == "validate":
            return cmd_validate(cfg, corrupt=args.debug_corrupt)
        raise CliError(f"unknown command {args.command!r}")
    except (CliError, model.PoolFileError, model.ScenarioError,
            strategies.StrategyError, simulate.SimulationError, ValueError) as exc:
        sys.stderr.write(
            json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}})
            + "\n"
        )
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
