"""Bribery-attack analysis for proof-of-work fork races.

An absorbing Markov chain over the fork-length gap prices per-state bribes
for rational miners, evaluates four attacker strategies, and validates every
analytic figure against an independent event-level simulator.
"""

from .model import (
    DUST,
    Miner,
    MinerSet,
    PoolFileError,
    Scenario,
    ScenarioError,
    load_pool_distribution,
    make_scenario,
)
from .markov import (
    AbsorbingChain,
    AbsorptionAnalysis,
    CanonicalForm,
    ChainError,
    absorption_probs,
    analyze,
    build_base_chain,
    canonical_form,
    catchup_prob,
    expected_steps,
    extend_fork_power,
    fundamental_matrix,
)
from .rationality import (
    BribeQuote,
    ChainChoice,
    RationalityError,
    basic_threshold,
    choose_chain,
    crb_min_constant,
    min_bribe_basic,
    min_bribe_general,
    persuadable_threshold,
    staying_condition,
)
from .strategies import (
    BribeSchedule,
    MembershipMatrix,
    StrategyError,
    StrategyOutcome,
    evaluate_schedule,
    gvc_final_markov,
    gvc_new_markov,
    gvc_zeta,
    optimize_gvc,
    recapture_split,
    run_bff,
    run_bs,
    run_crb,
    run_gvc,
)
from .simulate import (
    ComparisonReport,
    RacePolicy,
    SimConfig,
    SimReport,
    SimulationError,
    compare_reports,
    simulate_race,
)

__version__ = "0.1.0"
