import math

import pytest
from hypothesis import given, settings, strategies as st

from briberace.model import DUST
from briberace.rationality import (
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

MU, LAM, PM, F = 0.2, 0.8, 0.1, 6.25


def oracle_basic(i, pm, mu, lam, f):
    # spelled out step by step, independent of the implementation's algebra
    fail_if_alone = 1.0 - (mu / lam) ** (i + 1)
    win_if_joined = ((mu + pm) / (lam - pm)) ** (i + 1)
    return fail_if_alone * (pm + mu) / lam / win_if_joined * f - f


def test_worked_example_values():
    assert min_bribe_basic(6, PM, MU, LAM, F).min_bribe == pytest.approx(876.2654, abs=1e-3)
    assert min_bribe_basic(5, PM, MU, LAM, F).min_bribe == pytest.approx(371.9016, abs=1e-3)
    assert min_bribe_basic(0, PM, MU, LAM, F).min_bribe == pytest.approx(-2.1484, abs=1e-3)


def test_basic_matches_independent_oracle():
    for i in range(10):
        for pm in (0.05, 0.1, 0.3):
            assert min_bribe_basic(i, pm, MU, LAM, F).min_bribe == pytest.approx(
                oracle_basic(i, pm, MU, LAM, F), rel=1e-12
            )


def test_cumulative_sum_of_positive_quotes():
    total = sum(
        max(min_bribe_basic(i, PM, MU, LAM, F).min_bribe, 0.0) for i in range(7)
    )
    assert total == pytest.approx(1495.587, abs=1e-2)


def test_settled_amounts():
    q = min_bribe_basic(0, PM, MU, LAM, F)
    assert q.min_bribe < 0 and q.settled == DUST
    q6 = min_bribe_basic(6, PM, MU, LAM, F)
    assert q6.settled == pytest.approx(q6.min_bribe + DUST, rel=1e-15)
    assert q6.settled > q6.min_bribe


def test_basic_input_validation():
    with pytest.raises(RationalityError):
        min_bribe_basic(3, 0.9, MU, LAM, F)  # miner bigger than the main chain
    with pytest.raises(RationalityError):
        min_bribe_basic(3, 0.1, 0.3, 0.8, F)  # powers not summing to 1


def test_general_reduces_to_basic():
    for i in range(8):
        p_xs = ((MU + PM) / (LAM - PM)) ** (i + 1)
        p_yf = 1.0 - (MU / LAM) ** (i + 1)
        g = min_bribe_general(i, PM, MU, LAM, p_xs, p_yf, F)
        b = min_bribe_basic(i, PM, MU, LAM, F)
        assert g.min_bribe == pytest.approx(b.min_bribe, rel=1e-12)
        assert g.formula == "general" and b.formula == "basic"


def test_general_zero_failure_means_fork_already_safe():
    q = min_bribe_general(3, PM, MU, LAM, 0.5, 0.0, F)
    assert q.min_bribe == pytest.approx(-F, rel=1e-12)


def test_general_unpersuadable_state_is_distinguished():
    q = min_bribe_general(3, PM, MU, LAM, 0.0, 1.0, F)
    assert q.min_bribe is None
    with pytest.raises(RationalityError):
        q.settled


def test_staying_condition_pointwise_sufficiency():
    # schedule at per-state minima plus dust satisfies the aggregate condition
    n = 7
    p_xs = [((MU + PM) / (LAM - PM)) ** (i + 1) for i in range(n)]
    p_yf = [1.0 - (MU / LAM) ** (i + 1) for i in range(n)]
    bribes = [min_bribe_basic(i, PM, MU, LAM, F).settled for i in range(n)]
    assert staying_condition(bribes, PM, p_xs, p_yf, [MU] * n, [LAM] * n, F)


def test_staying_condition_zero_schedule_fails():
    n = 7
    p_xs = [((MU + PM) / (LAM - PM)) ** (i + 1) for i in range(n)]
    p_yf = [1.0 - (MU / LAM) ** (i + 1) for i in range(n)]
    assert not staying_condition([0.0] * n, PM, p_xs, p_yf, [MU] * n, [LAM] * n, F)


def test_crb_constant_of_constant_vector():
    visits = [0.3, 1.2, 0.4, 2.0]
    assert crb_min_constant(visits, [7.5] * 4, 3) == pytest.approx(7.5, rel=1e-12)


def test_crb_constant_concentrated_visits():
    visits = [1e-9, 1e-9, 1e6, 1e-9]
    quotes = [1.0, 2.0, 42.0, 3.0]
    assert crb_min_constant(visits, quotes, 3) == pytest.approx(42.0, abs=1e-3)


def test_crb_constant_range_and_errors():
    # only states at or below the current one enter the average
    visits = [1.0, 1.0, 1.0, 1.0]
    quotes = [1.0, 2.0, 100.0, 200.0]
    assert crb_min_constant(visits, quotes, 1) == pytest.approx(1.5)
    with pytest.raises(RationalityError):
        crb_min_constant(visits, quotes, 9)
    with pytest.raises(RationalityError):
        crb_min_constant([0.0, 0.0], [1.0, 1.0], 1)


def test_persuadable_threshold_forward_consistency():
    # bisection runs to 1e-9 absolute, so allow that much slack
    for i in (2, 4, 6):
        quote = min_bribe_basic(i, PM, MU, LAM, F).min_bribe
        assert persuadable_threshold(i, quote + 1e-6, MU, LAM, F) <= PM + 2e-9
        assert persuadable_threshold(i, max(quote - 1e-6, 0.0), MU, LAM, F) >= PM - 2e-9


def test_persuadable_threshold_against_grid_scan():
    i, bribe = 4, 25.0
    got = persuadable_threshold(i, bribe, MU, LAM, F)
    # oracle: coarse scan for the first persuaded power on a 1e-4 grid
    scan = next(
        p * 1e-4
        for p in range(1, int(LAM * 1e4))
        if basic_threshold(i, p * 1e-4, MU, LAM, F) <= bribe
    )
    assert abs(got - scan) <= 1e-4


def test_persuadable_threshold_limits():
    assert persuadable_threshold(3, 1e6, MU, LAM, F) == 0.0
    # state 0 persuades anyone for dust: the threshold is identically zero
    assert persuadable_threshold(0, DUST, MU, LAM, F) == 0.0


def test_choose_chain_around_threshold():
    q = min_bribe_basic(6, PM, MU, LAM, F).min_bribe
    assert choose_chain(6, 876.3, PM, MU, LAM, F) is ChainChoice.FORK
    assert choose_chain(6, 876.1, PM, MU, LAM, F) is ChainChoice.MAIN
    assert choose_chain(6, q, PM, MU, LAM, F) is ChainChoice.MAIN  # ties stay honest
    assert choose_chain(3, 0.0, PM, MU, LAM, F) is ChainChoice.MAIN


def test_choose_chain_general_beliefs():
    p_xs = ((MU + PM) / (LAM - PM)) ** 7
    p_yf = 1.0 - (MU / LAM) ** 7
    assert choose_chain(6, 876.3, PM, MU, LAM, F, p_xs, p_yf) is ChainChoice.FORK
    with pytest.raises(RationalityError):
        choose_chain(6, 876.3, PM, MU, LAM, F, p_xs_i=0.5)


# ---------------------------------------------------------------------------
# properties

power_pairs = st.tuples(
    st.floats(min_value=0.02, max_value=0.45),  # mu
    st.floats(min_value=2e-3, max_value=0.75),
    st.floats(min_value=2e-3, max_value=0.75),
    st.integers(min_value=0, max_value=12),
)


@settings(max_examples=300, deadline=None)
@given(power_pairs)
def test_bigger_miners_need_strictly_less(params):
    # fractions capped at 0.75 of the main chain: deeper in, quotes saturate
    # toward -F and the strict ordering drops below float resolution
    mu, a, b, i = params
    lam = 1.0 - mu
    p1, p2 = sorted((a * lam, b * lam))
    if p2 - p1 < 1e-6:
        return
    big = min_bribe_basic(i, p2, mu, lam, 1.0).min_bribe
    small = min_bribe_basic(i, p1, mu, lam, 1.0).min_bribe
    assert big < small


@settings(max_examples=200, deadline=None)
@given(
    mu=st.floats(min_value=0.05, max_value=0.35),
    frac=st.floats(min_value=0.05, max_value=0.9),
    i=st.integers(min_value=0, max_value=10),
)
def test_deeper_states_cost_strictly_more(mu, frac, i):
    lam = 1.0 - mu
    pm = min(frac * lam, 0.49 - mu)
    if pm <= 0:
        return
    a = min_bribe_basic(i, pm, mu, lam, F).min_bribe
    b = min_bribe_basic(i + 1, pm, mu, lam, F).min_bribe
    assert b > a


@settings(max_examples=200, deadline=None)
@given(
    mu=st.floats(min_value=0.05, max_value=0.4),
    frac=st.floats(min_value=0.05, max_value=0.9),
    i=st.integers(min_value=0, max_value=10),
    f=st.floats(min_value=0.1, max_value=50.0),
)
def test_reward_affinity(mu, frac, i, f):
    lam = 1.0 - mu
    pm = frac * lam * 0.98
    at_unit = min_bribe_basic(i, pm, mu, lam, 1.0).min_bribe
    at_f = min_bribe_basic(i, pm, mu, lam, f).min_bribe
    assert at_f == pytest.approx((at_unit + 1.0) * f - f, rel=1e-9, abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(
    mu=st.floats(min_value=0.05, max_value=0.4),
    frac=st.floats(min_value=0.05, max_value=0.9),
    i=st.integers(min_value=0, max_value=8),
)
def test_threshold_inversion_brackets_power(mu, frac, i):
    lam = 1.0 - mu
    pm = frac * lam * 0.98
    quote = min_bribe_basic(i, pm, mu, lam, F).min_bribe
    if quote < 0:
        return
    delta = max(abs(quote) * 1e-7, 1e-7)
    low = persuadable_threshold(i, quote + delta, mu, lam, F)
    high = persuadable_threshold(i, max(quote - delta, 0.0), mu, lam, F)
    assert low is not None
    assert low <= pm + 1e-6
    if high is not None:
        assert high >= pm - 1e-6
    assert not math.isnan(low)
