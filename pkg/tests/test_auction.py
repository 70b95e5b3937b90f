import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from d2dmarket import auction
from d2dmarket.auction import (
    AuctionConfig,
    AuctionError,
    BuyerProfile,
    ClockLimitExceeded,
    ClockRecord,
    clinch_payments,
    cumulative_clinch,
    optimal_bid,
    proportional_ration,
    seller_auction_reward,
)
from d2dmarket.channel import DelayParams, LinkGeometry, RadioEnvironment
from d2dmarket.scenario import ScenarioConfig, draw_topology, run_auction, run_monte_carlo, run_rng
from d2dmarket.stackelberg import MarketWeights, affordability, link_impairment
from invariants import trace_violations
from oracles import grid_best_power

W = 5e6
WEIGHTS = MarketWeights(3e-5, 0.1)
NOISE_ONLY = RadioEnvironment(W, 1.995e-11)
ACTIVE = AuctionConfig(supply=100.0, initial_price=0.5, step=0.05)
# No interfering clusters: demand is high enough that the clock actually runs.
ACTIVE_SCENARIO = ScenarioConfig(n_clusters=0, auction=ACTIVE, runs=40)


def buyer(distance=30.0, max_power=100.0, weights=WEIGHTS):
    return BuyerProfile(LinkGeometry(distance, 1.0, max_power), weights)


def delay_for(n):
    return DelayParams(20.0, n + 1, 20, 200)


def test_bid_zero_beyond_demand_root():
    b = buyer()
    root = affordability(NOISE_ONLY, 3, WEIGHTS) / link_impairment(b.link, NOISE_ONLY)
    assert optimal_bid(root * 1.01, b, NOISE_ONLY, 3, 100.0) == 0.0
    with pytest.raises(AuctionError):
        optimal_bid(0.0, b, NOISE_ONLY, 3, 100.0)


def test_bid_matches_grid_maximizer():
    rng = np.random.default_rng(12)
    for _ in range(10):
        b = buyer(float(rng.uniform(1, 100)))
        n = int(rng.integers(1, 6))
        price = float(rng.uniform(0.8, 3.0))
        bid = optimal_bid(price, b, NOISE_ONLY, n, 100.0)
        grid = grid_best_power(price, b.link, NOISE_ONLY, W / (n + 1), WEIGHTS.rate_reward, 100.0)[0]
        assert abs(bid - grid) < 1e-3


def test_doubling_rate_weight_doubles_affordability_term():
    env = RadioEnvironment(W, 1e-3)
    b1, b2 = buyer(50.0), buyer(50.0, weights=MarketWeights(6e-5, 0.1))
    impairment = link_impairment(b1.link, env)
    g1 = optimal_bid(2.0, b1, env, 4, 100.0)
    g2 = optimal_bid(2.0, b2, env, 4, 100.0)
    assert 0 < g1 and g2 < 100
    assert g2 + impairment == pytest.approx(2 * (g1 + impairment), rel=1e-12)


@settings(max_examples=50)
@given(p1=st.floats(0.01, 10), p2=st.floats(0.01, 10), distance=st.floats(0.5, 100))
def test_bid_nonincreasing_in_price(p1, p2, distance):
    lo, hi = sorted((p1, p2))
    b = buyer(distance)
    assert optimal_bid(hi, b, NOISE_ONLY, 3, 100.0) <= optimal_bid(lo, b, NOISE_ONLY, 3, 100.0)


def test_clinch_examples():
    assert cumulative_clinch(100.0, [50.0, 60.0, 45.0], 0, 7.0) == 7.0
    assert cumulative_clinch(100.0, [80.0], 0, 0.0) == 100.0
    assert cumulative_clinch(100.0, [70.0, 40.0, 35.0], 0, 0.0) == 25.0
    assert cumulative_clinch(100.0, [70.0, 40.0, 35.0], 0, 30.0) == 30.0


def test_ration_hand_cases():
    assert proportional_ration(100.0, [40.0, 60.0], [70.0, 80.0]) == (40.0, 60.0)
    assert proportional_ration(100.0, [30.0, 30.0], [60.0, 60.0]) == (50.0, 50.0)
    # Each buyer recovers 2/3 of the demand it shed over the last clock.
    alloc = proportional_ration(100.0, [20.0, 40.0], [60.0, 60.0])
    assert alloc == pytest.approx((20 + 40 * 2 / 3, 40 + 20 * 2 / 3), rel=1e-15)
    assert math.fsum(alloc) == 100.0


def test_ration_requires_falling_demand():
    with pytest.raises(AuctionError):
        proportional_ration(100.0, [30.0, 30.0], [30.0, 30.0])


@given(
    final=st.lists(st.floats(0, 50), min_size=1, max_size=8),
    extra=st.lists(st.floats(0, 50), min_size=8, max_size=8),
    frac=st.floats(0, 1),
)
def test_ration_properties(final, extra, frac):
    before = [g + e for g, e in zip(final, extra)]
    lo, hi = math.fsum(final), math.fsum(before)
    if hi - lo < 1e-6:
        return
    supply = lo + frac * (hi - lo)
    if supply >= hi or supply <= 0:
        return
    alloc = proportional_ration(supply, final, before)
    assert math.fsum(alloc) == pytest.approx(supply, rel=1e-12, abs=1e-12)
    for a, g, gp in zip(alloc, final, before):
        assert g - 1e-9 <= a <= gp + 1e-9


def test_clears_at_clock_zero_when_demand_is_low():
    buyers = [buyer(40.0), buyer(60.0)]
    cfg = AuctionConfig(supply=100.0, initial_price=5.0, step=0.5)
    out = auction.run(cfg, buyers, NOISE_ONLY, delay_for(2), [0.2, 0.3])
    bids = [optimal_bid(5.0, b, NOISE_ONLY, 2, 100.0) for b in buyers]
    assert out.final_clock == 0 and len(out.trace) == 1
    assert out.allocations == tuple(bids)
    assert out.payments == pytest.approx([5.0 * g for g in bids], rel=1e-15)
    assert out.seller_reward == pytest.approx(sum((5.0 - c) * g for c, g in zip([0.2, 0.3], bids)), rel=1e-12)


def test_symmetric_buyers_one_step():
    buyers = [buyer(30.0), buyer(30.0)]
    cfg = AuctionConfig(supply=100.0, initial_price=0.3, step=5.0)
    out = auction.run(cfg, buyers, NOISE_ONLY, delay_for(2))
    assert out.final_clock == 1
    assert out.allocations[0] == out.allocations[1] == pytest.approx(50.0)
    assert out.payments[0] == out.payments[1]
    assert not trace_violations(out, cfg)


def test_active_traces_satisfy_mechanism_invariants():
    for run in range(40):
        topo = draw_topology(ACTIVE_SCENARIO, run_rng(1, run))
        for n in (2, 5, 10):
            out = run_auction(topo.prefix(n), ACTIVE_SCENARIO)
            assert out.final_clock >= 1
            assert not trace_violations(out, ACTIVE)


def test_payments_depend_on_own_bids_only_through_allocation():
    topo = draw_topology(ACTIVE_SCENARIO, run_rng(2, 0))
    out = run_auction(topo.prefix(6), ACTIVE_SCENARIO)
    supply = ACTIVE.supply
    for i in range(6):
        clinch, paid, prev = 0.0, [], 0.0
        for rec in out.trace[:-1]:
            others = math.fsum(b for j, b in enumerate(rec.bids) if j != i)
            clinch = max(clinch, supply - others, 0.0)
            paid.append(rec.price * (clinch - prev))
            prev = clinch
        paid.append(out.trace[-1].price * (out.allocations[i] - prev))
        assert math.fsum(paid) == pytest.approx(out.payments[i], rel=1e-12, abs=1e-12)

    # Inflating buyer 0's intermediate bids (still over-demanded) leaves its payment alone.
    bumped = [
        replace(rec, bids=(rec.bids[0] * 1.5,) + rec.bids[1:]) for rec in out.trace[:-1]
    ] + [out.trace[-1]]
    rebuilt, clinches = [], [0.0] * 6
    for rec in bumped[:-1]:
        clinches = [cumulative_clinch(supply, rec.bids, i, clinches[i]) for i in range(6)]
        rebuilt.append(ClockRecord(rec.clock, rec.price, rec.bids, tuple(clinches)))
    rebuilt.append(out.trace[-1])
    assert clinch_payments(rebuilt)[0] == pytest.approx(out.payments[0], rel=1e-12)


def test_run_is_deterministic():
    topo = draw_topology(ACTIVE_SCENARIO, run_rng(4, 3))
    assert run_auction(topo, ACTIVE_SCENARIO) == run_auction(topo, ACTIVE_SCENARIO)


def test_clock_limit():
    cfg = AuctionConfig(supply=10.0, initial_price=0.01, step=1e-4, max_clocks=5)
    with pytest.raises(ClockLimitExceeded):
        auction.run(cfg, [buyer(), buyer()], NOISE_ONLY, delay_for(2))


def test_run_rejects_bad_inputs():
    with pytest.raises(AuctionError):
        auction.run(ACTIVE, [], NOISE_ONLY, delay_for(1))
    with pytest.raises(AuctionError):
        auction.run(ACTIVE, [buyer()], NOISE_ONLY, delay_for(1), [0.1, 0.2])
    with pytest.raises(AuctionError):
        AuctionConfig(step=0.0)


def test_seller_reward_cases():
    topo = draw_topology(ACTIVE_SCENARIO, run_rng(5, 1))
    out = run_auction(topo.prefix(4), ACTIVE_SCENARIO)
    assert seller_auction_reward(out, [0.0] * 4) == pytest.approx(sum(out.payments), rel=1e-12)
    costs = topo.relay_costs[:4]
    resummed = sum(out.payments) - sum(c * g for c, g in zip(costs, out.allocations))
    assert out.seller_reward == pytest.approx(resummed, rel=1e-12)
    empty = replace(out, allocations=(0.0,) * 4, payments=(0.0,) * 4)
    assert seller_auction_reward(empty, costs) == 0.0
    with pytest.raises(AuctionError):
        seller_auction_reward(out, costs[:2])


def test_more_buyers_mean_longer_auctions_when_demand_is_high():
    stats = run_monte_carlo(ACTIVE_SCENARIO, modes=["auction"])
    rounds = stats.mean("auction_rounds")
    reward = stats.mean("auction_seller_reward")
    assert rounds[0] == 0.0
    assert all(np.diff(rounds) >= 0)
    assert all(np.diff(reward) > 0)
