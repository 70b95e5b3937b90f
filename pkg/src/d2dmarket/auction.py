"""Alternative ascending clock auction: one seller, N buyers, divisible power.

The seller raises a unit price by a fixed step until aggregate demand fits the
supply. Along the way each buyer clinches whatever the others cannot absorb,
and pays the clock price in force when each unit was clinched. The last
over-demanded clock is interpolated against the clearing clock so that the
whole supply is sold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .channel import (
    DelayParams,
    LinkGeometry,
    RadioEnvironment,
    link_rate,
    system_delay,
)
from .stackelberg import MarketWeights, affordability, link_impairment


class AuctionError(ValueError):
    pass


class ClockLimitExceeded(AuctionError):
    """Demand never fell to supply within ``max_clocks``; usually a too-small step."""


@dataclass(frozen=True)
class AuctionConfig:
    supply: float = 100.0
    initial_price: float = 5.0
    step: float = 0.5
    max_clocks: int = 100_000

    def __post_init__(self) -> None:
        if not self.supply > 0:
            raise AuctionError(f"supply must be > 0, got {self.supply}")
        if not self.initial_price >= 0:
            raise AuctionError(f"initial price must be >= 0, got {self.initial_price}")
        if not self.step > 0:
            raise AuctionError(f"price step must be > 0, got {self.step}")
        if self.max_clocks < 1:
            raise AuctionError(f"max_clocks must be >= 1, got {self.max_clocks}")

    def price_at(self, clock: int) -> float:
        return self.initial_price + clock * self.step


@dataclass(frozen=True)
class BuyerProfile:
    link: LinkGeometry
    weights: MarketWeights


@dataclass(frozen=True)
class ClockRecord:
    clock: int
    price: float
    bids: tuple[float, ...]
    clinches: tuple[float, ...]

    @property
    def demand(self) -> float:
        return math.fsum(self.bids)


@dataclass(frozen=True)
class AuctionOutcome:
    trace: tuple[ClockRecord, ...]
    final_clock: int
    allocations: tuple[float, ...]
    payments: tuple[float, ...]
    seller_reward: float
    buyer_rewards: tuple[float, ...]

    @property
    def clearing_price(self) -> float:
        return self.trace[-1].price


def optimal_bid(
    price: float,
    buyer: BuyerProfile,
    env: RadioEnvironment,
    n_buyers: int,
    supply: float,
) -> float:
    """Demand maximizing rate reward minus payment at ``price``.

    Capped by the supply and by what the link can physically carry.
    """
    if not price > 0:
        raise AuctionError(f"price must be > 0, got {price}")
    interior = affordability(env, n_buyers, buyer.weights) / price - link_impairment(buyer.link, env)
    return min(max(interior, 0.0), supply, buyer.link.max_power)


def cumulative_clinch(
    supply: float, bids: Sequence[float], buyer_index: int, previous_clinch: float = 0.0
) -> float:
    others = math.fsum(b for j, b in enumerate(bids) if j != buyer_index)
    return max(previous_clinch, max(0.0, supply - others))


def proportional_ration(
    supply: float, bids_final: Sequence[float], bids_before: Sequence[float]
) -> tuple[float, ...]:
    """Interpolate between the clearing and last over-demanded bids to sell exactly ``supply``."""
    if len(bids_final) != len(bids_before):
        raise AuctionError("bid vectors differ in length")
    total_final = math.fsum(bids_final)
    total_before = math.fsum(bids_before)
    shortfall = supply - total_final
    if shortfall == 0:
        return tuple(bids_final)
    dropped = total_before - total_final
    if not dropped > 0:
        raise AuctionError(
            "rationing needs demand to fall across the last clock "
            f"(before {total_before}, after {total_final})"
        )
    allocations = [
        g + (g_prev - g) * shortfall / dropped for g, g_prev in zip(bids_final, bids_before)
    ]
    # Rounding residue goes to the buyer with the widest rationing range.
    residual = supply - math.fsum(allocations)
    if residual:
        k = max(range(len(allocations)), key=lambda i: bids_before[i] - bids_final[i])
        allocations[k] += residual
    return tuple(allocations)


def clinch_payments(trace: Sequence[ClockRecord]) -> tuple[float, ...]:
    """Each buyer pays the clock price for every increment of its cumulative clinch."""
    first = trace[0]
    totals = [[c * first.price] for c in first.clinches]
    for prev, rec in zip(trace, trace[1:]):
        for n, (c_prev, c_now) in enumerate(zip(prev.clinches, rec.clinches)):
            totals[n].append(rec.price * (c_now - c_prev))
    return tuple(math.fsum(parts) for parts in totals)


def seller_auction_reward(outcome: AuctionOutcome, relay_costs: Sequence[float]) -> float:
    if len(relay_costs) != len(outcome.allocations):
        raise AuctionError(
            f"got {len(relay_costs)} costs for {len(outcome.allocations)} buyers"
        )
    return math.fsum(
        p - c * g for p, c, g in zip(outcome.payments, relay_costs, outcome.allocations)
    )


def run(
    config: AuctionConfig,
    buyers: Sequence[BuyerProfile],
    env: RadioEnvironment,
    delay: DelayParams,
    relay_costs: Sequence[float] | None = None,
) -> AuctionOutcome:
    if not buyers:
        raise AuctionError("at least one buyer is required")
    n = len(buyers)
    costs = [0.0] * n if relay_costs is None else list(relay_costs)
    if len(costs) != n:
        raise AuctionError(f"got {len(costs)} relay costs for {n} buyers")

    trace: list[ClockRecord] = []
    clinches = [0.0] * n
    clock = 0
    while True:
        price = config.price_at(clock)
        if price > 0:
            bids = [optimal_bid(price, b, env, n, config.supply) for b in buyers]
        else:
            # At a zero price every buyer wants as much as it can carry.
            bids = [min(config.supply, b.link.max_power) for b in buyers]
        if math.fsum(bids) <= config.supply:
            break
        clinches = [cumulative_clinch(config.supply, bids, i, clinches[i]) for i in range(n)]
        trace.append(ClockRecord(clock, price, tuple(bids), tuple(clinches)))
        clock += 1
        if clock > config.max_clocks:
            raise ClockLimitExceeded(
                f"demand still exceeds supply after {config.max_clocks} clocks "
                f"(price {price}, step {config.step})"
            )

    if clock == 0:
        allocations = tuple(bids)
    else:
        allocations = proportional_ration(config.supply, bids, trace[-1].bids)
    trace.append(ClockRecord(clock, price, tuple(bids), allocations))
    payments = clinch_payments(trace)

    share = env.bandwidth_w / (n + 1)
    delay_ms = system_delay(delay)
    buyer_rewards = tuple(
        b.weights.rate_reward * link_rate(min(g, b.link.max_power), b.link, env, share)
        - b.weights.delay_cost * delay_ms
        - pay
        for b, g, pay in zip(buyers, allocations, payments)
    )
    outcome = AuctionOutcome(
        trace=tuple(trace),
        final_clock=clock,
        allocations=allocations,
        payments=payments,
        seller_reward=0.0,
        buyer_rewards=buyer_rewards,
    )
    return replace(outcome, seller_reward=seller_auction_reward(outcome, costs))
