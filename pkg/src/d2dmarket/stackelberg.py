"""One buyer, N sellers: sellers lead with unit-power prices, the buyer follows.

Backward induction gives closed forms. For a market of ``n`` active sellers let

    a   = W * xi_R / ((n + 1) * ln 2)        (buyer's affordability scale)
    b_k = sqrt(d_k) * (sigma^2 + I) / H_k     (link impairment of seller k)
    e_k = c_k + s * (1 - Pr(Cache))           (seller's effective unit cost)

The buyer's best response to price p is ``a / p - b_k`` and the seller's
reward-maximizing price is ``sqrt(a * e_k / b_k)``. A seller trades a positive
amount iff ``a > b_k * e_k``, so sellers are ranked by ``b_k * e_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .channel import (
    DelayParams,
    LinkGeometry,
    RadioEnvironment,
    buyer_aggregate_rate,
    noise_plus_interference,
    system_delay,
)


class StackelbergError(ValueError):
    pass


class DegenerateSellerError(StackelbergError):
    """A seller with zero effective cost has no finite optimal price."""


@dataclass(frozen=True)
class MarketWeights:
    rate_reward: float
    delay_cost: float

    def __post_init__(self) -> None:
        if not (self.rate_reward >= 0 and self.delay_cost >= 0):
            raise StackelbergError(
                f"market weights must be >= 0, got {self.rate_reward}, {self.delay_cost}"
            )


@dataclass(frozen=True)
class SellerProfile:
    link: LinkGeometry
    relay_cost: float
    cache_hit: float
    backhaul_cost: float

    def __post_init__(self) -> None:
        if not self.relay_cost >= 0:
            raise StackelbergError(f"relay cost must be >= 0, got {self.relay_cost}")
        if not self.backhaul_cost >= 0:
            raise StackelbergError(f"backhaul cost must be >= 0, got {self.backhaul_cost}")
        if not 0 <= self.cache_hit <= 1:
            raise StackelbergError(f"cache-hit probability must be in [0, 1], got {self.cache_hit}")
        if self.effective_cost == 0:
            raise DegenerateSellerError(
                "seller has zero relay cost and no backhaul exposure; its optimal price is 0"
            )

    @property
    def effective_cost(self) -> float:
        """Expected cost per mW sold, averaging the cached and uncached cases."""
        return self.relay_cost + self.backhaul_cost * (1.0 - self.cache_hit)


@dataclass(frozen=True)
class StackelbergOutcome:
    """Equilibrium of the pricing game.

    ``participating`` holds ascending seller indices; ``prices``, ``powers`` and
    ``seller_rewards`` are aligned with it. ``announced_prices`` are the prices
    every seller posts when all N compete, before the buyer drops anyone.
    """

    participating: tuple[int, ...]
    prices: tuple[float, ...]
    powers: tuple[float, ...]
    buyer_reward: float
    seller_rewards: tuple[float, ...]
    delay_ms: float
    announced_prices: tuple[float, ...]

    @property
    def total_power(self) -> float:
        return math.fsum(self.powers)

    @property
    def mean_announced_price(self) -> float:
        return math.fsum(self.announced_prices) / len(self.announced_prices)


def affordability(env: RadioEnvironment, n_sellers: int, weights: MarketWeights) -> float:
    if n_sellers < 1:
        raise StackelbergError(f"need at least one seller, got {n_sellers}")
    return env.bandwidth_w * weights.rate_reward / ((n_sellers + 1) * math.log(2))


def link_impairment(link: LinkGeometry, env: RadioEnvironment) -> float:
    """Power needed to lift the link to unit SINR, i.e. sqrt(d)*(sigma^2+I)/H."""
    return math.sqrt(link.distance) * noise_plus_interference(env) / link.gain


def buyer_reward(
    powers: Sequence[float],
    prices: Sequence[float],
    sellers: Sequence[SellerProfile],
    env: RadioEnvironment,
    weights: MarketWeights,
    delay: DelayParams,
) -> float:
    if not len(powers) == len(prices) == len(sellers):
        raise StackelbergError(
            f"length mismatch: {len(powers)} powers, {len(prices)} prices, {len(sellers)} sellers"
        )
    if delay.active_users != len(sellers) + 1:
        raise StackelbergError(
            f"delay must count the buyer and its {len(sellers)} sellers, "
            f"got {delay.active_users} active users"
        )
    rate = buyer_aggregate_rate(powers, [s.link for s in sellers], env)
    payment = math.fsum(p * g for p, g in zip(prices, powers))
    return weights.rate_reward * rate - weights.delay_cost * system_delay(delay) - payment


def seller_reward(price: float, power: float, profile: SellerProfile) -> float:
    if power < 0:
        raise StackelbergError(f"power must be >= 0, got {power}")
    hit = profile.cache_hit
    cached = hit * (price - profile.relay_cost) * power
    uncached = (1.0 - hit) * (price - profile.relay_cost - profile.backhaul_cost) * power
    return cached + uncached


def best_response_power(
    price: float,
    seller: SellerProfile,
    env: RadioEnvironment,
    n_sellers: int,
    weights: MarketWeights,
) -> float:
    """Power the buyer purchases from ``seller`` at ``price``, clamped to the link cap."""
    if not price > 0:
        raise StackelbergError(f"price must be > 0, got {price}")
    interior = affordability(env, n_sellers, weights) / price - link_impairment(seller.link, env)
    return min(max(interior, 0.0), seller.link.max_power)


def optimal_price(
    seller: SellerProfile,
    env: RadioEnvironment,
    n_sellers: int,
    weights: MarketWeights,
) -> float:
    a = affordability(env, n_sellers, weights)
    return math.sqrt(a * seller.effective_cost / link_impairment(seller.link, env))


def _value_key(seller: SellerProfile, env: RadioEnvironment) -> float:
    # Smaller is better: a seller trades iff affordability exceeds this.
    return link_impairment(seller.link, env) * seller.effective_cost


def _evaluate(
    chosen: Sequence[int],
    sellers: Sequence[SellerProfile],
    env: RadioEnvironment,
    weights: MarketWeights,
    beta: float,
    background_users: int,
    max_users: int | None,
) -> StackelbergOutcome:
    n = len(chosen)
    group = [sellers[i] for i in chosen]
    prices = [optimal_price(s, env, n, weights) for s in group]
    powers = [best_response_power(p, s, env, n, weights) for p, s in zip(prices, group)]
    delay = DelayParams(beta, n + 1, background_users, max_users)
    return StackelbergOutcome(
        participating=tuple(chosen),
        prices=tuple(prices),
        powers=tuple(powers),
        buyer_reward=buyer_reward(powers, prices, group, env, weights, delay),
        seller_rewards=tuple(seller_reward(p, g, s) for p, g, s in zip(prices, powers, group)),
        delay_ms=system_delay(delay),
        announced_prices=(),
    )


def solve(
    sellers: Sequence[SellerProfile],
    env: RadioEnvironment,
    weights: MarketWeights,
    beta: float,
    background_users: int = 0,
    max_users: int | None = None,
    buyer_selects: bool = True,
) -> StackelbergOutcome:
    """Backward-induction equilibrium with seller participation.

    Sellers the buyer would buy nothing from are removed one at a time, the
    lowest-value seller first, and the remaining market is re-priced with its
    smaller N (which widens every bandwidth share). With ``buyer_selects`` the
    buyer then also drops lowest-value sellers while doing so raises its own
    reward, down to not trading at all.
    """
    if not sellers:
        raise StackelbergError("at least one seller is required")
    n_all = len(sellers)
    if max_users is not None and n_all + 1 + background_users > max_users:
        raise StackelbergError(
            f"{n_all + 1} transacting plus {background_users} background users "
            f"exceed the cellular limit of {max_users}"
        )

    announced = tuple(optimal_price(s, env, n_all, weights) for s in sellers)
    keys = [_value_key(s, env) for s in sellers]
    active = list(range(n_all))
    while active:
        n = len(active)
        idle = [
            i
            for i in active
            if best_response_power(optimal_price(sellers[i], env, n, weights), sellers[i], env, n, weights) == 0.0
        ]
        if not idle:
            break
        worst = max(idle, key=lambda i: (keys[i], i))
        active.remove(worst)

    ranked = sorted(active, key=lambda i: (keys[i], i))
    best: StackelbergOutcome | None = None
    if ranked:
        sizes = range(len(ranked), 0, -1) if buyer_selects else [len(ranked)]
        for k in sizes:
            outcome = _evaluate(
                sorted(ranked[:k]), sellers, env, weights, beta, background_users, max_users
            )
            if best is None or outcome.buyer_reward > best.buyer_reward:
                best = outcome
        if buyer_selects and best is not None and not best.buyer_reward > 0.0:
            best = None

    if best is None:
        return StackelbergOutcome((), (), (), 0.0, (), 0.0, announced)
    return StackelbergOutcome(
        participating=best.participating,
        prices=best.prices,
        powers=best.powers,
        buyer_reward=best.buyer_reward,
        seller_rewards=best.seller_rewards,
        delay_ms=best.delay_ms,
        announced_prices=announced,
    )
