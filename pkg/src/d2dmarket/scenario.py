"""Seeded topology draws and the Monte Carlo harness behind the trend experiments.

Every run ``r`` gets its own PCG64 stream seeded from ``(seed, r)``. A run draws
the largest market once and the N-counterparty market is its first N members,
so markets of different sizes share interferers and early counterparties
(common random numbers across N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import auction, stackelberg
from .caching import ZipfCatalog, cache_hit_probability
from .channel import (
    DelayParams,
    InterferenceSource,
    LinkGeometry,
    RadioEnvironment,
    noise_power_mw,
)

STACKELBERG_METRICS = (
    "avg_seller_price",
    "total_power",
    "buyer_reward",
    "seller_reward",
    "participants",
)
AUCTION_METRICS = (
    "auction_rounds",
    "auction_seller_reward",
    "auction_clearing_price",
)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    cell_radius: float = 500.0
    cluster_radius: float = 100.0
    n_counterparties: int = 10
    n_clusters: int = 10
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 5e6
    gain: float = 1.0
    max_power_mw: float = 100.0
    # None means neighbor clusters transmit at max_power_mw.
    interferer_power_mw: float | None = None
    xi_r: float = 3e-5
    xi_d: float = 0.1
    beta: float = 20.0
    cost_low: float = 0.1
    cost_high: float = 0.5
    cache_hit: float | ZipfCatalog = 0.3
    backhaul_cost_s: float = 0.1
    background_users_v: int = 20
    omega: int = 200
    buyer_selects: bool = True
    auction: auction.AuctionConfig = field(default_factory=auction.AuctionConfig)
    seed: int = 0
    runs: int = 500

    def __post_init__(self) -> None:
        checks = [
            (self.cluster_radius > 0, "cluster_radius", "must be > 0"),
            (self.cluster_radius <= self.cell_radius, "cluster_radius", "must not exceed cell_radius"),
            (self.n_counterparties >= 1, "n_counterparties", "must be >= 1"),
            (self.n_clusters >= 0, "n_clusters", "must be >= 0"),
            (self.bandwidth_hz > 0, "bandwidth_hz", "must be > 0"),
            (self.gain > 0, "gain", "must be > 0"),
            (self.max_power_mw > 0, "max_power_mw", "must be > 0"),
            (self.interferer_power_mw is None or self.interferer_power_mw >= 0,
             "interferer_power_mw", "must be >= 0"),
            (self.xi_r >= 0, "xi_r", "must be >= 0"),
            (self.xi_d >= 0, "xi_d", "must be >= 0"),
            (self.beta >= 0, "beta", "must be >= 0"),
            (0 <= self.cost_low <= self.cost_high, "cost_low", "must satisfy 0 <= cost_low <= cost_high"),
            (self.backhaul_cost_s >= 0, "backhaul_cost_s", "must be >= 0"),
            (self.background_users_v >= 0, "background_users_v", "must be >= 0"),
            (self.n_counterparties + 1 + self.background_users_v <= self.omega,
             "omega", "must admit the buyer, every counterparty and the background users"),
            (0 <= self.seed < 2**64, "seed", "must be a 64-bit unsigned integer"),
            (self.runs >= 1, "runs", "must be >= 1"),
        ]
        if not isinstance(self.cache_hit, ZipfCatalog):
            checks.append((0 <= self.cache_hit <= 1, "cache_hit", "must be a probability"))
        for ok, name, message in checks:
            if not ok:
                raise ScenarioError(f"{name} {message}")

    @property
    def cache_hit_probability(self) -> float:
        if isinstance(self.cache_hit, ZipfCatalog):
            return cache_hit_probability(self.cache_hit)
        return float(self.cache_hit)

    @property
    def noise_power(self) -> float:
        return noise_power_mw(self.noise_density_dbm_hz, self.bandwidth_hz)

    @property
    def weights(self) -> stackelberg.MarketWeights:
        return stackelberg.MarketWeights(self.xi_r, self.xi_d)


@dataclass(frozen=True)
class Topology:
    """One random draw: the buyer (or seller) sits at the origin."""

    links: tuple[LinkGeometry, ...]
    env: RadioEnvironment
    relay_costs: tuple[float, ...]
    positions: tuple[tuple[float, float], ...]

    def prefix(self, n: int) -> "Topology":
        if not 1 <= n <= len(self.links):
            raise ScenarioError(f"cannot take {n} of {len(self.links)} counterparties")
        return Topology(self.links[:n], self.env, self.relay_costs[:n], self.positions[:n])


def run_rng(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, run])))


def _disk_point(rng: np.random.Generator, radius: float) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return r * math.cos(theta), r * math.sin(theta)


def draw_topology(config: ScenarioConfig, rng: np.random.Generator) -> Topology:
    """Interfering cluster centers first, then counterparties, then their costs."""
    interferer_power = (
        config.max_power_mw if config.interferer_power_mw is None else config.interferer_power_mw
    )
    sources = []
    while len(sources) < config.n_clusters:
        x, y = _disk_point(rng, config.cell_radius)
        dist = math.hypot(x, y)
        if dist < config.cluster_radius:
            continue
        sources.append(InterferenceSource(interferer_power, config.gain, dist))

    positions, links = [], []
    while len(links) < config.n_counterparties:
        x, y = _disk_point(rng, config.cluster_radius)
        dist = math.hypot(x, y)
        if dist == 0.0:
            continue
        positions.append((x, y))
        links.append(LinkGeometry(dist, config.gain, config.max_power_mw))
    costs = rng.uniform(config.cost_low, config.cost_high, config.n_counterparties)

    env = RadioEnvironment(config.bandwidth_hz, config.noise_power, tuple(sources))
    return Topology(tuple(links), env, tuple(float(c) for c in costs), tuple(positions))


def sellers_for(topology: Topology, config: ScenarioConfig) -> list[stackelberg.SellerProfile]:
    hit = config.cache_hit_probability
    return [
        stackelberg.SellerProfile(link, cost, hit, config.backhaul_cost_s)
        for link, cost in zip(topology.links, topology.relay_costs)
    ]


def buyers_for(topology: Topology, config: ScenarioConfig) -> list[auction.BuyerProfile]:
    weights = config.weights
    return [auction.BuyerProfile(link, weights) for link in topology.links]


def solve_stackelberg(topology: Topology, config: ScenarioConfig) -> stackelberg.StackelbergOutcome:
    return stackelberg.solve(
        sellers_for(topology, config),
        topology.env,
        config.weights,
        config.beta,
        config.background_users_v,
        config.omega,
        buyer_selects=config.buyer_selects,
    )


def run_auction(topology: Topology, config: ScenarioConfig) -> auction.AuctionOutcome:
    n = len(topology.links)
    delay = DelayParams(config.beta, n + 1, config.background_users_v, config.omega)
    return auction.run(
        config.auction, buyers_for(topology, config), topology.env, delay, topology.relay_costs
    )


@dataclass(frozen=True)
class SummaryStats:
    """Per-N sample means and standard deviations, one row per (N, metric)."""

    runs: int
    sizes: tuple[int, ...]
    means: dict[str, tuple[float, ...]]
    stddevs: dict[str, tuple[float, ...]]

    @property
    def metrics(self) -> tuple[str, ...]:
        return tuple(self.means)

    def mean(self, metric: str) -> np.ndarray:
        return np.asarray(self.means[metric])

    def std(self, metric: str) -> np.ndarray:
        return np.asarray(self.stddevs[metric])

    def sem(self, metric: str) -> np.ndarray:
        return self.std(metric) / math.sqrt(self.runs)

    def rows(self) -> Iterable[tuple[int, str, float, float, int]]:
        for i, n in enumerate(self.sizes):
            for metric in self.means:
                yield n, metric, self.means[metric][i], self.stddevs[metric][i], self.runs


def _moments(values: list[float]) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


TraceSink = Callable[[int, int, auction.AuctionOutcome], None]


def run_monte_carlo(
    config: ScenarioConfig,
    modes: Iterable[str] = ("stackelberg", "auction"),
    trace_sink: TraceSink | None = None,
) -> SummaryStats:
    """Evaluate every market size 1..N over ``config.runs`` seeded draws.

    ``trace_sink(n, run, outcome)`` receives each auction outcome, in (run, n) order.
    """
    modes = tuple(modes)
    unknown = set(modes) - {"stackelberg", "auction"}
    if unknown or not modes:
        raise ScenarioError(f"unknown or empty modes: {sorted(unknown) or modes}")
    metrics: list[str] = []
    if "stackelberg" in modes:
        metrics += STACKELBERG_METRICS
    if "auction" in modes:
        metrics += AUCTION_METRICS
    sizes = tuple(range(1, config.n_counterparties + 1))
    samples = {m: {n: [] for n in sizes} for m in metrics}

    for run in range(config.runs):
        full = draw_topology(config, run_rng(config.seed, run))
        for n in sizes:
            topo = full.prefix(n)
            if "stackelberg" in modes:
                out = solve_stackelberg(topo, config)
                samples["avg_seller_price"][n].append(out.mean_announced_price)
                samples["total_power"][n].append(out.total_power)
                samples["buyer_reward"][n].append(out.buyer_reward)
                samples["seller_reward"][n].append(math.fsum(out.seller_rewards))
                samples["participants"][n].append(float(len(out.participating)))
            if "auction" in modes:
                res = run_auction(topo, config)
                samples["auction_rounds"][n].append(float(res.final_clock))
                samples["auction_seller_reward"][n].append(res.seller_reward)
                samples["auction_clearing_price"][n].append(res.clearing_price)
                if trace_sink is not None:
                    trace_sink(n, run, res)

    means, stds = {}, {}
    for m in metrics:
        pairs = [_moments(samples[m][n]) for n in sizes]
        means[m] = tuple(p[0] for p in pairs)
        stds[m] = tuple(p[1] for p in pairs)
    return SummaryStats(config.runs, sizes, means, stds)
