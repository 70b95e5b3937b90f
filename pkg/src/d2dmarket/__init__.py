"""Pricing and auction solvers for device-to-device mobile-data markets."""

from .auction import AuctionConfig, AuctionOutcome, BuyerProfile, ClockRecord
from .caching import ZipfCatalog, cache_hit_probability, cache_hit_probability_exact, zipf_popularity
from .channel import DelayParams, InterferenceSource, LinkGeometry, RadioEnvironment
from .scenario import ScenarioConfig, SummaryStats, draw_topology, run_monte_carlo
from .stackelberg import MarketWeights, SellerProfile, StackelbergOutcome, solve

__all__ = [
    "AuctionConfig",
    "AuctionOutcome",
    "BuyerProfile",
    "ClockRecord",
    "DelayParams",
    "InterferenceSource",
    "LinkGeometry",
    "MarketWeights",
    "RadioEnvironment",
    "ScenarioConfig",
    "SellerProfile",
    "StackelbergOutcome",
    "SummaryStats",
    "ZipfCatalog",
    "cache_hit_probability",
    "cache_hit_probability_exact",
    "draw_topology",
    "run_monte_carlo",
    "solve",
    "zipf_popularity",
]
