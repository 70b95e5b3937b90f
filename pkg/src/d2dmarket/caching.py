"""Zipf file popularity and the chance that a seller already caches the wanted file."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

# Largest catalog for which every storage mode is enumerated (C(25, 12) ~ 5.2e6).
MAX_ENUMERATION_CATALOG = 25


class CachingError(ValueError):
    pass


@dataclass(frozen=True)
class ZipfCatalog:
    catalog_size: int
    exponent: float
    device_capacity: int

    def __post_init__(self) -> None:
        if self.catalog_size < 1:
            raise CachingError(f"catalog size must be >= 1, got {self.catalog_size}")
        if not 1 <= self.device_capacity <= self.catalog_size:
            raise CachingError(
                f"device capacity must lie in [1, {self.catalog_size}], "
                f"got {self.device_capacity}"
            )
        if not self.exponent >= 0:
            raise CachingError(f"Zipf exponent must be >= 0, got {self.exponent}")


def zipf_weights(catalog: ZipfCatalog) -> np.ndarray:
    """Request frequency of every rank 1..K, as an array summing to one."""
    ranks = np.arange(1, catalog.catalog_size + 1, dtype=float)
    raw = ranks ** -catalog.exponent
    return raw / raw.sum()


def zipf_popularity(rank: int, catalog: ZipfCatalog) -> float:
    if not 1 <= rank <= catalog.catalog_size:
        raise CachingError(f"rank {rank} outside [1, {catalog.catalog_size}]")
    return float(zipf_weights(catalog)[rank - 1])


def _enumerable(catalog: ZipfCatalog) -> bool:
    k, tau = catalog.catalog_size, catalog.device_capacity
    return k <= MAX_ENUMERATION_CATALOG or tau in (1, k - 1, k)


def cache_hit_probability_exact(catalog: ZipfCatalog) -> float:
    """Total-probability sum over every equally likely storage mode.

    Each of the C(K, tau) modes holds with probability tau!(K-tau)!/K!, and a
    mode serves the request with the summed popularity of the files it holds.
    """
    if not _enumerable(catalog):
        raise CachingError(
            f"C({catalog.catalog_size}, {catalog.device_capacity}) storage modes is too "
            f"many to enumerate; use cache_hit_probability"
        )
    weights = [float(w) for w in zipf_weights(catalog)]
    k, tau = catalog.catalog_size, catalog.device_capacity
    mode_probability = 1.0 / math.comb(k, tau)
    hits = (math.fsum(weights[i] for i in mode) for mode in itertools.combinations(range(k), tau))
    return math.fsum(hits) * mode_probability


def cache_hit_probability(catalog: ZipfCatalog) -> float:
    # Uniform storage makes every file equally likely to be cached, so the
    # popularity weights cancel and only the fill ratio remains.
    return catalog.device_capacity / catalog.catalog_size
