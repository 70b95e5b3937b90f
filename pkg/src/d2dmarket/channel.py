"""Physical-layer quantities for a D2D cluster: SINR, Shannon rate and system delay.

All powers are in milliwatts. Path attenuation follows a 1/sqrt(distance) law for
both the wanted link and the interfering neighbor clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

# Base of the logarithm in the delay model. The delay law is a graph-asymptotic
# scaling, so the base only rescales beta; natural log is used throughout.
DELAY_LOG = math.log


class ChannelError(ValueError):
    """Raised when a radio or delay quantity is requested outside its domain."""


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0:
        raise ChannelError(f"power must be positive to express in dBm, got {mw}")
    return 10.0 * math.log10(mw)


def noise_power_mw(density_dbm_hz: float, bandwidth_hz: float) -> float:
    """Thermal noise over ``bandwidth_hz`` given a density in dBm/Hz."""
    if bandwidth_hz <= 0:
        raise ChannelError("bandwidth must be positive")
    return dbm_to_mw(density_dbm_hz + 10.0 * math.log10(bandwidth_hz))


@dataclass(frozen=True)
class InterferenceSource:
    """Aggregate transmitter of one neighbor cluster, seen from the buyer."""

    power: float
    gain: float
    center_distance: float

    def __post_init__(self) -> None:
        if not self.power >= 0:
            raise ChannelError(f"interferer power must be >= 0, got {self.power}")
        if not self.gain >= 0:
            raise ChannelError(f"interferer gain must be >= 0, got {self.gain}")
        if not self.center_distance > 0:
            raise ChannelError(
                f"cluster center distance must be > 0, got {self.center_distance}"
            )


@dataclass(frozen=True)
class RadioEnvironment:
    bandwidth_w: float
    noise_power: float
    interferers: tuple[InterferenceSource, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.bandwidth_w > 0:
            raise ChannelError(f"bandwidth must be > 0, got {self.bandwidth_w}")
        if not self.noise_power > 0:
            raise ChannelError(f"noise power must be > 0, got {self.noise_power}")
        object.__setattr__(self, "interferers", tuple(self.interferers))


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    gain: float
    max_power: float

    def __post_init__(self) -> None:
        if not self.distance > 0:
            raise ChannelError(f"link distance must be > 0, got {self.distance}")
        if not self.gain > 0:
            raise ChannelError(f"link gain must be > 0, got {self.gain}")
        if not self.max_power > 0:
            raise ChannelError(f"max power must be > 0, got {self.max_power}")


@dataclass(frozen=True)
class DelayParams:
    """Inputs of the system-delay law: beta * sqrt(Y+V) / sqrt(log(Y+V))."""

    beta: float
    active_users: int
    background_users: int = 0
    max_users: int | None = None

    def __post_init__(self) -> None:
        if not self.beta >= 0:
            raise ChannelError(f"beta must be >= 0, got {self.beta}")
        if self.active_users < 1:
            raise ChannelError(f"active users must be >= 1, got {self.active_users}")
        if self.background_users < 0:
            raise ChannelError(
                f"background users must be >= 0, got {self.background_users}"
            )
        if self.total_users < 2:
            raise ChannelError(
                f"delay model needs at least 2 users in the network, got {self.total_users}"
            )
        if self.max_users is not None and self.total_users > self.max_users:
            raise ChannelError(
                f"{self.total_users} users exceed the cellular limit of {self.max_users}"
            )

    @property
    def total_users(self) -> int:
        return self.active_users + self.background_users


def interference_power(env: RadioEnvironment) -> float:
    """Received interference from all neighbor clusters, in mW."""
    return math.fsum(
        src.power * src.gain / math.sqrt(src.center_distance) for src in env.interferers
    )


def noise_plus_interference(env: RadioEnvironment) -> float:
    return env.noise_power + interference_power(env)


def sinr(power: float, link: LinkGeometry, env: RadioEnvironment) -> float:
    if not 0 <= power <= link.max_power:
        raise ChannelError(
            f"transmit power {power} outside [0, {link.max_power}] mW"
        )
    received = power * link.gain / math.sqrt(link.distance)
    return received / noise_plus_interference(env)


def link_rate(
    power: float,
    link: LinkGeometry,
    env: RadioEnvironment,
    bandwidth_share: float | None = None,
) -> float:
    """Shannon rate in bit/s over ``bandwidth_share`` Hz (the full band if omitted)."""
    share = env.bandwidth_w if bandwidth_share is None else bandwidth_share
    if not 0 < share <= env.bandwidth_w:
        raise ChannelError(
            f"bandwidth share {share} outside (0, {env.bandwidth_w}] Hz"
        )
    return share * math.log2(1.0 + sinr(power, link, env))


def buyer_aggregate_rate(
    powers: Sequence[float], links: Sequence[LinkGeometry], env: RadioEnvironment
) -> float:
    """Rate a buyer collects from N sellers when the band is split N+1 ways."""
    if len(powers) != len(links):
        raise ChannelError(
            f"got {len(powers)} powers for {len(links)} links"
        )
    if not links:
        raise ChannelError("at least one link is required")
    share = env.bandwidth_w / (len(links) + 1)
    return math.fsum(link_rate(g, link, env, share) for g, link in zip(powers, links))


def system_delay(params: DelayParams) -> float:
    """End-to-end delay in ms for Y active and V background users."""
    total = params.total_users
    return params.beta * math.sqrt(total) / math.sqrt(DELAY_LOG(total))
