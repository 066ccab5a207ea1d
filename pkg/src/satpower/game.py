"""Uplink power-control game: configuration and payoff evaluation.

Gains are always passed explicitly so the same :class:`GameConfig` serves
stationary and fading runs. ``GameConfig.gains`` only holds the nominal
(stationary) channel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from satpower.channels import ChannelModel

LN2 = math.log(2.0)


class ConfigError(ValueError):
    """Invalid game or scenario parameter. ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _as_tuple(name: str, values, n: int | None = None) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except TypeError:
        raise ConfigError(name, "expected a list of numbers") from None
    if n is not None and len(out) != n:
        raise ConfigError(name, f"expected {n} entries, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(name, "entries must be finite")
    return out


@dataclass(frozen=True)
class GameConfig:
    gains: tuple[float, ...]
    noise: float
    demands: tuple[float, ...]
    p_max: tuple[float, ...]
    capacity: float

    def __post_init__(self):
        gains = _as_tuple("gains", self.gains)
        n = len(gains)
        if n == 0:
            raise ConfigError("gains", "at least one user is required")
        demands = _as_tuple("demands", self.demands, n)
        p_max = _as_tuple("p_max", self.p_max, n)
        if any(h <= 0 for h in gains):
            raise ConfigError("gains", "channel gains must be strictly positive")
        if any(d <= 0 for d in demands):
            raise ConfigError("demands", "demands must be strictly positive")
        if any(p <= 0 for p in p_max):
            raise ConfigError("p_max", "maximum powers must be strictly positive")
        if not (math.isfinite(self.noise) and self.noise > 0):
            raise ConfigError("noise", "noise power must be a positive number")
        if not (math.isfinite(self.capacity) and self.capacity > 0):
            raise ConfigError("capacity", "capacity must be a positive number")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "demands", demands)
        object.__setattr__(self, "p_max", p_max)
        object.__setattr__(self, "noise", float(self.noise))
        object.__setattr__(self, "capacity", float(self.capacity))

    @property
    def n_users(self) -> int:
        return len(self.gains)

    def with_demands(self, demands: Sequence[float]) -> "GameConfig":
        return GameConfig(self.gains, self.noise, tuple(demands), self.p_max, self.capacity)


def validate_powers(cfg: GameConfig, p) -> np.ndarray:
    """Return ``p`` as a float array after checking length and the box bounds."""
    p = np.asarray(p, dtype=float)
    if p.shape != (cfg.n_users,):
        raise ValueError(f"power vector must have shape ({cfg.n_users},), got {p.shape}")
    if np.any(p < 0) or np.any(p > np.asarray(cfg.p_max)):
        raise ValueError("powers must lie in [0, p_max]")
    return p


def sinr_vector(p, gains, noise: float) -> np.ndarray:
    """SINR of every user. ``gains`` may be ``(N,)`` or ``(n_samples, N)``."""
    x = np.asarray(gains, dtype=float) * np.asarray(p, dtype=float)
    # sum over j != i as prefix + suffix sums; total - x cancels when one user dominates
    zero = np.zeros(x.shape[:-1] + (1,))
    before = np.concatenate([zero, np.cumsum(x[..., :-1], axis=-1)], axis=-1)
    after = np.concatenate([np.cumsum(x[..., :0:-1], axis=-1)[..., ::-1], zero], axis=-1)
    return x / (noise + (before + after))


def rate_vector(p, gains, noise: float) -> np.ndarray:
    """Shannon rate log2(1 + SINR) of every user, broadcasting like :func:`sinr_vector`."""
    return np.log1p(sinr_vector(p, gains, noise)) / LN2


def _check_index(cfg: GameConfig, i: int) -> None:
    if not 0 <= i < cfg.n_users:
        raise IndexError(f"user index {i} out of range for {cfg.n_users} users")


def sinr(cfg: GameConfig, p, gains, i: int) -> float:
    _check_index(cfg, i)
    return float(sinr_vector(p, gains, cfg.noise)[i])


def throughput(cfg: GameConfig, p, gains, i: int) -> float:
    """Bandwidth-normalised instantaneous throughput of user ``i`` in bits/s/Hz."""
    _check_index(cfg, i)
    return float(rate_vector(p, gains, cfg.noise)[i])


def throughputs(cfg: GameConfig, p, gains) -> np.ndarray:
    return rate_vector(p, gains, cfg.noise)


def expected_throughput(
    cfg: GameConfig,
    p,
    channel: "ChannelModel",
    i: int,
    n_samples: int,
    seed: int,
) -> float:
    """Monte-Carlo estimate of E[r_i] over ``n_samples`` gain vectors drawn from ``channel``.

    A stationary channel is a point mass, so the estimate equals the
    instantaneous throughput exactly.
    """
    from satpower.channels import sample_gains

    _check_index(cfg, i)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not channel.is_fading:
        return throughput(cfg, p, channel.nominal_gains, i)
    g = sample_gains(channel, n_samples, seed)
    return float(np.mean(rate_vector(p, g, cfg.noise)[:, i]))


def is_satisfied(cfg: GameConfig, p, gains) -> np.ndarray:
    # exact comparison; a profile with r_i == theta_i is satisfied
    return rate_vector(p, gains, cfg.noise) >= np.asarray(cfg.demands)


def feasibility_check(cfg: GameConfig) -> bool:
    return sum(cfg.demands) <= cfg.capacity


def sinr_region_load(demands) -> float:
    """Sum of 1 - 2**-theta_i over users.

    Demands are jointly attainable at some finite power profile only if this
    is strictly below one; it is independent of gains, noise and ``capacity``.
    """
    d = np.asarray(demands, dtype=float)
    return float(np.sum(-np.expm1(-d * LN2)))
