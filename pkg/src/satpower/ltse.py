"""Solution concepts for random channels.

All Monte-Carlo quantities are computed on one fixed-seed sample matrix per
call (common random numbers), so estimates are deterministic and a root
search over powers is a deterministic fixed-point problem.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from satpower.channels import H_MAX, ChannelModel, sample_gains
from satpower.game import GameConfig, feasibility_check, rate_vector

DEFAULT_SAMPLES = 100_000
GAP_EPS = 1e-12


class LtseError(Exception):
    pass


class NoConvergence(LtseError):
    pass


class Infeasible(LtseError):
    pass


@dataclass(frozen=True)
class LtseResult:
    powers: np.ndarray
    expected_r: np.ndarray
    variance: np.ndarray
    n_samples: int
    seed: int
    iterations: int = 0


@dataclass(frozen=True)
class UserReport:
    user: int
    demand: float
    mean_r: float
    var_r: float
    bound: float
    empirical_rate: float


def rate_samples(cfg: GameConfig, p, channel: ChannelModel, n_samples: int, seed: int) -> np.ndarray:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    return rate_vector(p, sample_gains(channel, n_samples, seed), cfg.noise)


def rate_moments(cfg, p, channel, n_samples, seed) -> tuple[np.ndarray, np.ndarray]:
    r = rate_samples(cfg, p, channel, n_samples, seed)
    return r.mean(axis=0), r.var(axis=0)


def rse_grid(
    n_users: int,
    h_max: float = H_MAX,
    points: int = 17,
    lhs_points: int = 10_000,
    seed: int = 0,
) -> np.ndarray:
    """Gain vectors standing in for 'every channel state in (0, h_max]'.

    Per user, ``points`` log-spaced values in ``(1e-6 h_max, h_max]``; a full
    tensor grid for up to three users, otherwise a Latin hypercube in log
    space.
    """
    lo, hi = np.log10(1e-6 * h_max), np.log10(h_max)
    if n_users <= 3:
        axis = np.logspace(lo, hi, points + 1)[1:]
        mesh = np.meshgrid(*([axis] * n_users), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    u = qmc.LatinHypercube(d=n_users, seed=seed).random(lhs_points)
    return 10.0 ** (hi - (hi - lo) * (1.0 - u))


def check_rse(cfg: GameConfig, p, gain_grid) -> bool:
    grid = np.atleast_2d(np.asarray(gain_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("gain grid must not be empty")
    if np.any(grid <= 0):
        raise ValueError("grid gains must be strictly positive")
    r = rate_vector(p, grid, cfg.noise)
    return bool(np.all(r >= np.asarray(cfg.demands)))


def solve_efficient_ltse(
    cfg: GameConfig,
    channel: ChannelModel,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    *,
    damping: float = 0.5,
    tol: float = 1e-10,
    max_iters: int = 10_000,
    initial=None,
) -> LtseResult:
    """Powers whose expected throughput meets each demand exactly.

    Damped fixed-point iteration ``P <- (1-a) P + a P theta / rbar(P)`` on
    the sample-average throughput. Stops once every ``|rbar_i - theta_i|``
    is within ``tol``.
    """
    if not feasibility_check(cfg):
        raise Infeasible(f"total demand {sum(cfg.demands):.6g} exceeds capacity {cfg.capacity:.6g}")
    g = sample_gains(channel, n_samples, seed)
    theta = np.asarray(cfg.demands)
    p_max = np.asarray(cfg.p_max)
    p = np.minimum(1.0, p_max) if initial is None else np.asarray(initial, dtype=float).copy()
    for it in range(max_iters + 1):
        r = rate_vector(p, g, cfg.noise)
        rbar = r.mean(axis=0)
        if np.max(np.abs(rbar - theta)) <= tol:
            return LtseResult(p, rbar, r.var(axis=0), n_samples, seed, it)
        if it == max_iters:
            break
        p = np.clip((1.0 - damping) * p + damping * p * theta / np.maximum(rbar, 1e-300), 0.0, p_max)
    raise NoConvergence(
        f"no expected-throughput fixed point after {max_iters} iterations "
        f"(max gap {np.max(np.abs(rbar - theta)):.3e})"
    )


def chebyshev_bound(theta_i: float, mean_r: float, var_r: float) -> float:
    """min(1, Var / (theta - mean)**2); vacuous (1.0) when the gap is below 1e-12."""
    if var_r < 0:
        raise ValueError("variance must be non-negative")
    gap = theta_i - mean_r
    if abs(gap) < GAP_EPS:
        return 1.0
    return min(1.0, var_r / gap**2)


def empirical_satisfaction_rate(cfg, p, channel, n_samples, seed) -> np.ndarray:
    r = rate_samples(cfg, p, channel, n_samples, seed)
    return np.mean(r >= np.asarray(cfg.demands), axis=0)


def satisfaction_report(cfg, p, channel, n_samples, seed) -> list[UserReport]:
    """Per-user Chebyshev bound next to the empirical satisfaction rate, same samples for both."""
    r = rate_samples(cfg, p, channel, n_samples, seed)
    mean, var = r.mean(axis=0), r.var(axis=0)
    rate = np.mean(r >= np.asarray(cfg.demands), axis=0)
    return [
        UserReport(i, cfg.demands[i], float(mean[i]), float(var[i]),
                   chebyshev_bound(cfg.demands[i], mean[i], var[i]), float(rate[i]))
        for i in range(cfg.n_users)
    ]
