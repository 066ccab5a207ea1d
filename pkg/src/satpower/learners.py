"""Fully distributed power learners.

Every update is elementwise over users: user ``i`` reads only its own power,
demand, observed throughput and private learner memory. Step functions are
pure and return a new :class:`LearnerState`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from satpower.game import GameConfig, rate_vector

R_FLOOR = 1e-9
M_INIT = 1e-12
_ARM_TAG = 0x424D


class LearnerKind(str, enum.Enum):
    BANACH_PICARD = "banach_picard"
    PROGRESSIVE_BP = "progressive_bp"
    BUSH_MOSTELLER = "bush_mosteller"
    MANN = "mann"


class BmSignal(str, enum.Enum):
    # "deviation": step scales with |theta - r| / m, the literal update rule.
    # "satisfaction": step scales with 1 - |theta - r| / m.
    DEVIATION = "deviation"
    SATISFACTION = "satisfaction"


@dataclass(frozen=True)
class LearnerParams:
    epsilon: float = 0.1
    zeta: float = 0.1
    lam: float = 0.1
    mu: float = 0.1
    rho: float = 1e-6
    r_floor: float = R_FLOOR
    bm_signal: BmSignal = BmSignal.SATISFACTION

    def __post_init__(self):
        object.__setattr__(self, "bm_signal", BmSignal(self.bm_signal))
        for name in ("epsilon", "zeta", "lam", "mu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.r_floor <= 0:
            raise ValueError("r_floor must be positive")


@dataclass(frozen=True)
class LearnerState:
    kind: LearnerKind
    powers: np.ndarray
    demands: np.ndarray
    p_max: np.ndarray
    params: LearnerParams = field(default_factory=LearnerParams)
    arm_probs: Optional[np.ndarray] = None
    power_levels: Optional[np.ndarray] = None
    max_dev: Optional[np.ndarray] = None
    forecast: Optional[np.ndarray] = None

    @property
    def n_users(self) -> int:
        return len(self.powers)


def init_state(
    kind: LearnerKind | str,
    cfg: GameConfig,
    initial_powers,
    params: LearnerParams | None = None,
    power_levels=None,
) -> LearnerState:
    """Fresh learner state for ``cfg``.

    Mann forecasts start at the throughput under nominal gains at the initial
    powers. Bush-Mosteller rows start uniform over ``power_levels``.
    """
    kind = LearnerKind(kind)
    params = params or LearnerParams()
    p0 = np.asarray(initial_powers, dtype=float).copy()
    state = LearnerState(
        kind=kind,
        powers=p0,
        demands=np.asarray(cfg.demands, dtype=float).copy(),
        p_max=np.asarray(cfg.p_max, dtype=float),
        params=params,
    )
    if kind is LearnerKind.MANN:
        state = replace(state, forecast=rate_vector(p0, cfg.gains, cfg.noise))
    elif kind is LearnerKind.BUSH_MOSTELLER:
        if power_levels is None:
            raise ValueError("Bush-Mosteller needs discrete power levels")
        levels = np.asarray(power_levels, dtype=float)
        if levels.ndim != 2 or levels.shape[0] != cfg.n_users:
            raise ValueError("power_levels must be a per-user 2-D array")
        k = levels.shape[1]
        state = replace(
            state,
            power_levels=levels,
            arm_probs=np.full(levels.shape, 1.0 / k),
            max_dev=np.full(cfg.n_users, M_INIT),
        )
    return state


def _bp_target(powers, demands, r, r_floor):
    return powers * demands / np.maximum(r, r_floor)


def bp_step(state: LearnerState, observed_r) -> LearnerState:
    r = np.asarray(observed_r, dtype=float)
    new_p = np.clip(_bp_target(state.powers, state.demands, r, state.params.r_floor), 0.0, state.p_max)
    return replace(state, powers=new_p)


def bp_progressive_step(state: LearnerState, observed_r, capacity: float) -> LearnerState:
    """Banach-Picard step, then satisfied users raise their demand by ``epsilon``.

    Users are visited in index order; each raise is only made while the total
    demand plus ``epsilon`` stays within ``capacity``.
    """
    r = np.asarray(observed_r, dtype=float)
    nxt = bp_step(state, r)
    eps, rho = state.params.epsilon, state.params.rho
    demands = state.demands.copy()
    for i in range(len(demands)):
        if abs(r[i] - demands[i]) <= rho and demands.sum() + eps <= capacity:
            demands[i] += eps
    return replace(nxt, demands=demands)


def bm_step(state: LearnerState, chosen_arms, observed_r) -> LearnerState:
    """Probability update over discrete power levels.

    The running maximum deviation ``m`` is refreshed first so the normalised
    deviation stays in [0, 1]. The chosen arm gains ``beta`` times the mass
    of the other arms and every other arm loses ``beta * p_k'``, which
    preserves the row sum.
    """
    r = np.asarray(observed_r, dtype=float)
    arms = np.asarray(chosen_arms, dtype=int)
    dev = np.abs(state.demands - r)
    m = np.maximum(state.max_dev, dev)
    ratio = dev / m
    if state.params.bm_signal is BmSignal.SATISFACTION:
        ratio = 1.0 - ratio
    beta = state.params.zeta * ratio
    probs = state.arm_probs * (1.0 - beta[:, None])
    rows = np.arange(len(arms))
    chosen = state.arm_probs[rows, arms]
    others = state.arm_probs.sum(axis=1) - chosen
    probs[rows, arms] = chosen + beta * others
    powers = state.power_levels[rows, arms]
    return replace(state, arm_probs=probs, max_dev=m, powers=powers)


def bm_sample(state: LearnerState, user: int, seed: int, t: int) -> int:
    """Categorical draw from ``user``'s row; a pure function of ``(seed, user, t)``."""
    row = state.arm_probs[user]
    bg = np.random.Philox(key=(int(user) << 64) | int(seed), counter=[int(t), 0, _ARM_TAG, 0])
    u = float(bg.random_raw(1)[0] >> np.uint64(11)) / 9007199254740992.0
    k = int(np.searchsorted(np.cumsum(row), u, side="right"))
    return min(k, len(row) - 1)


def bm_sample_all(state: LearnerState, seed: int, t: int) -> np.ndarray:
    return np.array([bm_sample(state, i, seed, t) for i in range(state.n_users)])


def mann_step(state: LearnerState, observed_r) -> LearnerState:
    """Damped Banach-Picard move driven by the throughput forecast.

    Power moves first using the current forecast, then the forecast is
    smoothed toward the new observation.
    """
    r = np.asarray(observed_r, dtype=float)
    lam, mu = state.params.lam, state.params.mu
    target = _bp_target(state.powers, state.demands, state.forecast, state.params.r_floor)
    new_p = np.clip((1.0 - lam) * state.powers + lam * target, 0.0, state.p_max)
    new_f = state.forecast + mu * (r - state.forecast)
    return replace(state, powers=new_p, forecast=new_f)


def has_converged(state: LearnerState, prev_powers) -> bool:
    return bool(np.max(np.abs(state.powers - np.asarray(prev_powers))) < state.params.rho)


def probs_valid(state: LearnerState, atol: float = 1e-12) -> bool:
    p = state.arm_probs
    return bool(
        np.all(p >= 0.0) and np.all(p <= 1.0) and np.all(np.abs(p.sum(axis=1) - 1.0) <= atol)
    )
