"""Built-in scenarios: three-user runs for each learner plus edge cases.

Start powers are (1, 1, 1) mW throughout. Demands for the stationary
Banach-Picard scenarios are chosen inside the attainable SINR region
(``sinr_region_load < 1``); ``bp_unattainable`` keeps theta = (1, 2, 3),
which lies outside it, so the gap is visible.
"""
from __future__ import annotations

from satpower.channels import ChannelModel
from satpower.game import GameConfig, rate_vector
from satpower.harness import DemandChange, Scenario
from satpower.learners import BmSignal, LearnerKind, LearnerParams

START = (1.0, 1.0, 1.0)
P_MAX = (10.0, 10.0, 10.0)
UNIT = (1.0, 1.0, 1.0)
BM_LEVELS = (0.1, 0.2, 0.3)


def _bp(name, gains, demands, capacity=10.0, horizon=500, channel=None, **kw) -> Scenario:
    n = len(gains)
    game = GameConfig(gains, 1.0, demands, (10.0,) * n, capacity)
    return Scenario(
        game=game,
        channel=channel or ChannelModel.stationary(gains),
        algorithm=kw.pop("algorithm", LearnerKind.BANACH_PICARD),
        initial_powers=(1.0,) * n,
        horizon=horizon,
        name=name,
        **kw,
    )


def bush_mosteller_demands() -> tuple[float, ...]:
    """Exact throughputs of the allocation (0.1, 0.2, 0.3) mW on unit gains."""
    return tuple(float(v) for v in rate_vector(BM_LEVELS, UNIT, 1.0))


def ltse_single() -> Scenario:
    # demand = E[log2(1 + h)], h ~ Exp(1), i.e. e * E1(1) / ln 2
    game = GameConfig((1.0,), 1.0, (0.8603,), (10.0,), 10.0)
    return Scenario(
        game=game,
        channel=ChannelModel.fast_fading(1, mean=1.0, seed=7),
        algorithm=LearnerKind.MANN,
        initial_powers=(1.0,),
        horizon=10_000,
        seed=7,
        name="ltse_single",
    )


def builtin_scenarios() -> dict[str, Scenario]:
    base = (0.1, 0.2, 0.3)
    out = [
        _bp("bp_demands", UNIT, base),
        _bp("bp_unattainable", UNIT, (1.0, 2.0, 3.0)),
        _bp("bp_unequal_gains", (1.0, 0.75, 0.5), (0.2, 0.2, 0.2)),
        Scenario(
            game=GameConfig(UNIT, 1.0, bush_mosteller_demands(), P_MAX, 10.0),
            channel=ChannelModel.stationary(UNIT),
            algorithm=LearnerKind.BUSH_MOSTELLER,
            initial_powers=START,
            horizon=5_000,
            params=LearnerParams(zeta=0.1, bm_signal=BmSignal.SATISFACTION),
            discrete_levels=(BM_LEVELS,) * 3,
            seed=0,
            name="bm_discrete_levels",
        ),
        _bp("bp_block_fading", UNIT, base, horizon=100,
            channel=ChannelModel.block_fading(3, block_len=10, mean=1.0, seed=5), seed=5),
        _bp("mann_fast_fading", UNIT, base, horizon=10_000,
            channel=ChannelModel.fast_fading(3, mean=1.0, seed=6), seed=6,
            algorithm=LearnerKind.MANN, params=LearnerParams(lam=0.1, mu=0.1)),
        _bp("bp_demand_change", UNIT, base, demand_changes=(DemandChange(20, 0, 0.3),)),
        _bp("capacity_discovery", UNIT, base, capacity=14.0, horizon=20_000,
            algorithm=LearnerKind.PROGRESSIVE_BP, params=LearnerParams(epsilon=0.1)),
        _bp("over_capacity", UNIT, (2.0, 2.0, 2.0), capacity=3.0),
        ltse_single(),
    ]
    return {s.name: s for s in out}


def scenario(name: str) -> Scenario:
    try:
        return builtin_scenarios()[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}") from None


def singular_pair() -> Scenario:
    """Two users with theta = (1, 1): the tight-constraint system is singular."""
    return _bp("singular_pair", (1.0, 1.0), (1.0, 1.0), capacity=10.0)
