"""Scenario description, the simulation loop and trace/scenario file formats."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from satpower.channels import ChannelKind, ChannelModel, gains_at
from satpower.game import ConfigError, GameConfig, rate_vector
from satpower.learners import (
    LearnerKind,
    LearnerParams,
    LearnerState,
    bm_sample_all,
    bm_step,
    bp_progressive_step,
    bp_step,
    init_state,
    mann_step,
)

SCHEMA_VERSION = 1
TRACE_HEADER = ("t", "user", "power_mw", "gain", "throughput", "demand", "satisfied")


class ScenarioError(ConfigError):
    """Scenario file could not be parsed or failed validation."""


@dataclass(frozen=True)
class DemandChange:
    t: int
    user: int
    demand: float


@dataclass(frozen=True)
class Scenario:
    game: GameConfig
    channel: ChannelModel
    algorithm: LearnerKind
    initial_powers: tuple[float, ...]
    horizon: int
    params: LearnerParams = field(default_factory=LearnerParams)
    seed: int = 0
    discrete_levels: Optional[tuple[tuple[float, ...], ...]] = None
    demand_changes: tuple[DemandChange, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "algorithm", LearnerKind(self.algorithm))
        object.__setattr__(self, "initial_powers", tuple(float(p) for p in self.initial_powers))
        object.__setattr__(self, "demand_changes", tuple(self.demand_changes))
        if self.discrete_levels is not None:
            levels = tuple(tuple(float(v) for v in row) for row in self.discrete_levels)
            object.__setattr__(self, "discrete_levels", levels)
        n = self.game.n_users
        if len(self.initial_powers) != n:
            raise ScenarioError("initial_powers", f"expected {n} entries")
        if any(not 0 <= p <= pm for p, pm in zip(self.initial_powers, self.game.p_max)):
            raise ScenarioError("initial_powers", "must lie in [0, p_max]")
        if self.channel.n_users != n:
            raise ScenarioError("channel", f"channel describes {self.channel.n_users} users, game has {n}")
        if self.horizon < 1:
            raise ScenarioError("horizon", "must be >= 1")
        if [c.t for c in self.demand_changes] != sorted(c.t for c in self.demand_changes):
            raise ScenarioError("demand_changes", "events must be sorted by t")
        for k, c in enumerate(self.demand_changes):
            if not 0 <= c.user < n:
                raise ScenarioError(f"demand_changes[{k}].user", "user index out of range")
            if c.demand <= 0 or c.t < 0:
                raise ScenarioError(f"demand_changes[{k}]", "t must be >= 0 and demand > 0")
        if self.algorithm is LearnerKind.BUSH_MOSTELLER:
            levels = self.discrete_levels
            if not levels or len(levels) != n or len({len(r) for r in levels}) != 1:
                raise ScenarioError("discrete_levels", "one equal-length level list per user is required")
            if any(not 0 <= v <= pm for row, pm in zip(levels, self.game.p_max) for v in row):
                raise ScenarioError("discrete_levels", "levels must lie in [0, p_max]")


@dataclass
class SimulationTrace:
    powers: np.ndarray
    gains: np.ndarray
    throughput: np.ndarray
    demands: np.ndarray
    rho: float
    final_state: LearnerState
    stopped_early: bool = False

    @property
    def n_steps(self) -> int:
        return self.powers.shape[0]

    @property
    def n_users(self) -> int:
        return self.powers.shape[1]

    @property
    def satisfied(self) -> np.ndarray:
        return self.throughput >= self.demands

    @property
    def converged(self) -> bool:
        if self.n_steps < 2:
            return False
        return bool(np.max(np.abs(self.powers[-1] - self.powers[-2])) < self.rho)

    @property
    def t_converge(self) -> Optional[int]:
        return self.n_steps - 1 if self.converged else None

    @property
    def final_powers(self) -> np.ndarray:
        return self.powers[-1]

    @property
    def final_throughput(self) -> np.ndarray:
        return self.throughput[-1]

    @property
    def final_demands(self) -> np.ndarray:
        return self.demands[-1]

    @property
    def all_satisfied(self) -> bool:
        """Every user meets its demand at the last step, up to ``rho``."""
        return bool(np.all(self.final_throughput >= self.final_demands - self.rho))

    def rows(self):
        for t in range(self.n_steps):
            for i in range(self.n_users):
                yield (t, i, self.powers[t, i], self.gains[t, i], self.throughput[t, i],
                       self.demands[t, i], bool(self.satisfied[t, i]))

    def summary(self) -> dict:
        return {
            "steps": self.n_steps,
            "converged": self.converged,
            "t_converge": self.t_converge,
            "all_satisfied": self.all_satisfied,
            "final_sum_power": float(self.final_powers.sum()),
            "final_powers": self.final_powers.tolist(),
            "final_throughput": self.final_throughput.tolist(),
            "final_demands": self.final_demands.tolist(),
        }


def _bm_settled(state: LearnerState) -> bool:
    return bool(np.all(state.arm_probs.max(axis=1) >= 1.0 - state.params.rho))


def run(scenario: Scenario, observer: Callable[[int, LearnerState], None] | None = None) -> SimulationTrace:
    """Play the scenario's learner for at most ``horizon`` iterations.

    At each ``t``: due demand changes apply, Bush-Mosteller users draw their
    arms, every user observes its throughput under ``gains_at(t)``, the row is
    recorded, then the learner steps. Runs on a stationary channel stop once
    two consecutive power profiles are within ``rho`` (Bush-Mosteller also
    needs settled rows; progressive runs also need frozen demands). Fading
    runs always use the full horizon. ``observer`` sees every post-step state.
    """
    cfg = scenario.game
    kind = scenario.algorithm
    params = scenario.params
    state = init_state(kind, cfg, scenario.initial_powers, params, scenario.discrete_levels)
    n, horizon = cfg.n_users, scenario.horizon
    rec_p = np.empty((horizon, n))
    rec_g = np.empty((horizon, n))
    rec_r = np.empty((horizon, n))
    rec_d = np.empty((horizon, n))
    events = list(scenario.demand_changes)
    stationary = scenario.channel.kind is ChannelKind.STATIONARY
    stopped = False
    steps = 0

    for t in range(horizon):
        if events and events[0].t <= t:
            demands = state.demands.copy()
            while events and events[0].t <= t:
                ev = events.pop(0)
                demands[ev.user] = ev.demand
            state = replace(state, demands=demands)
        arms = None
        if kind is LearnerKind.BUSH_MOSTELLER:
            arms = bm_sample_all(state, scenario.seed, t)
            state = replace(state, powers=state.power_levels[np.arange(n), arms])

        g = gains_at(scenario.channel, t)
        r = rate_vector(state.powers, g, cfg.noise)
        rec_p[t], rec_g[t], rec_r[t], rec_d[t] = state.powers, g, r, state.demands
        steps = t + 1

        if (
            t > 0
            and stationary
            and not events
            and np.array_equal(rec_d[t], rec_d[t - 1])
            and _should_stop(state, rec_p[t - 1], r, cfg.capacity)
        ):
            stopped = True
            break

        if kind is LearnerKind.BANACH_PICARD:
            state = bp_step(state, r)
        elif kind is LearnerKind.PROGRESSIVE_BP:
            state = bp_progressive_step(state, r, cfg.capacity)
        elif kind is LearnerKind.BUSH_MOSTELLER:
            state = bm_step(state, arms, r)
        else:
            state = mann_step(state, r)
        if observer is not None:
            observer(t, state)

    return SimulationTrace(
        rec_p[:steps].copy(), rec_g[:steps].copy(), rec_r[:steps].copy(), rec_d[:steps].copy(),
        params.rho, state, stopped,
    )


def _should_stop(state: LearnerState, prev_powers, r, capacity) -> bool:
    if np.max(np.abs(state.powers - prev_powers)) >= state.params.rho:
        return False
    if state.kind is LearnerKind.BUSH_MOSTELLER:
        return _bm_settled(state)
    if state.kind is LearnerKind.PROGRESSIVE_BP:
        p = state.params
        room = state.demands.sum() + p.epsilon <= capacity
        return not (room and np.any(np.abs(r - state.demands) <= p.rho))
    return True


# ---------------------------------------------------------------- trace I/O

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_to_csv(trace: SimulationTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t, i, p, g, r, d, ok in trace.rows():
        w.writerow((t, i, _fmt(p), _fmt(g), _fmt(r), _fmt(d), int(ok)))
    return buf.getvalue()


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace(trace: SimulationTrace, path) -> None:
    _atomic_write(path, trace_to_csv(trace))


# ------------------------------------------------------------- scenario I/O

_TOP_KEYS = {"schema_version", "name", "game", "channel", "algorithm", "initial_powers",
             "discrete_levels", "demand_changes", "horizon", "seed"}
_GAME_KEYS = {"gains", "noise", "demands", "p_max", "capacity"}
_CHANNEL_KEYS = {"kind", "block_len", "mean", "seed", "h_max"}
_ALGO_KEYS = {"kind", "params"}
_PARAM_KEYS = {"epsilon", "zeta", "lam", "mu", "rho", "r_floor", "bm_signal"}
_EVENT_KEYS = {"t", "user", "demand"}


def scenario_to_dict(s: Scenario) -> dict:
    p = s.params
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "game": {
            "gains": list(s.game.gains),
            "noise": s.game.noise,
            "demands": list(s.game.demands),
            "p_max": list(s.game.p_max),
            "capacity": s.game.capacity,
        },
        "channel": {
            "kind": s.channel.kind.value,
            "block_len": s.channel.block_len,
            "mean": s.channel.mean,
            "seed": s.channel.seed,
            "h_max": s.channel.h_max,
        },
        "algorithm": {
            "kind": s.algorithm.value,
            "params": {
                "epsilon": p.epsilon, "zeta": p.zeta, "lam": p.lam, "mu": p.mu,
                "rho": p.rho, "r_floor": p.r_floor, "bm_signal": p.bm_signal.value,
            },
        },
        "initial_powers": list(s.initial_powers),
        "discrete_levels": None if s.discrete_levels is None else [list(r) for r in s.discrete_levels],
        "demand_changes": [{"t": c.t, "user": c.user, "demand": c.demand} for c in s.demand_changes],
        "horizon": s.horizon,
        "seed": s.seed,
    }


def _section(obj, name: str, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(name, "expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{name}.{unknown[0]}" if name else unknown[0], "unknown key")
    missing = sorted(required - set(obj))
    if missing:
        raise ScenarioError(f"{name}.{missing[0]}" if name else missing[0], "missing required key")
    return obj


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(name, "expected an integer")
    return value


def scenario_from_dict(d: dict) -> Scenario:
    _section(d, "", _TOP_KEYS, {"schema_version", "game", "channel", "algorithm", "initial_powers", "horizon"})
    if d["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"unsupported version {d['schema_version']!r}")
    g = _section(d["game"], "game", _GAME_KEYS, _GAME_KEYS)
    try:
        game = GameConfig(g["gains"], g["noise"], g["demands"], g["p_max"], g["capacity"])
    except ConfigError as e:
        raise ScenarioError(f"game.{e.field}", str(e).split(": ", 1)[1]) from None
    except TypeError:
        raise ScenarioError("game", "numeric values expected") from None

    c = _section(d["channel"], "channel", _CHANNEL_KEYS, {"kind"})
    try:
        kind = ChannelKind(c["kind"])
    except ValueError:
        raise ScenarioError("channel.kind", f"unknown channel kind {c['kind']!r}") from None
    try:
        channel = ChannelModel(
            kind, game.gains,
            block_len=_int(c.get("block_len", 1), "channel.block_len"),
            mean=float(c.get("mean", 1.0)),
            seed=_int(c.get("seed", 0), "channel.seed"),
            h_max=float(c.get("h_max", 1e6)),
        )
    except ValueError as e:
        raise ScenarioError("channel", str(e)) from None

    a = _section(d["algorithm"], "algorithm", _ALGO_KEYS, {"kind"})
    try:
        algo = LearnerKind(a["kind"])
    except ValueError:
        raise ScenarioError("algorithm.kind", f"unknown learner {a['kind']!r}") from None
    raw_params = _section(a.get("params", {}), "algorithm.params", _PARAM_KEYS)
    try:
        params = LearnerParams(**raw_params)
    except (TypeError, ValueError) as e:
        raise ScenarioError("algorithm.params", str(e)) from None

    events = []
    for k, ev in enumerate(d.get("demand_changes") or []):
        ev = _section(ev, f"demand_changes[{k}]", _EVENT_KEYS, _EVENT_KEYS)
        events.append(DemandChange(_int(ev["t"], f"demand_changes[{k}].t"),
                                   _int(ev["user"], f"demand_changes[{k}].user"), float(ev["demand"])))
    return Scenario(
        game=game,
        channel=channel,
        algorithm=algo,
        initial_powers=tuple(d["initial_powers"]),
        horizon=_int(d["horizon"], "horizon"),
        params=params,
        seed=_int(d.get("seed", 0), "seed"),
        discrete_levels=d.get("discrete_levels"),
        demand_changes=tuple(events),
        name=str(d.get("name", "")),
    )


def read_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError("<file>", f"cannot read {path}: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError("<json>", f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return scenario_from_dict(data)


def write_scenario(s: Scenario, path) -> None:
    _atomic_write(path, json.dumps(scenario_to_dict(s), indent=2) + "\n")


def with_overrides(s: Scenario, *, seed=None, horizon=None, rho=None) -> Scenario:
    """Copy of ``s`` with CLI-level overrides. ``seed`` reseeds the channel too."""
    out = s
    if seed is not None:
        out = replace(out, seed=seed, channel=replace(out.channel, seed=seed))
    if horizon is not None:
        out = replace(out, horizon=horizon)
    if rho is not None:
        out = replace(out, params=replace(out.params, rho=rho))
    return out
