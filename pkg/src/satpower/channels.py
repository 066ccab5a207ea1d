"""Channel gain generators: stationary, block fading and i.i.d. fast fading.

Fading draws are exponential with a configurable mean, produced by inverse
CDF from a counter-based Philox stream keyed by ``(seed, user)`` with the
block (or iteration) index in the counter. ``gains_at`` is therefore a pure
function of ``(model, t)``: query order and earlier calls never matter.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

# Uniforms are produced in fixed chunks of one Philox stream per (seed, user, chunk).
_CHUNK = 4096
_GAIN_TAG = 0x6741
_RESAMPLE_TAG = 0x5253
_MC_TAG = 0x4D43

H_MIN = 1e-12
H_MAX = 1e6

_INV_2_53 = 1.0 / 9007199254740992.0


class ChannelKind(str, enum.Enum):
    STATIONARY = "stationary"
    BLOCK = "block"
    FAST = "fast"


@dataclass(frozen=True)
class ChannelModel:
    kind: ChannelKind
    nominal_gains: tuple[float, ...]
    block_len: int = 1
    mean: float = 1.0
    seed: int = 0
    h_max: float = field(default=H_MAX)

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        object.__setattr__(self, "nominal_gains", tuple(float(h) for h in self.nominal_gains))
        if not self.nominal_gains:
            raise ValueError("nominal_gains must not be empty")
        if any(not (0 < h <= self.h_max) for h in self.nominal_gains):
            raise ValueError("nominal gains must lie in (0, h_max]")
        if int(self.block_len) != self.block_len or self.block_len < 1:
            raise ValueError("block_len must be a positive integer")
        if not (math.isfinite(self.mean) and self.mean > 0):
            raise ValueError("mean must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "block_len", int(self.block_len))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_users(self) -> int:
        return len(self.nominal_gains)

    @property
    def is_fading(self) -> bool:
        return self.kind is not ChannelKind.STATIONARY

    @classmethod
    def stationary(cls, gains) -> "ChannelModel":
        return cls(ChannelKind.STATIONARY, tuple(gains))

    @classmethod
    def block_fading(cls, n_users: int, block_len: int, mean: float = 1.0, seed: int = 0):
        return cls(ChannelKind.BLOCK, (mean,) * n_users, block_len, mean, seed)

    @classmethod
    def fast_fading(cls, n_users: int, mean: float = 1.0, seed: int = 0):
        return cls(ChannelKind.FAST, (mean,) * n_users, 1, mean, seed)


def _key(seed: int, user: int) -> int:
    return (int(user) << 64) | int(seed)


def _raw_to_uniform(raw: np.ndarray) -> np.ndarray:
    return (raw >> np.uint64(11)).astype(float) * _INV_2_53


@lru_cache(maxsize=256)
def _uniform_chunk(seed: int, user: int, chunk: int, tag: int) -> np.ndarray:
    bg = np.random.Philox(key=_key(seed, user), counter=[0, chunk, tag, 0])
    out = _raw_to_uniform(bg.random_raw(_CHUNK))
    out.flags.writeable = False
    return out


def _uniforms(seed: int, user: int, idx: np.ndarray, tag: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty(idx.shape, dtype=float)
    chunks = idx // _CHUNK
    for c in np.unique(chunks):
        sel = chunks == c
        out[sel] = _uniform_chunk(seed, user, int(c), tag)[idx[sel] % _CHUNK]
    return out


def _exponential(u: np.ndarray, mean: float) -> np.ndarray:
    return -mean * np.log1p(-u)


def _redraw(seed: int, user: int, index: int, mean: float, h_max: float, tag: int) -> float:
    # rare path: keep advancing the counter until the draw lands in [H_MIN, h_max]
    retry = 1
    while True:
        bg = np.random.Philox(key=_key(seed, user), counter=[int(index), retry, tag ^ _RESAMPLE_TAG, 0])
        h = float(_exponential(_raw_to_uniform(bg.random_raw(1)), mean)[0])
        if H_MIN <= h <= h_max:
            return h
        retry += 1


def _draws(seed: int, user: int, idx: np.ndarray, mean: float, h_max: float, tag: int) -> np.ndarray:
    h = _exponential(_uniforms(seed, user, idx, tag), mean)
    bad = np.flatnonzero((h < H_MIN) | (h > h_max))
    for k in bad:
        h[k] = _redraw(seed, user, int(idx[k]), mean, h_max, tag)
    return h


def draw_index(model: ChannelModel, t) -> np.ndarray:
    """Map iteration indices to the index of the draw in force at that time."""
    t = np.asarray(t, dtype=np.int64)
    if np.any(t < 0):
        raise ValueError("iteration index must be >= 0")
    if model.kind is ChannelKind.BLOCK:
        return t // model.block_len
    return t


def gains_window(model: ChannelModel, t0: int, n: int) -> np.ndarray:
    """Gain vectors for iterations ``t0 .. t0 + n - 1`` as an ``(n, N)`` array."""
    if t0 < 0 or n < 0:
        raise ValueError("t0 and n must be non-negative")
    if model.kind is ChannelKind.STATIONARY:
        return np.tile(np.asarray(model.nominal_gains), (n, 1))
    idx = draw_index(model, np.arange(t0, t0 + n))
    cols = [_draws(model.seed, u, idx, model.mean, model.h_max, _GAIN_TAG) for u in range(model.n_users)]
    return np.stack(cols, axis=1) if n else np.empty((0, model.n_users))


def gains_at(model: ChannelModel, t: int) -> np.ndarray:
    return gains_window(model, int(t), 1)[0]


def sample_gains(model: ChannelModel, n_samples: int, seed: int) -> np.ndarray:
    """``n_samples`` i.i.d. gain vectors from the channel's marginal law, keyed by ``seed``.

    Independent of ``model.seed`` so Monte-Carlo estimates can use common
    random numbers across candidate power profiles.
    """
    if model.kind is ChannelKind.STATIONARY:
        return np.tile(np.asarray(model.nominal_gains), (n_samples, 1))
    idx = np.arange(n_samples)
    cols = [_draws(int(seed), u, idx, model.mean, model.h_max, _MC_TAG) for u in range(model.n_users)]
    return np.stack(cols, axis=1)
