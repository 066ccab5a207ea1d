"""Efficient satisfaction equilibrium (ESE) under a stationary channel.

With every constraint tight, ``r_i(P) = theta_i`` is linear in the powers::

    h_i P_i - (2**theta_i - 1) * sum_{j != i} h_j P_j = (2**theta_i - 1) * eta

:func:`solve_ese` solves that system by Gaussian elimination and is the
reference path. :func:`closed_form_ese` evaluates the explicit solution and
exists to cross-check it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from satpower.game import GameConfig, is_satisfied, rate_vector

SINGULAR_RTOL = 1e-12
RESIDUAL_RTOL = 1e-9
ORDER_SLACK = 1e-12


class EseError(Exception):
    """Base class for 'no ESE available' outcomes."""


class SingularSystem(EseError):
    def __init__(self, det: float):
        super().__init__(f"singular system (det={det:.3e})")
        self.det = det


class OutOfBounds(EseError):
    def __init__(self, user: int, power: float, p_max: float):
        super().__init__(
            f"no ESE inside the strategy space: user {user} needs power {power:.6g} "
            f"outside [0, {p_max:.6g}]"
        )
        self.user = user
        self.power = power


class ResidualTooLarge(EseError):
    def __init__(self, residual: float):
        super().__init__(f"ESE verification failed: max |r_i - theta_i| = {residual:.3e}")
        self.residual = residual


class Method(str, enum.Enum):
    LINEAR_SOLVE = "linear_solve"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class EseSolution:
    powers: np.ndarray
    determinant: float
    method: Method


def build_system(cfg: GameConfig) -> tuple[np.ndarray, np.ndarray]:
    h = np.asarray(cfg.gains)
    excess = np.exp2(np.asarray(cfg.demands)) - 1.0  # target SINR per user
    a = -excess[:, None] * h[None, :]
    np.fill_diagonal(a, h)
    b = excess * cfg.noise
    return a, b


def gauss_solve(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve ``a x = b`` by elimination with partial pivoting.

    Returns ``(x, det)``. ``x`` is all-NaN when a zero pivot is met; the
    determinant is exact-zero in that case.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = len(b)
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            return np.full(n, np.nan), 0.0
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
            det = -det
        det *= a[k, k]
        for i in range(k + 1, n):
            lam = a[i, k] / a[k, k]
            if lam != 0.0:
                a[i, k:] -= lam * a[k, k:]
                b[i] -= lam * b[k]
    x = np.empty(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x, det


def determinant_formula(cfg: GameConfig) -> float:
    """Determinant of the tight-constraint system in product form.

    sum_{i<N} h_i (1 - 2**theta_i) prod_{j != i} 2**theta_j h_j + h_N prod_{j<N} 2**theta_j h_j
    """
    h = np.asarray(cfg.gains)
    g = np.exp2(np.asarray(cfg.demands)) * h
    n = cfg.n_users
    total = h[-1] * np.prod(g[:-1])
    for i in range(n - 1):
        total += h[i] * (1.0 - 2.0 ** cfg.demands[i]) * np.prod(np.delete(g, i))
    return float(total)


def _singular_scale(a: np.ndarray) -> float:
    return float(np.prod(np.maximum(np.abs(np.diag(a)), 1.0)))


def _check_bounds(cfg: GameConfig, powers: np.ndarray) -> None:
    for i, (p, pm) in enumerate(zip(powers, cfg.p_max)):
        if not 0.0 <= p <= pm:
            raise OutOfBounds(i, float(p), pm)


def ese_residual(cfg: GameConfig, powers) -> np.ndarray:
    return rate_vector(powers, cfg.gains, cfg.noise) - np.asarray(cfg.demands)


def solve_ese(cfg: GameConfig) -> EseSolution:
    a, b = build_system(cfg)
    powers, det = gauss_solve(a, b)
    if abs(det) < SINGULAR_RTOL * _singular_scale(a):
        raise SingularSystem(det)
    _check_bounds(cfg, powers)
    res = ese_residual(cfg, powers)
    if np.any(np.abs(res) > RESIDUAL_RTOL * np.maximum(np.asarray(cfg.demands), 1.0)):
        raise ResidualTooLarge(float(np.max(np.abs(res))))
    return EseSolution(powers, det, Method.LINEAR_SOLVE)


def closed_form_ese(cfg: GameConfig) -> EseSolution:
    """Explicit ESE, anchored on the last user.

    The other users follow from the pairwise ratios
    ``2**t_i h_i P_i / (1 - 2**t_i) = 2**t_N h_N P_N / (1 - 2**t_N)``;
    substituting them into user N's row gives ``P_N``.
    """
    a, _ = build_system(cfg)
    det = determinant_formula(cfg)
    if abs(det) < SINGULAR_RTOL * _singular_scale(a):
        raise SingularSystem(det)
    h = np.asarray(cfg.gains)
    two_t = np.exp2(np.asarray(cfg.demands))
    hn, tn = h[-1], two_t[-1]
    denom = hn + np.sum(tn * hn * (1.0 - two_t[:-1]) / two_t[:-1])
    p_last = cfg.noise * (tn - 1.0) / denom
    ratio = (1.0 - two_t[:-1]) / (two_t[:-1] * h[:-1]) * (tn * hn) / (1.0 - tn)
    powers = np.append(ratio * p_last, p_last)
    _check_bounds(cfg, powers)
    return EseSolution(powers, det, Method.CLOSED_FORM)


def check_order_property(cfg: GameConfig, sol: EseSolution) -> bool:
    """Received powers follow demands: theta_i <= theta_j implies P_i h_i <= P_j h_j."""
    rx = np.asarray(sol.powers) * np.asarray(cfg.gains)
    theta = cfg.demands
    n = cfg.n_users
    return all(
        rx[i] <= rx[j] + ORDER_SLACK
        for i in range(n)
        for j in range(n)
        if i != j and theta[i] <= theta[j]
    )


def check_pareto(cfg: GameConfig, sol: EseSolution, delta: float = 0.01) -> bool:
    """True if any unilateral power increase by ``(1 + delta)`` leaves some opponent unsatisfied."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = cfg.n_users
    if n == 1:
        return True
    base = np.asarray(sol.powers, dtype=float)
    for i in range(n):
        p = base.copy()
        p[i] *= 1.0 + delta
        ok = is_satisfied(cfg, p, cfg.gains)
        if np.all(np.delete(ok, i)):
            return False
    return True


def sample_se_region(cfg: GameConfig, n_samples: int, seed: int) -> list[np.ndarray]:
    """Uniform rejection samples of the SE set inside the power box.

    Draws ``n_samples`` candidates and keeps those meeting every demand.
    """
    rng = np.random.default_rng(seed)
    cand = rng.random((n_samples, cfg.n_users)) * np.asarray(cfg.p_max)
    keep = np.all(rate_vector(cand, cfg.gains, cfg.noise) >= np.asarray(cfg.demands), axis=1)
    return list(cand[keep])
