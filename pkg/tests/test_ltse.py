import numpy as np
import pytest

from satpower.channels import ChannelModel
from satpower.ese import solve_ese
from satpower.game import GameConfig, is_satisfied
from satpower.ltse import (
    Infeasible,
    NoConvergence,
    chebyshev_bound,
    check_rse,
    empirical_satisfaction_rate,
    rate_moments,
    rate_samples,
    rse_grid,
    satisfaction_report,
    solve_efficient_ltse,
)

from conftest import EXP1_MEAN_RATE


def one_user(theta=EXP1_MEAN_RATE):
    return GameConfig((1.0,), 1.0, (theta,), (10.0,), 10.0)


def test_rse_near_zero_gain_fails(three_user_cfg):
    p = solve_ese(three_user_cfg).powers
    assert not check_rse(three_user_cfg, p, [[1e-9, 1.0, 1.0]])


def test_rse_single_point_at_ese(three_user_cfg):
    p = solve_ese(three_user_cfg).powers
    # the ESE is an equality boundary; nudge past float rounding
    assert check_rse(three_user_cfg, p * (1 + 1e-12), [three_user_cfg.gains])


def test_rse_stationary_equals_is_satisfied(three_user_cfg):
    for p in ([0.2, 0.3, 0.4], [0.1, 0.1, 0.1], [1.0, 2.0, 3.0]):
        assert check_rse(three_user_cfg, p, [three_user_cfg.gains]) == bool(is_satisfied(three_user_cfg, p, three_user_cfg.gains).all())


def test_rse_default_grid_infeasible(three_user_cfg):
    # the grid spans gains down to 1e-6 of h_max, where no bounded power satisfies
    assert not check_rse(three_user_cfg, [10.0, 10.0, 10.0], rse_grid(3))


def test_rse_grid_shapes():
    assert rse_grid(1, points=17).shape == (17, 1)
    assert rse_grid(3, points=5).shape == (125, 3)
    g = rse_grid(5, lhs_points=1000, seed=2)
    assert g.shape == (1000, 5)
    assert g.min() > 0 and g.max() <= 1e6
    np.testing.assert_array_equal(g, rse_grid(5, lhs_points=1000, seed=2))


def test_rse_empty_grid():
    with pytest.raises(ValueError):
        check_rse(one_user(), [1.0], np.empty((0, 1)))


def test_ltse_point_mass_is_ese(three_user_cfg):
    res = solve_efficient_ltse(three_user_cfg, ChannelModel.stationary(three_user_cfg.gains), n_samples=10)
    np.testing.assert_allclose(res.powers, solve_ese(three_user_cfg).powers, atol=1e-6)


def test_ltse_single_user_exponential():
    res = solve_efficient_ltse(one_user(), ChannelModel.fast_fading(1), n_samples=100_000, seed=0)
    assert res.powers[0] == pytest.approx(1.0, abs=0.02)
    assert res.expected_r[0] == pytest.approx(EXP1_MEAN_RATE, abs=1e-9)


def test_ltse_infeasible():
    cfg = GameConfig((1.0,) * 3, 1.0, (2.0, 2.0, 2.0), (10.0,) * 3, 3.0)
    with pytest.raises(Infeasible):
        solve_efficient_ltse(cfg, ChannelModel.fast_fading(3))


def test_ltse_no_convergence():
    cfg = GameConfig((1.0,), 1.0, (5.0,), (1.0,), 10.0)  # needs far more than p_max
    with pytest.raises(NoConvergence):
        solve_efficient_ltse(cfg, ChannelModel.fast_fading(1), n_samples=1000, max_iters=50)


def test_variance_identity():
    cfg = GameConfig((1.0, 1.0), 1.0, (0.2, 0.3), (10.0, 10.0), 10.0)
    ch = ChannelModel.fast_fading(2)
    r = rate_samples(cfg, [0.5, 0.8], ch, 50_000, 3)
    mean, var = rate_moments(cfg, [0.5, 0.8], ch, 50_000, 3)
    np.testing.assert_allclose(var, (r**2).mean(axis=0) - mean**2, rtol=1e-9)


def test_variance_increases_with_power():
    cfg = one_user()
    ch = ChannelModel.fast_fading(1)
    v = [rate_moments(cfg, [p], ch, 100_000, 1)[1][0] for p in (0.1, 0.3, 1.0, 3.0)]
    assert all(a < b for a, b in zip(v, v[1:]))


@pytest.mark.parametrize(
    "var,gap,expected", [(0.5, 1.0, 0.5), (2.0, 1.0, 1.0), (0.0, 0.7, 0.0), (0.5, -1.0, 0.5)]
)
def test_chebyshev_examples(var, gap, expected):
    assert chebyshev_bound(1.0 + gap, 1.0, var) == expected


def test_chebyshev_degenerate_gap():
    assert chebyshev_bound(1.0, 1.0, 0.3) == 1.0
    with pytest.raises(ValueError):
        chebyshev_bound(1.0, 0.0, -1.0)


def test_chebyshev_monotone_in_gap():
    bounds = [chebyshev_bound(g, 0.0, 0.2) for g in np.linspace(0.5, 5.0, 20)]
    assert all(a >= b for a, b in zip(bounds, bounds[1:]))


def test_empirical_rate_point_mass(three_user_cfg):
    ch = ChannelModel.stationary(three_user_cfg.gains)
    assert empirical_satisfaction_rate(three_user_cfg, [3.0, 0.1, 0.1], ch, 100, 0).tolist() == [1.0, 0.0, 0.0]
    assert empirical_satisfaction_rate(three_user_cfg, [0.0, 0.0, 0.0], ch, 100, 0).tolist() == [0.0] * 3


def test_empirical_rate_fading_interior():
    rate = empirical_satisfaction_rate(one_user(), [1.0], ChannelModel.fast_fading(1), 100_000, 7)[0]
    assert 0.0 < rate < 1.0


def test_report_bound_dominates_dissatisfaction_below_mean():
    # demand below the mean: P(r < theta) <= P(|r - mean| >= gap) <= bound
    cfg = one_user(0.5)
    rep = satisfaction_report(cfg, [1.0], ChannelModel.fast_fading(1), 100_000, 4)[0]
    assert rep.mean_r > cfg.demands[0]
    assert 1.0 - rep.empirical_rate <= rep.bound


def test_report_deterministic():
    ch = ChannelModel.fast_fading(1)
    assert satisfaction_report(one_user(), [1.0], ch, 10_000, 9) == satisfaction_report(one_user(), [1.0], ch, 10_000, 9)
