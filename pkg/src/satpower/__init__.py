"""Satisfaction-equilibrium power control for uplink wireless networks."""
from satpower.channels import ChannelKind, ChannelModel, gains_at, gains_window, sample_gains
from satpower.ese import (
    EseSolution,
    OutOfBounds,
    ResidualTooLarge,
    SingularSystem,
    build_system,
    check_order_property,
    check_pareto,
    closed_form_ese,
    sample_se_region,
    solve_ese,
)
from satpower.game import (
    GameConfig,
    expected_throughput,
    feasibility_check,
    is_satisfied,
    sinr,
    throughput,
    throughputs,
)
from satpower.harness import Scenario, SimulationTrace, read_scenario, run, write_scenario, write_trace
from satpower.learners import LearnerKind, LearnerParams, LearnerState, init_state

__version__ = "0.1.0"
