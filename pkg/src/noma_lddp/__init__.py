"""Joint power and subcarrier allocation for downlink NOMA.

Core pieces: a Lagrangian-dual solver with an exact two-stage DP
subproblem (near-optimal allocations plus guaranteed upper bounds), an
exact single-carrier sum-rate solver, FTPC baselines, brute-force oracles
for testing, and a proportional-fair multi-slot evaluation harness.
"""
from .baselines import ftpc_power, noma_ftpc, ofdma_ftpc
from .dp import solve_lr_d, stage1, stage2
from .instance import (
    ChannelModelConfig,
    InstanceFormatError,
    ProblemInstance,
    SicOrder,
    generate_instance,
    read_instance,
    sic_order,
    write_instance,
)
from .lddp import SolveReport, repair, solve, upper_bound
from .oracle import OracleSizeError, brute_force_continuous_sc, brute_force_discrete
from .rates import (
    PowerAllocation,
    PowerGrid,
    rate_continuous,
    rate_discrete,
    rate_overestimate,
    sr_utility,
    wsr_utility,
)
from .sc_noma import solve_sc_sr
from .scheduler import ScheduleConfig, SlotTrace, grouping_histogram, jain_index, run_schedule

__all__ = [
    "ChannelModelConfig",
    "InstanceFormatError",
    "OracleSizeError",
    "PowerAllocation",
    "PowerGrid",
    "ProblemInstance",
    "ScheduleConfig",
    "SicOrder",
    "SlotTrace",
    "SolveReport",
    "brute_force_continuous_sc",
    "brute_force_discrete",
    "ftpc_power",
    "generate_instance",
    "grouping_histogram",
    "jain_index",
    "noma_ftpc",
    "ofdma_ftpc",
    "rate_continuous",
    "rate_discrete",
    "rate_overestimate",
    "read_instance",
    "repair",
    "run_schedule",
    "sic_order",
    "solve",
    "solve_lr_d",
    "solve_sc_sr",
    "sr_utility",
    "stage1",
    "stage2",
    "upper_bound",
    "write_instance",
    "wsr_utility",
]

__version__ = "0.1.0"
