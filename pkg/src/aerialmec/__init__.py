"""Deterministic planner/simulator for a two-layer UAV + HAP edge network.

Pipeline: weighted K-means UAV deployment, a distributionally robust
CVaR reformulation of the task-latency chance constraint, analytic
per-task frequency allocation, and a binary whale search over HAP
forwarding decisions, with Monte Carlo robustness certification.
"""

from .allocation import Allocation, solve_allocation, verify_allocation_optimality
from .deployment import Deployment, WkdConfig, task_weight, wkd_deploy
from .drcc import (AffineLossCoeffs, RiskConfig, cvar_socp_oracle,
                   min_feasible_frequency, taylor_loss_coeffs, worst_case_cvar)
from .evaluation import (ErrorDistribution, SweepTemplate, compare_methods,
                         monte_carlo_robustness, robust_vs_ideal, sweep)
from .linkmodel import (CostLedger, cost_ledger, gu_uav_distance,
                        mean_uplink_gain, platform_energies, u2h_rate,
                        uav_hap_distance, uplink_rate)
from .offload_search import (BwoaParams, SaSchedule, bwoa_solve,
                             exhaustive_solve, fitness, greedy_solve, sa_solve,
                             transfer_probability)
from .orchestrator import SolveParams, SolveReport, served_count, solve
from .scenario import (GenConfig, Scenario, generate_scenario, load_scenario,
                       save_scenario, validate_scenario)

__version__ = "0.1.0"
