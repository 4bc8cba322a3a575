"""Relay selection policies and Monte-Carlo simulation for parallel hybrid RF/FSO relay networks."""

from .ba import BaDecision, BaWeights, ba_throughput, select_ba, select_ba_trace, selection_metrics, train_lambda
from .benchmarks import (BenchmarkKind, ba_best_fso, ba_independent, nonba_independent,
                         nonba_maxmin_fso)
from .channels import (CapacityMatrix, FadingRealization, FsoLinkParams, NetworkConfig, RfLinkParams,
                       capacities, capacity_trace, fso_avg_gain, fso_capacity, rf_avg_gain, rf_capacity,
                       sample_fading)
from .delay import QueueState, modified_metrics, run_delay_ba, step_queue
from .distributed import TimerEvent, run_distributed_ba, run_distributed_nonba
from .engine import RunMetrics, Scenario, mode_histogram, run_scenario
from .nonba import Mode, SelectionDecision, select_nonba, select_nonba_trace, tau_hyb, tau_ind, tau_mix

__version__ = "0.1.0"
