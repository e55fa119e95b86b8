"""Budget-feasible truthful mechanisms for scheduling crowdsensing time slots."""
from .greedy import GreedyResult, approx_mcs, greedy_value
from .model import Bid, Instance, Outcome, Q, Task, UserProfile, load_instance, truthful_bids, validate_instance
from .offline import Branch, BranchSelector, cal_payment, offline_mechanism
from .online import randomized_online, sampling_mechanism, secretary_mechanism
from .oracle import analyze, brute_force_opt, partition_instance, payment_integral_oracle, truthfulness_sweep

__all__ = [
    "Q", "Task", "UserProfile", "Bid", "Instance", "Outcome", "load_instance", "truthful_bids",
    "validate_instance", "GreedyResult", "approx_mcs", "greedy_value", "Branch", "BranchSelector",
    "cal_payment", "offline_mechanism", "randomized_online", "sampling_mechanism",
    "secretary_mechanism", "analyze", "brute_force_opt", "partition_instance",
    "payment_integral_oracle", "truthfulness_sweep",
]
