"""Traffic, checking, statistics and the experiment runner."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiment import ExperimentResult, run_experiment, run_packets, simulate
from .golden import PacketRecord, Verdict, golden_check
from .rng import XorShift64Star, splitmix64
from .stats import EmptyWindow, Stats, compute_stats, percentile
from .traffic import PATTERNS, Packet, TrafficSpec, generate_injections, permutation

__all__ = [
    "ConfigError", "EmptyWindow", "ExperimentConfig", "ExperimentResult", "PATTERNS", "Packet",
    "PacketRecord", "Stats", "TrafficSpec", "Verdict", "XorShift64Star", "compute_stats",
    "generate_injections", "golden_check", "load_config", "parse_config", "percentile",
    "permutation", "run_experiment", "run_packets", "simulate", "splitmix64",
]
