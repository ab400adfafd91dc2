"""Household and aggregator value of rooftop PV with battery storage."""

__version__ = "0.1.0"

from .analytic import ToyParams, toy_brute, toy_cost_coordinated, toy_cost_separate, toy_vca
from .calendar import Calendar, HourlySeries, LoadTrace, build_calendar, slice_day
from .coordination import ScalingLaw, rank_households, vca_curve, vci_values
from .devices import DeviceSpec, make_device, net_zero_size, pv_generation
from .dispatch import DayProblem, run_year, solve_day
from .forecast import voi_household
from .metrics import bootstrap_ci, savings_table, spearman
from .tariffs import Policy, PriceSchedule, assemble_policy, build_rate_library

__all__ = [
    "Calendar", "DayProblem", "DeviceSpec", "HourlySeries", "LoadTrace", "Policy",
    "PriceSchedule", "ScalingLaw", "ToyParams", "assemble_policy", "bootstrap_ci",
    "build_calendar", "build_rate_library", "make_device", "net_zero_size",
    "pv_generation", "rank_households", "run_year", "savings_table", "slice_day",
    "solve_day", "spearman", "toy_brute", "toy_cost_coordinated", "toy_cost_separate",
    "toy_vca", "vca_curve", "vci_values", "voi_household",
]
