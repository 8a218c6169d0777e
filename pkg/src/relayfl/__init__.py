"""Device scheduling for relay-assisted over-the-air federated aggregation."""

from .energy import (EnergyLedger, OverBudgetError, charge_round, relay_energy, round_allowance,
                     tx_energy_direct, tx_energy_relay)
from .oracle import OracleResult, solve_exact, verify_schedule
from .scheduler import (SCHEMES, PriorityTable, Schedule, lambda1_star, priorities, relay_feasible,
                        schedule_all_relay, schedule_greedy, schedule_ideal_relay, schedule_no_relay)
from .topology import Device, Point2D, SystemParams, db_to_linear, draw_channels, place_devices

__version__ = "0.1.0"

__all__ = [
    "SCHEMES", "Device", "EnergyLedger", "OracleResult", "OverBudgetError", "Point2D", "PriorityTable",
    "Schedule", "SystemParams", "charge_round", "db_to_linear", "draw_channels", "lambda1_star",
    "place_devices", "priorities", "relay_energy", "relay_feasible", "round_allowance",
    "schedule_all_relay", "schedule_greedy", "schedule_ideal_relay", "schedule_no_relay",
    "solve_exact", "tx_energy_direct", "tx_energy_relay", "verify_schedule",
]
