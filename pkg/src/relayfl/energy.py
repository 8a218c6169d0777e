"""Device and relay energy accounting.

Rounds are indexed ``t = 0 .. T-1`` so the per-round divisor ``T - t`` runs
from ``T`` down to 1 and never reaches zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .topology import Device, SystemParams

# relative slack for floating-point round-off at the exact budget boundary
BUDGET_RTOL = 1e-9


class OverBudgetError(RuntimeError):
    """A charge would push a device past its total budget."""


@dataclass
class EnergyLedger:
    spent: np.ndarray
    relay_spent_last_round: float = 0.0

    @classmethod
    def fresh(cls, num_devices: int) -> "EnergyLedger":
        return cls(spent=np.zeros(num_devices))

    def copy(self) -> "EnergyLedger":
        return EnergyLedger(self.spent.copy(), self.relay_spent_last_round)


def _check_round(round: int, params: SystemParams):
    if not 0 <= round < params.total_rounds:
        raise ValueError(f"round must be in [0, {params.total_rounds - 1}], got {round}")


def round_allowance(device: Device, ledger: EnergyLedger, round: int, params: SystemParams) -> float:
    """Energy device ``k`` may spend this round: ``(P_k - spent_k) / (T - t)``.

    Returns 0.0 for an exhausted budget.
    """
    _check_round(round, params)
    residual = device.total_budget - ledger.spent[device.id]
    if residual <= 0:
        return 0.0
    return residual / (params.total_rounds - round)


def fixed_allowance(device: Device, ledger: EnergyLedger, round: int, params: SystemParams) -> float:
    """Benchmark rule: a flat ``P_k / T`` per round, never more than what is left."""
    _check_round(round, params)
    residual = device.total_budget - ledger.spent[device.id]
    return max(0.0, min(device.total_budget / params.total_rounds, residual))


ALLOWANCE_RULES = {"dynamic": round_allowance, "fixed": fixed_allowance}


def allowances(devices: Sequence[Device], ledger: EnergyLedger, round: int, params: SystemParams,
               rule: str = "dynamic") -> np.ndarray:
    fn = ALLOWANCE_RULES[rule]
    return np.array([fn(dev, ledger, round, params) for dev in devices], dtype=float)


def tx_energy_direct(lambda1: float, device: Device, params: SystemParams) -> float:
    """Transmit energy for direct mode, ``lambda1^2 d^alpha / |h|^2`` (inf on a dead channel)."""
    if device.h_mag2 == 0:
        return math.inf
    return lambda1 ** 2 * (device.d ** params.path_loss_exp / device.h_mag2)


def tx_energy_relay(lambda2: float, device: Device, params: SystemParams) -> float:
    """Transmit energy for relay mode, ``lambda2^2 r^alpha / |j|^2`` (inf on a dead channel)."""
    if device.j_mag2 == 0:
        return math.inf
    return lambda2 ** 2 * (device.r ** params.path_loss_exp / device.j_mag2)


def relay_energy(lambda1: float, lambda2: float, relay_set_size: int, params: SystemParams) -> float:
    """Relay forwarding energy: amplified device signals plus amplified receiver noise."""
    if params.fn_mag2 == 0:
        return math.inf
    return (relay_set_size * lambda1 ** 2 + lambda1 ** 2 / lambda2 ** 2 * params.noise_var) / params.fn_mag2


def direct_costs(devices: Sequence[Device], params: SystemParams) -> np.ndarray:
    """Per-device ``d^alpha / |h|^2``; direct energy is ``lambda1^2`` times this."""
    d = np.array([dev.d for dev in devices], dtype=float)
    h = np.array([dev.h_mag2 for dev in devices], dtype=float)
    with np.errstate(divide="ignore"):
        return d ** params.path_loss_exp / h


def relay_costs(devices: Sequence[Device], params: SystemParams) -> np.ndarray:
    r = np.array([dev.r for dev in devices], dtype=float)
    j = np.array([dev.j_mag2 for dev in devices], dtype=float)
    with np.errstate(divide="ignore"):
        return r ** params.path_loss_exp / j


def charge_round(schedule, devices: Sequence[Device], ledger: EnergyLedger,
                 params: SystemParams) -> EnergyLedger:
    """Return a new ledger with this round's compute and transmit energy added.

    Unscheduled devices are charged nothing. Raises :class:`OverBudgetError`
    if a charge exceeds a device's total budget beyond round-off.
    """
    out = ledger.copy()
    by_id = {dev.id: dev for dev in devices}
    charges = [(k, tx_energy_direct(schedule.lambda1, by_id[k], params)) for k in schedule.direct_set]
    charges += [(k, tx_energy_relay(schedule.lambda2, by_id[k], params)) for k in schedule.relay_set]
    for k, tx in charges:
        new = out.spent[k] + params.compute_energy + tx
        cap = by_id[k].total_budget
        if new > cap * (1 + BUDGET_RTOL):
            raise OverBudgetError(f"device {k}: charge {tx:.6g} would bring spent to {new:.6g} > {cap:.6g}")
        out.spent[k] = min(new, cap)
    if schedule.relay_set:
        out.relay_spent_last_round = relay_energy(schedule.lambda1, schedule.lambda2,
                                                  len(schedule.relay_set), params)
    else:
        out.relay_spent_last_round = 0.0
    return out
