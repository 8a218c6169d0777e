"""Greedy device scheduling with closed-form power scalars, plus benchmark schemes.

The proposed scheme ranks devices by how much relay-path slack they have,
then tries each prefix of that ranking as the relay set. For a prefix of
size ``i`` the relay power scalar is pinned to the weakest member's bound,
``lambda2 = sqrt(psi_i)``, the direct power scalar takes the smallest value
the MSE cap allows, and every remaining device that can afford that scalar
transmits directly. The scan stops at the first prefix that violates either
the MSE floor or the relay power limit; neither can recover further down the
ranking. The best prefix (including the empty one) wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .energy import EnergyLedger, allowances, direct_costs, relay_costs
from .topology import Device, SystemParams


class MseInfeasibleError(ValueError):
    """lambda2 is at or below sqrt(sigma^2 / gamma); no lambda1 meets the MSE cap."""


@dataclass(frozen=True)
class Schedule:
    """One round's decision.

    ``mode_flags[k]`` is 1 exactly for relay devices. ``slack[k]`` is 0 for
    scheduled devices and otherwise the energy shortfall in the mode the scheme
    considered; ``inf`` marks a device the scheme excluded for a reason other
    than its own budget.
    """

    direct_set: frozenset
    relay_set: frozenset
    lambda1: float
    lambda2: Optional[float] = None
    amplify: Optional[float] = None
    mode_flags: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    slack: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def scheduled(self) -> frozenset:
        return self.direct_set | self.relay_set

    @property
    def scheduled_count(self) -> int:
        return len(self.direct_set) + len(self.relay_set)

    def mse(self, params: SystemParams) -> float:
        """Aggregation error power at the PS for this schedule."""
        err = params.noise_var / self.lambda1 ** 2
        if self.relay_set:
            err += params.noise_var / self.lambda2 ** 2
        return err

    def to_dict(self) -> dict:
        return {
            "direct_set": sorted(self.direct_set),
            "relay_set": sorted(self.relay_set),
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "amplify": self.amplify,
            "mode_flags": self.mode_flags.tolist(),
            "slack": [float(s) for s in self.slack],
        }


@dataclass(frozen=True)
class PriorityTable:
    psi: np.ndarray
    order: np.ndarray


def _check_ids(devices: Sequence[Device]):
    for pos, dev in enumerate(devices):
        if dev.id != pos:
            raise ValueError(f"device ids must equal list positions; got id {dev.id} at {pos}")


def priorities(devices: Sequence[Device], ledger: EnergyLedger, round: int, params: SystemParams,
               rule: str = "dynamic") -> PriorityTable:
    """Relay-mode priority ``psi_k = (allowance_k - nu L_b) |j_k|^2 / r_k^alpha``.

    Devices with no power left after local computation are left out of
    ``order``; ties are broken by ascending id.
    """
    _check_ids(devices)
    spare = allowances(devices, ledger, round, params, rule) - params.compute_energy
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = spare / relay_costs(devices, params)
    psi = np.where(spare > 0, np.nan_to_num(psi, nan=0.0), 0.0)
    ids = np.arange(len(devices))
    eligible = ids[spare > 0]
    order = eligible[np.lexsort((eligible, -psi[eligible]))]
    return PriorityTable(psi=psi, order=order)


def lambda1_star(lambda2: float, params: SystemParams) -> float:
    """Smallest direct power scalar meeting the MSE cap for a given ``lambda2``."""
    if not lambda2 > math.sqrt(params.lambda_floor2):
        raise MseInfeasibleError(f"lambda2={lambda2!r} does not exceed sqrt(sigma^2/gamma)")
    l2 = lambda2 ** 2
    return math.sqrt(params.noise_var * l2 / (params.mse_cap * l2 - params.noise_var))


def relay_feasible(lambda2: float, relay_set_size: int, params: SystemParams) -> bool:
    """Whether the relay can forward ``relay_set_size`` devices at ``lambda2`` with ``lambda1 = lambda1*``."""
    s2, l2 = params.noise_var, lambda2 ** 2
    rhs = s2 * (relay_set_size * l2 + s2) / (params.mse_cap * l2 - s2)
    return params.relay_budget * params.fn_mag2 >= rhs


def _empty(num_devices: int, params: SystemParams) -> Schedule:
    return Schedule(frozenset(), frozenset(), math.sqrt(params.lambda_floor2),
                    mode_flags=np.zeros(num_devices, dtype=int), slack=np.full(num_devices, np.inf))


def prefix_scan(devices: Sequence[Device], ledger: EnergyLedger, round: int, params: SystemParams, *,
                rule: str = "dynamic", allow_direct: bool = True, include_empty_prefix: bool = True) -> Schedule:
    """Shared engine of the greedy and the relay benchmarks.

    ``allow_direct=False`` keeps every device off the direct path;
    ``include_empty_prefix=False`` drops the no-relay candidate.
    """
    _check_ids(devices)
    n = len(devices)
    if n == 0:
        return _empty(0, params)
    allow = allowances(devices, ledger, round, params, rule)
    nu_lb = params.compute_energy
    eligible = allow - nu_lb > 0
    dcost = direct_costs(devices, params)
    table = priorities(devices, ledger, round, params, rule)
    floor = math.sqrt(params.lambda_floor2)

    def direct_ok(lambda1, relay_ids):
        ok = eligible & (nu_lb + lambda1 ** 2 * dcost <= allow)
        ok[relay_ids] = False
        return ok

    best = None  # (count, lambda1, lambda2, prefix_len, direct mask)
    if include_empty_prefix and allow_direct:
        mask = direct_ok(floor, table.order[:0])
        best = (int(mask.sum()), floor, None, 0, mask)

    for i in range(1, len(table.order) + 1):
        lambda2 = math.sqrt(table.psi[table.order[i - 1]])
        if not (lambda2 > floor and relay_feasible(lambda2, i, params)):
            break
        lambda1 = lambda1_star(lambda2, params)
        if allow_direct:
            mask = direct_ok(lambda1, table.order[:i])
        else:
            mask = np.zeros(n, dtype=bool)
        count = i + int(mask.sum())
        # strict: ties go to the smaller relay set
        if best is None or count > best[0]:
            best = (count, lambda1, lambda2, i, mask)

    if best is None:
        return _empty(n, params)
    _, lambda1, lambda2, size, mask = best
    relay_ids = table.order[:size]
    flags = np.zeros(n, dtype=int)
    flags[relay_ids] = 1

    # shortfall in the mode the scheme considered, inf when excluded by rule
    if allow_direct:
        shortfall = nu_lb + lambda1 ** 2 * dcost - allow
    elif lambda2 is not None:
        shortfall = nu_lb + lambda2 ** 2 * relay_costs(devices, params) - allow
    else:
        shortfall = np.full(n, np.inf)
    shortfall = np.nan_to_num(shortfall, nan=np.inf)
    slack = np.where(shortfall > 0, shortfall, np.inf)
    scheduled = mask.copy()
    scheduled[relay_ids] = True
    slack[scheduled] = 0.0

    amplify = None
    if size:
        amplify = lambda1 / (lambda2 * math.sqrt(params.fn_mag2))
    return Schedule(
        direct_set=frozenset(int(k) for k in np.flatnonzero(mask)),
        relay_set=frozenset(int(k) for k in relay_ids),
        lambda1=lambda1,
        lambda2=lambda2,
        amplify=amplify,
        mode_flags=flags,
        slack=slack,
    )


def schedule_greedy(devices, ledger, round, params, rule: str = "dynamic") -> Schedule:
    """Proposed scheme: best of the empty prefix and every feasible relay prefix."""
    return prefix_scan(devices, ledger, round, params, rule=rule)


def schedule_no_relay(devices, ledger, round, params, rule: str = "dynamic") -> Schedule:
    """Direct transmission only, with ``lambda1 = sqrt(sigma^2 / gamma)``."""
    _check_ids(devices)
    if not devices:
        return _empty(0, params)
    allow = allowances(devices, ledger, round, params, rule)
    nu_lb = params.compute_energy
    lambda1 = math.sqrt(params.lambda_floor2)
    shortfall = nu_lb + lambda1 ** 2 * direct_costs(devices, params) - allow
    mask = (allow - nu_lb > 0) & (shortfall <= 0)
    slack = np.where(mask, 0.0, np.where(shortfall > 0, shortfall, np.inf))
    return Schedule(
        direct_set=frozenset(int(k) for k in np.flatnonzero(mask)),
        relay_set=frozenset(),
        lambda1=lambda1,
        mode_flags=np.zeros(len(devices), dtype=int),
        slack=slack,
    )


def schedule_all_relay(devices, ledger, round, params, rule: str = "fixed") -> Schedule:
    """Benchmark where every scheduled device goes through the relay."""
    return prefix_scan(devices, ledger, round, params, rule=rule, allow_direct=False,
                       include_empty_prefix=False)


def schedule_ideal_relay(devices, ledger, round, params, rule: str = "fixed") -> Schedule:
    """All-relay benchmark with the relay-to-PS channel pinned to 1."""
    return schedule_all_relay(devices, ledger, round, replace(params, fn_mag2=1.0), rule=rule)


SchedulerFn = Callable[[Sequence[Device], EnergyLedger, int, SystemParams], Schedule]

SCHEMES: dict[str, SchedulerFn] = {
    "proposed": schedule_greedy,
    "no-relay": lambda devices, ledger, round, params: schedule_no_relay(devices, ledger, round, params,
                                                                         rule="fixed"),
    "all-relay": schedule_all_relay,
    "ideal-relay": schedule_ideal_relay,
}

ALLOWANCE_RULE = {"proposed": "dynamic", "no-relay": "fixed", "all-relay": "fixed", "ideal-relay": "fixed"}


def scheme_params(name: str, params: SystemParams) -> SystemParams:
    """Parameters the named scheme actually solves with."""
    return replace(params, fn_mag2=1.0) if name == "ideal-relay" else params
