"""Exact brute-force solver and an independent schedule validator.

For a fixed relay set ``S`` the relay power scalar never needs to be searched
over a continuum. Lemma: every member of ``S`` must afford ``lambda2``, which
caps it at ``min_{k in S} sqrt(psi_k)``; below the cap the smallest feasible
``lambda1 = sqrt(sigma^2 lambda2^2 / (gamma lambda2^2 - sigma^2))`` only grows
(it is decreasing in ``lambda2``), which can only shrink the direct set and
raise the relay load. So the cap itself is optimal for ``S``, and enumerating
subsets is exhaustive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .energy import ALLOWANCE_RULES, EnergyLedger
from .scheduler import Schedule
from .topology import Device, SystemParams

MAX_EXACT_DEVICES = 12
VERIFY_RTOL = 1e-9


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    best_count: int
    best_schedule: Schedule
    candidates_examined: int


def _allow(devices, ledger, round, params, rule):
    fn = ALLOWANCE_RULES[rule]
    return [fn(dev, ledger, round, params) for dev in devices]


def solve_exact(devices: Sequence[Device], ledger: EnergyLedger, round: int, params: SystemParams,
                rule: str = "dynamic", max_devices: int = MAX_EXACT_DEVICES) -> OracleResult:
    """Maximise the scheduled count by enumerating every relay subset."""
    n = len(devices)
    if n > max_devices:
        raise InstanceTooLargeError(f"{n} devices exceeds the enumeration guard of {max_devices}")
    alpha, s2, gamma = params.path_loss_exp, params.noise_var, params.mse_cap
    nu_lb = params.compute_energy
    allow = _allow(devices, ledger, round, params, rule)
    eligible = [k for k in range(n) if allow[k] - nu_lb > 0]
    psi = {}
    for k in eligible:
        dev = devices[k]
        psi[k] = (allow[k] - nu_lb) * dev.j_mag2 / dev.r ** alpha

    def direct_members(lambda1, relay):
        out = []
        for k in eligible:
            if k in relay or devices[k].h_mag2 == 0:
                continue
            if nu_lb + lambda1 ** 2 * devices[k].d ** alpha / devices[k].h_mag2 <= allow[k]:
                out.append(k)
        return out

    floor = math.sqrt(s2 / gamma)
    best_direct = direct_members(floor, ())
    best = (len(best_direct), floor, None, (), best_direct)
    examined = 1
    for size in range(1, len(eligible) + 1):
        for subset in itertools.combinations(eligible, size):
            examined += 1
            lambda2 = min(math.sqrt(psi[k]) for k in subset)
            if not lambda2 > floor:
                continue
            lambda1 = math.sqrt(s2 * lambda2 ** 2 / (gamma * lambda2 ** 2 - s2))
            if params.fn_mag2 == 0:
                continue
            e_relay = (size * lambda1 ** 2 + lambda1 ** 2 * s2 / lambda2 ** 2) / params.fn_mag2
            if e_relay > params.relay_budget:
                continue
            direct = direct_members(lambda1, subset)
            if size + len(direct) > best[0]:
                best = (size + len(direct), lambda1, lambda2, subset, direct)

    count, lambda1, lambda2, relay, direct = best
    flags = np.zeros(n, dtype=int)
    flags[list(relay)] = 1
    slack = np.full(n, np.inf)
    for k in range(n):
        if k in relay or k in direct:
            slack[k] = 0.0
        elif devices[k].h_mag2 > 0:
            short = nu_lb + lambda1 ** 2 * devices[k].d ** alpha / devices[k].h_mag2 - allow[k]
            if short > 0:
                slack[k] = short
    amplify = lambda1 / (lambda2 * math.sqrt(params.fn_mag2)) if relay else None
    schedule = Schedule(frozenset(direct), frozenset(relay), lambda1, lambda2, amplify, flags, slack)
    return OracleResult(best_count=count, best_schedule=schedule, candidates_examined=examined)


def schedule_violations(schedule: Schedule, devices: Sequence[Device], ledger: EnergyLedger, round: int,
                        params: SystemParams, rule: str = "dynamic") -> list[str]:
    """Every broken schedule invariant, as readable messages. Empty means valid."""
    problems = []
    n = len(devices)
    tol = 1 + VERIFY_RTOL
    direct, relay = set(schedule.direct_set), set(schedule.relay_set)
    if direct & relay:
        problems.append(f"devices in both modes: {sorted(direct & relay)}")
    unknown = (direct | relay) - set(range(n))
    if unknown:
        return problems + [f"unknown device ids {sorted(unknown)}"]

    allow = _allow(devices, ledger, round, params, rule)
    nu_lb = params.compute_energy
    a = params.path_loss_exp
    l1 = schedule.lambda1
    l2 = schedule.lambda2
    if not (l1 > 0 and math.isfinite(l1)):
        problems.append(f"lambda1={l1!r} not a positive finite scalar")
        return problems
    if relay and not (l2 is not None and l2 > 0 and math.isfinite(l2)):
        problems.append(f"lambda2={l2!r} invalid with a nonempty relay set")
        return problems

    for k in direct:
        dev = devices[k]
        cost = math.inf if dev.h_mag2 == 0 else nu_lb + l1 * l1 * dev.d ** a / dev.h_mag2
        if allow[k] - nu_lb <= 0 or cost > allow[k] * tol:
            problems.append(f"direct device {k}: energy {cost:.6g} exceeds allowance {allow[k]:.6g}")
    for k in relay:
        dev = devices[k]
        cost = math.inf if dev.j_mag2 == 0 else nu_lb + l2 * l2 * dev.r ** a / dev.j_mag2
        if allow[k] - nu_lb <= 0 or cost > allow[k] * tol:
            problems.append(f"relay device {k}: energy {cost:.6g} exceeds allowance {allow[k]:.6g}")

    if direct or relay:
        mse = params.noise_var / (l1 * l1)
        if relay:
            mse += params.noise_var / (l2 * l2)
        if mse > params.mse_cap * tol:
            problems.append(f"MSE {mse:.6g} exceeds cap {params.mse_cap:.6g}")
    if relay:
        if params.fn_mag2 == 0:
            problems.append("relay set nonempty on a dead relay link")
        else:
            e = (len(relay) * l1 * l1 + (l1 * l1) / (l2 * l2) * params.noise_var) / params.fn_mag2
            if e > params.relay_budget * tol:
                problems.append(f"relay energy {e:.6g} exceeds budget {params.relay_budget:.6g}")
            b = l1 / (l2 * math.sqrt(params.fn_mag2))
            if schedule.amplify is None or not math.isclose(schedule.amplify, b, rel_tol=1e-9):
                problems.append(f"amplify {schedule.amplify!r} != lambda1/(lambda2 f_n) = {b:.6g}")

    flags = np.asarray(schedule.mode_flags)
    slack = np.asarray(schedule.slack)
    if flags.shape != (n,) or slack.shape != (n,):
        problems.append("mode_flags/slack must have one entry per device")
        return problems
    for k in range(n):
        if flags[k] != (1 if k in relay else 0):
            problems.append(f"mode flag of device {k} is {flags[k]}")
        scheduled = k in direct or k in relay
        if scheduled and slack[k] != 0:
            problems.append(f"scheduled device {k} has nonzero slack {slack[k]}")
        if not scheduled and not slack[k] > 0:
            problems.append(f"unscheduled device {k} has slack {slack[k]}")
    return problems


def verify_schedule(schedule: Schedule, devices: Sequence[Device], ledger: EnergyLedger, round: int,
                    params: SystemParams, rule: str = "dynamic") -> bool:
    """Recheck every constraint of the round's problem from scratch."""
    return not schedule_violations(schedule, devices, ledger, round, params, rule)
