"""Round-by-round experiment driver, oracle cross-check and CSV output.

Within a trial every scheme sees the same placement and the same channel
draws in every round; each scheme keeps its own energy ledger and, when
training is enabled, its own model.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import airfl
from .config import ExperimentConfig
from .energy import EnergyLedger, allowances, charge_round
from .oracle import solve_exact
from .scheduler import ALLOWANCE_RULE, SCHEMES, Schedule, schedule_greedy, scheme_params
from .topology import (Device, Point2D, SystemParams, draw_channels, draw_relay_gain, keyed_rng,
                       place_devices)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundRecord:
    """One scheme's outcome in one round. ``round`` is 1-based."""

    trial: int
    round: int
    scheme: str
    scheduled_count: int
    direct_count: int
    relay_count: int
    lambda1: float
    lambda2: Optional[float]
    relay_energy: float
    mse: Optional[float]
    fn_mag2: float
    channel_digest: str
    global_loss: Optional[float] = None
    budgets: Optional[tuple[float, ...]] = None


BASE_COLUMNS = [f.name for f in fields(RoundRecord) if f.name != "budgets"]


def trial_seed(config: ExperimentConfig, trial: int) -> list[int]:
    return [config.master_seed, trial]


def trial_shards(config: ExperimentConfig, trial: int):
    return airfl.make_shards(trial_seed(config, trial) + [0], config.system.num_devices,
                             config.fl.dim, config.fl.shard_size, config.fl.label_noise)


def _digest(devices: Sequence[Device], fn_draw: float) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(np.array([d.h_mag2 for d in devices]).tobytes())
    h.update(np.array([d.j_mag2 for d in devices]).tobytes())
    h.update(np.float64(fn_draw).tobytes())
    return h.hexdigest()


@dataclass
class _Step:
    round: int
    scheme: str
    devices: list
    ledger: EnergyLedger
    params: SystemParams
    schedule: Schedule
    record: RoundRecord


def simulate_trial(config: ExperimentConfig, trial: int) -> Iterator[_Step]:
    """Yield each (round, scheme) step of one trial in order."""
    params = config.system
    seed = trial_seed(config, trial)
    base = place_devices(seed, params)
    ledgers = {name: EnergyLedger.fresh(len(base)) for name in config.schemes}
    states = {}
    if config.fl_enabled:
        shards, _ = trial_shards(config, trial)
        states = {name: airfl.init_state(config.fl.dim, config.fl.learning_rate) for name in config.schemes}

    for t in range(params.total_rounds):
        devices = draw_channels(seed, t, base)
        fn = draw_relay_gain(seed, t, params.fn_mag2) if config.fn_redraw_per_round else params.fn_mag2
        digest = _digest(devices, fn)
        round_params = replace(params, fn_mag2=fn)
        for name in config.schemes:
            p = scheme_params(name, round_params)
            ledger = ledgers[name]
            sched = SCHEMES[name](devices, ledger, t, p)
            budgets = None
            if config.record_budgets:
                budgets = tuple(float(b) for b in allowances(devices, ledger, t, p, ALLOWANCE_RULE[name]))
            new_ledger = charge_round(sched, devices, ledger, p)
            loss = None
            if config.fl_enabled:
                states[name] = airfl.fl_round(states[name], sched, shards, seed + [1], p, noisy=config.fl.noisy)
                loss = airfl.global_loss(states[name], shards)
            record = RoundRecord(
                trial=trial,
                round=t + 1,
                scheme=name,
                scheduled_count=sched.scheduled_count,
                direct_count=len(sched.direct_set),
                relay_count=len(sched.relay_set),
                lambda1=sched.lambda1,
                lambda2=sched.lambda2,
                relay_energy=new_ledger.relay_spent_last_round,
                mse=sched.mse(p) if sched.scheduled_count else None,
                fn_mag2=p.fn_mag2,
                channel_digest=digest,
                global_loss=loss,
                budgets=budgets,
            )
            yield _Step(t, name, devices, ledger, p, sched, record)
            ledgers[name] = new_ledger


def run_experiment(config: ExperimentConfig) -> list[RoundRecord]:
    """All records ordered by (trial, round, scheme in config order)."""
    records = []
    for trial in range(config.trials):
        records.extend(step.record for step in simulate_trial(config, trial))
        log.info("trial %d/%d done", trial + 1, config.trials)
    return records


def schedule_at_round(config: ExperimentConfig, round: int, scheme: str = "proposed",
                      trial: int = 0) -> tuple[Schedule, RoundRecord]:
    """The schedule a scheme picks at 1-based ``round``, with the ledger history leading up to it."""
    if not 1 <= round <= config.system.total_rounds:
        raise ValueError(f"round must be in [1, {config.system.total_rounds}]")
    if scheme not in config.schemes:
        config = replace(config, schemes=(scheme,))
    for step in simulate_trial(config, trial):
        if step.round == round - 1 and step.scheme == scheme:
            return step.schedule, step.record
    raise AssertionError("unreachable")


# --- CSV -----------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records: Sequence[RoundRecord], path) -> None:
    """Write records with a header row. Floats are written round-trip exact."""
    if not records:
        raise ValueError("no records to write")
    width = max(len(r.budgets) if r.budgets else 0 for r in records)
    header = BASE_COLUMNS + [f"budget_{k}" for k in range(width)]
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(header)
            for r in records:
                row = [_cell(getattr(r, c)) for c in BASE_COLUMNS]
                budgets = list(r.budgets or ())
                row += [_cell(b) for b in budgets] + [""] * (width - len(budgets))
                writer.writerow(row)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def plotdata(rows: Sequence[dict], figure: str) -> list[dict]:
    """Pivot raw records into long-format series for one figure.

    ``devices``: mean scheduled count per (round, scheme); ``power``: mean
    per-round allowance per (round, device) for the proposed scheme;
    ``loss``: mean global loss per (round, scheme).
    """
    acc = defaultdict(list)
    if figure == "devices":
        for r in rows:
            acc[(int(r["round"]), r["scheme"])].append(float(r["scheduled_count"]))
        return [{"round": k[0], "scheme": k[1], "mean_scheduled": sum(v) / len(v)}
                for k, v in sorted(acc.items())]
    if figure == "power":
        for r in rows:
            if r["scheme"] != "proposed":
                continue
            for col, val in r.items():
                if col.startswith("budget_") and val != "":
                    acc[(int(r["round"]), int(col[len("budget_"):]))].append(float(val))
        if not acc:
            raise ValueError("no budget columns for the proposed scheme; set experiment.record_budgets")
        return [{"round": k[0], "device": k[1], "mean_allowance": sum(v) / len(v)}
                for k, v in sorted(acc.items())]
    if figure == "loss":
        for r in rows:
            if r.get("global_loss"):
                acc[(int(r["round"]), r["scheme"])].append(float(r["global_loss"]))
        if not acc:
            raise ValueError("no global_loss values; enable fl")
        return [{"round": k[0], "scheme": k[1], "mean_loss": sum(v) / len(v)}
                for k, v in sorted(acc.items())]
    raise ValueError(f"unknown figure {figure!r}; choose devices, power or loss")


# --- oracle cross-check --------------------------------------------------

def random_instance(seed, k_max: int, params: SystemParams | None = None):
    """Random single-round instance with a random spending history."""
    rng = keyed_rng(seed, 99)
    base = params or SystemParams()
    k = int(rng.integers(0, k_max + 1))
    p = replace(base, num_devices=k)
    t = int(rng.integers(0, p.total_rounds))
    devices = draw_channels(seed, t, place_devices(seed, p))
    spent = rng.uniform(0.0, 0.9, k) * np.array([d.total_budget for d in devices])
    p = replace(p, fn_mag2=draw_relay_gain(seed, t, base.fn_mag2))
    return devices, EnergyLedger(spent=spent), t, p


def instance_to_dict(devices, ledger, round, params) -> dict:
    return {
        "params": asdict(params),
        "round": round,
        "spent": [float(s) for s in ledger.spent],
        "devices": [{"id": d.id, "x": d.position.x, "y": d.position.y, "total_budget": d.total_budget,
                     "d": d.d, "r": d.r, "h_mag2": d.h_mag2, "j_mag2": d.j_mag2} for d in devices],
    }


def instance_from_dict(doc: dict):
    raw = dict(doc["params"])
    raw["relay_position"] = tuple(raw["relay_position"])
    params = SystemParams(**raw)
    devices = [Device(id=d["id"], position=Point2D(d["x"], d["y"]), total_budget=d["total_budget"],
                      d=d["d"], r=d["r"], h_mag2=d["h_mag2"], j_mag2=d["j_mag2"]) for d in doc["devices"]]
    return devices, EnergyLedger(spent=np.array(doc["spent"], dtype=float)), doc["round"], params


@dataclass
class OracleCheckReport:
    instances: int
    mismatches: list = field(default_factory=list)

    @property
    def mismatch_count(self) -> int:
        return len(self.mismatches)


def run_oracle_check(instances: int, k_max: int, seed: int, scheduler: Callable = schedule_greedy,
                     params: SystemParams | None = None) -> OracleCheckReport:
    """Compare ``scheduler`` against exhaustive search on random instances."""
    if k_max > 12:
        raise ValueError("k_max must be <= 12")
    report = OracleCheckReport(instances)
    for n in range(instances):
        devices, ledger, t, p = random_instance([seed, n], k_max, params)
        got = scheduler(devices, ledger, t, p).scheduled_count
        best = solve_exact(devices, ledger, t, p).best_count
        if got != best:
            dump = instance_to_dict(devices, ledger, t, p)
            dump.update(greedy_count=got, oracle_count=best)
            report.mismatches.append(dump)
    return report
