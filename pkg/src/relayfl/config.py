"""Experiment configuration: JSON documents with ``system``, ``experiment`` and ``fl`` sections.

dB-valued fields carry a ``_db`` suffix. See ``configs/reference.json`` for the
full key set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .topology import SystemParams, db_to_linear

OUTPUT_DIR_ENV = "RELAYFL_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FlConfig:
    dim: int = 16
    shard_size: int = 256
    learning_rate: float = 0.05
    label_noise: float = 0.1
    noisy: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    schemes: tuple[str, ...] = ("proposed", "no-relay", "all-relay", "ideal-relay")
    trials: int = 1
    master_seed: int = 0
    fl_enabled: bool = False
    fn_redraw_per_round: bool = True
    output_path: str = "results.csv"
    record_budgets: bool = False
    fl: FlConfig = field(default_factory=FlConfig)

    def __post_init__(self):
        from .scheduler import SCHEMES

        if self.trials < 1:
            raise ConfigError(f"experiment.trials: must be >= 1, got {self.trials}")
        if not self.schemes:
            raise ConfigError("experiment.schemes: must not be empty")
        for name in self.schemes:
            if name not in SCHEMES:
                raise ConfigError(f"experiment.schemes: unknown scheme {name!r}; choose from {sorted(SCHEMES)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("experiment.schemes: duplicate entries")
        if self.master_seed < 0:
            raise ConfigError("experiment.master_seed: must be >= 0")
        if self.fl_enabled and self.fl.shard_size < self.system.batch_size:
            raise ConfigError("fl.shard_size: must be >= system.batch_size")

    def resolved_output(self) -> Path:
        """Output path, relocated into ``$RELAYFL_OUTPUT_DIR`` when that is set."""
        out = Path(self.output_path)
        env = os.environ.get(OUTPUT_DIR_ENV)
        return Path(env) / out.name if env else out


def _take(section: dict, allowed: set[str], where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown key")
    return dict(section)


def _system_from(raw: dict) -> SystemParams:
    names = {f.name for f in fields(SystemParams)}
    raw = _take(raw, names | {"mse_cap_db"}, "system")
    if "mse_cap_db" in raw:
        if "mse_cap" in raw:
            raise ConfigError("system.mse_cap_db: give either mse_cap or mse_cap_db, not both")
        raw["mse_cap"] = db_to_linear(float(raw.pop("mse_cap_db")))
    if "relay_position" in raw:
        pos = raw["relay_position"]
        if not (isinstance(pos, (list, tuple)) and len(pos) == 2):
            raise ConfigError("system.relay_position: expected [x, y]")
        raw["relay_position"] = (float(pos[0]), float(pos[1]))
    try:
        return SystemParams(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from None


def config_from_dict(doc: dict[str, Any]) -> ExperimentConfig:
    doc = _take(doc, {"system", "experiment", "fl"}, "config")
    system = _system_from(doc.get("system", {}))
    exp = _take(doc.get("experiment", {}), {"schemes", "trials", "master_seed", "fn_redraw_per_round",
                                            "output_path", "record_budgets"}, "experiment")
    fl_raw = _take(doc.get("fl", {}), {f.name for f in fields(FlConfig)} | {"enabled"}, "fl")
    fl_enabled = bool(fl_raw.pop("enabled", False))
    try:
        fl = FlConfig(**fl_raw)
    except TypeError as exc:
        raise ConfigError(f"fl: {exc}") from None
    if "schemes" in exp:
        exp["schemes"] = tuple(exp["schemes"])
    return ExperimentConfig(system=system, fl_enabled=fl_enabled, fl=fl, **exp)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)
