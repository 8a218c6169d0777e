"""Cell geometry and Rayleigh channel draws.

Randomness is keyed rather than streamed: every draw is a pure function of
``(seed, purpose, round)`` and the device index, so two schemes evaluated on
the same round see the same channels no matter in which order they run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

Seed = Union[int, Sequence[int]]

PS_POSITION = (0.0, 0.0)

# purpose codes mixed into the RNG key
_PLACEMENT = 1
_H_CHANNEL = 2
_J_CHANNEL = 3
_RELAY_CHANNEL = 4


def keyed_rng(seed: Seed, *keys: int) -> np.random.Generator:
    """Generator for the stream identified by ``seed`` plus integer keys."""
    if isinstance(seed, (int, np.integer)):
        entropy = [int(seed)]
    else:
        entropy = [int(s) for s in seed]
    if any(e < 0 for e in entropy) or any(k < 0 for k in keys):
        raise ValueError("seeds and keys must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence(entropy + [int(k) for k in keys]))


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def distance(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one experiment.

    ``mse_cap`` is linear; use :func:`db_to_linear` on dB inputs.
    ``fn_mag2`` is the relay-to-PS squared channel magnitude for the round
    being solved. When channels are redrawn per round the harness stores the
    mean here and substitutes the draw with :func:`dataclasses.replace`.
    """

    noise_var: float = 1e-6
    mse_cap: float = db_to_linear(5.0)
    path_loss_exp: float = 3.0
    compute_per_sample: float = 0.0
    batch_size: int = 32
    total_rounds: int = 100
    relay_budget: float = 1.0
    fn_mag2: float = 1.0
    num_devices: int = 20
    cell_radius: float = 100.0
    total_budget: float = 5.0
    relay_position: tuple[float, float] = (50.0, 50.0)

    def __post_init__(self):
        positive = {
            "noise_var": self.noise_var,
            "mse_cap": self.mse_cap,
            "path_loss_exp": self.path_loss_exp,
            "batch_size": self.batch_size,
            "total_rounds": self.total_rounds,
            "relay_budget": self.relay_budget,
            "cell_radius": self.cell_radius,
            "total_budget": self.total_budget,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value!r}")
        # zero is meaningful for these: no compute cost, dead relay link, empty cell
        if self.compute_per_sample < 0:
            raise ValueError(f"compute_per_sample must be >= 0, got {self.compute_per_sample!r}")
        if self.fn_mag2 < 0:
            raise ValueError(f"fn_mag2 must be >= 0, got {self.fn_mag2!r}")
        if self.num_devices < 0:
            raise ValueError(f"num_devices must be >= 0, got {self.num_devices!r}")

    @property
    def compute_energy(self) -> float:
        """Per-round local computation energy, nu * L_b."""
        return self.compute_per_sample * self.batch_size

    @property
    def relay(self) -> Point2D:
        return Point2D(*self.relay_position)

    @property
    def lambda_floor2(self) -> float:
        """sigma^2 / gamma: squared power scalar at which the MSE cap is tight."""
        return self.noise_var / self.mse_cap


@dataclass(frozen=True)
class Device:
    id: int
    position: Point2D
    total_budget: float
    d: float
    r: float
    h_mag2: float = 1.0
    j_mag2: float = 1.0

    def __post_init__(self):
        if not (self.d > 0 and self.r > 0):
            raise ValueError(f"device {self.id}: distances must be positive (d={self.d}, r={self.r})")
        if self.h_mag2 < 0 or self.j_mag2 < 0:
            raise ValueError(f"device {self.id}: negative channel gain")
        if not self.total_budget > 0:
            raise ValueError(f"device {self.id}: total_budget must be > 0")


def make_device(id: int, position: Point2D, params: SystemParams, total_budget: float | None = None,
                h_mag2: float = 1.0, j_mag2: float = 1.0) -> Device:
    return Device(
        id=id,
        position=position,
        total_budget=params.total_budget if total_budget is None else total_budget,
        d=position.distance(Point2D(*PS_POSITION)),
        r=position.distance(params.relay),
        h_mag2=h_mag2,
        j_mag2=j_mag2,
    )


def place_devices(seed: Seed, params: SystemParams) -> list[Device]:
    """Uniform placement in the first-quadrant quarter disc around the PS.

    Points landing exactly on the PS or the relay are redrawn.
    """
    rng = keyed_rng(seed, _PLACEMENT)
    ps, relay = Point2D(*PS_POSITION), params.relay
    devices = []
    while len(devices) < params.num_devices:
        # area-uniform: radius ~ R*sqrt(U)
        rad = params.cell_radius * math.sqrt(rng.random())
        theta = 0.5 * math.pi * rng.random()
        p = Point2D(rad * math.cos(theta), rad * math.sin(theta))
        if p.distance(ps) == 0.0 or p.distance(relay) == 0.0:
            continue
        devices.append(make_device(len(devices), p, params))
    return devices


def _exp_unit(seed: Seed, purpose: int, round: int, n: int) -> np.ndarray:
    # |CN(0,1)|^2 from explicit real/imag parts; element k depends only on k
    z = keyed_rng(seed, purpose, round).standard_normal((n, 2))
    return 0.5 * (z * z).sum(axis=1)


def channel_gains(seed: Seed, round: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(|h|^2, |j|^2)`` arrays for devices ``0 .. n-1`` in one round."""
    return _exp_unit(seed, _H_CHANNEL, round, n), _exp_unit(seed, _J_CHANNEL, round, n)


def draw_channels(seed: Seed, round: int, devices: Sequence[Device]) -> list[Device]:
    """Fresh i.i.d. Rayleigh draws of ``|h_k|^2`` and ``|j_k|^2`` for one round.

    Device ``k`` receives element ``k`` of the round's stream, so the value is
    fixed by ``(seed, round, k)`` and independent of how many devices exist.
    """
    if round < 0:
        raise ValueError(f"round must be >= 0, got {round}")
    if not devices:
        return []
    n = max(dev.id for dev in devices) + 1
    h, j = channel_gains(seed, round, n)
    return [replace(dev, h_mag2=float(h[dev.id]), j_mag2=float(j[dev.id])) for dev in devices]


def draw_relay_gain(seed: Seed, round: int, mean_gain: float = 1.0) -> float:
    """Squared relay-to-PS channel magnitude for one round, Rayleigh with the given mean."""
    return float(mean_gain * _exp_unit(seed, _RELAY_CHANNEL, round, 1)[0])
