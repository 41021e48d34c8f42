"""Seeded uniform sensor placement.

Streams come from numpy's Philox-4x64 counter-based generator. The 128-bit
key is ``(mix64(master_seed), mix64(trial_index))`` where ``mix64`` is the
SplitMix64 finalizer (constants 0xbf58476d1ce4e5b9, 0x94d049bb133111eb,
shifts 30/27/31). ``mix64`` is a bijection on 64-bit words, so distinct
``(master_seed, trial_index)`` pairs always get distinct keys. Independent
sub-streams of one trial (placement, random selection, sampling) differ in
the top word of the Philox counter.

Doubles are ``(u64 >> 11) * 2**-53`` as produced by ``Generator.random``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import SensorSwarm
from .errors import PreconditionError

MASK64 = (1 << 64) - 1

PLACEMENT_STREAM = 0
SELECTION_STREAM = 1
SAMPLING_STREAM = 2


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    trial_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise PreconditionError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if not 0 <= self.trial_index <= MASK64:
            raise PreconditionError(f"trial_index must be in [0, 2**64), got {self.trial_index}")

    def key(self) -> tuple[int, int]:
        return mix64(self.master_seed), mix64(self.trial_index)

    def generator(self, stream: int = PLACEMENT_STREAM) -> np.random.Generator:
        lo, hi = self.key()
        bitgen = np.random.Philox(key=np.array([lo, hi], dtype=np.uint64),
                                  counter=np.array([0, 0, 0, stream], dtype=np.uint64))
        return np.random.Generator(bitgen)


def as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


def place_uniform(n: int, d: int, y: float, seed: SeedSpec | int, r: float | None = None) -> SensorSwarm:
    """Place ``n`` sensors i.i.d. uniform on ``[0, y)^d``.

    The unit-cube coordinates are drawn first and then multiplied by ``y``,
    so the placement for side ``y`` is exactly ``y`` times the placement for
    side 1 under the same seed.
    """
    if n < 1 or d < 1:
        raise PreconditionError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not y > 0:
        raise PreconditionError(f"side length y must be positive, got {y}")
    unit = as_seed(seed).generator(PLACEMENT_STREAM).random((n, d))
    return SensorSwarm(unit * y, y, r)


def write_placement(swarm: SensorSwarm, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sensor_id"] + [f"x{k}" for k in range(1, swarm.d + 1)])
        for i, row in enumerate(swarm.positions):
            w.writerow([i, *(format(float(v), ".17g") for v in row)])


def read_placement(path, y: float = 1.0, r: float | None = None) -> SensorSwarm:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PreconditionError(f"{path}: empty placement file")
    header, body = rows[0], rows[1:]
    if not header or header[0] != "sensor_id" or header[1:] != [f"x{k}" for k in range(1, len(header))]:
        raise PreconditionError(f"{path}: expected header sensor_id,x1,...,xd")
    body.sort(key=lambda row: int(row[0]))
    if [int(row[0]) for row in body] != list(range(len(body))):
        raise PreconditionError(f"{path}: sensor ids must be 0..n-1")
    positions = np.array([[float(v) for v in row[1:]] for row in body])
    return SensorSwarm(positions, y, r)
