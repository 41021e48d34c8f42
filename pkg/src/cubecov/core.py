"""Geometric domain model: swarms, anchor grids, movement logs and the a-total cost."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import MovementLogError, PreconditionError

Point = tuple[float, ...]


def integer_root(n: int, d: int) -> int:
    """Return floor(n ** (1/d)) computed exactly for integers."""
    if n < 0 or d < 1:
        raise PreconditionError(f"integer_root needs n >= 0 and d >= 1, got n={n}, d={d}")
    m = int(round(n ** (1.0 / d)))
    while m > 0 and m**d > n:
        m -= 1
    while (m + 1) ** d <= n:
        m += 1
    return m


def exact_root(n: int, d: int) -> int | None:
    """Return m with m**d == n, or None when n is not a perfect d-th power."""
    m = integer_root(n, d)
    return m if m**d == n else None


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


class SensorSwarm:
    """n sensors with an L-infinity sensing radius ``r`` inside ``[0, y]^d``.

    ``positions`` is stored as a read-only ``(n, d)`` float64 array. When ``r``
    is omitted it defaults to the critical radius ``y / (2 n^(1/d))``.
    """

    __slots__ = ("positions", "y", "r")

    def __init__(self, positions, y: float = 1.0, r: float | None = None):
        pos = np.asarray(positions, dtype=np.float64)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if pos.ndim != 2 or pos.shape[0] < 1 or pos.shape[1] < 1:
            raise PreconditionError(f"positions must be a non-empty (n, d) array, got shape {pos.shape}")
        y = float(y)
        if not (y > 0 and math.isfinite(y)):
            raise PreconditionError(f"side length y must be positive and finite, got {y}")
        if not np.all(np.isfinite(pos)):
            raise PreconditionError("sensor coordinates must be finite")
        if np.any(pos < 0) or np.any(pos > y):
            raise PreconditionError(f"all sensor positions must lie in [0, {y}]^d")
        if r is None:
            n, d = pos.shape
            r = y / (2.0 * n ** (1.0 / d))
        r = float(r)
        if not (r > 0 and math.isfinite(r)):
            raise PreconditionError(f"sensing radius r must be positive, got {r}")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "r", r)

    def __setattr__(self, name, value):
        raise AttributeError("SensorSwarm is immutable")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def point(self, i: int) -> Point:
        return tuple(float(v) for v in self.positions[i])

    def with_radius(self, r: float) -> SensorSwarm:
        return SensorSwarm(self.positions, self.y, r)

    def scaled(self, y: float) -> SensorSwarm:
        """Return the swarm mapped from ``[0, self.y]^d`` onto ``[0, y]^d``."""
        factor = y / self.y
        return SensorSwarm(self.positions * factor, y, self.r * factor)

    def __eq__(self, other):
        if not isinstance(other, SensorSwarm):
            return NotImplemented
        return (
            self.y == other.y
            and self.r == other.r
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None

    def __repr__(self):
        return f"SensorSwarm(n={self.n}, d={self.d}, y={self.y!r}, r={self.r!r})"


@dataclass(frozen=True)
class AnchorGrid:
    """The m^d equidistant target positions of side ``y``."""

    d: int
    y: float
    m: int

    def __post_init__(self):
        if self.d < 1 or self.m < 1 or not self.y > 0:
            raise PreconditionError(f"invalid anchor grid d={self.d}, y={self.y}, m={self.m}")

    @property
    def size(self) -> int:
        return self.m**self.d

    @property
    def covering_radius(self) -> float:
        return self.y / (2 * self.m)

    def coordinate(self, l):
        """Axis coordinate of anchor index ``l`` (1-based); accepts arrays."""
        return self.y * l / self.m - self.y / (2 * self.m)

    def positions(self) -> np.ndarray:
        """All anchors, lexicographic in (l_1, ..., l_d)."""
        axis = self.coordinate(np.arange(1, self.m + 1))
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def anchor_position(grid: AnchorGrid, index: Sequence[int]) -> Point:
    if len(index) != grid.d:
        raise PreconditionError(f"anchor index must have {grid.d} components, got {len(index)}")
    for l in index:
        if not 1 <= l <= grid.m:
            raise PreconditionError(f"anchor index component {l} outside 1..{grid.m}")
    return tuple(float(grid.coordinate(l)) for l in index)


@dataclass(frozen=True, eq=False)
class Phase:
    """One batch of elementary moves; each listed sensor moves at most once."""

    sensor_ids: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.sensor_ids, dtype=np.int64).reshape(-1)
        start = np.asarray(self.start, dtype=np.float64)
        end = np.asarray(self.end, dtype=np.float64)
        if start.shape != end.shape or start.ndim != 2 or start.shape[0] != ids.shape[0]:
            raise MovementLogError("phase arrays disagree in shape")
        if len(np.unique(ids)) != len(ids):
            raise MovementLogError("a sensor appears twice in one phase")
        for name, arr in (("sensor_ids", ids), ("start", start), ("end", end)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.end - self.start, axis=1)


class MovementLog:
    """Per-sensor sequences of elementary moves, stored phase by phase.

    Sensor ``i``'s k-th move is its entry in the k-th phase that lists it.
    Construction only checks shapes; :meth:`check_chained` checks that each
    move starts where the previous one ended.
    """

    def __init__(self, initial, phases: Sequence[Phase] = ()):
        init = np.asarray(initial, dtype=np.float64)
        if init.ndim == 1:
            init = init.reshape(-1, 1)
        self.initial = _frozen(init)
        self.phases = tuple(phases)
        n, d = self.initial.shape
        for ph in self.phases:
            if ph.start.shape[1] != d:
                raise MovementLogError("phase dimension does not match the initial positions")
            if len(ph.sensor_ids) and (ph.sensor_ids.min() < 0 or ph.sensor_ids.max() >= n):
                raise MovementLogError("phase references an unknown sensor")

    @classmethod
    def from_sensor_moves(cls, initial, moves: Sequence[Sequence[tuple[Point, Point]]]) -> MovementLog:
        """Build a log from an explicit per-sensor list of ``(from, to)`` moves."""
        init = np.asarray(initial, dtype=np.float64)
        if init.ndim == 1:
            init = init.reshape(-1, 1)
        if len(moves) != init.shape[0]:
            raise MovementLogError("need one move list per sensor")
        depth = max((len(m) for m in moves), default=0)
        phases = []
        for k in range(depth):
            ids = [i for i, m in enumerate(moves) if len(m) > k]
            start = [moves[i][k][0] for i in ids]
            end = [moves[i][k][1] for i in ids]
            phases.append(Phase(np.array(ids), np.array(start, dtype=float).reshape(len(ids), -1),
                                np.array(end, dtype=float).reshape(len(ids), -1)))
        return cls(init, phases)

    @property
    def n(self) -> int:
        return self.initial.shape[0]

    @property
    def d(self) -> int:
        return self.initial.shape[1]

    def check_chained(self) -> None:
        current = self.initial.copy()
        for k, ph in enumerate(self.phases):
            if not np.array_equal(current[ph.sensor_ids], ph.start):
                bad = ph.sensor_ids[np.any(current[ph.sensor_ids] != ph.start, axis=1)][0]
                raise MovementLogError(f"move {k} of sensor {bad} does not start where it was")
            current[ph.sensor_ids] = ph.end

    def final_positions(self) -> np.ndarray:
        current = self.initial.copy()
        for ph in self.phases:
            current[ph.sensor_ids] = ph.end
        return current

    def moves(self, sensor_id: int) -> list[tuple[Point, Point]]:
        out = []
        for ph in self.phases:
            hit = np.flatnonzero(ph.sensor_ids == sensor_id)
            if hit.size:
                j = hit[0]
                out.append((tuple(map(float, ph.start[j])), tuple(map(float, ph.end[j]))))
        return out

    def rows(self) -> Iterator[tuple[int, int, np.ndarray, np.ndarray, float]]:
        """Yield ``(sensor_id, phase, from, to, dist)`` ordered by sensor then phase (1-based)."""
        records = []
        for k, ph in enumerate(self.phases, start=1):
            lengths = ph.lengths()
            for j, sid in enumerate(ph.sensor_ids):
                records.append((int(sid), k, ph.start[j], ph.end[j], float(lengths[j])))
        records.sort(key=lambda rec: (rec[0], rec[1]))
        yield from records

    def write_csv(self, path) -> None:
        d = self.d
        header = (["sensor_id", "phase"] + [f"from_x{k}" for k in range(1, d + 1)]
                  + [f"to_x{k}" for k in range(1, d + 1)] + ["dist"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for sid, k, frm, to, dist in self.rows():
                w.writerow([sid, k, *(format(v, ".17g") for v in frm),
                            *(format(v, ".17g") for v in to), format(dist, ".17g")])


class CostMode(str, enum.Enum):
    PER_PHASE = "per-phase"
    END_TO_END = "end-to-end"


@dataclass(frozen=True)
class CostMetric:
    a: float = 1.0
    mode: CostMode = CostMode.PER_PHASE

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise PreconditionError(f"cost exponent a must be positive, got {self.a}")
        object.__setattr__(self, "mode", CostMode(self.mode))


def powered_sum(lengths: np.ndarray, a: float) -> float:
    """Compensated sum of ``lengths ** a``."""
    return math.fsum(np.power(lengths, a).tolist())


def cost_of_log(log: MovementLog, metric: CostMetric) -> float:
    """a-total movement of a log under the chosen cost mode."""
    log.check_chained()
    if metric.mode is CostMode.PER_PHASE:
        if not log.phases:
            return 0.0
        return powered_sum(np.concatenate([ph.lengths() for ph in log.phases]), metric.a)
    net = np.linalg.norm(log.final_positions() - log.initial, axis=1)
    return powered_sum(net, metric.a)
