"""Displacement algorithms MV_1, MV_d, MV_d on non-powers, and LV_d.

All of them move sensors onto equidistant anchor grids. MV_d is run level by
level: at level k every current block (a group of m^(d-k) sensors that agree
on coordinates 1..k) is sorted on coordinate k+1 and cut into m slabs of
m^(d-k-1) sensors, and each slab snaps its coordinate k+1 to its anchor. This
is the breadth-first order of the recursive description and yields the same
moves. Ties are broken by original sensor index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import AnchorGrid, CostMetric, MovementLog, Phase, SensorSwarm, cost_of_log, exact_root, integer_root
from .errors import PreconditionError
from .placement import SELECTION_STREAM, SeedSpec, as_seed

# slack for comparing user-supplied radius factors against their thresholds
_FACTOR_RTOL = 1e-12


class Branch(str, enum.Enum):
    FALLBACK = "fallback"
    PER_SUBCUBE = "per-subcube"
    DIRECT = "direct"


class Displacement(NamedTuple):
    final: SensorSwarm
    log: MovementLog
    branch: Branch = Branch.DIRECT

    def cost(self, metric: CostMetric) -> float:
        return cost_of_log(self.log, metric)


def _snap_to_grid(points, ids, group, origin, side, m):
    """Run MV_d on independent equal-size instances; return (phases, final points).

    ``group`` labels the instance of each participant (each instance holds
    exactly m^d sensors); ``origin`` is the lower corner of the instance and
    ``side`` its side length.
    """
    k, d = points.shape
    grid = AnchorGrid(d, side, m)
    group = np.asarray(group, dtype=np.int64)
    current = points
    phases = []
    for axis in range(d):
        size = m ** (d - axis)
        slab = m ** (d - axis - 1)
        order = np.lexsort((ids, current[:, axis], group))
        rank = np.empty(k, dtype=np.int64)
        rank[order] = np.arange(k, dtype=np.int64) % size
        block = rank // slab
        moved = current.copy()
        moved[:, axis] = origin[:, axis] + grid.coordinate(block + 1)
        phases.append(Phase(ids, current, moved))
        current = moved
        group = group * m + block
    return phases, current


def _assemble(swarm: SensorSwarm, ids, phases, final_points, r: float, branch=Branch.DIRECT) -> Displacement:
    final = swarm.positions.copy()
    final[ids] = final_points
    log = MovementLog(swarm.positions, phases)
    return Displacement(SensorSwarm(final, swarm.y, r), log, branch)


def _run_grid(swarm: SensorSwarm, ids: np.ndarray, m: int, r: float, branch=Branch.DIRECT) -> Displacement:
    pts = swarm.positions[ids]
    origin = np.zeros_like(pts)
    phases, final_pts = _snap_to_grid(pts, ids, np.zeros(len(ids), dtype=np.int64), origin, swarm.y, m)
    return _assemble(swarm, ids, phases, final_pts, r, branch)


def mv1(swarm: SensorSwarm) -> Displacement:
    """Sort the sensors of an interval and move the i-th to ``y i/n - y/(2n)``."""
    if swarm.d != 1:
        raise PreconditionError(f"mv1 needs d = 1, got d = {swarm.d}")
    n = swarm.n
    return _run_grid(swarm, np.arange(n), n, swarm.y / (2 * n))


def mvd(swarm: SensorSwarm) -> Displacement:
    """MV_d for n = m^d sensors; final positions are the full anchor grid."""
    n, d = swarm.n, swarm.d
    m = exact_root(n, d)
    if m is None:
        raise PreconditionError(f"mvd needs n to be a perfect {d}-th power, got n = {n} (use mvd_general)")
    if d == 1:
        return mv1(swarm)
    return _run_grid(swarm, np.arange(n), m, swarm.y / (2 * m))


def fisher_yates_prefix(members: np.ndarray, counts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Choose ``k`` entries uniformly without replacement from each row.

    Row ``q`` of ``members`` holds ``counts[q]`` valid entries followed by
    padding. One partial Fisher-Yates shuffle per row; the uniforms are drawn
    as a single ``(rows, k)`` block so the stream consumption is fixed.
    """
    members = np.array(members, dtype=np.int64, copy=True)
    counts = np.asarray(counts, dtype=np.int64)
    if np.any(counts < k):
        raise PreconditionError("cannot select more sensors than a group holds")
    rows = np.arange(members.shape[0])
    u = rng.random((members.shape[0], k))
    for i in range(k):
        j = i + np.minimum((u[:, i] * (counts - i)).astype(np.int64), counts - i - 1)
        picked = members[rows, j]
        members[rows, j] = members[rows, i]
        members[rows, i] = picked
    return members[:, :k]


def general_factor_threshold(n: int, d: int) -> float:
    return n ** (1.0 / d) / integer_root(n, d)


def mvd_general(swarm: SensorSwarm, f: float, seed: SeedSpec | int = 0) -> Displacement:
    """MV_d for arbitrary n: move floor(n^(1/d))^d randomly chosen sensors.

    The sensing radius of the result is ``f y / (2 n^(1/d))``; unselected
    sensors stay put.
    """
    n, d = swarm.n, swarm.d
    m = integer_root(n, d)
    threshold = general_factor_threshold(n, d)
    if f < threshold * (1 - _FACTOR_RTOL):
        raise PreconditionError(f"radius factor f = {f} is below n^(1/d)/floor(n^(1/d)) = {threshold}")
    r = f * swarm.y / (2 * n ** (1.0 / d))
    if m**d == n:
        ids = np.arange(n)
    else:
        rng = as_seed(seed).generator(SELECTION_STREAM)
        ids = np.sort(fisher_yates_prefix(np.arange(n)[None, :], np.array([n]), m**d, rng)[0])
    return _run_grid(swarm, ids, m, r)


@dataclass(frozen=True)
class LvParams:
    """Constants of LV_d; build them with :func:`cubecov.analytic.lv_constants`."""

    a: float
    d: int
    f: float
    p: float
    A: float
    x0: float
    f_threshold: float

    def __post_init__(self):
        if self.d < 2:
            raise PreconditionError(f"LV needs d >= 2, got d = {self.d}")
        if self.p != 3 * self.A:
            raise PreconditionError("inconsistent LV constants: p != 3A")
        if self.x0 < 3 or abs(self.x0 - 3 * self.p * math.log(self.x0)) > 1e-9 * self.x0:
            raise PreconditionError(f"x0 = {self.x0} does not solve x = 3 p ln x")
        if self.f < self.f_threshold * (1 - _FACTOR_RTOL):
            raise PreconditionError(
                f"radius factor f = {self.f} is below the threshold 3^(3/d)/(3^(1/d)-1)^2 = {self.f_threshold}"
            )

    @property
    def min_sensors(self) -> int:
        return math.ceil(self.x0)

    def cells_per_axis(self, n: int) -> int:
        """c = floor((n / (p ln n))^(1/d))."""
        target = n / (self.p * math.log(n))
        c = int(target ** (1.0 / self.d))
        while c > 0 and c**self.d > target:
            c -= 1
        while (c + 1) ** self.d <= target:
            c += 1
        return c

    def per_cell_side(self, n: int) -> int:
        """floor((A ln n)^(1/d)), the anchors per axis inside one subcube."""
        target = self.A * math.log(n)
        k = int(target ** (1.0 / self.d))
        while k > 0 and k**self.d > target:
            k -= 1
        while (k + 1) ** self.d <= target:
            k += 1
        return k


@dataclass(frozen=True, eq=False)
class SubcubePartition:
    """Assignment of sensors to the c^d half-open subcubes of side 1/c."""

    c: int
    cell_index: np.ndarray  # (n, d) integer cell coordinates
    cell: np.ndarray  # (n,) flat lexicographic cell id
    counts: np.ndarray  # (c^d,)

    @classmethod
    def build(cls, positions: np.ndarray, c: int) -> SubcubePartition:
        d = positions.shape[1]
        idx = np.minimum(np.floor(positions * c).astype(np.int64), c - 1)
        flat = np.ravel_multi_index(tuple(idx.T), (c,) * d)
        counts = np.bincount(flat, minlength=c**d)
        return cls(c, idx, flat, counts)

    @property
    def side(self) -> float:
        return 1.0 / self.c


def lvd(swarm: SensorSwarm, params: LvParams, seed: SeedSpec | int = 0) -> Displacement:
    """LV_d on the unit cube.

    If some subcube holds fewer than n / (3 c^d) sensors, fall back to
    :func:`mvd_general` on the whole cube; otherwise run MV_d with side 1/c
    on floor((A ln n)^(1/d))^d random sensors of every subcube.
    """
    n, d = swarm.n, swarm.d
    if swarm.y != 1.0:
        raise PreconditionError(f"lvd works on the unit cube, got y = {swarm.y}")
    if d != params.d:
        raise PreconditionError(f"LV constants are for d = {params.d}, swarm has d = {d}")
    if n < params.min_sensors:
        raise PreconditionError(f"lvd needs n >= ceil(x0) = {params.min_sensors}, got n = {n}")
    c = params.cells_per_axis(n)
    part = SubcubePartition.build(swarm.positions, c)
    if np.any(part.counts < n / (3 * c**d)):
        res = mvd_general(swarm, params.f, seed)
        return Displacement(res.final, res.log, Branch.FALLBACK)

    k = params.per_cell_side(n)
    quota = k**d
    assert quota <= part.counts.min(), "occupancy test passed but a subcube is short of sensors"
    order = np.argsort(part.cell, kind="stable")
    starts = np.concatenate(([0], np.cumsum(part.counts)[:-1]))
    members = np.full((c**d, int(part.counts.max())), -1, dtype=np.int64)
    slot = np.arange(n) - starts[part.cell[order]]
    members[part.cell[order], slot] = order
    rng = as_seed(seed).generator(SELECTION_STREAM)
    chosen = fisher_yates_prefix(members, part.counts, quota, rng)

    ids = chosen.ravel()
    group = np.repeat(np.arange(c**d, dtype=np.int64), quota)
    origin = part.cell_index[ids] / c
    phases, final_pts = _snap_to_grid(swarm.positions[ids], ids, group, origin, part.side, k)
    r = params.f / (2 * n ** (1.0 / d))
    return _assemble(swarm, ids, phases, final_pts, r, Branch.PER_SUBCUBE)


class ScalingCheck(NamedTuple):
    cost_y: float
    cost_1: float
    ratio: float


def scaling_check(unit_swarm: SensorSwarm, y: float, a: float) -> ScalingCheck:
    """Compare MV_d on ``y * P`` against MV_d on ``P``; the ratio should be y^a."""
    if unit_swarm.y != 1.0:
        raise PreconditionError("scaling_check expects a unit-cube swarm")
    metric = CostMetric(a)
    scaled = SensorSwarm(unit_swarm.positions * y, y)
    cost_y = mvd(scaled).cost(metric)
    cost_1 = mvd(unit_swarm).cost(metric)
    return ScalingCheck(cost_y, cost_1, cost_y / cost_1 if cost_1 else math.nan)
