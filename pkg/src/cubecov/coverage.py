"""Deciding whether closed L-infinity sensing cubes cover [0, y]^d.

Exact check: every sensor box has bounds x - r and x + r on each axis. These
bounds, together with 0 and y, cut each axis into open cells; inside one
cell of the product arrangement a box either contains the whole cell or
misses it, so testing the cell midpoint decides the cell. Because the boxes
are closed, cell boundaries are covered whenever the adjacent cells are.

The arrangement is walked axis by axis: for each open slab of axis 0 only
the boxes containing that slab are kept, and the cross-section is checked
recursively with breakpoints taken from those boxes alone.

Box bounds are rounded outward by one ulp. Anchor grids at the critical
radius tile the cube only in exact arithmetic; rounding of ``x +/- r`` can
otherwise open spurious gaps of 1-2 ulp between neighbouring cubes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import Point, SensorSwarm
from .errors import CoverageSizeError, PreconditionError
from .placement import SAMPLING_STREAM, SeedSpec, as_seed

# budget for the exact sweep, in (slab, active box)^(d-1) units
MAX_EXACT_WORK = 2 * 10**8


@dataclass(frozen=True)
class CoverageReport:
    covered: bool
    witness: Point | None
    cells_checked: int

    def to_dict(self) -> dict:
        return asdict(self)


def sensor_boxes(swarm: SensorSwarm, r: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Outward-rounded closed box bounds ``(lo, hi)`` of every sensor."""
    r = swarm.r if r is None else float(r)
    lo = np.nextafter(swarm.positions - r, -np.inf)
    hi = np.nextafter(swarm.positions + r, np.inf)
    return lo, hi


def _first_gap(lo, hi, active, axis, y, prefix, counter):
    """Return the midpoint of the first uncovered cell, or None."""
    d = lo.shape[1]
    alo = lo[active, axis]
    ahi = hi[active, axis]
    cuts = np.concatenate(([0.0, y], alo[(alo > 0) & (alo < y)], ahi[(ahi > 0) & (ahi < y)]))
    cuts = np.unique(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    if axis == d - 1:
        counter[0] += len(mids)
        # number of boxes containing each midpoint
        starts = np.searchsorted(np.sort(alo), mids, side="right")
        ends = np.searchsorted(np.sort(ahi), mids, side="left")
        holes = np.flatnonzero(starts - ends <= 0)
        if holes.size:
            return prefix + (float(mids[holes[0]]),)
        return None
    if axis == d - 2:
        return _first_gap_slabs(lo, hi, active, axis, y, prefix, mids, counter)
    for mid in mids:
        inside = active[(alo <= mid) & (mid <= ahi)]
        if inside.size == 0:
            counter[0] += 1
            return prefix + (float(mid),) + (0.5 * y,) * (d - axis - 1)
        gap = _first_gap(lo, hi, inside, axis + 1, y, prefix + (float(mid),), counter)
        if gap is not None:
            return gap
    return None


def _first_gap_slabs(lo, hi, active, axis, y, prefix, mids, counter, rows=64):
    """Check all slabs of the second-to-last axis, ``rows`` slabs at a time.

    For one slab the boxes containing it, ordered by lower bound on the last
    axis, cover [0, y] iff each starts no later than the running maximum of
    the upper bounds before it (starting at 0) and that maximum reaches y.
    ``mids`` is ascending, so a chunk only needs the boxes whose axis interval
    meets [mids[first], mids[last]].
    """
    by_axis = active[np.argsort(lo[active, axis], kind="stable")]
    ax_lo = lo[by_axis, axis]
    ax_hi = hi[by_axis, axis]
    for start in range(0, len(mids), rows):
        m = mids[start:start + rows, None]
        reach_end = np.searchsorted(ax_lo, m[-1, 0], side="right")
        cand = by_axis[:reach_end][ax_hi[:reach_end] >= m[0, 0]]
        cand = cand[np.argsort(lo[cand, axis + 1], kind="stable")]
        inside = (lo[cand, axis][None, :] <= m) & (m <= hi[cand, axis][None, :])
        if cand.size:
            reach = np.maximum.accumulate(np.where(inside, hi[cand, axis + 1][None, :], 0.0), axis=1)
            before = np.concatenate((np.zeros((len(m), 1)), reach[:, :-1]), axis=1)
            gap = (inside & (lo[cand, axis + 1][None, :] > before)).any(axis=1) | (reach[:, -1] < y)
        else:
            gap = np.ones(len(m), dtype=bool)
        counter[0] += int(inside.sum()) + len(m)
        failing = np.flatnonzero(gap)
        if failing.size:
            mid = float(mids[start + failing[0]])
            members = cand[inside[failing[0]]]
            return _first_gap(lo, hi, members, axis + 1, y, prefix + (mid,), [0])
    return None


def exact_work(lo: np.ndarray, hi: np.ndarray, y: float) -> float:
    """Rough cost of the exact sweep: sum over first-axis slabs of (boxes meeting the slab)^(d-1)."""
    d = lo.shape[1]
    a, b = lo[:, 0], hi[:, 0]
    cuts = np.unique(np.concatenate(([0.0, y], a[(a > 0) & (a < y)], b[(b > 0) & (b < y)])))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    active = np.searchsorted(np.sort(a), mids, side="right") - np.searchsorted(np.sort(b), mids, side="left")
    return float(np.sum(np.maximum(active, 1).astype(np.float64) ** (d - 1)))


def verify_exact(swarm: SensorSwarm, r: float | None = None) -> CoverageReport:
    """Decide coverage of ``[0, y]^d`` exactly; ``r`` overrides the swarm radius.

    Raises :class:`CoverageSizeError` when heavily overlapping boxes would make
    the sweep too expensive (see :func:`exact_work`).
    """
    n, d = swarm.n, swarm.d
    lo, hi = sensor_boxes(swarm, r)
    if d >= 2:
        work = exact_work(lo, hi, swarm.y)
        if work > MAX_EXACT_WORK:
            raise CoverageSizeError(
                f"exact verification would take about {work:.3g} box operations "
                f"(limit {MAX_EXACT_WORK:.0e}); use verify_sampled"
            )
    counter = [0]
    gap = _first_gap(lo, hi, np.arange(n), 0, swarm.y, (), counter)
    return CoverageReport(gap is None, gap, counter[0])


def uncovered(swarm: SensorSwarm, points, r: float | None = None) -> np.ndarray:
    """Mask of points at L-infinity distance greater than ``r`` from every sensor."""
    r = swarm.r if r is None else float(r)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    dist, _ = cKDTree(swarm.positions).query(pts, k=1, p=np.inf)
    return dist > r


def verify_sampled(swarm: SensorSwarm, samples: int, seed: SeedSpec | int = 0,
                   r: float | None = None, chunk: int = 65536) -> CoverageReport:
    """Monte Carlo coverage test; ``covered`` only means no counterexample was drawn."""
    if samples < 1:
        raise PreconditionError(f"samples must be at least 1, got {samples}")
    rng = as_seed(seed).generator(SAMPLING_STREAM)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        pts = rng.random((k, swarm.d)) * swarm.y
        miss = np.flatnonzero(uncovered(swarm, pts, r))
        if miss.size:
            return CoverageReport(False, tuple(map(float, pts[miss[0]])), done + int(miss[0]) + 1)
        done += k
    return CoverageReport(True, None, samples)
