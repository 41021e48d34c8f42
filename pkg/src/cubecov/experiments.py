"""Monte Carlo sweeps over n, aggregated statistics and rate fits."""

from __future__ import annotations

import csv
import enum
import functools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats as sps

from . import analytic
from .algorithms import Branch, lvd, mvd
from .core import CostMetric, CostMode, exact_root
from .errors import DegenerateFitError, PreconditionError
from .placement import SeedSpec, place_uniform

CSV_HEADER = ("alg,d,a,y,n,repeat_id,trials,mean_cost,std_cost,stderr,theory_value,fallback_count").split(",")


class Algorithm(str, enum.Enum):
    MV = "MV"
    LV = "LV"


def trial_seed(master_seed: int, repeat_id: int, n: int, trial_id: int) -> SeedSpec:
    """Seed of one trial; the (repeat, n, trial) packing is injective within its bounds."""
    if not (0 <= repeat_id < 1 << 16 and 0 <= n < 1 << 24 and 0 <= trial_id < 1 << 24):
        raise PreconditionError(f"trial coordinates out of range: repeat={repeat_id}, n={n}, trial={trial_id}")
    return SeedSpec(master_seed, (repeat_id << 48) | (n << 24) | trial_id)


@dataclass(frozen=True)
class SweepSpec:
    algorithm: Algorithm
    d: int
    a: float
    n_list: tuple[int, ...]
    y: float = 1.0
    trials: int = 32
    repeats: int = 3
    master_seed: int = 0
    mode: CostMode = CostMode.PER_PHASE
    f: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        object.__setattr__(self, "mode", CostMode(self.mode))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.trials < 1 or self.repeats < 1:
            raise PreconditionError("trials and repeats must be at least 1")
        if self.d < 1:
            raise PreconditionError(f"dimension must be at least 1, got {self.d}")
        CostMetric(self.a)
        if self.algorithm is Algorithm.MV:
            for n in self.n_list:
                if n < 1 or exact_root(n, self.d) is None:
                    raise PreconditionError(f"MV needs every n to be a perfect {self.d}-th power, got n = {n}")
        else:
            if self.y != 1.0:
                raise PreconditionError("LV sweeps run on the unit cube (y = 1)")
            params = self.lv_params()
            for n in self.n_list:
                if n < params.min_sensors:
                    raise PreconditionError(f"LV needs n >= ceil(x0) = {params.min_sensors}, got n = {n}")

    def lv_params(self):
        return analytic.lv_constants(self.a, self.d, self.f)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["algorithm"] = self.algorithm.value
        out["mode"] = self.mode.value
        out["n_list"] = list(self.n_list)
        return out


@dataclass(frozen=True)
class TrialStats:
    alg: str
    d: int
    a: float
    y: float
    n: int
    repeat_id: int
    trials: int
    mean_cost: float
    std_cost: float
    stderr: float
    theory_value: float
    fallback_count: int = 0

    @property
    def branch_counts(self) -> dict[str, int]:
        if self.alg != Algorithm.LV.value:
            return {}
        return {Branch.FALLBACK.value: self.fallback_count,
                Branch.PER_SUBCUBE.value: self.trials - self.fallback_count}


def run_trial(spec: SweepSpec, n: int, repeat_id: int, trial_id: int) -> tuple[float, bool]:
    """One placement + algorithm run; returns (cost, fell_back)."""
    seed = trial_seed(spec.master_seed, repeat_id, n, trial_id)
    swarm = place_uniform(n, spec.d, spec.y, seed)
    if spec.algorithm is Algorithm.MV:
        res = mvd(swarm)
    else:
        res = lvd(swarm, spec.lv_params(), seed)
    return res.cost(CostMetric(spec.a, spec.mode)), res.branch is Branch.FALLBACK


def _run_batch(job: tuple[SweepSpec, int, int]) -> list[tuple[float, bool]]:
    spec, n, repeat_id = job
    return [run_trial(spec, n, repeat_id, t) for t in range(spec.trials)]


@functools.lru_cache(maxsize=None)
def mv_theory(n: int, d: int, a: float, y: float) -> float:
    return analytic.recursive_expected_cost(n, d, a, y=y)


def summarize(costs: Sequence[float]) -> tuple[float, float, float]:
    """(mean, sample std, standard error)."""
    k = len(costs)
    mean = math.fsum(costs) / k
    std = math.sqrt(math.fsum((c - mean) ** 2 for c in costs) / (k - 1)) if k > 1 else 0.0
    return mean, std, std / math.sqrt(k)


def run_sweep(spec: SweepSpec, jobs: int | None = None) -> list[TrialStats]:
    """Run every (n, repeat) batch of the sweep; rows ordered by n_list then repeat."""
    tasks = [(spec, n, rep) for n in spec.n_list for rep in range(spec.repeats)]
    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_batch, tasks))
    else:
        results = [_run_batch(t) for t in tasks]

    rows = []
    for (_, n, rep), batch in zip(tasks, results):
        costs = [c for c, _ in batch]
        mean, std, se = summarize(costs)
        theory = mv_theory(n, spec.d, spec.a, spec.y) if spec.algorithm is Algorithm.MV else math.nan
        rows.append(TrialStats(spec.algorithm.value, spec.d, float(spec.a), float(spec.y), n, rep,
                               spec.trials, mean, std, se, theory, sum(fb for _, fb in batch)))
    if spec.algorithm is Algorithm.LV:
        const, _ = lv_theory_fit(rows)
        rows = [_with_theory(r, const * float(analytic.lv_rate(r.n, r.d, r.a))) for r in rows]
    return rows


def _with_theory(row: TrialStats, value: float) -> TrialStats:
    data = asdict(row)
    data["theory_value"] = value
    return TrialStats(**data)


def lv_theory_fit(rows: Sequence[TrialStats]) -> tuple[float, float]:
    """Fit C in mean_cost ~ C * n^(1-a/2d) (ln n/n)^(a/2d) on the smaller half of n.

    Returns ``(C, worst relative error on the larger half)``.
    """
    ns = sorted({r.n for r in rows})
    if len(ns) < 2:
        train = set(ns)
    else:
        train = set(ns[: len(ns) // 2])
    ratio = lambda r: r.mean_cost / float(analytic.lv_rate(r.n, r.d, r.a))
    logs = [math.log(ratio(r)) for r in rows if r.n in train and r.mean_cost > 0]
    if not logs:
        return math.nan, math.nan
    const = math.exp(math.fsum(logs) / len(logs))
    checks = [abs(ratio(r) / const - 1.0) for r in rows if r.n not in train]
    return const, max(checks, default=0.0)


class ExponentFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def fit_exponent(rows: Sequence[TrialStats]) -> ExponentFit:
    """Least squares of log(mean_cost) against log(n)."""
    ns = np.array([r.n for r in rows], dtype=np.float64)
    costs = np.array([r.mean_cost for r in rows], dtype=np.float64)
    distinct = np.unique(ns)
    if len(distinct) < 5 or distinct[-1] < 100 * distinct[0]:
        raise DegenerateFitError("need at least 5 distinct n spanning two decades")
    if np.any(costs <= 0):
        raise DegenerateFitError("mean costs must be positive for a log-log fit")
    res = sps.linregress(np.log(ns), np.log(costs))
    return ExponentFit(float(res.slope), float(res.intercept), float(res.rvalue**2))


def fit_scaled_rate(values, rate) -> tuple[float, float]:
    """Fit ``values ~ C * rate`` in log space; return (C, r^2 of that fixed-slope model)."""
    lv = np.log(np.asarray(values, dtype=np.float64))
    lr = np.log(np.asarray(rate, dtype=np.float64))
    log_c = float(np.mean(lv - lr))
    resid = lv - (lr + log_c)
    total = np.sum((lv - lv.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / total) if total > 0 else math.nan
    return math.exp(log_c), r2


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def emit_csv(rows: Sequence[TrialStats], path) -> None:
    """Write sweep rows to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_rows(rows, path)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(rows, fh)


def _write_rows(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.alg] + [_fmt(getattr(r, col)) for col in CSV_HEADER[1:]])


_INT_COLUMNS = {"d", "n", "repeat_id", "trials", "fallback_count"}


def read_csv(path) -> list[TrialStats]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise PreconditionError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            rec = dict(zip(header, row))
            kwargs = {"alg": rec["alg"]}
            for col in CSV_HEADER[1:]:
                kwargs[col] = int(rec[col]) if col in _INT_COLUMNS else float(rec[col])
            out.append(TrialStats(**kwargs))
    return out


def write_metadata(spec: SweepSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    trials: int


def mc_sorted_uniform_cost(n: int, anchors, a_values: Sequence[float], trials: int, seed: SeedSpec | int,
                           chunk: int = 20_000) -> dict[float, MonteCarloEstimate]:
    """Monte Carlo of sum_i |U_(i) - anchors[i]|^a over sorted uniform samples.

    With ``anchors[i] = (i - 1/2)/n`` this is the cost of MV_1; with slab
    anchors it is the first phase of MV_d. All exponents share the samples.
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    if anchors.shape != (n,):
        raise PreconditionError("need one anchor per rank")
    gen = (seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))).generator()
    sums = {a: [] for a in a_values}
    squares = {a: [] for a in a_values}
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        dev = np.abs(np.sort(gen.random((k, n)), axis=1) - anchors[None, :])
        for a in a_values:
            cost = np.sum(dev**a, axis=1)
            sums[a].append(math.fsum(cost.tolist()))
            squares[a].append(math.fsum((cost * cost).tolist()))
        done += k
    out = {}
    for a in a_values:
        mean = math.fsum(sums[a]) / trials
        var = max(math.fsum(squares[a]) / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
        out[a] = MonteCarloEstimate(mean, math.sqrt(var / trials), trials)
    return out


def parse_n_list(text: str) -> list[int]:
    """Parse ``4,9,16``, ``LO..HI`` (inclusive), ``LO..HI^P`` (each value to the P), ``B^E`` or ``B^LO..HI``."""
    out: list[int] = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            if "^" in item:
                left, right = item.split("^", 1)
                if ".." in left:
                    lo, hi = (int(v) for v in left.split(".."))
                    out.extend(v ** int(right) for v in range(lo, hi + 1))
                elif ".." in right:
                    lo, hi = (int(v) for v in right.split(".."))
                    out.extend(int(left) ** e for e in range(lo, hi + 1))
                else:
                    out.append(int(left) ** int(right))
            elif ".." in item:
                lo, hi = (int(v) for v in item.split(".."))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(item))
        except ValueError:
            raise PreconditionError(f"cannot parse n-list item {item!r}") from None
    if not out:
        raise PreconditionError("empty n-list")
    return out
