"""Expected displacement costs from uniform order statistics.

The i-th smallest of n uniforms has density
``i C(n, i) x^(i-1) (1-x)^(n-i)`` on [0, 1]; expected costs are integrals of
``|x - anchor|^a`` against it. They are evaluated in batches with an adaptive
Gauss-Kronrod (7/15) rule, always splitting at the anchor where the integrand
has a kink. Binomial normalisations go through log-gamma so n in the
thousands does not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .algorithms import LvParams
from .core import AnchorGrid, exact_root
from .errors import PreconditionError, QuadratureError

# Kronrod 15-point nodes on [-1, 1] (QUADPACK qk15); the odd-indexed ones
# below, together with 0, are the 7-point Gauss nodes.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.0, 0.129484966168869693270611432679082,
    0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975,
    0.0, 0.417959183673469387755102040816327,
])

NODES = np.concatenate((-_XK[:-1], _XK[::-1]))
W_KRONROD = np.concatenate((_WK[:-1], _WK[::-1]))
W_GAUSS = np.concatenate((_WG[:-1], _WG[::-1]))


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    kink_split: bool = True

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise PreconditionError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_subdivisions < 1:
            raise PreconditionError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class OrderStatSpec:
    n: int
    i: int

    def __post_init__(self):
        if not 1 <= self.i <= self.n:
            raise PreconditionError(f"rank i must be in 1..n, got n={self.n}, i={self.i}")

    def log_normalizer(self) -> float:
        """log(i C(n, i)) = -log B(i, n - i + 1)."""
        return -log_beta_function(self.i, self.n - self.i + 1)

    def density(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(_log_density(x, self.n, self.i, self.log_normalizer()))


def log_beta_function(alpha: float, beta: float) -> float:
    if not (alpha > 0 and beta > 0):
        raise PreconditionError(f"Beta function needs positive arguments, got ({alpha}, {beta})")
    return math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)


def beta_function(alpha: float, beta: float) -> float:
    """Euler Beta function B(alpha, beta) via log-gamma."""
    return math.exp(log_beta_function(alpha, beta))


def _log_density(x, n, i, log_norm):
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(i > 1, (i - 1) * np.log(x), 0.0)
        right = np.where(n > i, (n - i) * np.log1p(-x), 0.0)
    return log_norm + left + right


def _initial_breaks(n: int, i: np.ndarray, anchor: np.ndarray, cfg: QuadratureConfig) -> list[np.ndarray]:
    """Per-integral sorted breakpoints in [0, 1]."""
    cols = [np.zeros_like(anchor), np.ones_like(anchor)]
    if cfg.kink_split:
        cols.append(anchor)
    half_width = 20.0 / math.sqrt(n)
    centre = i / n
    cols.append(np.clip(centre - half_width, 0.0, 1.0))
    cols.append(np.clip(centre + half_width, 0.0, 1.0))
    table = np.sort(np.stack(cols, axis=1), axis=1)
    return [np.unique(row) for row in table]


def expected_anchor_costs(n: int, ranks, anchors, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """E|X_(i) - anchor|^a for many ranks of the same sample size at once.

    ``a = 0`` is accepted and integrates the density itself.
    """
    ranks = np.atleast_1d(np.asarray(ranks, dtype=np.int64))
    anchors = np.atleast_1d(np.asarray(anchors, dtype=np.float64))
    ranks, anchors = np.broadcast_arrays(ranks, anchors)
    if n < 1 or np.any(ranks < 1) or np.any(ranks > n):
        raise PreconditionError(f"ranks must lie in 1..n (n = {n})")
    if np.any(anchors < 0) or np.any(anchors > 1):
        raise PreconditionError("anchors must lie in [0, 1]")
    if a < 0:
        raise PreconditionError(f"exponent a must be positive, got {a}")
    q = len(ranks)
    log_norm = np.array([-log_beta_function(int(i), n - int(i) + 1) for i in ranks])
    i_f = ranks.astype(np.float64)

    breaks = _initial_breaks(n, i_f, anchors, cfg)
    lo = np.concatenate([b[:-1] for b in breaks])
    hi = np.concatenate([b[1:] for b in breaks])
    owner = np.concatenate([np.full(len(b) - 1, k, dtype=np.int64) for k, b in enumerate(breaks)])

    def rule(lo, hi, owner):
        centre = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = centre[:, None] + half[:, None] * NODES[None, :]
        ii = i_f[owner][:, None]
        fx = np.abs(x - anchors[owner][:, None]) ** a * np.exp(_log_density(x, n, ii, log_norm[owner][:, None]))
        kron = half * (fx @ W_KRONROD)
        gauss = half * (fx @ W_GAUSS)
        return kron, np.abs(kron - gauss)

    val, err = rule(lo, hi, owner)
    for _ in range(10_000):
        total = np.bincount(owner, weights=val, minlength=q)
        error = np.bincount(owner, weights=err, minlength=q)
        pieces = np.bincount(owner, minlength=q)
        pending = error > np.maximum(cfg.rel_tol * np.abs(total), 1e-300)
        if not pending.any():
            return total
        if np.any(pieces[pending] >= cfg.max_subdivisions):
            bad = int(np.flatnonzero(pending & (pieces >= cfg.max_subdivisions))[0])
            raise QuadratureError(
                f"quadrature for n={n}, i={int(ranks[bad])}, anchor={anchors[bad]!r}, a={a} "
                f"did not reach rel_tol={cfg.rel_tol} within {cfg.max_subdivisions} subdivisions"
            )
        budget = cfg.rel_tol * np.abs(total) / pieces
        split = pending[owner] & (err > budget[owner])
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate((lo[split], mid))
        new_hi = np.concatenate((mid, hi[split]))
        new_owner = np.concatenate((owner[split], owner[split]))
        nv, ne = rule(new_lo, new_hi, new_owner)
        keep = ~split
        lo = np.concatenate((lo[keep], new_lo))
        hi = np.concatenate((hi[keep], new_hi))
        owner = np.concatenate((owner[keep], new_owner))
        val = np.concatenate((val[keep], nv))
        err = np.concatenate((err[keep], ne))
    raise QuadratureError("adaptive quadrature did not terminate")


def expected_anchor_cost(spec: OrderStatSpec, anchor: float, a: float,
                         cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E|X_(i) - anchor|^a for a single order statistic."""
    if not a > 0:
        raise PreconditionError(f"exponent a must be positive, got {a}")
    return float(expected_anchor_costs(spec.n, [spec.i], [anchor], a, cfg)[0])


def order_stat_mass(n: int, ranks, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Integral of the order-statistic densities over [0, 1] (should be 1)."""
    ranks = np.atleast_1d(ranks)
    return expected_anchor_costs(n, ranks, np.full(len(ranks), 0.5), 0.0, cfg)


def d_total(n: int, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Expected a-total movement of MV_1 with n sensors on [0, 1]."""
    if n < 1:
        raise PreconditionError(f"need n >= 1, got {n}")
    ranks = np.arange(1, n + 1)
    anchors = AnchorGrid(1, 1.0, n).coordinate(ranks)
    return math.fsum(expected_anchor_costs(n, ranks, anchors, a, cfg).tolist())


def phase1_cost(n: int, d: int, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Expected a-total movement of the first sorting phase of MV_d (unit cube)."""
    m = exact_root(n, d)
    if m is None:
        raise PreconditionError(f"phase1_cost needs n to be a perfect {d}-th power, got n = {n}")
    ranks = np.arange(1, n + 1)
    blocks = (ranks - 1) // m ** (d - 1) + 1
    anchors = AnchorGrid(1, 1.0, m).coordinate(blocks)
    return math.fsum(expected_anchor_costs(n, ranks, anchors, a, cfg).tolist())


def recursive_expected_cost(n: int, d: int, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE,
                            y: float = 1.0) -> float:
    """Expected a-total movement of MV_d on ``[0, y]^d`` (all phases).

    Level k of the recursion consists of m^k independent instances of
    dimension d - k with m^(d-k) uniform sensors each.
    """
    m = exact_root(n, d)
    if m is None:
        raise PreconditionError(f"recursive_expected_cost needs n to be a perfect {d}-th power, got n = {n}")
    levels = [m**k * phase1_cost(m ** (d - k), d - k, a, cfg) for k in range(d)]
    return y**a * math.fsum(levels)


def mv_rate(n, d: int, a: float):
    """n^(1 - a/(2d))."""
    return np.power(n, 1.0 - a / (2.0 * d))


def lv_rate(n, d: int, a: float):
    """n^(1 - a/(2d)) (ln n / n)^(a/(2d))."""
    n = np.asarray(n, dtype=np.float64)
    return np.power(n, 1.0 - a / (2.0 * d)) * np.power(np.log(n) / n, a / (2.0 * d))


def lv_factor_threshold(d: int) -> float:
    """3^(3/d) / (3^(1/d) - 1)^2."""
    t = 3.0 ** (1.0 / d)
    return 3.0 ** (3.0 / d) / ((t - 1.0) * (t - 1.0))


def solve_x0(p: float) -> float:
    """Root x >= 3 of x / (p ln x) = 3, i.e. of x - 3 p ln x = 0, by bisection on [3, 1e6]."""
    g = lambda x: x - 3.0 * p * math.log(x)
    lo, hi = 3.0, 1e6
    if g(lo) >= 0:
        # x - 3p ln x is already non-negative at 3 only when 3p ln 3 <= 3
        return lo
    if g(hi) <= 0:
        raise PreconditionError(f"no root of x = 3 p ln x below 1e6 for p = {p}")
    return bisect(g, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=400)


def lv_constants(a: float, d: int, f: float | None = None) -> LvParams:
    """Constants p, A, x0 and the radius-factor threshold of LV_d."""
    if not a > 0:
        raise PreconditionError(f"exponent a must be positive, got {a}")
    if d < 2:
        raise PreconditionError(f"LV needs d >= 2, got d = {d}")
    A = 0.75 * (2.0 + a / d)
    p = 3.0 * A
    threshold = lv_factor_threshold(d)
    return LvParams(a=a, d=d, f=threshold if f is None else float(f), p=p, A=A,
                    x0=solve_x0(p), f_threshold=threshold)
