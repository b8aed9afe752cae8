"""Empirical analysis of simulated networks.

Distribution estimation, discrete power-law fitting with an ``x_min`` scan,
Zipf maximum likelihood, log-log growth regression and births-per-tick
summaries. Everything is a pure function of its inputs (plus a seed for the
samplers, which all draw from :class:`~spawnnet.prng.SplitMix64`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .prng import SplitMix64

MIN_TAIL = 50
MIN_SCAN_SAMPLES = 100


class DegenerateSampleError(ValueError):
    """The sample carries no spread to estimate an exponent from."""


class FitConvergenceError(RuntimeError):
    pass


# -- empirical distributions -------------------------------------------------


@dataclass(frozen=True)
class EmpiricalDistribution:
    values: np.ndarray  # distinct, ascending
    counts: np.ndarray
    total: int

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.counts)

    def ecdf(self, x) -> np.ndarray | float:
        """Fraction of samples ``<= x`` (right-continuous)."""
        idx = np.searchsorted(self.values, x, side="right")
        cum = np.concatenate(([0], self.cumulative))
        out = cum[idx] / self.total
        return float(out) if np.ndim(out) == 0 else out

    def survival(self, x) -> np.ndarray | float:
        """Fraction of samples ``> x``."""
        return 1.0 - self.ecdf(x)

    def pmf(self) -> np.ndarray:
        return self.counts / self.total

    def survival_points(self) -> list[tuple[int, float]]:
        """``(x, P[X >= x])`` at every distinct value, for log-log plots."""
        cum = np.concatenate(([0], self.cumulative[:-1]))
        tail = (self.total - cum) / self.total
        return list(zip(self.values.tolist(), tail.tolist()))


def build_empirical(values) -> EmpiricalDistribution:
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empirical distribution needs at least one sample")
    if np.any(values <= 0):
        raise ValueError("samples must be positive")
    distinct, counts = np.unique(values, return_counts=True)
    return EmpiricalDistribution(distinct, counts.astype(np.int64), int(values.size))


def sample_empirical(dist: EmpiricalDistribution, count: int, seed: int) -> np.ndarray:
    """Inverse-CDF draws: ``k = floor(u * total)`` picks the k-th sorted sample."""
    u = SplitMix64(seed).uniform(count)
    k = np.floor(u * dist.total).astype(np.int64)
    idx = np.searchsorted(dist.cumulative, k, side="right")
    return dist.values[idx]


def degree_set_fractions(degrees) -> dict[int, float]:
    """Share of nodes at each degree, for every q from 1 to the maximum."""
    degrees = np.asarray(degrees, dtype=np.int64)
    if degrees.size == 0:
        raise ValueError("no degrees given")
    if degrees.min() < 1:
        raise ValueError("degrees must be >= 1")
    counts = np.bincount(degrees)
    return {q: counts[q] / degrees.size for q in range(1, len(counts))}


# -- discrete power law --------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    x_min: int
    alpha: float
    ks_distance: float
    tail_count: int


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: float
    ks_distance: float
    normalization: float
    tail_count: int
    method: str = "exact"
    alpha_approx: float | None = None
    scan: list[ScanRow] = field(default_factory=list, repr=False)

    def pmf(self, k) -> np.ndarray:
        return self.normalization * np.asarray(k, dtype=np.float64) ** -self.alpha


def _tail(samples, x_min) -> tuple[np.ndarray, np.ndarray]:
    samples = np.asarray(samples)
    tail = samples[samples >= x_min]
    if tail.size < MIN_TAIL:
        raise ValueError(f"only {tail.size} samples >= x_min={x_min}; need at least {MIN_TAIL}")
    values, counts = np.unique(tail, return_counts=True)
    if values.size == 1:
        raise DegenerateSampleError(f"every tail sample equals {values[0]}; exponent diverges")
    return values, counts


def _hurwitz_cdf(alpha: float, x_min: int, x: np.ndarray) -> np.ndarray:
    return 1.0 - special.zeta(alpha, x + 1.0) / special.zeta(alpha, x_min)


def _ks_discrete(values: np.ndarray, counts: np.ndarray, alpha: float, x_min: int) -> float:
    emp = np.cumsum(counts) / counts.sum()
    # Between observed values the empirical CDF is flat and the model rises,
    # so the sup is attained at an observed value or just before the next one.
    at = _hurwitz_cdf(alpha, x_min, values.astype(np.float64))
    gaps = values[1:] - 1
    before = _hurwitz_cdf(alpha, x_min, gaps.astype(np.float64))
    d = max(np.abs(emp - at).max(), np.abs(emp[:-1] - before).max(initial=0.0))
    return float(min(d, 1.0))


def _ks_continuous(values: np.ndarray, counts: np.ndarray, alpha: float, x_min: float) -> float:
    n = counts.sum()
    model = 1.0 - (values / x_min) ** (1.0 - alpha)
    hi = np.cumsum(counts) / n
    lo = hi - counts / n
    return float(max(np.abs(hi - model).max(), np.abs(model - lo).max()))


def fit_power_law_mle(samples, x_min, method: str = "exact") -> PowerLawFit:
    """Fit ``p_k = C k^-alpha`` to the samples ``>= x_min``.

    ``method``:

    * ``"approx"``: the closed-form discrete estimator
      ``1 + m / sum(ln(x / (x_min - 1/2)))``;
    * ``"exact"`` (default): the discrete MLE with Hurwitz-zeta normalization,
      started from the approximate value. The closed form is badly biased
      for small ``x_min`` (about -0.4 at ``x_min = 1``), the exact one is not;
    * ``"continuous"``: ``1 + m / sum(ln(x / x_min))`` for real-valued data.
    """
    values, counts = _tail(samples, x_min)
    m = int(counts.sum())
    log_values = np.log(values.astype(np.float64))
    if method == "continuous":
        alpha = 1.0 + m / float(counts @ (log_values - math.log(x_min)))
        return PowerLawFit(
            alpha=alpha,
            x_min=x_min,
            ks_distance=_ks_continuous(values, counts, alpha, x_min),
            normalization=(alpha - 1.0) * x_min ** (alpha - 1.0),
            tail_count=m,
            method=method,
        )
    if x_min < 1 or int(x_min) != x_min:
        raise ValueError("discrete fits need an integer x_min >= 1")
    x_min = int(x_min)
    approx = 1.0 + m / float(counts @ (log_values - math.log(x_min - 0.5)))
    if method == "approx":
        alpha = approx
    elif method == "exact":
        sum_log = float(counts @ log_values)

        def nll(a: float) -> float:
            return a * sum_log + m * math.log(special.zeta(a, x_min))

        hi = max(2 * approx, 10.0)
        res = optimize.minimize_scalar(nll, bounds=(1.0 + 1e-9, hi), method="bounded", options={"xatol": 1e-10})
        if not res.success:
            raise FitConvergenceError(f"power-law MLE did not converge: {res.message}")
        alpha = float(res.x)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PowerLawFit(
        alpha=alpha,
        x_min=x_min,
        ks_distance=_ks_discrete(values, counts, alpha, x_min),
        normalization=1.0 / float(special.zeta(alpha, x_min)),
        tail_count=m,
        method=method,
        alpha_approx=approx,
    )


def scan_xmin(samples, method: str = "exact", candidates=None) -> PowerLawFit:
    """Choose ``x_min`` by minimum KS distance, keeping the whole scan curve.

    Candidates default to every distinct sample value that leaves at least
    ``MIN_TAIL`` samples in the tail; degenerate tails are skipped.
    """
    samples = np.asarray(samples)
    if samples.size < MIN_SCAN_SAMPLES:
        raise ValueError(f"x_min scan needs at least {MIN_SCAN_SAMPLES} samples")
    if candidates is None:
        values, counts = np.unique(samples, return_counts=True)
        tail_sizes = samples.size - np.concatenate(([0], np.cumsum(counts)[:-1]))
        candidates = values[tail_sizes >= MIN_TAIL].tolist()
    rows: list[ScanRow] = []
    best: PowerLawFit | None = None
    for x_min in candidates:
        try:
            fit = fit_power_law_mle(samples, x_min, method=method)
        except DegenerateSampleError:
            continue
        rows.append(ScanRow(int(x_min), fit.alpha, fit.ks_distance, fit.tail_count))
        if best is None or fit.ks_distance < best.ks_distance:
            best = fit
    if best is None:
        raise DegenerateSampleError("no x_min candidate left a usable tail")
    return PowerLawFit(**{**best.__dict__, "scan": rows})


def sample_discrete_power_law(alpha: float, x_min: int, count: int, seed: int, table_size: int = 1 << 20) -> np.ndarray:
    """Exact inverse-CDF draws from ``P(k) = k^-alpha / zeta(alpha, x_min)``, ``k >= x_min``.

    The CDF is tabulated over ``table_size`` integers; the remaining tail
    mass is drawn from the continuous survival ``(x - 1/2)^(1-alpha)``.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    u = SplitMix64(seed).uniform(count)
    k = np.arange(x_min, x_min + table_size, dtype=np.float64)
    cdf = np.cumsum(k**-alpha) / special.zeta(alpha, x_min)
    idx = np.searchsorted(cdf, u, side="right")
    out = k[np.minimum(idx, table_size - 1)]
    beyond = idx >= table_size
    if beyond.any():
        top = x_min + table_size - 0.5
        surv = (1.0 - u[beyond]) / (1.0 - cdf[-1])
        out[beyond] = np.floor(top * surv ** (1.0 / (1.0 - alpha)) + 0.5)
    return out.astype(np.int64)


def sample_continuous_power_law(alpha: float, x_min: float, count: int, seed: int) -> np.ndarray:
    u = SplitMix64(seed).uniform(count)
    return x_min * (1.0 - u) ** (-1.0 / (alpha - 1.0))


# -- Zipf --------------------------------------------------------------------


@dataclass(frozen=True)
class ZipfFit:
    rho: float
    support_n: int
    log_likelihood: float
    degenerate: bool = False
    iterations: int = 0


def _zipf_norm(s: float, n: int) -> float:
    k = np.arange(n, 0, -1, dtype=np.float64)  # small terms first
    return float(np.sum(k**-s))


def zipf_pmf(x, rho: float, support_n: int):
    """``x^-(rho+1) / sum_{i<=n} i^-(rho+1)``."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    xs = np.asarray(x)
    if np.any(xs < 1) or np.any(xs > support_n):
        raise ValueError(f"x outside support 1..{support_n}")
    s = rho + 1.0
    out = xs.astype(np.float64) ** -s / _zipf_norm(s, support_n)
    return float(out) if out.ndim == 0 else out


def _zipf_mean_log(s: float, log_k: np.ndarray) -> float:
    w = np.exp(-s * log_k)
    return float((w @ log_k) / w.sum())


def zipf_log_likelihood(values, counts, rho: float, support_n: int) -> float:
    s = rho + 1.0
    return float(-s * (counts @ np.log(values)) - counts.sum() * math.log(_zipf_norm(s, support_n)))


def fit_zipf_mle(samples, support_n: int | None = None, tol: float = 1e-6, max_iter: int = 200) -> ZipfFit:
    """Maximize the Zipf likelihood in ``rho`` by bisection on the score.

    The score is ``m * (E_rho[ln X] - mean ln x)``; ``E_rho[ln X]`` falls
    monotonically in ``rho``, so the root is bracketed by doubling and then
    halved down to ``tol``. ``support_n`` defaults to the largest sample.
    """
    samples = np.asarray(samples, dtype=np.int64)
    if samples.size == 0:
        raise ValueError("no samples")
    if support_n is None:
        support_n = int(samples.max())
    if samples.min() < 1 or samples.max() > support_n:
        raise ValueError(f"samples outside support 1..{support_n}")
    values, counts = np.unique(samples, return_counts=True)
    values = values.astype(np.float64)
    if values.size == 1:
        rho = 0.0 if values[0] > 1 else math.inf
        ll = 0.0 if math.isinf(rho) else zipf_log_likelihood(values, counts, rho, support_n)
        return ZipfFit(rho, support_n, ll, degenerate=True)
    target = float(counts @ np.log(values)) / samples.size
    log_k = np.log(np.arange(1, support_n + 1, dtype=np.float64))
    it = 0
    if _zipf_mean_log(1.0, log_k) <= target:
        rho = 0.0
    else:
        lo, hi = 0.0, 1.0
        while _zipf_mean_log(hi + 1.0, log_k) > target:
            lo, hi = hi, 2 * hi
            it += 1
            if it > max_iter:
                raise FitConvergenceError("could not bracket the Zipf score root")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _zipf_mean_log(mid + 1.0, log_k) > target:
                lo = mid
            else:
                hi = mid
            it += 1
            if it > max_iter:
                raise FitConvergenceError(f"Zipf bisection stalled at [{lo}, {hi}]")
        rho = 0.5 * (lo + hi)
    return ZipfFit(rho, support_n, zipf_log_likelihood(values, counts, rho, support_n), iterations=it)


def sample_zipf(rho: float, support_n: int, count: int, seed: int) -> np.ndarray:
    """Inverse-CDF draws from the finite Zipf distribution."""
    u = SplitMix64(seed).uniform(count)
    k = np.arange(1, support_n + 1, dtype=np.float64)
    cdf = np.cumsum(k ** -(rho + 1.0))
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right") + 1, support_n)


# -- growth and births -----------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    amplitude: float
    exponent: float
    r_squared: float
    points_used: int
    zeros_excluded: int


def fit_growth_power_law(ticks, counts) -> GrowthFit:
    """Least squares of ``log y`` on ``log t``; zero counts are dropped and counted."""
    t = np.asarray(ticks, dtype=np.float64)
    y = np.asarray(counts, dtype=np.float64)
    if t.shape != y.shape:
        raise ValueError("ticks and counts differ in length")
    if np.any(t <= 0) or np.any(y < 0):
        raise ValueError("ticks must be positive and counts non-negative")
    keep = y > 0
    if keep.sum() < 2:
        raise ValueError("need at least two positive points")
    lt, ly = np.log(t[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return GrowthFit(math.exp(intercept), float(slope), r2, int(keep.sum()), int((~keep).sum()))


@dataclass(frozen=True)
class BirthSeriesSummary:
    mean: float
    std: float
    max: int
    zero_ticks: int
    window: tuple[int, int]
    tick_count: int
    total_births: int


def births_summary(births_per_tick, window: tuple[int, int] | None = None) -> BirthSeriesSummary:
    """Mean, population std, max and zero-birth count over an inclusive tick window."""
    rows = np.asarray(births_per_tick, dtype=np.int64).reshape(-1, 2)
    if rows.size == 0:
        raise ValueError("empty births series")
    ticks, counts = rows[:, 0], rows[:, 1]
    if window is None:
        window = (int(ticks[0]), int(ticks[-1]))
    lo, hi = window
    if lo > hi or lo < ticks[0] or hi > ticks[-1]:
        raise ValueError(f"window {window} outside run range {int(ticks[0])}..{int(ticks[-1])}")
    sel = counts[(ticks >= lo) & (ticks <= hi)]
    return BirthSeriesSummary(
        mean=float(sel.mean()),
        std=float(sel.std()),
        max=int(sel.max()),
        zero_ticks=int((sel == 0).sum()),
        window=(int(lo), int(hi)),
        tick_count=int(sel.size),
        total_births=int(sel.sum()),
    )


def population_series(result) -> tuple[np.ndarray, np.ndarray]:
    """Total node count at the end of every swept tick."""
    ticks, births = result.births_series()
    return ticks, 2 + np.cumsum(births)


def degree_set_series(result, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Size of the degree-``q`` set at the end of every swept tick."""
    ticks, _ = result.births_series()
    if not len(ticks):
        return ticks, np.zeros(0, dtype=np.int64)
    first = ticks[0]
    delta = np.zeros(len(ticks), dtype=np.int64)
    t = result.event_tick - first
    after = result.event_parent_degree
    np.add.at(delta, t, (after == q).astype(np.int64) - (after - 1 == q))
    if q == 1:
        np.add.at(delta, t, 1)  # newborn child
    start = 2 if q == 1 else 0
    return ticks, start + np.cumsum(delta)
