"""Kernel-smoothed median and Wilcoxon rank-sum tests.

The smoothed median statistic replaces the indicator ``1{X_i < Z}`` of the
median count with ``K*((Z - X_i) / h)`` for a one-sided kernel, so it still
only looks at X observations below the combined median ``Z``.  The smoothed
Wilcoxon statistic replaces ``1{Y_j >= X_i}`` with ``K((Y_j - X_i) / h)``
for a symmetric kernel.  Both are referred to a normal distribution with
the large-sample null moments.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.optimize import minimize_scalar

from .exceptions import ConfigurationError
from .kernels import KernelSpec, get_kernel
from .rank_tests import TestResult, TwoSample, _combined_median

__all__ = [
    "BandwidthRule",
    "SmoothedConfig",
    "MEDIAN_RULES",
    "parse_bandwidth",
    "smoothed_median",
    "smoothed_wilcoxon",
    "smoothed_median_moments",
    "smoothed_wilcoxon_moments",
    "smoothed_median_test",
    "smoothed_wilcoxon_test",
    "default_bandwidth",
    "default_bootstrap_grid",
    "lscv_bandwidth",
    "bootstrap_bandwidth",
    "resolve_bandwidth",
]


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class BandwidthRule:
    """How the bandwidth ``h`` is chosen.

    ``kind`` is one of ``"fixed"`` (uses ``h``), ``"default"``
    (``N^{-1/4} / log N``) or ``"bootstrap"`` (smoothed-bootstrap calibration
    with ``L`` resamples at level ``alpha`` over ``grid``; an empty grid
    means the default 20-point log grid on ``[N^{-1/2}, N^{-1/8}]``).
    """

    kind: str = "default"
    h: float = None
    L: int = 1000
    alpha: float = 0.05
    grid: tuple = ()
    cv_kernel: str = "gaussian"

    def __post_init__(self):
        if self.kind == "fixed":
            if self.h is None or not self.h > 0 or not math.isfinite(self.h):
                raise ConfigurationError("fixed bandwidth needs h > 0")
        elif self.kind == "bootstrap":
            if not (isinstance(self.L, int) and self.L >= 1):
                raise ConfigurationError("bootstrap L must be a positive integer")
            if not 0 < self.alpha < 1:
                raise ConfigurationError("bootstrap alpha must lie in (0, 1)")
            grid = tuple(float(g) for g in self.grid)
            if any(not g > 0 for g in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigurationError("bootstrap grid must be positive and strictly increasing")
            object.__setattr__(self, "grid", grid)
            if get_kernel(self.cv_kernel).name != "gaussian":
                raise ConfigurationError("the bootstrap smoother supports the gaussian cv kernel only")
        elif self.kind != "default":
            raise ConfigurationError(f"unknown bandwidth rule {self.kind!r}")

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed:{self.h!r}"
        if self.kind == "default":
            return "default"
        return f"bootstrap:L={self.L},alpha={self.alpha!r}"


_FIXED = re.compile(r"^fixed:(?P<h>.+)$")
_BOOT = re.compile(r"^bootstrap(?::(?P<args>.*))?$")


def parse_bandwidth(text):
    """Parse ``"fixed:<h>"``, ``"default"`` or ``"bootstrap:L=<int>,alpha=<real>"``."""
    if isinstance(text, BandwidthRule):
        return text
    text = str(text).strip()
    if text == "default":
        return BandwidthRule("default")
    match = _FIXED.match(text)
    if match:
        try:
            h = float(match.group("h"))
        except ValueError:
            raise ConfigurationError(f"bad fixed bandwidth {text!r}") from None
        return BandwidthRule("fixed", h=h)
    match = _BOOT.match(text)
    if match:
        kwargs = {}
        args = match.group("args") or ""
        for part in filter(None, (p.strip() for p in args.split(","))):
            key, _, value = part.partition("=")
            try:
                if key == "L":
                    kwargs["L"] = int(value)
                elif key == "alpha":
                    kwargs["alpha"] = float(value)
                else:
                    raise ConfigurationError(f"unknown bootstrap option {key!r}")
            except ValueError:
                raise ConfigurationError(f"bad bootstrap option {part!r}") from None
        return BandwidthRule("bootstrap", **kwargs)
    raise ConfigurationError(f"cannot parse bandwidth rule {text!r}")


MEDIAN_RULES = ("average", "lower")


@dataclass(frozen=True)
class SmoothedConfig:
    """Kernel, bandwidth rule and even-N median convention of a smoothed test.

    ``median_rule`` only matters for the smoothed median with even ``N``:
    ``"average"`` centres at the mean of the middle pair, ``"lower"`` at the
    order statistic ``Z_(N/2)``.
    """

    kernel: KernelSpec
    bandwidth: BandwidthRule = field(default_factory=BandwidthRule)
    median_rule: str = "average"

    def __post_init__(self):
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        object.__setattr__(self, "bandwidth", parse_bandwidth(self.bandwidth))
        _check_rule(self.median_rule)


def _check_rule(rule):
    if rule not in MEDIAN_RULES:
        raise ConfigurationError(f"unknown median rule {rule!r}; choose from {', '.join(MEDIAN_RULES)}")
    return rule


def _centre(x, y, rule="average"):
    if rule == "average":
        return _combined_median(x, y)
    z = np.sort(np.concatenate([x, y], axis=-1), axis=-1)
    return z[..., (z.shape[-1] - 1) // 2]


def _require_sided(kernel, one_sided, what):
    kernel = get_kernel(kernel)
    if kernel.one_sided != one_sided:
        need = "a one-sided" if one_sided else "a symmetric"
        raise ConfigurationError(
            f"{what} needs {need} kernel; {kernel.name!r} is {kernel.sided.replace('_', '-')}"
        )
    return kernel


def _check_h(h):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise ValueError("bandwidth must be positive")
    return h


# -- statistics -------------------------------------------------------------------


def _smoothed_median(x, y, kernel, h, z=None, rule="average"):
    # h may be scalar or an array broadcasting against the trailing axes
    if z is None:
        z = _centre(x, y, rule)
    d = np.asarray(z)[..., None] - x
    h = np.asarray(h, dtype=float)
    if h.ndim == 0:
        return kernel.antiderivative(d / h).sum(axis=-1)
    return kernel.antiderivative(d[..., None] / h).sum(axis=-2)


def _smoothed_wilcoxon(x, y, kernel, h):
    d = y[..., None, :] - x[..., :, None]
    return kernel.antiderivative(d / h).sum(axis=(-2, -1))


def smoothed_median(sample, kernel, h, median_rule="average"):
    """Smoothed median statistic ``sum_i K*((Z - X_i) / h)``.

    ``Z`` is the combined median; for even ``N`` and ``median_rule="lower"``
    it is the lower middle order statistic instead.

    Raises
    ------
    ConfigurationError
        If ``kernel`` is not one-sided.
    """
    kernel = _require_sided(kernel, True, "the smoothed median")
    h = float(_check_h(h))
    return float(_smoothed_median(sample.xs, sample.ys, kernel, h, rule=_check_rule(median_rule)))


def smoothed_wilcoxon(sample, kernel, h):
    """Smoothed Wilcoxon statistic ``sum_i sum_j K((Y_j - X_i) / h)``."""
    kernel = _require_sided(kernel, False, "the smoothed Wilcoxon statistic")
    h = float(_check_h(h))
    return float(_smoothed_wilcoxon(sample.xs, sample.ys, kernel, h))


def smoothed_median_moments(m, n):
    """Null standardization ``E1 = (m/2)(1 - 1/N)``, ``V1 = mn / (4N)``."""
    N = m + n
    return 0.5 * m * (1.0 - 1.0 / N), m * n / (4.0 * N)


def smoothed_wilcoxon_moments(m, n):
    """Null standardization ``E2 = mn/2``, ``V2 = mn N / 12``."""
    return 0.5 * m * n, m * n * (m + n) / 12.0


def _result(method, stat, mean, var, ties):
    z = (stat - mean) / math.sqrt(var)
    return TestResult(method, stat, mean, var, z, float(special.ndtr(-z)), "normal_approx", ties)


def smoothed_median_test(sample, config, rng=None):
    """Normal-approximation test based on :func:`smoothed_median`.

    ``rng`` is only needed for a bootstrap bandwidth rule.
    """
    kernel = _require_sided(config.kernel, True, "the smoothed median")
    h = resolve_bandwidth(config.bandwidth, sample, "median", kernel, rng, config.median_rule)
    stat = float(_smoothed_median(sample.xs, sample.ys, kernel, h, rule=config.median_rule))
    mean, var = smoothed_median_moments(sample.m, sample.n)
    return _result("smoothed_median", stat, mean, var, sample.has_ties())


def smoothed_wilcoxon_test(sample, config, rng=None):
    """Normal-approximation test based on :func:`smoothed_wilcoxon`."""
    kernel = _require_sided(config.kernel, False, "the smoothed Wilcoxon statistic")
    h = resolve_bandwidth(config.bandwidth, sample, "wilcoxon", kernel, rng)
    stat = float(_smoothed_wilcoxon(sample.xs, sample.ys, kernel, h))
    mean, var = smoothed_wilcoxon_moments(sample.m, sample.n)
    return _result("smoothed_wilcoxon", stat, mean, var, sample.has_ties())


# -- bandwidths -------------------------------------------------------------------


def default_bandwidth(N):
    """``N^{-1/4} / ln N``, defined for ``N >= 3``."""
    if N < 3:
        raise ValueError("default bandwidth needs N >= 3")
    return N ** -0.25 / math.log(N)


def default_bootstrap_grid(N, size=20):
    """Log-spaced candidate bandwidths on ``[N^{-1/2}, N^{-1/8}]``."""
    return tuple(np.geomspace(N ** -0.5, N ** -0.125, size))


def _lscv_score(log_b, diffs2, n):
    b2 = math.exp(2.0 * log_b)
    # Gaussian LSCV: int fhat^2 - (2/n) sum_i fhat_{-i}(X_i)
    conv = np.exp(-diffs2 / (4.0 * b2)).sum() / (n * n * math.sqrt(4.0 * math.pi * b2))
    off = (np.exp(-diffs2 / (2.0 * b2)).sum() - n) / (n * (n - 1) * math.sqrt(2.0 * math.pi * b2))
    return conv - 2.0 * off


def lscv_bandwidth(data, grid_size=60):
    """Least-squares cross-validation bandwidth of a Gaussian kernel density.

    The score is minimized over a log-spaced grid spanning two orders of
    magnitude around a robust normal-reference scale and then refined by
    golden-section search on the bracketing cell.
    """
    x = np.asarray(data, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise ValueError("LSCV needs at least two observations")
    diffs2 = (x[:, None] - x[None, :]) ** 2
    q75, q25 = np.percentile(x, [75, 25])
    scale = min(np.std(x, ddof=1), (q75 - q25) / 1.349) or np.std(x, ddof=1)
    if not scale > 0:
        raise ValueError("LSCV needs non-constant data")
    ref = 1.06 * scale * n ** -0.2
    logs = np.linspace(math.log(ref) - math.log(100.0), math.log(ref) + math.log(3.0), grid_size)
    scores = np.array([_lscv_score(lb, diffs2, n) for lb in logs])
    i = int(np.argmin(scores))
    lo, hi = logs[max(i - 1, 0)], logs[min(i + 1, grid_size - 1)]
    if hi > lo:
        res = minimize_scalar(_lscv_score, bounds=(lo, hi), args=(diffs2, n),
                              method="bounded", options={"xatol": 1e-6})
        if res.fun <= scores[i]:
            return math.exp(res.x)
    return math.exp(logs[i])


def _middle_minimizer(grid, losses):
    losses = np.asarray(losses)
    ties = np.flatnonzero(losses == losses.min())
    return float(grid[ties[(ties.size - 1) // 2]])


def bootstrap_bandwidth(pooled, which, m, n, rule, test_kernel, rng, median_rule="average"):
    """Smoothed-bootstrap calibration of the bandwidth.

    A Gaussian kernel estimate of the pooled distribution, with an LSCV
    bandwidth ``b``, is resampled ``rule.L`` times (``X* = pooled[J] +
    b * eps``).  Each resample is split into a pseudo X sample (first ``m``)
    and pseudo Y sample (last ``n``), and the standardized smoothed
    statistic is computed for every candidate ``h``.  The returned ``h``
    minimizes ``(rejections - L * alpha)^2``; among tied minimizers the
    middle one (lower middle for an even count) is chosen.

    Parameters
    ----------
    pooled : array_like
        The ``m + n`` observed values.
    which : {"median", "wilcoxon"}
    m, n : int
    rule : BandwidthRule
        Must have ``kind == "bootstrap"``.
    test_kernel : KernelSpec
        Kernel of the statistic being calibrated.
    rng : numpy.random.Generator
    median_rule : {"average", "lower"}
        Even-N centring of the smoothed median, see :class:`SmoothedConfig`.
    """
    if rule.kind != "bootstrap":
        raise ConfigurationError("bootstrap_bandwidth needs a bootstrap rule")
    pooled = np.asarray(pooled, dtype=float).ravel()
    N = m + n
    if pooled.size != N:
        raise ValueError(f"pooled sample has {pooled.size} values, expected {N}")
    grid = np.asarray(rule.grid or default_bootstrap_grid(N), dtype=float)
    if grid.size == 0:
        raise ConfigurationError("empty bandwidth grid")
    if grid.size == 1:
        return float(grid[0])
    test_kernel = _require_sided(test_kernel, which == "median", f"the smoothed {which} statistic")

    b = lscv_bandwidth(pooled)
    L = rule.L
    idx = rng.integers(0, N, size=(L, N))
    star = pooled[idx] + b * rng.standard_normal((L, N))
    xs, ys = star[:, :m], star[:, m:]
    if which == "median":
        stats = _smoothed_median(xs, ys, test_kernel, grid, rule=median_rule)  # (L, G)
        mean, var = smoothed_median_moments(m, n)
    elif which == "wilcoxon":
        stats = np.stack([_smoothed_wilcoxon(xs, ys, test_kernel, h) for h in grid], axis=-1)
        mean, var = smoothed_wilcoxon_moments(m, n)
    else:
        raise ValueError(f"unknown statistic {which!r}")
    crit = special.ndtri(1.0 - rule.alpha)
    rejections = ((stats - mean) / math.sqrt(var) > crit).sum(axis=0)
    return _middle_minimizer(grid, (rejections - L * rule.alpha) ** 2)


def resolve_bandwidth(rule, sample, which, kernel, rng=None, median_rule="average"):
    """Concrete bandwidth for ``sample`` under ``rule``."""
    rule = parse_bandwidth(rule)
    if rule.kind == "fixed":
        return rule.h
    if rule.kind == "default":
        return default_bandwidth(sample.N)
    if rng is None:
        raise ConfigurationError("a bootstrap bandwidth needs a random generator")
    return bootstrap_bandwidth(sample.pooled, which, sample.m, sample.n, rule, kernel, rng, median_rule)
