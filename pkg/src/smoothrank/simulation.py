"""Seeded Monte-Carlo experiments for the two-sample tests.

Every replication draws its data from its own counter-based stream,
``Philox(key=cell key, counter=(0, 0, rep, 0))``, where the cell key is
derived from ``(seed, cell index)``.  Replications are processed in fixed
chunks of :data:`CHUNK` and the per-chunk rejection counts are summed, so
the output does not depend on the number of worker processes.

Within a replication every test sees the same ``(X, Y)`` draw, and the
shifts ``theta`` of one cell are applied to the same base draw.
"""

import csv
import hashlib
import io
import json
import math
import re
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import special

from .distributions import DistributionModel, get_model, hypergeom_tail
from .exceptions import ConfigurationError
from .kernels import get_kernel
from .rank_tests import (
    _median_counts,
    _t_statistic,
    _wilcoxon_counts,
    _wilcoxon_tail,
    _even_aware_rank,
    median_null_moments,
    wilcoxon_null_moments,
)
from .smoothed import (
    MEDIAN_RULES,
    BandwidthRule,
    _centre,
    _smoothed_median,
    _smoothed_wilcoxon,
    bootstrap_bandwidth,
    default_bandwidth,
    parse_bandwidth,
    smoothed_median_moments,
    smoothed_wilcoxon_moments,
)

__all__ = [
    "TESTS",
    "DISCRETE_RULES",
    "CHUNK",
    "RandomSizes",
    "ExperimentConfig",
    "PowerRow",
    "PowerTable",
    "RatioRow",
    "RatioTable",
    "TailRow",
    "TailComparisonTable",
    "run_power_experiment",
    "run_power_ratio",
    "run_pvalue_comparison",
    "run_bootstrap_power",
    "PRESETS",
    "EXPERIMENT_KINDS",
    "preset",
    "run_experiment",
]

TESTS = ("smoothed_median", "smoothed_wilcoxon", "ttest", "median", "wilcoxon")
DISCRETE_RULES = ("normal", "randomized", "exact")
CHUNK = 1000
_SMOOTHED = ("smoothed_median", "smoothed_wilcoxon")


# -- configuration -------------------------------------------------------------


_RANDOM = re.compile(r"^U\*\((?P<lo>\d+),\s*(?P<hi>\d+)\)$")


@dataclass(frozen=True)
class RandomSizes:
    """Sample sizes drawn independently per replication from ``U*(lo, hi)``.

    ``U*`` is the discrete uniform law on ``lo, lo+1, ..., hi``.
    """

    lo: int
    hi: int

    def __post_init__(self):
        if not (isinstance(self.lo, int) and isinstance(self.hi, int) and 2 <= self.lo <= self.hi):
            raise ConfigurationError("random sizes need integers 2 <= lo <= hi")

    def __str__(self):
        return f"U*({self.lo},{self.hi})"

    @classmethod
    def parse(cls, text):
        match = _RANDOM.match(str(text).strip())
        if not match:
            raise ConfigurationError(f"cannot parse random size rule {text!r}")
        return cls(int(match.group("lo")), int(match.group("hi")))


def _parse_size(size):
    if isinstance(size, RandomSizes):
        return size
    if isinstance(size, str):
        return RandomSizes.parse(size)
    try:
        m, n = size
    except (TypeError, ValueError):
        raise ConfigurationError(f"size {size!r} is not an (m, n) pair") from None
    if not all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in (m, n)):
        raise ConfigurationError(f"size {size!r} needs integer m and n")
    if m < 2 or n < 2:
        raise ConfigurationError(f"size {size!r}: m and n must be at least 2")
    return (int(m), int(n))


def _size_label(size):
    return str(size) if isinstance(size, RandomSizes) else size


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of a Monte-Carlo experiment.

    A *cell* is one ``(model, size)`` combination; thetas, alphas and tests
    are evaluated on the same draws within a cell.

    Parameters
    ----------
    reps : int
        Replications per cell.
    sizes : sequence
        ``(m, n)`` pairs or :class:`RandomSizes` (also written ``"U*(5,40)"``).
    thetas : sequence of float
        Location shifts of the Y sample, all ``>= 0``.
    alphas : sequence of float
        Significance levels in ``(0, 1)``.
    models : sequence
        Distribution names or :class:`DistributionModel` instances.
    median_kernel, wilcoxon_kernel : str
        Catalog kernels of the smoothed median and smoothed Wilcoxon tests.
    bandwidth : BandwidthRule or str
    seed : int
        Unsigned 64-bit seed.
    tests : sequence of str
        Subset of :data:`TESTS`.
    median_rule : {"average", "lower"}
        Even-N centring of the smoothed median.
    discrete_rule : {"normal", "randomized", "exact"}
        Rejection rule of the unsmoothed median and Wilcoxon tests in power
        experiments: normal-approximation z, the randomized test of exact
        size ``alpha`` on the exact null law, or exact p-value ``<= alpha``.
    """

    reps: int
    sizes: tuple
    thetas: tuple = (0.0,)
    alphas: tuple = (0.05,)
    models: tuple = ("normal",)
    median_kernel: str = "remark26-exp"
    wilcoxon_kernel: str = "epanechnikov"
    bandwidth: BandwidthRule = field(default_factory=BandwidthRule)
    seed: int = 0
    tests: tuple = ("smoothed_median", "smoothed_wilcoxon", "ttest")
    median_rule: str = "average"
    discrete_rule: str = "normal"

    def __post_init__(self):
        problems = []

        def attempt(name, func):
            try:
                object.__setattr__(self, name, func(getattr(self, name)))
            except (ConfigurationError, TypeError, ValueError) as exc:
                problems.append(f"{name}: {exc}")

        def check_reps(v):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigurationError("must be a positive integer")
            return int(v)

        def check_sizes(v):
            v = tuple(_parse_size(s) for s in _as_list(v))
            if not v:
                raise ConfigurationError("at least one size is required")
            return v

        def check_thetas(v):
            v = tuple(float(t) for t in _as_list(v))
            if not v or any(not (t >= 0 and math.isfinite(t)) for t in v):
                raise ConfigurationError("need finite thetas >= 0")
            return v

        def check_alphas(v):
            v = tuple(float(a) for a in _as_list(v))
            if not v or any(not 0 < a < 1 for a in v):
                raise ConfigurationError("need alphas in (0, 1)")
            return v

        def check_models(v):
            v = tuple(get_model(x) for x in _as_list(v))
            if not v:
                raise ConfigurationError("at least one model is required")
            return v

        def check_kernel(sided):
            def check(v):
                k = get_kernel(v)
                if k.one_sided != sided:
                    need = "one-sided" if sided else "symmetric"
                    raise ConfigurationError(f"kernel {k.name!r} is not {need}")
                return k.name
            return check

        def check_seed(v):
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or not 0 <= v < 2 ** 64:
                raise ConfigurationError("must be an unsigned 64-bit integer")
            return int(v)

        def check_tests(v):
            v = tuple(_as_list(v))
            bad = [t for t in v if t not in TESTS]
            if bad:
                raise ConfigurationError(f"unknown tests {bad}; choose from {', '.join(TESTS)}")
            if not v or len(set(v)) != len(v):
                raise ConfigurationError("tests must be a non-empty list without repeats")
            return v

        def check_rule(v):
            if v not in MEDIAN_RULES:
                raise ConfigurationError(f"must be one of {', '.join(MEDIAN_RULES)}")
            return v

        attempt("reps", check_reps)
        attempt("sizes", check_sizes)
        attempt("thetas", check_thetas)
        attempt("alphas", check_alphas)
        attempt("models", check_models)
        attempt("median_kernel", check_kernel(True))
        attempt("wilcoxon_kernel", check_kernel(False))
        attempt("bandwidth", _parse_bandwidth_value)
        attempt("seed", check_seed)
        attempt("tests", check_tests)
        attempt("median_rule", check_rule)

        def check_discrete(v):
            if v not in DISCRETE_RULES:
                raise ConfigurationError(f"must be one of {', '.join(DISCRETE_RULES)}")
            return v

        attempt("discrete_rule", check_discrete)
        if problems:
            raise ConfigurationError("; ".join(problems), problems)

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        bw = self.bandwidth
        bandwidth = {"kind": bw.kind}
        if bw.kind == "fixed":
            bandwidth["h"] = bw.h
        elif bw.kind == "bootstrap":
            bandwidth.update(L=bw.L, alpha=bw.alpha, grid=list(bw.grid))
        return {
            "reps": self.reps,
            "sizes": [_size_label(s) if isinstance(s, RandomSizes) else list(s) for s in self.sizes],
            "thetas": list(self.thetas),
            "alphas": list(self.alphas),
            "models": [m.name for m in self.models],
            "median_kernel": self.median_kernel,
            "wilcoxon_kernel": self.wilcoxon_kernel,
            "bandwidth": bandwidth,
            "seed": self.seed,
            "tests": list(self.tests),
            "median_rule": self.median_rule,
            "discrete_rule": self.discrete_rule,
        }

    @classmethod
    def from_dict(cls, data):
        """Build a config from a JSON-compatible mapping.

        Unknown keys and invalid values are all collected and reported in a
        single :class:`ConfigurationError`.
        """
        if not isinstance(data, dict):
            raise ConfigurationError("configuration must be a mapping")
        names = {f.name for f in fields(cls)}
        problems = [f"unknown key {k!r}" for k in data if k not in names]
        if "reps" not in data:
            problems.append("reps: required")
        if "sizes" not in data:
            problems.append("sizes: required")
        kwargs = {k: v for k, v in data.items() if k in names}
        try:
            if "reps" in kwargs and "sizes" in kwargs:
                config = cls(**kwargs)
            else:
                cls(**{"reps": 1, "sizes": [(2, 2)], **kwargs})
        except ConfigurationError as exc:
            problems.extend(exc.violations)
        if problems:
            raise ConfigurationError("; ".join(problems), problems)
        return config

    def config_hash(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def replace(self, **changes):
        return ExperimentConfig(**{**{f.name: getattr(self, f.name) for f in fields(self)}, **changes})


def _as_list(v):
    if isinstance(v, (str, bytes)) or not hasattr(v, "__iter__"):
        return [v]
    return list(v)


def _parse_bandwidth_value(v):
    if isinstance(v, dict):
        v = dict(v)
        if "grid" in v:
            v["grid"] = tuple(v["grid"])
        unknown = set(v) - {"kind", "h", "L", "alpha", "grid", "cv_kernel"}
        if unknown:
            raise ConfigurationError(f"unknown bandwidth keys {sorted(unknown)}")
        return BandwidthRule(**v)
    return parse_bandwidth(v)


# -- result tables -----------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_size_field(text):
    return int(text) if text.isdigit() else text


class _Table:
    """Rows of one NamedTuple-like dataclass plus ordered metadata pairs."""

    row_type = None
    derived = ()

    def __init__(self, rows, metadata=()):
        self.rows = tuple(rows)
        self.metadata = tuple((str(k), str(v)) for k, v in metadata)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __eq__(self, other):
        return type(self) is type(other) and self.rows == other.rows and self.metadata == other.metadata

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls.row_type)]

    def to_csv(self):
        """CSV text; metadata lines start with ``#``, derived columns follow."""
        buf = io.StringIO()
        for key, value in self.metadata:
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns() + list(self.derived))
        for row in self.rows:
            base = [_fmt(getattr(row, c)) for c in self.columns()]
            writer.writerow(base + [_fmt(getattr(row, d)) for d in self.derived])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        metadata, body = [], []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                metadata.append((key, value))
            elif line.strip():
                body.append(line)
        reader = csv.DictReader(body)
        types = {f.name: f.type for f in fields(cls.row_type)}
        rows = []
        for rec in reader:
            kwargs = {}
            for name, typ in types.items():
                raw = rec[name]
                if typ == "size":
                    kwargs[name] = _parse_size_field(raw)
                elif typ is float or typ == "float":
                    kwargs[name] = float(raw)
                elif typ is int or typ == "int":
                    kwargs[name] = int(raw)
                else:
                    kwargs[name] = raw
            rows.append(cls.row_type(**kwargs))
        return cls(rows, metadata)

    def to_text(self):
        """Aligned plain-text rendering."""
        head = self.columns() + list(self.derived)
        body = []
        for row in self.rows:
            cells = []
            for c in head:
                v = getattr(row, c)
                if v is None:
                    cells.append("-")
                elif isinstance(v, float):
                    cells.append(f"{v:.5f}" if c in self.derived else f"{v:g}")
                else:
                    cells.append(str(v))
            body.append(cells)
        widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(head)]
        lines = [f"# {k}: {v}" for k, v in self.metadata]
        lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)))
        lines.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PowerRow:
    model: str
    m: "size"
    n: "size"
    theta: float
    alpha: float
    test: str
    reps: int
    rejections: int

    @property
    def power(self):
        return self.rejections / self.reps

    @property
    def se(self):
        p = self.power
        return math.sqrt(p * (1.0 - p) / self.reps)


class PowerTable(_Table):
    """Rejection frequencies keyed by ``(model, m, n, theta, alpha, test)``."""

    row_type = PowerRow
    derived = ("power", "se")

    def get(self, model, m, n, theta, alpha, test):
        model = get_model(model).name
        for row in self.rows:
            if (row.model, row.m, row.n, row.test) == (model, m, n, test) \
                    and math.isclose(row.theta, theta) and math.isclose(row.alpha, alpha):
                return row
        raise KeyError((model, m, n, theta, alpha, test))


@dataclass(frozen=True)
class RatioRow:
    model: str
    m: "size"
    n: "size"
    theta: float
    alpha: float
    numerator: str
    denominator: str
    reps: int
    numerator_rejections: int
    denominator_rejections: int

    @property
    def ratio(self):
        if self.denominator_rejections == 0:
            return None
        return self.numerator_rejections / self.denominator_rejections


class RatioTable(_Table):
    """Empirical power ratios of two tests on shared draws."""

    row_type = RatioRow
    derived = ("ratio",)

    def get(self, model, m, n, theta):
        model = get_model(model).name
        for row in self.rows:
            if (row.model, row.m, row.n) == (model, m, n) and math.isclose(row.theta, theta):
                return row
        raise KeyError((model, m, n, theta))


@dataclass(frozen=True)
class TailRow:
    kind: str
    model: str
    m: "size"
    n: "size"
    quantile: float
    reps: int
    in_tail: int
    w_smaller: int
    m_smaller: int
    ties: int

    @property
    def ratio(self):
        """``w_smaller / m_smaller``; ``None`` when either count is zero."""
        if self.m_smaller == 0 or self.w_smaller == 0:
            return None
        return self.w_smaller / self.m_smaller


class TailComparisonTable(_Table):
    """How often the Wilcoxon-type p-value is below the median-type one.

    Only replications in the tail area (either standardized statistic above
    the normal ``quantile``) are counted.
    """

    row_type = TailRow
    derived = ("ratio",)

    def get(self, m, n, quantile):
        for row in self.rows:
            if (row.m, row.n) == (m, n) and math.isclose(row.quantile, quantile):
                return row
        raise KeyError((m, n, quantile))


# -- random streams and chunking ------------------------------------------------------


def _cell_key(seed, cell):
    return np.random.SeedSequence([seed, cell]).generate_state(2, np.uint64)


def _rep_rng(key, rep):
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, rep, 0]))


def _draw(config, cell, start, stop):
    """Per-replication draws of a chunk, grouped by sample size.

    Returns ``{(m, n): (X, Y, rngs)}`` with ``X`` of shape ``(R, m)``; the
    generators are positioned after the data draw.
    """
    model = config.models[cell // len(config.sizes)]
    size = config.sizes[cell % len(config.sizes)]
    key = _cell_key(config.seed, cell)
    groups = defaultdict(lambda: ([], [], []))
    for rep in range(start, stop):
        rng = _rep_rng(key, rep)
        if isinstance(size, RandomSizes):
            m = int(rng.integers(size.lo, size.hi + 1))
            n = int(rng.integers(size.lo, size.hi + 1))
        else:
            m, n = size
        xs, ys, rngs = groups[(m, n)]
        xs.append(model.sample(m, 0.0, rng))
        ys.append(model.sample(n, 0.0, rng))
        rngs.append(rng)
    return {k: (np.array(v[0]), np.array(v[1]), v[2]) for k, v in sorted(groups.items())}


def _tasks(config):
    ncell = len(config.models) * len(config.sizes)
    return [
        (cell, start, min(start + CHUNK, config.reps))
        for cell in range(ncell)
        for start in range(0, config.reps, CHUNK)
    ]


def _map(func, config, tasks, workers, *extra):
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [func(config, *t, *extra) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(func, config, *t, *extra) for t in tasks]
        return [f.result() for f in futures]


def _cell_labels(config, cell):
    model = config.models[cell // len(config.sizes)]
    size = config.sizes[cell % len(config.sizes)]
    if isinstance(size, RandomSizes):
        return model.name, str(size), str(size)
    return model.name, size[0], size[1]


# -- test scores -------------------------------------------------------------------


def _bandwidths(config, which, kernel, X, Y, rngs):
    rule = config.bandwidth
    N = X.shape[-1] + Y.shape[-1]
    if rule.kind == "fixed":
        return rule.h
    if rule.kind == "default":
        return default_bandwidth(N)
    m, n = X.shape[-1], Y.shape[-1]
    pooled = np.concatenate([X, Y], axis=-1)
    return np.array([
        bootstrap_bandwidth(p, which, m, n, rule, kernel, rng, config.median_rule)
        for p, rng in zip(pooled, rngs)
    ])


def _scores(test, config, X, Y, rngs):
    """Statistic on the scale its critical value refers to."""
    m, n = X.shape[-1], Y.shape[-1]
    if test == "smoothed_median":
        kernel = get_kernel(config.median_kernel)
        h = _bandwidths(config, "median", kernel, X, Y, rngs)
        if np.ndim(h) == 0:
            stat = _smoothed_median(X, Y, kernel, h, rule=config.median_rule)
        else:
            z = _centre(X, Y, config.median_rule)
            stat = kernel.antiderivative((z[:, None] - X) / h[:, None]).sum(axis=-1)
        mean, var = smoothed_median_moments(m, n)
    elif test == "smoothed_wilcoxon":
        kernel = get_kernel(config.wilcoxon_kernel)
        h = _bandwidths(config, "wilcoxon", kernel, X, Y, rngs)
        if np.ndim(h) == 0:
            stat = _smoothed_wilcoxon(X, Y, kernel, h)
        else:
            stat = np.array([_smoothed_wilcoxon(x, y, kernel, hh) for x, y, hh in zip(X, Y, h)])
        mean, var = smoothed_wilcoxon_moments(m, n)
    elif test == "ttest":
        t, _ = _t_statistic(X, Y)
        return t
    elif test == "median":
        stat, _ = _median_counts(X, Y)
        mean, var = median_null_moments(m, n, "asymptotic")
    elif test == "wilcoxon":
        stat = _wilcoxon_counts(X, Y)
        mean, var = wilcoxon_null_moments(m, n)
    else:
        raise ValueError(f"unknown test {test!r}")
    return (stat - mean) / math.sqrt(var)


def _critical(test, m, n, alpha):
    if test == "ttest":
        return float(DistributionModel("student_t", m + n - 2).quantile(1.0 - alpha))
    return float(special.ndtri(1.0 - alpha))


# -- power experiments ----------------------------------------------------------------


def _null_tail(test, m, n):
    if test == "median":
        return hypergeom_tail(m + n, m, _even_aware_rank(m, n))
    return _wilcoxon_tail(m, n)


def _exact_rejections(test, config, X, Y, rngs, alphas):
    m, n = X.shape[-1], Y.shape[-1]
    stat = _median_counts(X, Y)[0] if test == "median" else _wilcoxon_counts(X, Y)
    tail = _null_tail(test, m, n)  # tail[k] = P(S >= k)
    if config.discrete_rule == "exact":
        return {a: tail[stat] <= a for a in alphas}
    u = np.array([rng.random() for rng in rngs])
    ext = np.append(tail, 0.0)
    out = {}
    for a in alphas:
        # boundary c with P(S > c) <= a < P(S >= c), randomized at S = c
        c = int(np.flatnonzero(ext > a)[-1])
        gamma = (a - ext[c + 1]) / (ext[c] - ext[c + 1])
        out[a] = (stat > c) | ((stat == c) & (u < gamma))
    return out


def _rejections(test, config, X, Y, rngs):
    m, n = X.shape[-1], Y.shape[-1]
    if test in ("median", "wilcoxon") and config.discrete_rule != "normal":
        return _exact_rejections(test, config, X, Y, rngs, config.alphas)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = _scores(test, config, X, Y, rngs)
    return {a: s > _critical(test, m, n, a) for a in config.alphas}


def _power_chunk(config, cell, start, stop):
    counts = defaultdict(int)
    for (m, n), (X, Y0, rngs) in _draw(config, cell, start, stop).items():
        for theta in config.thetas:
            Y = Y0 + theta
            for test in config.tests:
                for alpha, rej in _rejections(test, config, X, Y, rngs).items():
                    counts[(theta, alpha, test)] += int(np.count_nonzero(rej))
    return cell, dict(counts)


def _metadata(config, kind, assumptions=()):
    meta = [
        ("experiment", kind),
        ("config_hash", config.config_hash()),
        ("seed", config.seed),
        ("reps", config.reps),
        ("median_kernel", config.median_kernel),
        ("wilcoxon_kernel", config.wilcoxon_kernel),
        ("bandwidth", config.bandwidth),
        ("median_rule", config.median_rule),
        ("discrete_rule", config.discrete_rule),
    ]
    meta.extend(("assumption", a) for a in assumptions)
    return meta


_DISCRETE_NOTES = {
    "normal": "discrete tests reject when the normal-approximation z exceeds the normal quantile; "
              "median count uses E1=(m/2)(1-1/N), V1=mn/(4N); W2 uses mn/2 and mn(N+1)/12",
    "randomized": "discrete tests are randomized tests of exact size alpha on their exact null laws",
    "exact": "discrete tests reject when the exact p-value is at most alpha",
}


def _collect_power(config, workers):
    totals = defaultdict(int)
    for cell, counts in _map(_power_chunk, config, _tasks(config), workers):
        for key, c in counts.items():
            totals[(cell,) + key] += c
    return totals


def run_power_experiment(config, workers=1):
    """Rejection frequencies for every cell, theta, alpha and test.

    Smoothed and discrete tests reject when the standardized statistic
    exceeds the upper ``alpha`` normal quantile; the t test uses the
    Student-t quantile with ``N - 2`` degrees of freedom.  Rows with
    ``theta = 0`` are size estimates.

    Returns
    -------
    PowerTable
    """
    totals = _collect_power(config, workers)
    rows = []
    for cell in range(len(config.models) * len(config.sizes)):
        model, m, n = _cell_labels(config, cell)
        for theta in config.thetas:
            for alpha in config.alphas:
                for test in config.tests:
                    rows.append(PowerRow(model, m, n, theta, alpha, test, config.reps,
                                         totals[(cell, theta, alpha, test)]))
    notes = [_DISCRETE_NOTES[config.discrete_rule]] if set(config.tests) & {"median", "wilcoxon"} else []
    return PowerTable(rows, _metadata(config, "power", notes))


def run_power_ratio(config, numerator="median", denominator="wilcoxon", workers=1):
    """Ratio of empirical powers ``power(numerator) / power(denominator)``.

    Both tests are evaluated on the same draws.  Cells with no rejection by
    the denominator test have an undefined ratio.

    Returns
    -------
    RatioTable
    """
    tests = tuple(dict.fromkeys((numerator, denominator)))
    cfg = config.replace(tests=tests)
    totals = _collect_power(cfg, workers)
    rows = []
    for cell in range(len(cfg.models) * len(cfg.sizes)):
        model, m, n = _cell_labels(cfg, cell)
        for theta in cfg.thetas:
            for alpha in cfg.alphas:
                rows.append(RatioRow(model, m, n, theta, alpha, numerator, denominator, cfg.reps,
                                     totals[(cell, theta, alpha, numerator)],
                                     totals[(cell, theta, alpha, denominator)]))
    notes = [_DISCRETE_NOTES[cfg.discrete_rule]] if set(tests) & {"median", "wilcoxon"} else []
    return RatioTable(rows, _metadata(cfg, "ratio", notes))


def run_bootstrap_power(config, workers=1):
    """Power of the smoothed tests with a per-replication bootstrap bandwidth.

    Each replication recomputes ``h`` from its own data (see
    :func:`smoothrank.smoothed.bootstrap_bandwidth`) before testing.
    """
    if config.bandwidth.kind != "bootstrap":
        raise ConfigurationError("run_bootstrap_power needs a bootstrap bandwidth rule")
    table = run_power_experiment(config, workers)
    return PowerTable(table.rows, [("experiment", "bootstrap")] + list(table.metadata[1:]))


# -- p-value comparison ------------------------------------------------------------------


def _pvalue_chunk(config, cell, start, stop, smoothed):
    counts = defaultdict(lambda: np.zeros(4, dtype=np.int64))
    mk = get_kernel(config.median_kernel)
    wk = get_kernel(config.wilcoxon_kernel)
    for (m, n), (X, Y, rngs) in _draw(config, cell, start, stop).items():
        N = m + n
        if smoothed:
            hm = _bandwidths(config, "median", mk, X, Y, rngs)
            hw = _bandwidths(config, "wilcoxon", wk, X, Y, rngs)
            if np.ndim(hm):
                zc = _centre(X, Y, config.median_rule)
                sm = mk.antiderivative((zc[:, None] - X) / hm[:, None]).sum(axis=-1)
                sw = np.array([_smoothed_wilcoxon(x, y, wk, h) for x, y, h in zip(X, Y, hw)])
            else:
                sm = _smoothed_median(X, Y, mk, hm, rule=config.median_rule)
                sw = _smoothed_wilcoxon(X, Y, wk, hw)
            e1, v1 = smoothed_median_moments(m, n)
            e2, v2 = smoothed_wilcoxon_moments(m, n)
            zm = (sm - e1) / math.sqrt(v1)
            zw = (sw - e2) / math.sqrt(v2)
            # normal p-values order exactly as the z-scores do
            pm, pw = -zm, -zw
        else:
            md, _ = _median_counts(X, Y)
            w2 = _wilcoxon_counts(X, Y)
            e1, v1 = median_null_moments(m, n, "exact")
            e2, v2 = wilcoxon_null_moments(m, n)
            zm = (md - e1) / math.sqrt(v1)
            zw = (w2 - e2) / math.sqrt(v2)
            pm = hypergeom_tail(N, m, _even_aware_rank(m, n))[md]
            pw = _wilcoxon_tail(m, n)[w2]
        for alpha in config.alphas:
            v = special.ndtri(1.0 - alpha)
            tail = (zm > v) | (zw > v)
            counts[alpha] += [
                np.count_nonzero(tail),
                np.count_nonzero(tail & (pw < pm)),
                np.count_nonzero(tail & (pm < pw)),
                np.count_nonzero(tail & (pm == pw)),
            ]
    return cell, {a: c.tolist() for a, c in counts.items()}


def run_pvalue_comparison(config, smoothed, workers=1):
    """Compare p-values of the median-type and Wilcoxon-type tests in the tail.

    With ``smoothed=False`` the exact p-values of the median count and W2
    are compared, and the tail area uses their exact null moments.  With
    ``smoothed=True`` the normal-approximation p-values of the smoothed
    statistics are compared, standardized by ``E1, V1`` and ``E2, V2``.
    Each ``alpha`` of the config defines the quantile ``1 - alpha``.

    Returns
    -------
    TailComparisonTable
    """
    totals = defaultdict(lambda: np.zeros(4, dtype=np.int64))
    for cell, counts in _map(_pvalue_chunk, config, _tasks(config), workers, smoothed):
        for alpha, c in counts.items():
            totals[(cell, alpha)] += c
    kind = "smoothed" if smoothed else "discrete"
    rows = []
    for cell in range(len(config.models) * len(config.sizes)):
        model, m, n = _cell_labels(config, cell)
        for alpha in config.alphas:
            c = totals[(cell, alpha)]
            rows.append(TailRow(kind, model, m, n, 1.0 - alpha, config.reps, *(int(v) for v in c)))
    notes = ["ratio = #(p_W < p_M) / #(p_M < p_W) within the tail area; equal p-values counted as ties"]
    return TailComparisonTable(rows, _metadata(config, f"pvalue-{kind}", notes))


# -- presets ---------------------------------------------------------------------------


_TABLE_SIZES = ((30, 30), (50, 30), (30, 50), (50, 50))
_LIGHT = ("normal", "logistic", "dexp")
_HEAVY = ("t2", "t1", "t0.5")
_RATIO_SIZES = ((10, 10), (20, 20), (30, 30), (50, 50), (10, 30), (30, 10))
_TAIL_SIZES = ((10, 10), (20, 20), (30, 30), (10, 20), (20, 10), "U*(5,40)")
_SMOOTHED_TESTS = ("smoothed_median", "smoothed_wilcoxon", "ttest")

# name -> (experiment kind, full reps, desk reps, config keyword arguments)
PRESETS = {
    "table3": ("ratio", 100_000, 20_000, dict(
        sizes=_RATIO_SIZES, thetas=(1.0, 0.5, 0.1), alphas=(0.05,), models=("t1",),
        tests=("median", "wilcoxon"), discrete_rule="randomized")),
    "table4": ("ratio", 100_000, 20_000, dict(
        sizes=_RATIO_SIZES, thetas=(1.0, 0.5, 0.1), alphas=(0.05,), models=("t0.5",),
        tests=("median", "wilcoxon"), discrete_rule="randomized")),
    "table5": ("pvalue-discrete", 100_000, 20_000, dict(
        sizes=_TAIL_SIZES, alphas=(0.1, 0.05, 0.025, 0.01), models=("normal",),
        tests=("median", "wilcoxon"))),
    "table6": ("pvalue-smoothed", 100_000, 20_000, dict(
        sizes=_TAIL_SIZES, alphas=(0.1, 0.05, 0.025, 0.01), models=("normal",),
        tests=_SMOOTHED)),
    "table7": ("power", 100_000, 20_000, dict(
        sizes=_TABLE_SIZES, thetas=(0.1, 0.5), alphas=(0.01, 0.05), models=_LIGHT,
        tests=_SMOOTHED_TESTS, median_rule="lower")),
    "table8": ("power", 100_000, 20_000, dict(
        sizes=_TABLE_SIZES, thetas=(0.1, 0.5), alphas=(0.01, 0.05), models=_HEAVY,
        tests=_SMOOTHED_TESTS, median_rule="lower")),
    "table9": ("power", 100_000, 20_000, dict(
        sizes=_TABLE_SIZES, thetas=(0.0,), alphas=(0.01, 0.05), models=_LIGHT + _HEAVY,
        tests=_SMOOTHED_TESTS, median_rule="lower")),
    "table9-desk": ("power", 20_000, 20_000, dict(
        sizes=((30, 30), (50, 50)), thetas=(0.0,), alphas=(0.05,), models=_LIGHT,
        tests=_SMOOTHED_TESTS, median_rule="lower")),
    "table10": ("bootstrap", 100_000, 5_000, dict(
        sizes=_TABLE_SIZES, thetas=(0.0, 0.1, 0.5), alphas=(0.05,), models=_HEAVY,
        tests=("smoothed_median",), bandwidth="bootstrap:L=1000,alpha=0.05",
        median_rule="lower")),
}


def preset(name, desk=False, seed=0):
    """``(kind, ExperimentConfig)`` of a named preset.

    ``desk=True`` uses the reduced replication count.
    """
    try:
        kind, full, small, kwargs = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return kind, ExperimentConfig(reps=small if desk else full, seed=seed, **kwargs)


def run_experiment(kind, config, workers=1):
    """Dispatch on the experiment kind used by presets and config files."""
    if kind == "power":
        return run_power_experiment(config, workers)
    if kind == "ratio":
        return run_power_ratio(config, *config.tests[:2], workers=workers) if len(config.tests) >= 2 \
            else run_power_ratio(config, config.tests[0], config.tests[0], workers=workers)
    if kind == "pvalue-discrete":
        return run_pvalue_comparison(config, False, workers)
    if kind == "pvalue-smoothed":
        return run_pvalue_comparison(config, True, workers)
    if kind == "bootstrap":
        return run_bootstrap_power(config, workers)
    raise ConfigurationError(f"unknown experiment kind {kind!r}")


EXPERIMENT_KINDS = ("power", "ratio", "pvalue-discrete", "pvalue-smoothed", "bootstrap")
