"""Population models, the hypergeometric null law and sample-median CDFs.

All location families are standardized: centred at zero with unit scale.
A location shift is applied only when sampling.
"""

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy import special

from ._quad import integrate_interval
from .exceptions import ConfigurationError, QuadratureError

__all__ = [
    "DistributionModel",
    "DistTraits",
    "get_model",
    "dist_eval",
    "dist_quantile",
    "dist_sample",
    "dist_traits",
    "hypergeom_pmf",
    "hypergeom_tail",
    "sample_median_cdf",
]

FAMILIES = ("normal", "logistic", "double_exponential", "student_t")

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class DistTraits(NamedTuple):
    median: float
    density_at_median: float
    integral_f_squared: float
    variance: float


@dataclass(frozen=True)
class DistributionModel:
    """A standardized symmetric location family.

    Parameters
    ----------
    family : {"normal", "logistic", "double_exponential", "student_t"}
    dof : float, optional
        Degrees of freedom, required for ``student_t`` (any ``dof > 0``).
    """

    family: str
    dof: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown distribution family {self.family!r}")
        if self.family == "student_t":
            if self.dof is None or not self.dof > 0 or not math.isfinite(self.dof):
                raise ConfigurationError("student_t needs finite dof > 0")
            object.__setattr__(self, "dof", float(self.dof))
        elif self.dof is not None:
            raise ConfigurationError(f"{self.family} takes no dof")

    @property
    def name(self):
        if self.family == "normal":
            return "normal"
        if self.family == "logistic":
            return "logistic"
        if self.family == "double_exponential":
            return "dexp"
        nu = self.dof
        return f"t{nu:g}" if nu in (0.5, 1.0, 2.0) else f"t:{nu:g}"

    def __str__(self):
        return self.name

    # -- density and distribution function --------------------------------

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam == "normal":
            return np.exp(-0.5 * x * x) / _SQRT_2PI
        if fam == "logistic":
            e = np.exp(-np.abs(x))
            return e / (1.0 + e) ** 2
        if fam == "double_exponential":
            return 0.5 * np.exp(-np.abs(x))
        nu = self.dof
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return np.exp(logc - (nu + 1) / 2 * np.log1p(x * x / nu))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam == "normal":
            return special.ndtr(x)
        if fam == "logistic":
            return special.expit(x)
        if fam == "double_exponential":
            return np.where(x < 0, 0.5 * np.exp(np.minimum(x, 0.0)),
                            1.0 - 0.5 * np.exp(-np.maximum(x, 0.0)))
        return self._t_cdf(x)

    def sf(self, x):
        """Upper tail ``1 - F(x)``, computed as ``F(-x)`` by symmetry."""
        return self.cdf(-np.asarray(x, dtype=float))

    def _t_cdf(self, x):
        nu = self.dof
        x2 = x * x
        with np.errstate(divide="ignore", invalid="ignore"):
            # far tail: 1/2 I_{nu/(nu+x^2)}(nu/2, 1/2); centre: I_{x^2/(nu+x^2)}(1/2, nu/2)
            tail = 0.5 * special.betainc(nu / 2, 0.5, nu / (nu + x2))
            centre = 0.5 * special.betainc(0.5, nu / 2, x2 / (nu + x2))
        half_gap = np.where(x2 < nu, 0.5 - centre, tail)
        out = np.where(x < 0, half_gap, 1.0 - half_gap)
        out = np.where(np.isposinf(x), 1.0, np.where(np.isneginf(x), 0.0, out))
        return out

    def quantile(self, p):
        """Inverse CDF on ``(0, 1)``.

        Raises
        ------
        ValueError
            If any ``p`` lies outside the open unit interval.
        """
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0) & (p < 1))):
            raise ValueError("quantile requires 0 < p < 1")
        fam = self.family
        if fam == "normal":
            return special.ndtri(p)
        if fam == "logistic":
            return special.logit(p)
        if fam == "double_exponential":
            return np.where(p < 0.5, np.log(2.0 * p), -np.log(2.0 * (1.0 - p)))
        nu = self.dof
        q = np.minimum(p, 1.0 - p)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = special.betaincinv(nu / 2, 0.5, 2.0 * q)
            far = np.sqrt(nu * (1.0 - w) / w)
            u = special.betaincinv(0.5, nu / 2, 1.0 - 2.0 * q)
            near = np.sqrt(nu * u / (1.0 - u))
        mag = np.where(q < 0.25, far, near)
        return np.where(p < 0.5, -mag, mag)

    # -- sampling ------------------------------------------------------------

    def sample(self, count, shift, rng):
        """Draw ``count`` i.i.d. values from ``F(x - shift)``.

        ``rng`` is a :class:`numpy.random.Generator`; the draw is fully
        determined by its state.  Student-t variates with any ``dof`` are
        generated as ``Z / sqrt(G / dof)`` with ``G ~ Gamma(dof/2, scale=2)``.
        """
        fam = self.family
        if fam == "normal":
            x = rng.standard_normal(count)
        elif fam == "logistic":
            x = rng.logistic(0.0, 1.0, count)
        elif fam == "double_exponential":
            x = rng.laplace(0.0, 1.0, count)
        else:
            nu = self.dof
            z = rng.standard_normal(count)
            g = 2.0 * rng.standard_gamma(nu / 2, count)
            x = z / np.sqrt(g / nu)
        return x + shift

    # -- analytic traits -----------------------------------------------------

    def traits(self):
        return _traits(self)


@lru_cache(maxsize=None)
def _traits(model):
    fam = model.family
    if fam == "normal":
        return DistTraits(0.0, 1.0 / _SQRT_2PI, 0.5 / math.sqrt(math.pi), 1.0)
    if fam == "logistic":
        return DistTraits(0.0, 0.25, 1.0 / 6.0, math.pi ** 2 / 3.0)
    if fam == "double_exponential":
        return DistTraits(0.0, 0.5, 0.25, 2.0)
    nu = model.dof
    f0 = float(model.pdf(0.0))
    if nu == 1.0:
        f2 = 1.0 / (2.0 * math.pi)
    else:
        f2 = 2.0 * integrate_interval(lambda x: float(model.pdf(x)) ** 2, 0.0, math.inf, tol=1e-12)
    var = nu / (nu - 2.0) if nu > 2.0 else math.inf
    return DistTraits(0.0, f0, f2, var)


_T_NAME = re.compile(r"^t(?::)?(?P<nu>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$")


def get_model(name):
    """Parse a distribution name.

    Accepted names are ``normal``, ``logistic``, ``dexp``, ``t2``, ``t1``,
    ``t0.5`` and ``t:<nu>`` for any positive ``nu``.
    """
    if isinstance(name, DistributionModel):
        return name
    key = str(name).strip().lower()
    if key == "normal":
        return DistributionModel("normal")
    if key == "logistic":
        return DistributionModel("logistic")
    if key in ("dexp", "double_exponential", "laplace"):
        return DistributionModel("double_exponential")
    match = _T_NAME.match(key)
    if match:
        return DistributionModel("student_t", float(match.group("nu")))
    raise ConfigurationError(
        f"unknown distribution {name!r}; use normal, logistic, dexp, t2, t1, t0.5 or t:<nu>"
    )


def dist_eval(model, x):
    """Return ``(pdf(x), cdf(x))``."""
    pdf, cdf = model.pdf(x), model.cdf(x)
    if np.ndim(x) == 0:
        return float(pdf), float(cdf)
    return pdf, cdf


def dist_quantile(model, p):
    q = model.quantile(p)
    return float(q) if np.ndim(p) == 0 else q


def dist_sample(model, count, shift, rng):
    return model.sample(count, shift, rng)


def dist_traits(model):
    return model.traits()


# ---------------------------------------------------------------------------
# Hypergeometric law of the median count

_EXACT_LIMIT = 1000


def _log_comb(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def hypergeom_pmf(N, m, r, k):
    """``P(K = k)`` for ``K ~ HG(N, m, r)``: ``r`` draws from ``N`` items of
    which ``m`` are marked.

    Up to ``N = 1000`` the ratio of binomial coefficients is formed in exact
    integer arithmetic and rounded once; larger populations use log-gamma.
    """
    if not (0 <= m <= N and 0 <= r <= N):
        raise ValueError("need 0 <= m <= N and 0 <= r <= N")
    if k < max(0, r - (N - m)) or k > min(m, r):
        return 0.0
    if N <= _EXACT_LIMIT:
        return math.comb(m, k) * math.comb(N - m, r - k) / math.comb(N, r)
    return math.exp(_log_comb(m, k) + _log_comb(N - m, r - k) - _log_comb(N, r))


@lru_cache(maxsize=256)
def _hypergeom_tail_cached(N, m, r):
    lo, hi = max(0, r - (N - m)), min(m, r)
    if N <= _EXACT_LIMIT:
        counts = [0] * (m + 2)
        for k in range(lo, hi + 1):
            counts[k] = math.comb(m, k) * math.comb(N - m, r - k)
        total = math.comb(N, r)
        tail = [0] * (m + 2)
        run = 0
        for k in range(m, -1, -1):
            run += counts[k]
            tail[k] = run
        out = np.array([t / total for t in tail[: m + 1]], dtype=float)
    else:
        pmf = np.array([hypergeom_pmf(N, m, r, k) for k in range(m + 1)])
        out = np.cumsum(pmf[::-1])[::-1]
    out.setflags(write=False)
    return out


def hypergeom_tail(N, m, r):
    """Array ``t`` with ``t[k] = P(K >= k)`` for ``k = 0..m``."""
    return _hypergeom_tail_cached(int(N), int(m), int(r))


# ---------------------------------------------------------------------------
# Exact distribution of the sample median


def sample_median_cdf(model, z, N, parity=None, tol=1e-12):
    """Exact CDF of the sample median of ``N`` i.i.d. draws from ``model``.

    For odd ``N`` the median is the middle order statistic; for even ``N``
    it is the average of the two middle order statistics (Desu-Rodine).
    Both are evaluated by quadrature after the substitution ``u = F(x)``,
    with beta-function constants formed in log space.

    Parameters
    ----------
    model : DistributionModel
    z : float
    N : int
        Sample size, ``N >= 3``.
    parity : {"odd", "even"}, optional
        Must agree with ``N`` when given.
    """
    N = int(N)
    if N < 3:
        raise ValueError("sample_median_cdf needs N >= 3")
    actual = "odd" if N % 2 else "even"
    if parity is not None and parity != actual:
        raise ValueError(f"parity {parity!r} does not match N={N}")
    if math.isinf(z):
        return 1.0 if z > 0 else 0.0
    Fz = float(model.cdf(z))
    if Fz <= 0.0:
        return 0.0

    if actual == "odd":
        a = (N - 1) / 2
        logc = -special.betaln(a + 1, a + 1)

        def integrand(u):
            if u <= 0.0 or u >= 1.0:
                return 0.0
            return math.exp(logc + a * (math.log(u) + math.log1p(-u)))

        value = integrate_interval(integrand, 0.0, Fz, tol=tol)
    else:
        k = N // 2
        logc = math.log(2.0) - special.betaln(k, k)
        two_z = 2.0 * z

        def integrand(u):
            if u <= 0.0 or u >= 1.0:
                return 0.0
            x = float(model.quantile(u))
            upper = float(model.sf(two_z - x))
            bracket = (1.0 - u) ** k - upper ** k
            if bracket <= 0.0:
                return 0.0
            return math.exp(logc + (k - 1) * math.log(u) + math.log(bracket))

        value = integrate_interval(integrand, 0.0, Fz, tol=tol)
    if value > 1.0 + 1e-9:
        raise QuadratureError(f"median CDF quadrature returned {value!r} > 1")
    return min(value, 1.0)
