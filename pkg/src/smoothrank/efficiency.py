"""Pitman efficacies, asymptotic relative efficiencies and local power.

The efficacy of a one-sided two-sample test for a location shift is the
slope of its standardized mean at the null divided by the null standard
deviation.  For the three tests of interest

* median test:  ``2 sqrt(lam (1 - lam)) f(0)``
* Wilcoxon:     ``sqrt(12 lam (1 - lam)) int f^2``
* t test:       ``sqrt(lam (1 - lam) / Var X)``

and the ARE of test A with respect to test B is the squared ratio of
efficacies, which does not depend on ``lam``.  Undefined values (a t test
under an infinite-variance model) are returned as ``None``.
"""

import math

import numpy as np
from scipy import special

from .distributions import get_model

__all__ = [
    "TESTS",
    "pitman_efficacy",
    "are",
    "are_t_family_curve",
    "theoretical_local_power",
    "PUBLISHED_TABLE1",
    "PUBLISHED_TABLE2",
    "efficiency_table",
]

TESTS = ("median", "wilcoxon", "ttest")

# published ARE values: (test_a, test_b, model name) -> value
PUBLISHED_TABLE1 = {
    ("median", "ttest", "normal"): 0.637,
    ("median", "ttest", "logistic"): 0.822,
    ("median", "ttest", "dexp"): 2.0,
    ("wilcoxon", "ttest", "normal"): 0.955,
    ("wilcoxon", "ttest", "logistic"): 1.10,
    ("wilcoxon", "ttest", "dexp"): 1.5,
    ("median", "wilcoxon", "normal"): 0.667,
    ("median", "wilcoxon", "logistic"): 0.75,
    ("median", "wilcoxon", "dexp"): 1.33,
}
PUBLISHED_TABLE2 = {
    ("median", "wilcoxon", "t2"): 0.961,
    ("median", "wilcoxon", "t1"): 1.33,
    ("median", "wilcoxon", "t0.5"): 2.29,
}


def _check_lambda(lam):
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")


def pitman_efficacy(test, model, lam=0.5):
    """Pitman efficacy of ``test`` under ``model`` with ``m/N -> lam``.

    Parameters
    ----------
    test : {"median", "wilcoxon", "ttest"}
    model : DistributionModel or str
    lam : float
        Limiting proportion of X observations, ``0 < lam < 1``.

    Returns
    -------
    float or None
        ``None`` for the t test when the variance is infinite.

    Examples
    --------
    >>> round(pitman_efficacy("wilcoxon", "normal"), 6)
    0.488603
    """
    _check_lambda(lam)
    tr = get_model(model).traits()
    w = lam * (1.0 - lam)
    if test == "median":
        return 2.0 * math.sqrt(w) * tr.density_at_median
    if test == "wilcoxon":
        return math.sqrt(12.0 * w) * tr.integral_f_squared
    if test == "ttest":
        if not math.isfinite(tr.variance):
            return None
        return math.sqrt(w / tr.variance)
    raise ValueError(f"unknown test {test!r}; choose from {', '.join(TESTS)}")


def are(test_a, test_b, model):
    """Asymptotic relative efficiency ``(e[a] / e[b])^2``, or ``None``."""
    ea = pitman_efficacy(test_a, model)
    eb = pitman_efficacy(test_b, model)
    if ea is None or eb is None or eb == 0:
        return None
    return (ea / eb) ** 2


def are_t_family_curve(nu_grid):
    """``ARE(median | wilcoxon)`` along Student-t degrees of freedom.

    Returns a list of ``(nu, value)`` pairs in the order of ``nu_grid``.
    """
    out = []
    for nu in nu_grid:
        nu = float(nu)
        out.append((nu, are("median", "wilcoxon", f"t:{nu!r}")))
    return out


def theoretical_local_power(xi, alpha, lam, model, h, a111):
    """First-order local power of the smoothed median test.

    ``1 - Phi(v - c)`` with ``v`` the upper ``alpha`` normal quantile and

        c = xi [2 sqrt(lam (1-lam)) f(0) + 8 h sqrt(lam / (1-lam)) a111 f(0)^2]

    for the shift ``theta = xi / sqrt(N)``.  With ``h = 0`` this is the
    local power of the unsmoothed median test.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    _check_lambda(lam)
    if h < 0:
        raise ValueError("h must be nonnegative")
    f0 = get_model(model).traits().density_at_median
    c = xi * (2.0 * math.sqrt(lam * (1.0 - lam)) * f0
              + 8.0 * h * math.sqrt(lam / (1.0 - lam)) * a111 * f0 * f0)
    return float(special.ndtr(c - special.ndtri(1.0 - alpha)))


def efficiency_table(table_id):
    """Computed versus published AREs.

    Returns a list of ``(test_a, test_b, model, computed, published,
    deviation)`` rows for published table 1 or 2.
    """
    if table_id == 1:
        published = PUBLISHED_TABLE1
    elif table_id == 2:
        published = PUBLISHED_TABLE2
    else:
        raise ValueError("table_id must be 1 or 2")
    rows = []
    for (a, b, name), pub in published.items():
        value = are(a, b, name)
        dev = abs(value - pub) if value is not None else np.nan
        rows.append((a, b, name, value, pub, dev))
    return rows
