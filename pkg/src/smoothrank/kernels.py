"""Kernel functions for smoothed rank statistics.

Two kinds of kernels are used.  The smoothed median statistic needs a
*one-sided* kernel ``k*`` that vanishes on ``t <= 0`` and integrates to one
over ``(0, inf)``; it may take negative values.  The smoothed Wilcoxon
statistic uses an ordinary *symmetric* kernel ``k``.  In both cases the
statistics are built from the antiderivative ``K(t) = int_{-inf}^t k``.

The moment functionals

    A[i, j]    = int t^i k(t)^j dt
    A[i, j, l] = int t^i k(t)^j K(t)^l dt

govern the bias and local-power terms of the smoothed tests and are
computed here by adaptive quadrature.

Examples
--------
>>> k = get_kernel("simple-poly")
>>> kernel_eval(k, 0.5)
1.0
>>> round(kernel_cdf(k, 0.5), 12)
1.25
"""

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, NamedTuple

import numpy as np
from scipy import special

from ._quad import integrate_interval
from .exceptions import ConfigurationError

__all__ = [
    "KernelSpec",
    "PropertyCheck",
    "ONE_SIDED",
    "SYMMETRIC",
    "PROPERTIES",
    "CATALOG",
    "get_kernel",
    "kernel_names",
    "kernel_eval",
    "kernel_cdf",
    "kernel_moment",
    "kernel_mixed_moment",
    "verify_kernel",
]

ONE_SIDED = "one_sided"
SYMMETRIC = "symmetric"

# property name -> (moment indices, target value, absolute tolerance)
PROPERTIES = {
    "normalized": ((0, 1), 1.0, 1e-8),
    "A11_zero": ((1, 1), 0.0, 1e-8),
    "A21_zero": ((2, 1), 0.0, 1e-8),
    "A31_zero": ((3, 1), 0.0, 1e-8),
    "A111_one": ((1, 1, 1), 1.0, 1e-6),
}


@dataclass(frozen=True)
class KernelSpec:
    """A named kernel with its density and antiderivative.

    Attributes
    ----------
    name : str
        Catalog identifier.
    sided : {"one_sided", "symmetric"}
    density : callable
        Vectorized ``k(t)``; exactly zero outside ``support``.
    antiderivative : callable
        Vectorized ``K(t)``, the running integral of ``density``.
    support : tuple of float
        ``(lo, hi)``; either end may be infinite.
    declared_properties : frozenset of str
        Moment properties the kernel is claimed to satisfy, see
        :data:`PROPERTIES`.
    """

    name: str
    sided: str
    density: Callable = field(repr=False, compare=False)
    antiderivative: Callable = field(repr=False, compare=False)
    support: tuple
    declared_properties: frozenset = frozenset()

    def __post_init__(self):
        if self.sided not in (ONE_SIDED, SYMMETRIC):
            raise ValueError(f"unknown sidedness {self.sided!r}")
        lo, hi = self.support
        if not lo < hi:
            raise ValueError(f"empty support {self.support!r}")
        unknown = set(self.declared_properties) - set(PROPERTIES)
        if unknown:
            raise ValueError(f"unknown kernel properties: {sorted(unknown)}")

    @property
    def one_sided(self):
        return self.sided == ONE_SIDED

    @property
    def right_edge(self):
        return self.support[1]


# ---------------------------------------------------------------------------
# Catalog kernels.  Densities and antiderivatives are module-level functions
# (bound with functools.partial) so that KernelSpec instances pickle cleanly
# for process-based parallelism.


def _poly_density(coeffs, t):
    # coeffs are ascending powers on (0, 1)
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    val = np.polynomial.polynomial.polyval(t, coeffs)
    return np.where(inside, val, 0.0)


def _poly_antiderivative(coeffs, t):
    t = np.asarray(t, dtype=float)
    anti = [0.0] + [c / (p + 1) for p, c in enumerate(coeffs)]
    tc = np.clip(t, 0.0, 1.0)
    val = np.polynomial.polynomial.polyval(tc, anti)
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, val))


def _expmix_density(coeffs, t):
    # k(t) = sum_j c_j * j * exp(-j t) on t > 0, j = 1..len(coeffs)
    t = np.asarray(t, dtype=float)
    pos = t > 0.0
    e = np.exp(-np.where(pos, t, 0.0))
    acc = np.zeros_like(e)
    for j in range(len(coeffs), 0, -1):
        acc = acc * e + coeffs[j - 1] * j
    return np.where(pos, acc * e, 0.0)


def _expmix_antiderivative(coeffs, t):
    # K(t) = 1 - sum_j c_j exp(-j t) for t > 0 (sum_j c_j = 1)
    t = np.asarray(t, dtype=float)
    pos = t > 0.0
    e = np.exp(-np.where(pos, t, 0.0))
    acc = np.zeros_like(e)
    for c in reversed(coeffs):
        acc = acc * e + c
    return np.where(pos, 1.0 - acc * e, 0.0)


def _epanechnikov_density(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1.0, 0.75 * (1.0 - t * t), 0.0)


def _epanechnikov_antiderivative(t):
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    return 0.5 + 0.75 * t - 0.25 * t * t * t


def _gaussian_density(t):
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


def _gaussian_antiderivative(t):
    return special.ndtr(np.asarray(t, dtype=float))


def _remark26_poly_coeffs(sign):
    s = sign * math.sqrt(4353.0)
    return (
        (s + 135.0) / 34.0,
        (-3.0 * s - 99.0) / 17.0,
        (3.0 * s - 3.0) / 17.0,
    )


def _remark26_exp_coeffs():
    s = math.sqrt(207586.0)
    return (
        1.0,
        (613.0 - 2.0 * s) / 58.0,
        (3.0 * s - 1137.0) / 58.0,
        (524.0 - s) / 58.0,
    )


def _poly_kernel(name, coeffs, declared):
    return KernelSpec(
        name=name,
        sided=ONE_SIDED,
        density=partial(_poly_density, tuple(coeffs)),
        antiderivative=partial(_poly_antiderivative, tuple(coeffs)),
        support=(0.0, 1.0),
        declared_properties=frozenset(declared),
    )


def _build_catalog():
    remark26 = ("normalized", "A11_zero", "A111_one")
    exp_coeffs = _remark26_exp_coeffs()
    kernels = [
        _poly_kernel("simple-poly", (4.0, -6.0), ("normalized", "A11_zero")),
        _poly_kernel("remark26-poly-plus", _remark26_poly_coeffs(+1), remark26),
        _poly_kernel("remark26-poly-minus", _remark26_poly_coeffs(-1), remark26),
        KernelSpec(
            name="remark26-exp",
            sided=ONE_SIDED,
            density=partial(_expmix_density, exp_coeffs),
            antiderivative=partial(_expmix_antiderivative, exp_coeffs),
            support=(0.0, math.inf),
            declared_properties=frozenset(remark26),
        ),
        KernelSpec(
            name="epanechnikov",
            sided=SYMMETRIC,
            density=_epanechnikov_density,
            antiderivative=_epanechnikov_antiderivative,
            support=(-1.0, 1.0),
            declared_properties=frozenset(("normalized", "A11_zero", "A31_zero")),
        ),
        KernelSpec(
            name="gaussian",
            sided=SYMMETRIC,
            density=_gaussian_density,
            antiderivative=_gaussian_antiderivative,
            support=(-math.inf, math.inf),
            declared_properties=frozenset(("normalized", "A11_zero", "A31_zero")),
        ),
    ]
    return {k.name: k for k in kernels}


CATALOG = _build_catalog()


def kernel_names():
    """Names of the built-in kernels, in catalog order."""
    return list(CATALOG)


def get_kernel(name):
    """Look up a catalog kernel by name.

    Raises
    ------
    ConfigurationError
        If ``name`` is not in the catalog.
    """
    if isinstance(name, KernelSpec):
        return name
    try:
        return CATALOG[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown kernel {name!r}; choose from {', '.join(CATALOG)}"
        ) from None


def _scalar_or_array(value, t):
    return float(value) if np.ndim(t) == 0 else value


def kernel_eval(spec, t):
    """Kernel density ``k(t)``; exactly zero outside the support."""
    return _scalar_or_array(spec.density(t), t)


def kernel_cdf(spec, t):
    """Antiderivative ``K(t) = int_{-inf}^t k(u) du``.

    For one-sided kernels this is 0 for ``t <= 0`` and 1 at and beyond the
    right support edge.  It is not monotone when the kernel takes negative
    values.
    """
    return _scalar_or_array(spec.antiderivative(t), t)


def _integrate_on_support(spec, func, tol):
    lo, hi = spec.support
    return integrate_interval(lambda t: float(func(t)), lo, hi, tol=tol)


def kernel_moment(spec, i, j, tol=1e-10):
    """Moment functional ``A[i, j] = int t^i k(t)^j dt``.

    Parameters
    ----------
    spec : KernelSpec
    i : int
        Power of ``t``, ``i >= 0``.
    j : int
        Power of the kernel, ``j >= 1``.
    tol : float
        Absolute error bound for the quadrature.

    Raises
    ------
    QuadratureError
        If the integral cannot be computed to ``tol``.
    """
    if i < 0 or j < 1:
        raise ValueError("need i >= 0 and j >= 1")
    dens = spec.density
    return _integrate_on_support(spec, lambda t: t ** i * dens(t) ** j, tol)


def kernel_mixed_moment(spec, i, j, l, tol=1e-10):
    """Mixed functional ``A[i, j, l] = int t^i k(t)^j K(t)^l dt``."""
    if i < 0 or j < 1 or l < 1:
        raise ValueError("need i >= 0, j >= 1 and l >= 1")
    dens, anti = spec.density, spec.antiderivative
    return _integrate_on_support(
        spec, lambda t: t ** i * dens(t) ** j * anti(t) ** l, tol
    )


class PropertyCheck(NamedTuple):
    measured: float
    target: float
    tol: float
    passed: bool


def verify_kernel(spec):
    """Re-measure every declared property of ``spec``.

    Returns
    -------
    dict
        ``property name -> PropertyCheck``.  Failures are reported, never
        raised.
    """
    report = {}
    for prop in sorted(spec.declared_properties, key=list(PROPERTIES).index):
        idx, target, tol = PROPERTIES[prop]
        if len(idx) == 2:
            measured = kernel_moment(spec, *idx)
        else:
            measured = kernel_mixed_moment(spec, *idx)
        report[prop] = PropertyCheck(
            measured, target, tol, abs(measured - target) <= tol
        )
    return report
