import math
from functools import partial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from smoothrank.exceptions import ConfigurationError
from smoothrank.kernels import (
    CATALOG,
    KernelSpec,
    _poly_antiderivative,
    _poly_density,
    get_kernel,
    kernel_cdf,
    kernel_eval,
    kernel_mixed_moment,
    kernel_moment,
    kernel_names,
    verify_kernel,
)

ONE_SIDED_NAMES = [k for k, v in CATALOG.items() if v.one_sided]
SYMMETRIC_NAMES = [k for k, v in CATALOG.items() if not v.one_sided]


def test_catalog_names():
    assert kernel_names() == [
        "simple-poly", "remark26-poly-plus", "remark26-poly-minus",
        "remark26-exp", "epanechnikov", "gaussian",
    ]


def test_unknown_kernel():
    with pytest.raises(ConfigurationError):
        get_kernel("triangular")


@pytest.mark.parametrize("name,t,expected", [
    ("simple-poly", 0.5, 1.0),
    ("simple-poly", -1.0, 0.0),
    ("simple-poly", 1.5, 0.0),
    ("epanechnikov", 0.0, 0.75),
    ("epanechnikov", 1.2, 0.0),
])
def test_kernel_eval_examples(name, t, expected):
    assert kernel_eval(get_kernel(name), t) == expected


@pytest.mark.parametrize("name,t,expected", [
    ("gaussian", 0.0, 0.5),
    ("simple-poly", 1.0, 1.0),
    ("simple-poly", 0.5, 1.25),
    ("simple-poly", 3.0, 1.0),
    ("epanechnikov", -1.0, 0.0),
    ("epanechnikov", 1.0, 1.0),
])
def test_kernel_cdf_examples(name, t, expected):
    assert kernel_cdf(get_kernel(name), t) == pytest.approx(expected, abs=1e-12)


def test_kernel_cdf_simple_poly_against_quadrature():
    val, _ = integrate.quad(lambda u: -6 * u + 4, 0, 0.5)
    assert kernel_cdf(get_kernel("simple-poly"), 0.5) == pytest.approx(val, abs=1e-12)


@pytest.mark.parametrize("name", ONE_SIDED_NAMES)
def test_one_sided_zero_left(name):
    k = get_kernel(name)
    t = np.linspace(-5, 0, 51)
    assert np.all(kernel_eval(k, t) == 0.0)
    assert np.all(kernel_cdf(k, t) == 0.0)


@pytest.mark.parametrize("name", ["simple-poly", "remark26-poly-plus", "remark26-poly-minus"])
def test_one_sided_one_beyond_edge(name):
    k = get_kernel(name)
    assert np.all(kernel_cdf(k, np.array([1.0, 1.5, 100.0])) == 1.0)


@pytest.mark.parametrize("name", SYMMETRIC_NAMES)
def test_symmetric_cdf_reflection(name):
    k = get_kernel(name)
    t = np.linspace(-3, 3, 121)
    np.testing.assert_allclose(kernel_cdf(k, t) + kernel_cdf(k, -t), 1.0, atol=1e-10)
    np.testing.assert_allclose(kernel_eval(k, t), kernel_eval(k, -t), atol=0)


@pytest.mark.parametrize("name", kernel_names())
def test_cdf_derivative_is_density(name):
    k = get_kernel(name)
    lo, hi = k.support
    lo = max(lo, -4.0)
    hi = min(hi, 4.0)
    t = np.linspace(lo, hi, 41)[1:-1]
    eps = 1e-6
    fd = (kernel_cdf(k, t + eps) - kernel_cdf(k, t - eps)) / (2 * eps)
    dens = kernel_eval(k, t)
    scale = np.maximum(np.abs(dens), 1e-3)
    assert np.max(np.abs(fd - dens) / scale) < 1e-5


@pytest.mark.parametrize("name", kernel_names())
def test_normalized(name):
    assert kernel_moment(get_kernel(name), 0, 1) == pytest.approx(1.0, abs=1e-8)


def test_moment_examples():
    assert kernel_moment(get_kernel("simple-poly"), 1, 1) == pytest.approx(0.0, abs=1e-10)
    assert kernel_moment(get_kernel("epanechnikov"), 1, 1) == pytest.approx(0.0, abs=1e-10)
    assert kernel_moment(get_kernel("epanechnikov"), 2, 1) == pytest.approx(0.2, abs=1e-10)
    assert kernel_moment(get_kernel("gaussian"), 2, 1) == pytest.approx(1.0, abs=1e-10)
    # int k^2 of the Epanechnikov kernel is 3/5
    assert kernel_moment(get_kernel("epanechnikov"), 0, 2) == pytest.approx(0.6, abs=1e-10)


def test_moment_argument_checks():
    with pytest.raises(ValueError):
        kernel_moment(get_kernel("gaussian"), -1, 1)
    with pytest.raises(ValueError):
        kernel_mixed_moment(get_kernel("gaussian"), 0, 1, 0)


@pytest.mark.parametrize("name", ONE_SIDED_NAMES)
def test_mixed_moment_half(name):
    # int k* K* = [K*^2 / 2] from 0 to the edge = 1/2
    assert kernel_mixed_moment(get_kernel(name), 0, 1, 1) == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("name", ONE_SIDED_NAMES)
def test_mixed_moment_integration_by_parts(name):
    # A111 = A11 - (1/2) int (1 - K*)^2 over the positive half-line
    k = get_kernel(name)
    hi = k.support[1] if math.isfinite(k.support[1]) else 60.0
    tail, _ = integrate.quad(lambda t: (1 - float(kernel_cdf(k, t))) ** 2, 0, hi, limit=200)
    expected = kernel_moment(k, 1, 1) - 0.5 * tail
    assert kernel_mixed_moment(k, 1, 1, 1) == pytest.approx(expected, abs=1e-8)


def test_remark26_poly_coefficients_closed_form():
    s = math.sqrt(4353.0)
    k = get_kernel("remark26-poly-plus")
    # k(t) = a + b t + c t^2 with the printed coefficients
    a, b, c = (s + 135) / 34, (-3 * s - 99) / 17, (3 * s - 3) / 17
    t = np.linspace(0.05, 0.95, 7)
    np.testing.assert_allclose(kernel_eval(k, t), a + b * t + c * t * t, rtol=1e-13)


def test_verify_simple_poly():
    report = verify_kernel(get_kernel("simple-poly"))
    assert set(report) == {"normalized", "A11_zero"}
    assert all(check.passed for check in report.values())


def test_verify_epanechnikov():
    report = verify_kernel(get_kernel("epanechnikov"))
    assert set(report) == {"normalized", "A11_zero", "A31_zero"}
    assert all(check.passed for check in report.values())


def test_verify_reports_failure_for_uniform():
    uniform = KernelSpec(
        "uniform", "one_sided",
        partial(_poly_density, (1.0,)), partial(_poly_antiderivative, (1.0,)),
        (0.0, 1.0), frozenset({"normalized", "A11_zero"}),
    )
    report = verify_kernel(uniform)
    assert report["normalized"].passed
    assert not report["A11_zero"].passed
    assert report["A11_zero"].measured == pytest.approx(0.5, abs=1e-10)


def test_kernelspec_validation():
    with pytest.raises(ValueError):
        KernelSpec("bad", "two_sided", None, None, (0.0, 1.0))
    with pytest.raises(ValueError):
        KernelSpec("bad", "one_sided", None, None, (1.0, 0.0))
    with pytest.raises(ValueError):
        KernelSpec("bad", "one_sided", None, None, (0.0, 1.0), frozenset({"A99"}))


def test_kernels_pickle():
    import pickle
    for name in kernel_names():
        k = pickle.loads(pickle.dumps(get_kernel(name)))
        assert kernel_cdf(k, 0.3) == kernel_cdf(get_kernel(name), 0.3)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50, allow_nan=False))
def test_symmetric_cdf_bounds(t):
    for name in SYMMETRIC_NAMES:
        v = kernel_cdf(get_kernel(name), t)
        assert 0.0 <= v <= 1.0
