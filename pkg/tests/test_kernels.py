import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from alcsmooth import Bandwidths, KernelFamily, eval_kernel, product_kernel

ALL_FAMILIES = list(KernelFamily)


def test_uniform_values():
    assert eval_kernel(KernelFamily.UNIFORM, 0.0) == 0.5
    assert eval_kernel(KernelFamily.UNIFORM, 1.0) == 0.5
    assert eval_kernel(KernelFamily.UNIFORM, 1.5) == 0.0


def test_gaussian_at_zero():
    # 1 / sqrt(2 pi)
    assert eval_kernel(KernelFamily.GAUSSIAN, 0.0) == pytest.approx(
        0.3989422804014327, abs=1e-15
    )


def test_epanechnikov_value():
    # (3/4)(1 - 0.25)
    assert eval_kernel(KernelFamily.EPANECHNIKOV, 0.5) == 0.5625
    assert eval_kernel(KernelFamily.EPANECHNIKOV, 1.0) == 0.0
    assert eval_kernel(KernelFamily.EPANECHNIKOV, -2.0) == 0.0


def test_nonfinite_argument_rejected():
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(ValueError):
            eval_kernel(KernelFamily.GAUSSIAN, bad)


def test_vectorized_eval():
    u = np.array([-1.5, 0.0, 0.4, 1.5])
    out = eval_kernel(KernelFamily.UNIFORM, u)
    assert np.array_equal(out, [0.0, 0.5, 0.5, 0.0])


# compact supports end at +-1; giving quad the breakpoints keeps it honest
_BREAKS = [-1.0, 1.0]


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_integrates_to_one(family):
    val, err = quad(lambda u: eval_kernel(family, u), -10, 10, limit=200, points=_BREAKS)
    assert abs(val - 1.0) < 1e-6


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_second_moment_matches_analytic(family):
    val, err = quad(
        lambda u: u * u * eval_kernel(family, u), -10, 10, limit=200, points=_BREAKS
    )
    assert abs(val - family.second_moment) < 1e-6
    assert val > 0.0


@pytest.mark.parametrize("family", ALL_FAMILIES)
@given(u=st.floats(-50, 50))
def test_symmetry_exact(family, u):
    assert eval_kernel(family, u) == eval_kernel(family, -u)


@pytest.mark.parametrize("family", ALL_FAMILIES)
@given(u=st.floats(-50, 50))
def test_nonnegative_and_bounded(family, u):
    v = eval_kernel(family, u)
    assert 0.0 <= v <= 1.0


def test_compact_support_is_exactly_zero():
    for family in (KernelFamily.UNIFORM, KernelFamily.EPANECHNIKOV):
        for u in (1.0000001, 5.0, 1e8):
            assert eval_kernel(family, u) == 0.0
            assert eval_kernel(family, -u) == 0.0


def test_from_name():
    assert KernelFamily.from_name("Uniform") is KernelFamily.UNIFORM
    assert KernelFamily.from_name(" gaussian ") is KernelFamily.GAUSSIAN
    with pytest.raises(ValueError):
        KernelFamily.from_name("triangle")


# --- product kernel ---------------------------------------------------------

def test_product_kernel_single_factor_matches_eval():
    got = product_kernel(KernelFamily.UNIFORM, [0.4], [0.5], [0.2])
    assert got == eval_kernel(KernelFamily.UNIFORM, -0.5) == 0.5


def test_product_kernel_2d_at_origin():
    assert product_kernel(KernelFamily.UNIFORM, [0.0, 0.0], [0.0, 0.0], [1.0, 2.0]) == 0.25


def test_product_kernel_outside_support():
    assert product_kernel(KernelFamily.UNIFORM, [3.0, 0.0], [0.0, 0.0], [1.0, 1.0]) == 0.0


def test_product_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        product_kernel(KernelFamily.UNIFORM, [0.0, 1.0], [0.0], [1.0])


def test_product_kernel_permutation_invariant(rng):
    for _ in range(25):
        q = int(rng.integers(2, 5))
        xi = rng.normal(size=q)
        x = rng.normal(size=q)
        h = rng.uniform(0.2, 2.0, size=q)
        perm = rng.permutation(q)
        for family in ALL_FAMILIES:
            assert product_kernel(family, xi, x, h) == pytest.approx(
                product_kernel(family, xi[perm], x[perm], h[perm]), rel=1e-12
            )


def test_product_kernel_nonnegative(rng):
    for _ in range(50):
        q = int(rng.integers(1, 4))
        v = product_kernel(
            KernelFamily.EPANECHNIKOV,
            rng.normal(size=q),
            rng.normal(size=q),
            rng.uniform(0.1, 3.0, size=q),
        )
        assert v >= 0.0


# --- bandwidth container -----------------------------------------------------

def test_bandwidths_validation():
    bw = Bandwidths(domain=[0.1, 0.2], range_bw=1.5)
    assert bw.q == 2
    assert bw.range_bw == 1.5
    with pytest.raises(ValueError):
        Bandwidths(domain=[0.1, -0.2])
    with pytest.raises(ValueError):
        Bandwidths(domain=[0.0])
    with pytest.raises(ValueError):
        Bandwidths(domain=[0.1], range_bw=0.0)
    with pytest.raises(ValueError):
        Bandwidths(domain=[np.inf])


def test_bandwidths_range_optional():
    assert Bandwidths(domain=[1.0]).range_bw is None
