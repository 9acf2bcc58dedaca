import numpy as np
import pytest

import alcsmooth as a
from alcsmooth import (
    Bandwidths,
    Dataset,
    EstimatorKind,
    EstimatorSpec,
    IsotropicPilot,
    KernelFamily,
    OraclePilot,
    SuppliedPilot,
    alc_fit,
    fit,
    lc_fit,
)
from conftest import random_instance
from naive import naive_fit

U = KernelFamily.UNIFORM
G = KernelFamily.GAUSSIAN


def _alc_spec(domain, range_bw, kernel=U, range_kernel=None, pilot=None, iterations=1):
    return EstimatorSpec(
        EstimatorKind.ALC,
        Bandwidths(domain=domain, range_bw=range_bw),
        kernel=kernel,
        range_kernel=range_kernel,
        pilot=pilot if pilot is not None else IsotropicPilot(),
        iterations=iterations,
    )


# --- dataset validation -------------------------------------------------------

def test_dataset_shapes():
    d = Dataset(x=np.arange(4.0), y=np.arange(4.0))
    assert d.x.shape == (4, 1) and d.n == 4 and d.q == 1
    with pytest.raises(ValueError):
        Dataset(x=np.arange(4.0), y=np.arange(3.0))
    with pytest.raises(ValueError):
        Dataset(x=np.array([1.0]), y=np.array([1.0]))
    with pytest.raises(ValueError):
        Dataset(x=np.array([1.0, np.nan]), y=np.array([1.0, 2.0]))


# --- lc_fit spec examples -----------------------------------------------------

def test_lc_constant_data_is_exact():
    x = np.linspace(0, 1, 50)
    c = 1.0 / 3.0
    d = Dataset(x=x, y=np.full(50, c))
    for kernel in KernelFamily:
        for h in (0.01, 0.3, 11.0):
            res = lc_fit(d, x, kernel, [h])
            defined = ~res.undefined_mask
            assert np.all(res.estimates[defined] == c)


def test_lc_single_point_window():
    d = Dataset(x=np.array([0.0, 1.0]), y=np.array([0.0, 10.0]))
    res = lc_fit(d, np.array([[0.0]]), U, [0.4])
    assert res.estimates[0] == 0.0 and not res.undefined_mask[0]


def test_lc_wide_window_plain_mean():
    d = Dataset(x=np.array([0.0, 0.5, 1.0]), y=np.array([1.0, 2.0, 3.0]))
    res = lc_fit(d, np.array([[0.5]]), U, [10.0])
    assert res.estimates[0] == pytest.approx(2.0, rel=1e-15)


def test_lc_undefined_target_flagged():
    d = Dataset(x=np.array([0.0, 0.1]), y=np.array([1.0, 2.0]))
    res = lc_fit(d, np.array([[5.0]]), U, [0.2])
    assert res.undefined_mask[0] and np.isnan(res.estimates[0])


def test_all_undefined_warns_not_raises():
    d = Dataset(x=np.array([0.0, 0.1]), y=np.array([1.0, 2.0]))
    with pytest.warns(UserWarning):
        res = lc_fit(d, np.array([[5.0], [6.0]]), U, [0.2])
    assert res.undefined_mask.all()


def test_lc_dimension_mismatch():
    d = Dataset(x=np.zeros((5, 2)), y=np.zeros(5))
    with pytest.raises(ValueError):
        lc_fit(d, np.zeros((3, 1)), U, [0.1, 0.1])
    with pytest.raises(ValueError):
        lc_fit(d, np.zeros((3, 2)), U, [0.1, 0.1, 0.1])
    # a single bandwidth broadcasts across dimensions
    assert lc_fit(d, np.zeros((3, 2)), U, [0.1]).estimates.shape == (3,)


# --- alc_fit spec examples ------------------------------------------------------

def test_alc_constant_pilot_identical_to_lc():
    rng = np.random.default_rng(7)
    x = np.linspace(0, 3, 60)
    y = rng.normal(size=60)
    d = Dataset(x=x, y=y)
    targets = np.linspace(0.2, 2.8, 41)[:, None]
    base = lc_fit(d, targets, U, [0.4])
    spec = _alc_spec([0.4], 2.0)
    pilot = np.full(60, 5.0)
    got = alc_fit(d, targets, spec, pilot, np.full(41, 5.0))
    # uniform range kernel at zero is an exact power of two: no rounding
    assert np.array_equal(got.estimates, base.estimates)
    assert np.array_equal(got.undefined_mask, base.undefined_mask)


def test_alc_huge_range_bandwidth_reduces_to_lc():
    rng = np.random.default_rng(11)
    for n, q in ((40, 1), (60, 2)):
        x = rng.uniform(0, 3, size=(n, q))
        y = rng.normal(size=n)
        d = Dataset(x=x, y=y)
        targets = rng.uniform(0, 3, size=(25, q))
        base = lc_fit(d, targets, U, [0.8] * q)
        spec = _alc_spec([0.8] * q, 1e9, range_kernel=G)
        got = alc_fit(d, targets, spec, y, rng.normal(size=25))
        keep = ~base.undefined_mask
        assert np.all(np.abs(got.estimates[keep] - base.estimates[keep]) < 1e-9)


def test_alc_range_exclusion_piecewise():
    x = np.array([0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    y = np.array([1.0, 1.0, 1.0, 7.0, 7.0, 7.0])
    d = Dataset(x=x, y=y)
    spec = _alc_spec([0.45], 1.0)
    res = alc_fit(d, np.array([[0.4]]), spec, y, np.array([1.0]))
    assert res.estimates[0] == 1.0


def test_alc_pilot_validation():
    d = Dataset(x=np.array([0.0, 1.0]), y=np.array([1.0, 2.0]))
    spec = _alc_spec([0.5], 1.0)
    with pytest.raises(ValueError):
        alc_fit(d, np.array([[0.5]]), spec, np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        alc_fit(d, np.array([[0.5]]), spec, np.array([1.0, np.nan]), np.array([1.0]))


def test_alc_undefined_pilot_target_propagates():
    d = Dataset(x=np.array([0.0, 0.2, 0.4]), y=np.array([1.0, 2.0, 3.0]))
    spec = _alc_spec([0.3], 1.0)
    res = alc_fit(d, np.array([[0.1], [0.3]]), spec,
                  np.array([1.0, 2.0, 3.0]), np.array([np.nan, 2.0]))
    assert res.undefined_mask[0] and not res.undefined_mask[1]


def test_lc_spec_requires_lc_kind():
    d = Dataset(x=np.array([0.0, 1.0]), y=np.array([1.0, 2.0]))
    spec = EstimatorSpec(EstimatorKind.LC, Bandwidths(domain=[0.5]))
    with pytest.raises(ValueError):
        alc_fit(d, np.array([[0.5]]), spec, np.zeros(2), np.zeros(1))


# --- fit() dispatch and iteration ------------------------------------------------

def test_fit_lc_constant():
    d = Dataset(x=np.linspace(0, 1, 20), y=np.full(20, 4.5))
    spec = EstimatorSpec(EstimatorKind.LC, Bandwidths(domain=[0.3]))
    res = fit(d, d.x, spec)
    assert np.all(res.estimates == 4.5)


def test_fit_iteration_matches_supplied_pilot():
    rng = np.random.default_rng(3)
    x = np.linspace(0, 3, 80)
    y = np.where(x > 1.5, 5.0, 0.0) + rng.normal(0, 0.3, 80)
    d = Dataset(x=x, y=y)
    targets = np.linspace(0.1, 2.9, 33)[:, None]
    spec2 = _alc_spec([0.4], 1.0, pilot=IsotropicPilot(np.array([0.3])), iterations=2)
    got = fit(d, targets, spec2)

    spec1 = _alc_spec([0.4], 1.0, pilot=IsotropicPilot(np.array([0.3])), iterations=1)
    first_t = fit(d, targets, spec1)
    first_d = fit(d, d.x, spec1)
    manual = alc_fit(d, targets, spec1, first_d.estimates, first_t.estimates)
    assert np.array_equal(got.estimates[~got.undefined_mask],
                          manual.estimates[~manual.undefined_mask])


def test_fit_zero_iterations_returns_pilot():
    d = Dataset(x=np.linspace(0, 3, 30), y=np.linspace(0, 3, 30))
    pilot = SuppliedPilot(np.zeros(30), np.full(5, 42.0))
    spec = _alc_spec([0.4], 1.0, pilot=pilot, iterations=0)
    res = fit(d, np.linspace(1, 2, 5)[:, None], spec)
    assert np.all(res.estimates == 42.0)


def test_fit_oracle_pilot_requires_finite():
    d = Dataset(x=np.linspace(0, 3, 10), y=np.zeros(10))
    spec = _alc_spec([0.5], 1.0, pilot=OraclePilot(lambda pts: np.full(len(pts), np.nan)))
    with pytest.raises(ValueError):
        fit(d, d.x, spec)


def test_fit_oracle_matches_alc_fit():
    rng = np.random.default_rng(5)
    x = np.linspace(0, 3, 100)
    y = np.where(x > 1, 7.0, 1.0) + rng.normal(0, 0.5, 100)
    d = Dataset(x=x, y=y)
    g = lambda pts: np.where(pts[:, 0] > 1, 7.0, 1.0)
    spec = _alc_spec([0.5], 2.0, pilot=OraclePilot(g))
    targets = np.linspace(0, 3, 17)[:, None]
    via_fit = fit(d, targets, spec)
    direct = alc_fit(d, targets, spec, g(d.x), g(targets))
    assert np.array_equal(via_fit.estimates[~via_fit.undefined_mask],
                          direct.estimates[~direct.undefined_mask])


# --- oracle equivalence ------------------------------------------------------------

def test_lc_matches_naive_oracle(rng):
    for _ in range(60):
        d, targets, kernel, h = random_instance(rng)
        got = lc_fit(d, targets, kernel, h)
        want, undef = naive_fit(d.x.tolist(), d.y.tolist(), targets.tolist(),
                                kernel.value, h.tolist())
        assert got.undefined_mask.tolist() == undef
        for g_i, w_i in zip(got.estimates, want):
            if w_i is not None:
                assert g_i == pytest.approx(w_i, rel=1e-12, abs=1e-12)


def test_alc_matches_naive_oracle(rng):
    for _ in range(40):
        d, targets, kernel, h = random_instance(rng)
        rk = KernelFamily.from_name(str(rng.choice(["uniform", "gaussian", "epanechnikov"])))
        pd = rng.normal(0, 2, size=d.n)
        pt = rng.normal(0, 2, size=len(targets))
        hr = float(rng.uniform(0.2, 3.0))
        spec = _alc_spec(h, hr, kernel=kernel, range_kernel=rk)
        got = alc_fit(d, targets, spec, pd, pt)
        want, undef = naive_fit(d.x.tolist(), d.y.tolist(), targets.tolist(),
                                kernel.value, h.tolist(), pd.tolist(), pt.tolist(),
                                rk.value, hr)
        assert got.undefined_mask.tolist() == undef
        for g_i, w_i in zip(got.estimates, want):
            if w_i is not None:
                assert g_i == pytest.approx(w_i, rel=1e-12, abs=1e-12)


# --- invariants ----------------------------------------------------------------------

def test_convex_combination_bounds(rng):
    slack = 1e-10
    for _ in range(40):
        d, targets, kernel, h = random_instance(rng)
        res = lc_fit(d, targets, kernel, h)
        keep = ~res.undefined_mask
        lo, hi = d.y.min(), d.y.max()
        width = hi - lo
        assert np.all(res.estimates[keep] >= lo - slack * max(1.0, width))
        assert np.all(res.estimates[keep] <= hi + slack * max(1.0, width))


def test_shift_equivariance_lc_and_alc(rng):
    x = np.linspace(0, 3, 120)
    y = np.where(x > 1.5, 6.0, 1.0) + rng.normal(0, 0.4, 120)
    targets = np.linspace(0.1, 2.9, 30)[:, None]
    c = 17.25
    for make in (
        lambda yy: (EstimatorSpec(EstimatorKind.LC, Bandwidths(domain=[0.3])), yy),
        lambda yy: (_alc_spec([0.3], 1.5, pilot=IsotropicPilot(np.array([0.24]))), yy),
    ):
        spec, _ = make(y)
        base = fit(Dataset(x=x, y=y), targets, spec)
        shifted = fit(Dataset(x=x, y=y + c), targets, spec)
        keep = ~base.undefined_mask
        assert np.allclose(shifted.estimates[keep] - base.estimates[keep], c,
                           rtol=0, atol=1e-12)


def test_shift_equivariance_oracle(rng):
    x = np.linspace(0, 3, 100)
    g0 = lambda pts: np.where(pts[:, 0] > 1.5, 6.0, 1.0)
    y = g0(x[:, None]) + rng.normal(0, 0.4, 100)
    targets = np.linspace(0.1, 2.9, 30)[:, None]
    c = -4.0
    spec0 = _alc_spec([0.3], 1.5, pilot=OraclePilot(g0))
    spec1 = _alc_spec([0.3], 1.5, pilot=OraclePilot(lambda pts: g0(pts) + c))
    base = fit(Dataset(x=x, y=y), targets, spec0)
    shifted = fit(Dataset(x=x, y=y + c), targets, spec1)
    keep = ~base.undefined_mask
    assert np.allclose(shifted.estimates[keep] - base.estimates[keep], c,
                       rtol=0, atol=1e-12)


def test_scale_equivariance_alc(rng):
    x = np.linspace(0, 3, 120)
    y = np.where(x > 1.5, 6.0, 1.0) + rng.normal(0, 0.4, 120)
    targets = np.linspace(0.1, 2.9, 30)[:, None]
    for c in (3.5, -2.0):
        spec = _alc_spec([0.3], 1.5, pilot=IsotropicPilot(np.array([0.24])))
        spec_scaled = _alc_spec([0.3], 1.5 * abs(c), pilot=IsotropicPilot(np.array([0.24])))
        base = fit(Dataset(x=x, y=y), targets, spec)
        scaled = fit(Dataset(x=x, y=c * y), targets, spec_scaled)
        keep = ~base.undefined_mask
        assert np.allclose(scaled.estimates[keep], c * base.estimates[keep],
                           rtol=1e-12, atol=1e-12)


def test_determinism_repeated_calls(rng):
    d, targets, kernel, h = random_instance(rng, n=150, q=2)
    r1 = lc_fit(d, targets, kernel, h)
    r2 = lc_fit(d, targets, kernel, h)
    assert np.array_equal(r1.estimates, r2.estimates, equal_nan=True)


# --- filled_nearest and CSV round trips ------------------------------------------------

def test_filled_nearest():
    res = a.FitResult(
        targets=np.array([[0.0], [1.0], [2.0]]),
        estimates=np.array([5.0, np.nan, 7.0]),
        undefined_mask=np.array([False, True, False]),
    )
    filled = res.filled_nearest()
    assert filled.estimates[1] == 5.0  # tie at distance 1.0 resolves to first
    assert not filled.undefined_mask.any()
    assert res.undefined_mask[1]  # original untouched


def test_filled_nearest_no_defined_points():
    res = a.FitResult(
        targets=np.array([[0.0]]),
        estimates=np.array([np.nan]),
        undefined_mask=np.array([True]),
    )
    with pytest.warns(UserWarning):
        out = res.filled_nearest()
    assert out.undefined_mask.all()


def test_dataset_csv_round_trip(tmp_path, rng):
    d, _, _, _ = random_instance(rng, n=30, q=2)
    p = tmp_path / "data.csv"
    a.write_dataset_csv(d, p)
    back = a.read_dataset_csv(p)
    assert np.array_equal(back.x, d.x)
    assert np.array_equal(back.y, d.y)
    header = p.read_text(encoding="utf-8").splitlines()[0]
    assert header == "x_1,x_2,y"


def test_fit_csv_round_trip(tmp_path, rng):
    d, targets, kernel, h = random_instance(rng, n=40, q=1, kernel="uniform")
    res = lc_fit(d, targets, kernel, [0.05])
    p = tmp_path / "fit.csv"
    a.write_fit_csv(res, p)
    back = a.read_fit_csv(p)
    assert np.array_equal(back.targets, res.targets)
    assert np.array_equal(back.estimates, res.estimates, equal_nan=True)
    assert np.array_equal(back.undefined_mask, res.undefined_mask)
