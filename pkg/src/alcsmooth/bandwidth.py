"""Data-driven bandwidth selection and bandwidth scaling rules.

Two leave-nothing-implicit selectors are provided: corrected-AIC scoring of
the smoother matrix and least-squares leave-one-out cross-validation. Both
scan an explicit grid so selection is deterministic and the chosen value
always belongs to the grid (ties resolve toward the smaller bandwidth).

The range bandwidth of the anisotropic estimator is never cross-validated
jointly with the domain bandwidths; it comes from an explicit value or a
heuristic: :func:`pilot_range_bandwidth` (multiplier times the pilot fit's
residual spread, the pipeline default) or :func:`default_range_bandwidth`
(multiplier times the pilot-value spread).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._engine import weighted_sums
from .estimators import PILOT_SHRINK, Dataset, _as_domain_bw
from .kernels import Bandwidths, KernelFamily

# Contribution of an undefined leave-one-out point: large but finite, so a
# partially supported bandwidth can still beat a fully undefined one.
LOO_PENALTY = 1e12

DEFAULT_GRID_POINTS = 25


class SelectionFailureError(RuntimeError):
    """No admissible bandwidth exists on the supplied grid."""


def default_grid(data: Dataset, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Geometric grid of candidate bandwidth vectors, shape (points, q).

    Column j spans [span_j / n, span_j] where span_j is the range of the
    j-th regressor.
    """
    if points < 1:
        raise ValueError("grid needs at least one point")
    spans = data.x.max(axis=0) - data.x.min(axis=0)
    if np.any(spans <= 0.0):
        raise ValueError("regressors must have positive spread to build a grid")
    cols = [np.geomspace(span / data.n, span, points) for span in spans]
    return np.column_stack(cols)


def _as_grid(grid, q: int) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim == 1:
        g = np.repeat(g[:, None], q, axis=1)
    if g.ndim != 2 or g.shape[1] != q or g.shape[0] == 0:
        raise ValueError(f"grid must be (points,) or (points, {q}) and non-empty")
    if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
        raise ValueError("grid bandwidths must be strictly positive and finite")
    if np.any(np.diff(g, axis=0) <= 0.0):
        raise ValueError("grid must be strictly increasing in every dimension")
    return g


def aicc_criterion(y: np.ndarray, fitted: np.ndarray, trace: float) -> float:
    """Corrected-AIC score: ln(sigma^2) + (1 + tr/n) / (1 - (tr + 2)/n)."""
    n = y.size
    s2 = float(np.mean((y - fitted) ** 2))
    if s2 == 0.0:
        return -math.inf
    return math.log(s2) + (1.0 + trace / n) / (1.0 - (trace + 2.0) / n)


def _diag_sums(data, kernel, h, pilot=None, range_kernel=None, range_bw=None):
    """Weighted sums at the data points themselves, with y shifted by y[0]."""
    y0 = float(data.y[0])
    num, den = weighted_sums(
        data.x, data.y - y0, data.x, kernel, h,
        pilot_data=pilot, pilot_targets=pilot,
        range_kernel=range_kernel, range_bw=range_bw,
    )
    return num, den, y0


def _self_weight(kernel: KernelFamily, q: int, range_kernel: KernelFamily | None) -> float:
    w = kernel.at_zero ** q
    if range_kernel is not None:
        w *= range_kernel.at_zero
    return w


def _scan(data, kernel, grid, method, candidate_sums):
    """Shared grid scan. ``candidate_sums(h)`` returns (num, den, y0, k0).

    Scores every candidate and returns the best row; ties resolve toward
    the smaller bandwidth (the grid is ascending), independent of
    evaluation order. Raises SelectionFailureError when no candidate is
    admissible.
    """
    y = data.y
    n = data.n
    scores = np.full(grid.shape[0], math.inf)
    for i, row in enumerate(grid):
        num, den, y0, k0 = candidate_sums(row)
        if method == "aicc":
            trace = float(np.sum(k0 / den))
            if trace + 2.0 >= n:
                continue
            fitted = y0 + num / den
            scores[i] = aicc_criterion(y, fitted, trace)
        else:  # lscv
            loo_den = den - k0
            ok = loo_den > 0.0
            if not ok.any():
                continue
            resid2 = np.full(n, LOO_PENALTY)
            loo_fit = y0 + (num[ok] - k0 * (y[ok] - y0)) / loo_den[ok]
            resid2[ok] = (y[ok] - loo_fit) ** 2
            scores[i] = float(np.mean(resid2))
    finite = scores < math.inf
    if method == "lscv":
        # a row whose every leave-one-out point is undefined is no choice
        finite &= scores < LOO_PENALTY
    if not finite.any():
        raise SelectionFailureError(
            f"no admissible bandwidth on the grid (method={method}, n={n})"
        )
    idx = int(np.flatnonzero(finite & (scores <= scores[finite].min()))[0])
    return np.array(grid[idx], dtype=np.float64)


def select_aicc(data: Dataset, kernel: KernelFamily, grid) -> np.ndarray:
    """Corrected-AIC bandwidth for the isotropic fit.

    Scores each candidate h through the smoother matrix H_h of the local
    constant fit (row i = normalized weights at X_i): the criterion is
    ln(sigma_hat^2) + (1 + tr(H)/n) / (1 - (tr(H) + 2)/n). Candidates with
    tr(H) + 2 >= n are skipped.
    """
    if data.n < 5:
        raise ValueError("corrected-AIC selection needs n >= 5")
    grid = _as_grid(grid, data.q)
    k0 = _self_weight(kernel, data.q, None)

    def sums(row):
        num, den, y0 = _diag_sums(data, kernel, row)
        return num, den, y0, k0

    return _scan(data, kernel, grid, "aicc", sums)


def select_lscv(data: Dataset, kernel: KernelFamily, grid) -> np.ndarray:
    """Least-squares leave-one-out bandwidth for the isotropic fit."""
    if data.n < 3:
        raise ValueError("leave-one-out selection needs n >= 3")
    grid = _as_grid(grid, data.q)
    k0 = _self_weight(kernel, data.q, None)

    def sums(row):
        num, den, y0 = _diag_sums(data, kernel, row)
        return num, den, y0, k0

    return _scan(data, kernel, grid, "lscv", sums)


def scale_for_alc(h_pilot, inflation: float) -> np.ndarray:
    """Inflate pilot-scale bandwidths for the anisotropic step (inflation >= 1)."""
    h = np.atleast_1d(np.asarray(h_pilot, dtype=np.float64))
    if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
        raise ValueError("bandwidths must be strictly positive and finite")
    if not (math.isfinite(inflation) and inflation >= 1.0):
        raise ValueError("inflation factor must be >= 1")
    return h * inflation


def default_range_bandwidth(pilot_values, multiplier: float) -> float:
    """Ad hoc range bandwidth: multiplier times the sample SD of the pilot.

    Falls back to ``multiplier`` itself when the pilot is constant.
    """
    p = np.asarray(pilot_values, dtype=np.float64)
    if p.size < 2:
        raise ValueError("need at least two pilot values")
    if not np.all(np.isfinite(p)):
        raise ValueError("pilot values must be finite")
    if not (math.isfinite(multiplier) and multiplier > 0.0):
        raise ValueError("multiplier must be positive")
    sd = float(np.std(p, ddof=1))
    if sd == 0.0:
        return multiplier
    return multiplier * sd


def rate_rule_bandwidths(ns_per_dim, constant: float, exponent: float | None = None) -> np.ndarray:
    """Bandwidths h_j = constant * n_j ** (-exponent).

    The default exponent 1/(q+2) is the mean-squared-error-optimal decay for
    the anisotropic fit; pass 1/(q+4) for the isotropic one.
    """
    ns = np.atleast_1d(np.asarray(ns_per_dim, dtype=np.float64))
    if np.any(ns < 2):
        raise ValueError("per-dimension sample sizes must be >= 2")
    if not (math.isfinite(constant) and constant > 0.0):
        raise ValueError("rate-rule constant must be positive")
    q = ns.size
    e = exponent if exponent is not None else 1.0 / (q + 2.0)
    return constant * ns ** (-e)


@dataclass
class BandwidthPlan:
    """Resolved bandwidth policy for one fit.

    ``method`` is one of "aicc", "lscv", "fixed", "rate". The range rule is
    a fixed value when ``fixed_range`` is set, otherwise the residual-spread
    heuristic with ``range_multiplier``. ``inflation`` scales the anisotropic
    domain bandwidths after selection.
    """

    method: str = "aicc"
    fixed_domain: np.ndarray | None = None
    rate_constant: float = 0.5
    rate_exponent: float | None = None
    grid: np.ndarray | None = None
    grid_points: int = DEFAULT_GRID_POINTS
    fixed_range: float | None = None
    range_multiplier: float = 1.0
    inflation: float = 1.0
    pilot_factor: float = PILOT_SHRINK

    def __post_init__(self):
        if self.method not in ("aicc", "lscv", "fixed", "rate"):
            raise ValueError(f"unknown bandwidth method {self.method!r}")
        if self.method == "fixed" and self.fixed_domain is None:
            raise ValueError("fixed bandwidth method requires fixed_domain")
        if self.range_multiplier <= 0.0:
            raise ValueError("range multiplier must be positive")
        if self.inflation < 1.0:
            raise ValueError("inflation factor must be >= 1")
        if not 0.0 < self.pilot_factor:
            raise ValueError("pilot factor must be positive")


def _lc_pilot_values(data, kernel, h_pilot):
    num, den, y0 = _diag_sums(data, kernel, h_pilot)
    return y0 + num / den


def pilot_range_bandwidth(data: Dataset, pilot_values, multiplier: float) -> float:
    """Range bandwidth scaled to the pilot fit's residual spread.

    The range kernel compares pilot values, whose meaningful differences
    start at the noise level: scaling by the residual SD keeps genuine
    jumps outside the range window at any noise level without letting
    pilot noise randomly eject neighbors. Falls back to the pilot-spread
    rule when the fit is exact (zero residuals).
    """
    p = np.asarray(pilot_values, dtype=np.float64)
    resid_sd = float(np.sqrt(np.mean((data.y - p) ** 2)))
    if resid_sd == 0.0:
        return default_range_bandwidth(p, multiplier)
    if not (math.isfinite(multiplier) and multiplier > 0.0):
        raise ValueError("multiplier must be positive")
    return multiplier * resid_sd


@dataclass(frozen=True)
class ResolvedBandwidths:
    """Concrete bandwidths plus, for a piloted fit, the pilot's own bandwidths."""

    bandwidths: Bandwidths
    pilot_domain: np.ndarray | None = None


def resolve_bandwidths(
    data: Dataset,
    plan: BandwidthPlan,
    kind: str,
    kernel: KernelFamily,
    range_kernel: KernelFamily | None = None,
    oracle=None,
) -> ResolvedBandwidths:
    """Turn a plan into concrete bandwidths for estimator ``kind``.

    ``kind`` is "lc", "alc" or "alct". The data-driven methods scan the
    grid through the estimator's own smoother matrix. Anisotropic
    candidates carry their own pilot (``plan.pilot_factor`` times the
    candidate, so the pilot is always the strictly more local fit; the
    oracle for "alct") and a range bandwidth scaled to that pilot's
    residual spread, unless ``plan.fixed_range`` pins it.
    """
    if kind not in ("lc", "alc", "alct"):
        raise ValueError(f"unknown estimator kind {kind!r}")
    if kind == "alct" and oracle is None:
        raise ValueError("alct bandwidth resolution requires an oracle")
    rk = range_kernel if range_kernel is not None else kernel

    def alc_parts(domain: np.ndarray):
        """Pilot and range bandwidth induced by an anisotropic domain bandwidth."""
        if kind == "alct":
            pilot_domain = None
            pilot = np.asarray(oracle(data.x), dtype=np.float64)
            if not np.all(np.isfinite(pilot)):
                raise ValueError("oracle produced non-finite values")
        else:
            pilot_domain = plan.pilot_factor * domain
            pilot = _lc_pilot_values(data, kernel, pilot_domain)
        if plan.fixed_range is not None:
            hr = plan.fixed_range
        else:
            hr = pilot_range_bandwidth(data, pilot, plan.range_multiplier)
        return pilot_domain, pilot, hr

    def finish(domain: np.ndarray) -> ResolvedBandwidths:
        if kind == "lc":
            return ResolvedBandwidths(Bandwidths(domain=domain))
        if kind == "alc":
            domain = scale_for_alc(domain, plan.inflation)
        pilot_domain, _, hr = alc_parts(domain)
        return ResolvedBandwidths(
            Bandwidths(domain=domain, range_bw=hr), pilot_domain=pilot_domain
        )

    if plan.method in ("fixed", "rate"):
        if plan.method == "fixed":
            domain = _as_domain_bw(plan.fixed_domain, data.q)
        else:
            n_per_dim = round(data.n ** (1.0 / data.q))
            domain = rate_rule_bandwidths(
                np.full(data.q, n_per_dim), plan.rate_constant, plan.rate_exponent
            )
        return finish(domain)

    grid = _as_grid(plan.grid if plan.grid is not None else default_grid(data, plan.grid_points), data.q)
    if plan.method == "aicc" and data.n < 5:
        raise ValueError("corrected-AIC selection needs n >= 5")
    if plan.method == "lscv" and data.n < 3:
        raise ValueError("leave-one-out selection needs n >= 3")

    if kind == "lc":
        k0 = _self_weight(kernel, data.q, None)

        def sums(row):
            num, den, y0 = _diag_sums(data, kernel, row)
            return num, den, y0, k0

        return finish(_scan(data, kernel, grid, plan.method, sums))

    # anisotropic kinds: scan the domain bandwidth through the estimator's
    # own smoother, rebuilding pilot and range bandwidth per candidate
    k0 = _self_weight(kernel, data.q, rk)

    def sums(row):
        _, pilot, hr = alc_parts(row)
        num, den, y0 = _diag_sums(data, kernel, row, pilot, rk, hr)
        return num, den, y0, k0

    return finish(_scan(data, kernel, grid, plan.method, sums))
