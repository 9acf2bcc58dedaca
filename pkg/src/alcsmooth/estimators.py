"""Local constant regression estimators, isotropic and anisotropic.

The isotropic fit is a normalized kernel-weighted average of outcomes
around each target. The anisotropic fit multiplies each domain weight by a
range (tonal) kernel applied to differences of pilot-estimate values, so
observations across an abrupt change contribute little even when they are
close in the regressors. Iterating feeds each anisotropic fit back in as
the next pilot.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Union

import numpy as np

from ._engine import weighted_sums
from .kernels import Bandwidths, KernelFamily

# Default pilot bandwidth = this factor times the anisotropic domain
# bandwidth, keeping the pilot strictly less smooth at every sample size.
PILOT_SHRINK = 0.8


class EstimatorKind(Enum):
    LC = "lc"
    ALC = "alc"


@dataclass
class Dataset:
    """Fixed-design regression data: regressors ``x`` (n, q), outcomes ``y`` (n,)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ValueError("x must be an (n, q) matrix")
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError("y must be a vector with one entry per row of x")
        if x.shape[0] < 2:
            raise ValueError("need at least two observations")
        if x.shape[1] < 1:
            raise ValueError("need at least one regressor dimension")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("data must be finite")
        self.x = x
        self.y = y

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def q(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class IsotropicPilot:
    """Pilot from an isotropic fit; ``bandwidths`` default to PILOT_SHRINK
    times the anisotropic domain bandwidths."""

    bandwidths: np.ndarray | None = None


@dataclass(frozen=True)
class OraclePilot:
    """Pilot from the true regression function (simulation studies only).

    ``g`` maps an (m, q) array of points to an (m,) array of values.
    """

    g: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SuppliedPilot:
    """Precomputed pilot values at the data points and at the targets."""

    values_at_data: np.ndarray
    values_at_targets: np.ndarray


PilotPolicy = Union[IsotropicPilot, OraclePilot, SuppliedPilot]


@dataclass
class EstimatorSpec:
    """Everything needed to fit: estimator kind, kernels, bandwidths, pilot.

    An LC spec ignores the range bandwidth, pilot and iteration count. An
    ALC spec with ``iterations=d`` applies the anisotropic step d times
    total, re-piloting from the previous pass.
    """

    kind: EstimatorKind
    bandwidths: Bandwidths
    kernel: KernelFamily = KernelFamily.UNIFORM
    range_kernel: KernelFamily | None = None
    pilot: PilotPolicy = field(default_factory=IsotropicPilot)
    iterations: int = 1

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")

    @property
    def effective_range_kernel(self) -> KernelFamily:
        return self.range_kernel if self.range_kernel is not None else self.kernel


@dataclass
class FitResult:
    """Estimates at the targets; NaN plus a mask entry where every weight
    vanished (compact kernels with no local data)."""

    targets: np.ndarray
    estimates: np.ndarray
    undefined_mask: np.ndarray

    def filled_nearest(self) -> "FitResult":
        """Substitute each undefined estimate with the nearest defined one.

        Distance is Euclidean over the targets; ties resolve to the earliest
        defined target. Returns self when nothing is undefined or nothing is
        defined.
        """
        mask = self.undefined_mask
        if not mask.any():
            return self
        defined = ~mask
        if not defined.any():
            warnings.warn("no defined estimates to fill from")
            return self
        tu = self.targets[mask]
        td = self.targets[defined]
        d2 = ((tu[:, None, :] - td[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argmin(d2, axis=1)
        est = self.estimates.copy()
        est[mask] = self.estimates[defined][nearest]
        return FitResult(self.targets, est, np.zeros_like(mask))


def _as_targets(targets, q: int) -> np.ndarray:
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim == 1:
        t = t[:, None]
    if t.ndim != 2 or t.shape[1] != q:
        raise ValueError(f"targets must be an (m, {q}) matrix")
    if not np.all(np.isfinite(t)):
        raise ValueError("targets must be finite")
    return t


def _as_domain_bw(h, q: int) -> np.ndarray:
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    if h.size == 1 and q > 1:
        h = np.full(q, h[0])
    if h.shape != (q,):
        raise ValueError(f"expected {q} domain bandwidths, got shape {h.shape}")
    if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
        raise ValueError("domain bandwidths must be strictly positive and finite")
    return h


def _assemble(targets, num, den, y_base) -> FitResult:
    mask = den == 0.0
    est = np.full(den.shape, np.nan)
    np.divide(num, den, out=est, where=~mask)
    est[~mask] += y_base
    if mask.all() and mask.size:
        warnings.warn("all targets are undefined: no data received weight anywhere")
    return FitResult(targets, est, mask)


def lc_fit(data: Dataset, targets, kernel: KernelFamily, h) -> FitResult:
    """Isotropic local constant fit at ``targets`` with domain bandwidths ``h``."""
    targets = _as_targets(targets, data.q)
    h = _as_domain_bw(h, data.q)
    y0 = float(data.y[0])
    num, den = weighted_sums(data.x, data.y - y0, targets, kernel, h)
    return _assemble(targets, num, den, y0)


def alc_fit(
    data: Dataset,
    targets,
    spec: EstimatorSpec,
    pilot_at_data,
    pilot_at_targets,
) -> FitResult:
    """Single anisotropic pass with explicit pilot values.

    Pilot values at the data points must be finite. A non-finite pilot at a
    target (e.g. an undefined earlier fit) marks that target undefined.
    """
    if spec.kind is not EstimatorKind.ALC:
        raise ValueError("alc_fit requires an ALC spec")
    if spec.bandwidths.range_bw is None:
        raise ValueError("ALC fit requires a range bandwidth")
    targets = _as_targets(targets, data.q)
    h = _as_domain_bw(spec.bandwidths.domain, data.q)
    pd = np.asarray(pilot_at_data, dtype=np.float64)
    pt = np.asarray(pilot_at_targets, dtype=np.float64)
    if pd.shape != (data.n,):
        raise ValueError("pilot_at_data length must match the data")
    if pt.shape != (targets.shape[0],):
        raise ValueError("pilot_at_targets length must match the targets")
    if not np.all(np.isfinite(pd)):
        raise ValueError("pilot values at the data points must be finite")
    y0 = float(data.y[0])
    num, den = weighted_sums(
        data.x,
        data.y - y0,
        targets,
        spec.kernel,
        h,
        pilot_data=pd,
        pilot_targets=pt,
        range_kernel=spec.effective_range_kernel,
        range_bw=spec.bandwidths.range_bw,
    )
    return _assemble(targets, num, den, y0)


def _oracle_values(g, points: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(points), dtype=np.float64)
    if vals.shape != (points.shape[0],):
        raise ValueError("oracle pilot must return one value per point")
    if not np.all(np.isfinite(vals)):
        raise ValueError("oracle pilot produced a non-finite value")
    return vals


def _initial_pilot(data: Dataset, targets: np.ndarray, spec: EstimatorSpec):
    policy = spec.pilot
    if isinstance(policy, SuppliedPilot):
        pd = np.asarray(policy.values_at_data, dtype=np.float64)
        pt = np.asarray(policy.values_at_targets, dtype=np.float64)
        if pd.shape != (data.n,) or pt.shape != (targets.shape[0],):
            raise ValueError("supplied pilot lengths must match data and targets")
        return pd, pt
    if isinstance(policy, OraclePilot):
        return _oracle_values(policy.g, data.x), _oracle_values(policy.g, targets)
    if isinstance(policy, IsotropicPilot):
        if policy.bandwidths is not None:
            hp = _as_domain_bw(policy.bandwidths, data.q)
            if np.any(hp >= spec.bandwidths.domain):
                warnings.warn(
                    "pilot bandwidths should be strictly smaller than the "
                    "anisotropic domain bandwidths"
                )
        else:
            hp = PILOT_SHRINK * spec.bandwidths.domain
        pd = lc_fit(data, data.x, spec.kernel, hp).estimates
        pt = lc_fit(data, targets, spec.kernel, hp).estimates
        return pd, pt
    raise TypeError(f"unknown pilot policy {policy!r}")


def fit(data: Dataset, targets, spec: EstimatorSpec) -> FitResult:
    """Fit per ``spec``: LC directly, ALC via pilot plus d anisotropic passes."""
    targets = _as_targets(targets, data.q)
    if spec.kind is EstimatorKind.LC:
        return lc_fit(data, targets, spec.kernel, spec.bandwidths.domain)

    pilot_d, pilot_t = _initial_pilot(data, targets, spec)
    if spec.iterations == 0:
        mask = ~np.isfinite(pilot_t)
        est = np.where(mask, np.nan, pilot_t)
        return FitResult(targets, est, mask)
    result = alc_fit(data, targets, spec, pilot_d, pilot_t)
    for _ in range(spec.iterations - 1):
        at_data = alc_fit(data, data.x, spec, pilot_d, pilot_d)
        pilot_d, pilot_t = at_data.estimates, result.estimates
        result = alc_fit(data, targets, spec, pilot_d, pilot_t)
    return result


# --- CSV round-trips -------------------------------------------------------

def write_dataset_csv(data: Dataset, path) -> None:
    """Dataset to CSV with columns x_1..x_q, y (UTF-8, '.' decimals)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x_{j + 1}" for j in range(data.q)] + ["y"])
        for row, yv in zip(data.x, data.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(yv))])


def read_dataset_csv(path) -> Dataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[-1] != "y" or not header[0].startswith("x_"):
            raise ValueError(f"not a dataset CSV (header {header!r})")
        q = len(header) - 1
        xs, ys = [], []
        for row in r:
            xs.append([float(v) for v in row[:q]])
            ys.append(float(row[q]))
    return Dataset(np.asarray(xs), np.asarray(ys))


def write_fit_csv(result: FitResult, path) -> None:
    """FitResult to CSV with columns x_1..x_q, ghat, undefined (0/1)."""
    q = result.targets.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x_{j + 1}" for j in range(q)] + ["ghat", "undefined"])
        for row, est, und in zip(result.targets, result.estimates, result.undefined_mask):
            w.writerow(
                [repr(float(v)) for v in row] + [repr(float(est)), "1" if und else "0"]
            )


def read_fit_csv(path) -> FitResult:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[-2:] != ["ghat", "undefined"]:
            raise ValueError(f"not a fit CSV (header {header!r})")
        q = len(header) - 2
        ts, es, ms = [], [], []
        for row in r:
            ts.append([float(v) for v in row[:q]])
            es.append(float(row[q]))
            ms.append(row[q + 1] == "1")
    return FitResult(
        np.asarray(ts, dtype=np.float64).reshape(-1, q),
        np.asarray(es, dtype=np.float64),
        np.asarray(ms, dtype=bool),
    )
