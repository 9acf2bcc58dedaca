"""Synthetic data generators, Monte Carlo harness and error metrics.

Three one-dimensional regression functions (a piecewise constant with two
jumps, a smooth cubic, and the cubic with an added jump) plus a circular
two-dimensional "fire front" generator on a pixel grid. The Monte Carlo
driver repeats draw-select-fit cycles and tabulates the mean and sample SD
of the mean estimated squared error (MESE) per (sigma, n, estimator) cell.

Randomness: all normal variates come from numpy's PCG64 generator. Each
replicate derives its own stream from (base_seed, n, sigma-bits, replicate)
so results are bit-identical regardless of execution order or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .bandwidth import (
    BandwidthPlan,
    ResolvedBandwidths,
    SelectionFailureError,
    resolve_bandwidths,
)
from .estimators import (
    Dataset,
    EstimatorKind,
    EstimatorSpec,
    IsotropicPilot,
    OraclePilot,
    fit,
)
from .kernels import Bandwidths, KernelFamily


class DgpFamily(Enum):
    PIECEWISE_CONSTANT = "piecewise"
    CONTINUOUS = "continuous"
    CONTINUOUS_JUMP = "continuous-jump"
    FIRE2D = "fire2d"

    @classmethod
    def from_name(cls, name: str) -> "DgpFamily":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown DGP {name!r} (expected one of: {valid})") from None


def _default_radius(frame: int, r_max: float, n_frames: int) -> float:
    return r_max * frame / n_frames


@dataclass
class DgpSpec:
    """One data-generating process with its parameters and noise level.

    1-D families place n design points evenly on [0, 3] (both endpoints
    included). The 2-D fire family draws one frame of an expanding circle
    on a pixel grid: ``inside`` within radius r(frame) of ``origin``,
    ``outside`` elsewhere; the default radius grows linearly to ``r_max``
    over ``n_frames`` frames.
    """

    family: DgpFamily
    n: int = 400
    sigma: float = 0.5
    seed: int = 0
    jump: float = 3.0
    grid_shape: tuple[int, int] = (80, 80)
    origin: tuple[float, float] = (40.0, 40.0)
    inside: float = 80.0
    outside: float = 130.0
    r_max: float = 40.0
    n_frames: int = 70
    frame: int | None = None
    radius_fn: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.sigma < 0.0 or not math.isfinite(self.sigma):
            raise ValueError("sigma must be nonnegative and finite")
        if self.family is not DgpFamily.FIRE2D and self.n < 2:
            raise ValueError("need n >= 2")

    def radius(self, frame: int) -> float:
        r = (self.radius_fn or (lambda t: _default_radius(t, self.r_max, self.n_frames)))(frame)
        if r <= 0.0:
            raise ValueError(f"fire radius must be positive (frame {frame})")
        return float(r)


def dgp_eval(spec: DgpSpec, x) -> np.ndarray | float:
    """True regression value(s) at ``x``; rejects points outside the domain."""
    if spec.family is DgpFamily.FIRE2D:
        pts = np.asarray(x, dtype=np.float64)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        w, hgt = spec.grid_shape
        if (
            pts.shape[1] != 2
            or np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > w - 1)
            or np.any(pts[:, 1] < 0) or np.any(pts[:, 1] > hgt - 1)
        ):
            raise ValueError("fire evaluation points must lie on the pixel grid")
        if spec.frame is None:
            raise ValueError("fire evaluation requires a frame index")
        r = spec.radius(spec.frame)
        d2 = (pts[:, 0] - spec.origin[0]) ** 2 + (pts[:, 1] - spec.origin[1]) ** 2
        out = np.where(d2 < r * r, spec.inside, spec.outside)
        return float(out[0]) if scalar else out

    xv = np.asarray(x, dtype=np.float64)
    scalar = xv.ndim == 0
    xv = np.atleast_1d(xv)
    if xv.ndim == 2 and xv.shape[1] == 1:
        xv = xv[:, 0]
    if np.any(xv < 0.0) or np.any(xv > 3.0):
        raise ValueError("1-D evaluation points must lie in [0, 3]")
    if spec.family is DgpFamily.PIECEWISE_CONSTANT:
        out = np.where(xv <= 1.0, 1.0, np.where(xv <= 2.0, 7.0, 3.0))
    else:
        u = xv / 3.0
        out = 50.0 * (u * u - u * u * u)
        if spec.family is DgpFamily.CONTINUOUS_JUMP:
            out = out + np.where(xv > 1.5, spec.jump, 0.0)
    return float(out[0]) if scalar else out


def truth_fn(spec: DgpSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized truth, suitable as an oracle pilot: (m, q) points -> (m,)."""

    def g(points: np.ndarray) -> np.ndarray:
        return np.asarray(dgp_eval(spec, points), dtype=np.float64)

    return g


def design_points_1d(n: int) -> np.ndarray:
    """n points starting at 0, evenly spaced over [0, 3], endpoints included."""
    return np.linspace(0.0, 3.0, n)


def _pixel_grid(shape: tuple[int, int]) -> np.ndarray:
    w, h = shape
    cols = np.tile(np.arange(w, dtype=np.float64), h)
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    return np.column_stack([cols, rows])


def _rng_from(entropy) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def simulate_dataset(spec: DgpSpec, rng: np.random.Generator | None = None) -> Dataset:
    """Draw one dataset: Y_i = g(X_i) + sigma * N(0, 1) from the seeded stream.

    For the fire family ``spec.frame`` selects the frame; its noise stream
    is derived from (seed, frame) so every frame is independent and
    reproducible in isolation.
    """
    if spec.family is DgpFamily.FIRE2D:
        if spec.frame is None:
            raise ValueError("fire simulation requires a frame index")
        x = _pixel_grid(spec.grid_shape)
        if rng is None:
            rng = _rng_from([spec.seed, spec.frame])
    else:
        x = design_points_1d(spec.n)[:, None]
        if rng is None:
            rng = _rng_from(spec.seed)
    g = np.asarray(dgp_eval(spec, x), dtype=np.float64)
    y = g + rng.standard_normal(x.shape[0]) * spec.sigma
    return Dataset(x=x, y=y)


def simulate_fire_frames(spec: DgpSpec, frames: Sequence[int] | None = None):
    """Yield (frame_index, Dataset) for each requested frame (default: all)."""
    if spec.family is not DgpFamily.FIRE2D:
        raise ValueError("frame simulation applies to the fire family only")
    if frames is None:
        frames = range(1, spec.n_frames + 1)
    for j in frames:
        yield j, simulate_dataset(replace(spec, frame=int(j)))


def fire_region_masks(spec: DgpSpec, frame: int, band: float = 3.0):
    """Masks over the pixel grid: within ``band`` pixels of the circular
    boundary, and its complement (pixel order matches simulate_dataset)."""
    x = _pixel_grid(spec.grid_shape)
    r = spec.radius(frame)
    dist = np.hypot(x[:, 0] - spec.origin[0], x[:, 1] - spec.origin[1])
    annulus = np.abs(dist - r) <= band
    return annulus, ~annulus


def mese(truth, estimates, undefined_mask=None) -> float:
    """Mean of the squared errors over the defined evaluation points."""
    t = np.asarray(truth, dtype=np.float64)
    e = np.asarray(estimates, dtype=np.float64)
    if t.shape != e.shape:
        raise ValueError("truth and estimates must have equal length")
    if undefined_mask is not None:
        keep = ~np.asarray(undefined_mask, dtype=bool)
        t, e = t[keep], e[keep]
    if t.size == 0:
        raise ValueError("no defined points to score")
    return float(np.mean((t - e) ** 2))


# --- Monte Carlo harness ----------------------------------------------------

ESTIMATOR_NAMES = ("lc", "alc", "alct")


@dataclass
class McConfig:
    """Grid of Monte Carlo cells and the shared fitting policy.

    Replicate r of cell (n, sigma) uses a random stream derived from
    (base_seed, n, sigma, r); bandwidths are re-selected inside every
    replicate with ``selector`` scoring each estimator's own smoother.
    """

    family: DgpFamily
    ns: tuple[int, ...] = (400, 800, 1600)
    sigmas: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0)
    replicates: int = 125
    estimators: tuple[str, ...] = ESTIMATOR_NAMES
    base_seed: int = 0
    kernel: KernelFamily = KernelFamily.UNIFORM
    range_kernel: KernelFamily | None = KernelFamily.EPANECHNIKOV
    selector: str = "aicc"
    grid_points: int = 25
    range_multiplier: float = 1.0
    pilot_factor: float = 0.8
    inflation: float = 1.0
    iterations: int = 1
    jump: float = 3.0
    jobs: int = 1
    keep_replicates: bool = False

    def __post_init__(self):
        if self.family is DgpFamily.FIRE2D:
            raise ValueError("the table harness covers the 1-D families")
        bad = [e for e in self.estimators if e not in ESTIMATOR_NAMES]
        if bad:
            raise ValueError(f"unknown estimators {bad}; expected subset of {ESTIMATOR_NAMES}")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")


@dataclass
class McRow:
    sigma: float
    n: int
    estimator: str
    mean_mese: float
    sd_mese: float
    failures: int


@dataclass
class McTable:
    """Aggregated Monte Carlo results plus (optionally) raw per-replicate MESEs."""

    rows: list[McRow]
    replicates: dict | None = None

    def row(self, sigma: float, n: int, estimator: str) -> McRow:
        for r in self.rows:
            if r.sigma == sigma and r.n == n and r.estimator == estimator:
                return r
        raise KeyError((sigma, n, estimator))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", "n", "estimator", "mean_mese", "sd_mese", "failures"])
            for r in self.rows:
                w.writerow(
                    [repr(float(r.sigma)), r.n, r.estimator,
                     repr(float(r.mean_mese)), repr(float(r.sd_mese)), r.failures]
                )

    def write_replicates_csv(self, path) -> None:
        if self.replicates is None:
            raise ValueError("per-replicate MESEs were not kept")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["sigma", "n", "estimator", "replicate", "mese"])
            for (sigma, n, est), values in self.replicates.items():
                for i, v in enumerate(values):
                    w.writerow([repr(float(sigma)), n, est, i, repr(float(v))])

    def format_text(self) -> str:
        """Aligned text table: one block of means, one of sample SDs."""
        sigmas = sorted({r.sigma for r in self.rows})
        ns = sorted({r.n for r in self.rows})
        ests = []
        for r in self.rows:
            if r.estimator not in ests:
                ests.append(r.estimator)
        lines = []
        for label, attr in (("mean of MESE", "mean_mese"), ("sample SD of MESE", "sd_mese")):
            lines.append(label)
            head = ["sigma"] + [f"{e.upper()}(n={n})" for n in ns for e in ests]
            widths = [max(10, len(h) + 2) for h in head]
            lines.append("".join(h.rjust(w) for h, w in zip(head, widths)))
            for s in sigmas:
                cells = [f"{s:g}"]
                for n in ns:
                    for e in ests:
                        cells.append(f"{getattr(self.row(s, n, e), attr):.5f}")
                lines.append("".join(c.rjust(w) for c, w in zip(cells, widths)))
            lines.append("")
        return "\n".join(lines)


def _sigma_bits(sigma: float) -> int:
    return int(np.float64(sigma).view(np.uint64))


def replicate_rng(base_seed: int, n: int, sigma: float, r: int) -> np.random.Generator:
    """Independent stream for replicate r of cell (n, sigma)."""
    return _rng_from([base_seed, n, _sigma_bits(sigma), r])


def _fit_one(data: Dataset, cfg: McConfig, name: str, g):
    plan = BandwidthPlan(
        method=cfg.selector,
        grid_points=cfg.grid_points,
        range_multiplier=cfg.range_multiplier,
        inflation=cfg.inflation,
        pilot_factor=cfg.pilot_factor,
    )
    resolved = resolve_bandwidths(
        data, plan, name, cfg.kernel, range_kernel=cfg.range_kernel,
        oracle=g if name == "alct" else None,
    )
    spec = estimator_spec(name, resolved, cfg.kernel, cfg.range_kernel,
                          cfg.pilot_factor, cfg.iterations, g)
    res = fit(data, data.x, spec)
    return mese(g(data.x), res.estimates, res.undefined_mask)


def estimator_spec(
    name: str,
    resolved: ResolvedBandwidths,
    kernel: KernelFamily,
    range_kernel: KernelFamily | None,
    pilot_factor: float,
    iterations: int,
    oracle=None,
) -> EstimatorSpec:
    """Assemble the EstimatorSpec for one of the named pipeline estimators."""
    bw = resolved.bandwidths
    if name == "lc":
        return EstimatorSpec(EstimatorKind.LC, bw, kernel=kernel)
    if name == "alct":
        if oracle is None:
            raise ValueError("alct requires an oracle")
        pilot = OraclePilot(oracle)
    else:
        pilot_domain = (
            resolved.pilot_domain
            if resolved.pilot_domain is not None
            else pilot_factor * bw.domain
        )
        pilot = IsotropicPilot(pilot_domain)
    return EstimatorSpec(
        EstimatorKind.ALC, bw, kernel=kernel, range_kernel=range_kernel,
        pilot=pilot, iterations=iterations,
    )


def _run_replicate(cfg: McConfig, n: int, sigma: float, r: int) -> dict:
    dspec = DgpSpec(cfg.family, n=n, sigma=sigma, jump=cfg.jump)
    data = simulate_dataset(dspec, rng=replicate_rng(cfg.base_seed, n, sigma, r))
    g = truth_fn(dspec)
    out = {}
    for name in cfg.estimators:
        try:
            out[name] = _fit_one(data, cfg, name, g)
        except SelectionFailureError:
            out[name] = None
    return out


def run_monte_carlo(cfg: McConfig) -> McTable:
    """Full table run; cells and replicates are independent tasks.

    Replicates that fail bandwidth selection are counted and excluded from
    the cell aggregates, never imputed.
    """
    tasks = [
        (n, sigma, r)
        for sigma in cfg.sigmas
        for n in cfg.ns
        for r in range(cfg.replicates)
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_replicate_star, [(cfg, *t) for t in tasks], chunksize=4))
    else:
        results = [_run_replicate(cfg, *t) for t in tasks]

    by_cell: dict = {}
    for (n, sigma, r), metrics in zip(tasks, results):
        by_cell.setdefault((sigma, n), []).append(metrics)

    rows = []
    reps: dict = {} if cfg.keep_replicates else None
    for sigma in cfg.sigmas:
        for n in cfg.ns:
            cell = by_cell[(sigma, n)]
            for name in cfg.estimators:
                values = np.array([m[name] for m in cell if m[name] is not None])
                failures = sum(1 for m in cell if m[name] is None)
                mean = float(np.mean(values)) if values.size else math.nan
                sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
                rows.append(McRow(sigma, n, name, mean, sd, failures))
                if reps is not None:
                    reps[(sigma, n, name)] = [
                        math.nan if m[name] is None else m[name] for m in cell
                    ]
    return McTable(rows=rows, replicates=reps)


def _replicate_star(args):
    cfg, n, sigma, r = args
    return _run_replicate(cfg, n, sigma, r)


# --- 2-D fire-front experiment ------------------------------------------------

# Documented configuration of the circular-front pixel experiment: fixed
# 3-pixel domain bandwidths (the selectors are isotropic and known to be
# off for anisotropic smoothing of imagery) and a deliberately tight range
# bandwidth, so the single-bandwidth fit sharpens the front while the
# five-fold oversmoothed variant trades boundary sharpness for flatter
# interiors.
FIRE_DOMAIN_BW = 3.0
FIRE_RANGE_MULTIPLIER = 0.25
FIRE_OVERSMOOTH_FACTOR = 5.0


@dataclass
class FireReplicate:
    """Per-replicate mean squared errors to truth, split at the front."""

    annulus_lc: float
    annulus_alc: float
    annulus_alc_over: float
    interior_lc: float
    interior_alc: float
    interior_alc_over: float


def fire_experiment(
    spec: DgpSpec | None = None,
    frame: int = 35,
    replicates: int = 15,
    band: float = 3.0,
    domain_bw: float = FIRE_DOMAIN_BW,
    range_multiplier: float = FIRE_RANGE_MULTIPLIER,
    oversmooth: float = FIRE_OVERSMOOTH_FACTOR,
    kernel: KernelFamily = KernelFamily.UNIFORM,
    range_kernel: KernelFamily = KernelFamily.EPANECHNIKOV,
    base_seed: int = 0,
) -> list[FireReplicate]:
    """Monte Carlo comparison of LC, ALC and range-oversmoothed ALC on the
    circular-front process, scored against truth near and away from the
    boundary."""
    from .bandwidth import pilot_range_bandwidth
    from .estimators import SuppliedPilot, lc_fit

    if spec is None:
        spec = DgpSpec(DgpFamily.FIRE2D, sigma=math.sqrt(20.0))
    spec = replace(spec, frame=frame)
    g = truth_fn(spec)
    annulus, interior = fire_region_masks(spec, frame, band)
    h = np.array([domain_bw, domain_bw])
    n_pixels = int(spec.grid_shape[0]) * int(spec.grid_shape[1])
    out = []
    for r in range(replicates):
        data = simulate_dataset(spec, rng=replicate_rng(base_seed, n_pixels, spec.sigma, r))
        gv = g(data.x)
        lc = lc_fit(data, data.x, kernel, h).estimates
        pilot = lc_fit(data, data.x, kernel, 0.8 * h).estimates
        hr = pilot_range_bandwidth(data, pilot, range_multiplier)
        fits = {}
        for tag, hrv in (("alc", hr), ("over", oversmooth * hr)):
            sp = EstimatorSpec(
                EstimatorKind.ALC,
                Bandwidths(domain=h, range_bw=hrv),
                kernel=kernel,
                range_kernel=range_kernel,
                pilot=SuppliedPilot(pilot, pilot),
            )
            fits[tag] = fit(data, data.x, sp).estimates
        e_lc = (lc - gv) ** 2
        e_alc = (fits["alc"] - gv) ** 2
        e_over = (fits["over"] - gv) ** 2
        out.append(
            FireReplicate(
                annulus_lc=float(e_lc[annulus].mean()),
                annulus_alc=float(e_alc[annulus].mean()),
                annulus_alc_over=float(e_over[annulus].mean()),
                interior_lc=float(e_lc[interior].mean()),
                interior_alc=float(e_alc[interior].mean()),
                interior_alc_over=float(e_over[interior].mean()),
            )
        )
    return out


# --- Convergence-rate check --------------------------------------------------

@dataclass
class RateReport:
    estimator: str
    ns: tuple[int, ...]
    mean_meses: tuple[float, ...]
    slope: float


def rate_check(
    family: DgpFamily,
    estimator: str,
    ns: Sequence[int],
    sigma: float = 0.5,
    replicates: int = 50,
    constant: float = 0.5,
    exponent: float | None = None,
    kernel: KernelFamily = KernelFamily.UNIFORM,
    range_kernel: KernelFamily | None = KernelFamily.EPANECHNIKOV,
    range_multiplier: float = 1.0,
    pilot_factor: float = 0.8,
    base_seed: int = 0,
    jump: float = 3.0,
) -> RateReport:
    """Slope of ln(mean MESE) against ln(n) under rate-rule bandwidths.

    The bandwidth at each n is constant * n**(-e); by default e matches the
    estimator (1/(q+2) anisotropic, 1/(q+4) isotropic) so the fitted decay
    can be compared with the theoretical one.
    """
    ns = tuple(int(n) for n in ns)
    if len(ns) < 3:
        raise ValueError("need at least three sample sizes")
    if max(ns) < 10 * min(ns):
        raise ValueError("sample sizes should span at least one decade")
    if estimator not in ESTIMATOR_NAMES:
        raise ValueError(f"unknown estimator {estimator!r}")
    if family is DgpFamily.FIRE2D:
        raise ValueError("rate checks cover the 1-D families")
    if exponent is None:
        exponent = 1.0 / 5.0 if estimator == "lc" else 1.0 / 3.0

    plan = BandwidthPlan(
        method="rate", rate_constant=constant, rate_exponent=exponent,
        range_multiplier=range_multiplier, pilot_factor=pilot_factor,
    )
    means = []
    for n in ns:
        dspec = DgpSpec(family, n=n, sigma=sigma, jump=jump)
        g = truth_fn(dspec)
        vals = []
        for r in range(replicates):
            data = simulate_dataset(dspec, rng=replicate_rng(base_seed, n, sigma, r))
            resolved = resolve_bandwidths(
                data, plan, estimator, kernel, range_kernel=range_kernel,
                oracle=g if estimator == "alct" else None,
            )
            spec = estimator_spec(estimator, resolved, kernel, range_kernel,
                                  pilot_factor, 1, g)
            res = fit(data, data.x, spec)
            vals.append(mese(g(data.x), res.estimates, res.undefined_mask))
        m = float(np.mean(vals))
        if m == 0.0:
            raise ValueError(f"mean MESE is zero at n={n}; slope is undefined")
        means.append(m)
    slope = float(np.polyfit(np.log(ns), np.log(means), 1)[0])
    return RateReport(estimator=estimator, ns=ns, mean_meses=tuple(means), slope=slope)
