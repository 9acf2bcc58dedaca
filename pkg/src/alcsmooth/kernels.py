"""Second-order univariate kernels and their product-kernel composition.

Every family integrates to one, is symmetric about zero, and is bounded
with a finite absolute integral. Compact-support families return exactly
zero outside their support so that "no local data" can be detected
downstream from a vanishing weight sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

_GAUSS_NORM = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(Enum):
    """Supported univariate kernel functions."""

    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    @classmethod
    def from_name(cls, name: str) -> "KernelFamily":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown kernel family {name!r} (expected one of: {valid})") from None

    @property
    def compact_support(self) -> bool:
        """True when the kernel is exactly zero outside [-1, 1]."""
        return self is not KernelFamily.GAUSSIAN

    @property
    def at_zero(self) -> float:
        """Kernel value at the origin."""
        if self is KernelFamily.UNIFORM:
            return 0.5
        if self is KernelFamily.EPANECHNIKOV:
            return 0.75
        return _GAUSS_NORM

    @property
    def second_moment(self) -> float:
        """Analytic value of the integral of u^2 k(u) over the real line."""
        if self is KernelFamily.UNIFORM:
            return 1.0 / 3.0
        if self is KernelFamily.EPANECHNIKOV:
            return 1.0 / 5.0
        return 1.0


def eval_kernel(family: KernelFamily, u):
    """Evaluate a kernel at ``u`` (scalar or array).

    Raises ValueError for non-finite arguments.
    """
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("kernel argument must be finite")
    if family is KernelFamily.UNIFORM:
        out = np.where(np.abs(u) <= 1.0, 0.5, 0.0)
    elif family is KernelFamily.EPANECHNIKOV:
        out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    elif family is KernelFamily.GAUSSIAN:
        out = _GAUSS_NORM * np.exp(-0.5 * u * u)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unhandled kernel family {family!r}")
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Bandwidths:
    """Domain bandwidths (one per regressor dimension) plus a range bandwidth.

    The range bandwidth scales differences of pilot-estimate values and is
    only consulted by the anisotropic estimator; it may be None for purely
    isotropic fits.
    """

    domain: np.ndarray
    range_bw: float | None = None

    def __post_init__(self):
        dom = np.atleast_1d(np.asarray(self.domain, dtype=np.float64))
        if dom.ndim != 1 or dom.size == 0:
            raise ValueError("domain bandwidths must be a non-empty 1-D vector")
        if not np.all(np.isfinite(dom)) or np.any(dom <= 0.0):
            raise ValueError("domain bandwidths must be strictly positive and finite")
        object.__setattr__(self, "domain", dom)
        if self.range_bw is not None:
            r = float(self.range_bw)
            if not math.isfinite(r) or r <= 0.0:
                raise ValueError("range bandwidth must be strictly positive and finite")
            object.__setattr__(self, "range_bw", r)

    @property
    def q(self) -> int:
        return self.domain.size


def product_kernel(family: KernelFamily, x_i, x, h) -> float:
    """Product of univariate kernels over the coordinates of ``x_i - x``.

    ``x_i``, ``x`` and ``h`` must share one length q; returns
    prod_j k((x_i[j] - x[j]) / h[j]), which is nonnegative.
    """
    x_i = np.atleast_1d(np.asarray(x_i, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    if not (x_i.shape == x.shape == h.shape) or x_i.ndim != 1:
        raise ValueError(
            f"dimension mismatch: x_i has shape {x_i.shape}, x {x.shape}, h {h.shape}"
        )
    if np.any(h <= 0.0) or not np.all(np.isfinite(h)):
        raise ValueError("bandwidths must be strictly positive and finite")
    vals = eval_kernel(family, (x_i - x) / h)
    return float(np.prod(vals))
