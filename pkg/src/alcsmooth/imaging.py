"""Image ingestion and per-channel smoothing on the pixel grid.

Each RGB channel is treated as outcomes over the fixed design of pixel
coordinates (x1 = column, x2 = row, in pixel units) and smoothed
independently; residual maps are original minus smoothed. Channel values
are unclamped reals internally and clamped/quantized to 8 bits on output.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image, UnidentifiedImageError

from .bandwidth import pilot_range_bandwidth
from .estimators import (
    Dataset,
    EstimatorKind,
    EstimatorSpec,
    OraclePilot,
    SuppliedPilot,
    fit,
    lc_fit,
)
from .kernels import Bandwidths

_SUPPORTED_FORMATS = {"PNG", "PPM"}
CHANNEL_NAMES = ("r", "g", "b")


@dataclass
class ImageFrame:
    """One RGB frame as three (height, width) float matrices."""

    red: np.ndarray
    green: np.ndarray
    blue: np.ndarray

    def __post_init__(self):
        chans = []
        for c in (self.red, self.green, self.blue):
            a = np.asarray(c, dtype=np.float64)
            if a.ndim != 2 or a.size == 0:
                raise ValueError("channels must be non-empty 2-D matrices")
            chans.append(a)
        if not (chans[0].shape == chans[1].shape == chans[2].shape):
            raise ValueError("channel matrices must share dimensions")
        self.red, self.green, self.blue = chans

    @property
    def height(self) -> int:
        return self.red.shape[0]

    @property
    def width(self) -> int:
        return self.red.shape[1]

    def channel(self, name: str) -> np.ndarray:
        try:
            return {"r": self.red, "g": self.green, "b": self.blue}[name.lower()]
        except KeyError:
            raise ValueError(f"unknown channel {name!r} (expected r, g or b)") from None


def load_image(path) -> ImageFrame:
    """Read an 8-bit PNG or binary PPM into float channels (alpha discarded)."""
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in _SUPPORTED_FORMATS:
                raise OSError(f"unsupported image format {fmt!r} for {path}: expected PNG or PPM (P6)")
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    except UnidentifiedImageError as exc:
        raise OSError(f"cannot decode {path}: not a recognizable PNG or PPM file") from exc
    return ImageFrame(red=rgb[:, :, 0], green=rgb[:, :, 1], blue=rgb[:, :, 2])


def quantize_channel(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round to whole 8-bit levels."""
    return np.clip(np.rint(values), 0.0, 255.0)


def save_image(frame: ImageFrame, path) -> None:
    """Write the frame as an 8-bit RGB PNG (values clamped and rounded)."""
    stacked = np.stack(
        [quantize_channel(frame.red), quantize_channel(frame.green), quantize_channel(frame.blue)],
        axis=2,
    ).astype(np.uint8)
    Image.fromarray(stacked, mode="RGB").save(path, format="PNG")


def pixel_dataset(channel: np.ndarray) -> Dataset:
    """Channel matrix as a fixed-design dataset over pixel coordinates."""
    h, w = channel.shape
    cols = np.tile(np.arange(w, dtype=np.float64), h)
    rows = np.repeat(np.arange(h, dtype=np.float64), w)
    return Dataset(x=np.column_stack([cols, rows]), y=channel.ravel())


def resolve_channel_spec(data: Dataset, spec: EstimatorSpec, range_multiplier: float = 1.0):
    """Fill in a missing range bandwidth from this channel's pilot spread.

    Returns the spec to fit with; when the pilot had to be computed it is
    re-supplied so the fit does not redo the work.
    """
    if spec.kind is EstimatorKind.LC or spec.bandwidths.range_bw is not None:
        return spec
    policy = spec.pilot
    if isinstance(policy, SuppliedPilot):
        pilot = np.asarray(policy.values_at_data, dtype=np.float64)
        new_policy = policy
    elif isinstance(policy, OraclePilot):
        pilot = np.asarray(policy.g(data.x), dtype=np.float64)
        new_policy = policy
    else:
        hp = policy.bandwidths if policy.bandwidths is not None else 0.8 * spec.bandwidths.domain
        pilot = lc_fit(data, data.x, spec.kernel, hp).estimates
        new_policy = SuppliedPilot(values_at_data=pilot, values_at_targets=pilot)
    bw = Bandwidths(
        domain=spec.bandwidths.domain,
        range_bw=pilot_range_bandwidth(data, pilot, range_multiplier),
    )
    return replace(spec, bandwidths=bw, pilot=new_policy)


def smooth_channel(
    frame: ImageFrame,
    channel: str,
    spec: EstimatorSpec,
    range_multiplier: float = 1.0,
    fill: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Smooth one channel at every pixel center.

    Returns (smoothed, residuals) as float matrices, residuals = original -
    smoothed. An ALC spec without a range bandwidth gets one from this
    channel's pilot via the spread heuristic.
    """
    values = frame.channel(channel)
    data = pixel_dataset(values)
    used = resolve_channel_spec(data, spec, range_multiplier)
    res = fit(data, data.x, used)
    if fill:
        res = res.filled_nearest()
    est = res.estimates
    if res.undefined_mask.any():
        warnings.warn(
            f"{int(res.undefined_mask.sum())} pixels had no weighted data; originals kept"
        )
        est = np.where(res.undefined_mask, data.y, est)
    smoothed = est.reshape(values.shape)
    return smoothed, values - smoothed


def smooth_image(
    frame: ImageFrame,
    spec: EstimatorSpec,
    channels: str = "rgb",
    range_multiplier: float = 1.0,
    fill: bool = False,
) -> tuple[ImageFrame, ImageFrame]:
    """Smooth the selected channels independently; copy the rest through.

    Returns the smoothed frame quantized to 8-bit levels and the residual
    frame offset-encoded for viewing (residual + 128, clamped).
    """
    wanted = set(channels.lower())
    bad = wanted - set(CHANNEL_NAMES)
    if bad:
        raise ValueError(f"unknown channels {sorted(bad)}; expected a subset of 'rgb'")
    smoothed = {}
    residual = {}
    for name in CHANNEL_NAMES:
        if name in wanted:
            s, r = smooth_channel(frame, name, spec, range_multiplier, fill)
        else:
            s = frame.channel(name).copy()
            r = np.zeros_like(s)
        smoothed[name] = quantize_channel(s)
        residual[name] = quantize_channel(r + 128.0)
    return (
        ImageFrame(red=smoothed["r"], green=smoothed["g"], blue=smoothed["b"]),
        ImageFrame(red=residual["r"], green=residual["g"], blue=residual["b"]),
    )
