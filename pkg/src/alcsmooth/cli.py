"""Command-line interface wiring the estimators, selectors and harnesses.

Subcommands: simulate, fit, mc, smooth-image, rate. Every run writes a
sidecar ``<output>.config`` file of resolved key=value settings; feeding it
back through ``--config`` reproduces the run (explicit flags override).
Exit codes: 0 success, 2 usage, 3 estimation failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import BandwidthPlan, SelectionFailureError, resolve_bandwidths
from .estimators import (
    read_dataset_csv,
    write_dataset_csv,
    write_fit_csv,
    fit,
)
from .imaging import (
    CHANNEL_NAMES,
    ImageFrame,
    load_image,
    pixel_dataset,
    quantize_channel,
    resolve_channel_spec,
    save_image,
    smooth_channel,
)
from .kernels import KernelFamily
from .simulation import (
    DgpFamily,
    DgpSpec,
    McConfig,
    estimator_spec,
    mese,
    rate_check,
    run_monte_carlo,
    simulate_dataset,
    simulate_fire_frames,
    truth_fn,
)

_FIRE_SIGMA = math.sqrt(20.0)  # default pixel-noise SD: variance 20


# --- flag parsing helpers ----------------------------------------------------

def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_ints(text: str) -> list[int]:
    vals = _parse_floats(text)
    if any(v != int(v) for v in vals):
        raise ValueError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def _parse_bandwidth(text: str):
    """Returns ("aicc"|"lscv", None) or ("fixed", [values])."""
    t = text.strip().lower()
    if t == "auto-aicc":
        return "aicc", None
    if t == "auto-lscv":
        return "lscv", None
    return "fixed", _parse_floats(t)


def _parse_range_bandwidth(text: str):
    """Returns (multiplier, fixed_value); exactly one side is meaningful."""
    t = text.strip().lower()
    if t == "auto":
        return 1.0, None
    if t.startswith("auto:"):
        mult = float(t.split(":", 1)[1])
        return mult, None
    return 1.0, float(t)


def _read_points(path, q_expected=None) -> np.ndarray:
    """Coordinate columns x_1..x_q from a CSV (extra columns ignored)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        idx = [i for i, name in enumerate(header) if name.startswith("x_")]
        if not idx:
            raise ValueError(f"{path}: no x_ coordinate columns found")
        pts = [[float(row[i]) for i in idx] for row in r]
    out = np.asarray(pts, dtype=np.float64)
    if q_expected is not None and out.shape[1] != q_expected:
        raise ValueError(f"{path}: expected {q_expected} coordinate columns, found {out.shape[1]}")
    return out


# --- config files and sidecars ------------------------------------------------

def _load_config(path) -> dict[str, str]:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _write_sidecar(out_path, command: str, args) -> Path:
    path = Path(str(out_path) + ".config")
    lines = [f"command={command}"]
    for key, value in sorted(vars(args).items()):
        if key in ("func", "command", "config") or value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key}={value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _config_path_from(argv):
    """Pre-scan for --config so its values can satisfy required flags."""
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config needs a file path")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(registry, command: str, raw: dict) -> None:
    """Install config values as subparser defaults (flags still win)."""
    if command not in registry:
        raise ValueError(f"unknown subcommand {command!r} for --config")
    sub = registry[command]
    known = {}
    for action in sub._actions:
        if action.dest in raw:
            value = raw[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                known[action.dest] = value.lower() in ("1", "true", "yes")
            elif action.type is not None:
                known[action.dest] = action.type(value)
            else:
                known[action.dest] = value
            action.required = False
    unknown = set(raw) - set(known) - {"command"}
    if unknown:
        raise ValueError(f"config contains unknown keys: {sorted(unknown)}")
    sub.set_defaults(**known)


# --- subcommand handlers -------------------------------------------------------

def _cmd_simulate(args) -> int:
    family = DgpFamily.from_name(args.dgp)
    sigma = args.sigma if args.sigma is not None else (
        _FIRE_SIGMA if family is DgpFamily.FIRE2D else 0.5
    )
    if family is DgpFamily.FIRE2D:
        spec = DgpSpec(
            family, sigma=sigma, seed=args.seed,
            grid_shape=(args.grid_size, args.grid_size),
            origin=(args.grid_size / 2.0, args.grid_size / 2.0),
            inside=args.inside, outside=args.outside,
            r_max=args.r_max, n_frames=args.frames,
        )
        frames = [args.frame] if args.frame is not None else None
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        for j, data in simulate_fire_frames(spec, frames):
            p = outdir / f"{args.out_prefix}_frame{j:03d}.csv"
            write_dataset_csv(data, p)
            written.append(p)
        _write_sidecar(outdir / args.out_prefix, "simulate", args)
        print(f"wrote {len(written)} frame file(s) under {outdir}")
        return 0
    spec = DgpSpec(family, n=args.n, sigma=sigma, seed=args.seed, jump=args.jump)
    data = simulate_dataset(spec)
    write_dataset_csv(data, args.out)
    _write_sidecar(args.out, "simulate", args)
    print(f"wrote {data.n} rows to {args.out}")
    return 0


def _truth_oracle(args):
    if args.truth is None:
        return None, None
    family = DgpFamily.from_name(args.truth)
    spec = DgpSpec(family, sigma=0.0, jump=args.jump)
    return spec, truth_fn(spec)


def _cmd_fit(args) -> int:
    data = read_dataset_csv(args.data)
    kernel = KernelFamily.from_name(args.kernel)
    range_kernel = KernelFamily.from_name(args.range_kernel) if args.range_kernel else None
    name = args.estimator
    _, oracle = _truth_oracle(args)
    if name == "alct" and oracle is None:
        raise ValueError("--estimator alct requires --truth")

    mult, fixed_range = _parse_range_bandwidth(args.range_bandwidth)
    if args.rate_rule is not None:
        method, fixed = "rate", None
    else:
        method, fixed = _parse_bandwidth(args.bandwidth)
    plan = BandwidthPlan(
        method=method,
        fixed_domain=np.asarray(fixed) if fixed is not None else None,
        rate_constant=args.rate_rule if args.rate_rule is not None else 0.5,
        rate_exponent=args.rate_exponent,
        grid_points=args.grid_points,
        fixed_range=fixed_range,
        range_multiplier=mult,
        inflation=args.bandwidth_inflation,
        pilot_factor=args.pilot_factor,
    )
    resolved = resolve_bandwidths(data, plan, name, kernel, range_kernel=range_kernel, oracle=oracle)
    spec = estimator_spec(name, resolved, kernel, range_kernel, args.pilot_factor,
                          args.iterations, oracle)
    bw = resolved.bandwidths
    targets = _read_points(args.targets, data.q) if args.targets else data.x
    result = fit(data, targets, spec)
    if args.fill == "nearest":
        result = result.filled_nearest()
    write_fit_csv(result, args.out)
    _write_sidecar(args.out, "fit", args)
    print(f"domain bandwidths: {', '.join(f'{v:g}' for v in bw.domain)}")
    if resolved.pilot_domain is not None:
        print(f"pilot bandwidths: {', '.join(f'{v:g}' for v in resolved.pilot_domain)}")
    if bw.range_bw is not None:
        print(f"range bandwidth: {bw.range_bw:g}")
    if oracle is not None:
        score = mese(oracle(targets), result.estimates, result.undefined_mask)
        print(f"MESE: {score:.6g}")
    print(f"wrote {result.estimates.size} fitted values to {args.out}")
    return 0


def _cmd_mc(args) -> int:
    cfg = McConfig(
        family=DgpFamily.from_name(args.dgp),
        ns=tuple(_parse_ints(args.ns)),
        sigmas=tuple(_parse_floats(args.sigmas)),
        replicates=args.replicates,
        estimators=tuple(e.strip() for e in args.estimators.split(",") if e.strip()),
        base_seed=args.seed,
        kernel=KernelFamily.from_name(args.kernel),
        range_kernel=KernelFamily.from_name(args.range_kernel) if args.range_kernel else None,
        selector=args.selector,
        grid_points=args.grid_points,
        range_multiplier=args.range_multiplier,
        pilot_factor=args.pilot_factor,
        inflation=args.bandwidth_inflation,
        iterations=args.iterations,
        jump=args.jump,
        jobs=args.jobs,
        keep_replicates=args.dump_replicates,
    )
    table = run_monte_carlo(cfg)
    prefix = Path(args.out_prefix)
    if prefix.parent != Path("."):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    table.write_csv(f"{prefix}.csv")
    Path(f"{prefix}.txt").write_text(table.format_text(), encoding="utf-8")
    if args.dump_replicates:
        table.write_replicates_csv(f"{prefix}.replicates.csv")
    _write_sidecar(prefix, "mc", args)
    print(table.format_text())
    print(f"wrote {prefix}.csv and {prefix}.txt")
    return 0


def _cmd_rate(args) -> int:
    report = rate_check(
        family=DgpFamily.from_name(args.dgp),
        estimator=args.estimator,
        ns=_parse_ints(args.ns),
        sigma=args.sigma,
        replicates=args.replicates,
        constant=args.constant,
        exponent=args.exponent,
        kernel=KernelFamily.from_name(args.kernel),
        range_kernel=KernelFamily.from_name(args.range_kernel) if args.range_kernel else None,
        range_multiplier=args.range_multiplier,
        pilot_factor=args.pilot_factor,
        base_seed=args.seed,
        jump=args.jump,
    )
    print(f"estimator: {report.estimator}")
    for n, m in zip(report.ns, report.mean_meses):
        print(f"n={n:>8d}  mean MESE={m:.6g}")
    print(f"slope of ln(MESE) vs ln(n): {report.slope:.4f}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "mean_mese"])
            for n, m in zip(report.ns, report.mean_meses):
                w.writerow([n, repr(float(m))])
            w.writerow(["slope", repr(float(report.slope))])
        _write_sidecar(args.out, "rate", args)
    return 0


def _cmd_smooth_image(args) -> int:
    frame = load_image(args.input)
    kernel = KernelFamily.from_name(args.kernel)
    range_kernel = KernelFamily.from_name(args.range_kernel) if args.range_kernel else None
    mult, fixed_range = _parse_range_bandwidth(args.range_bandwidth)
    method, fixed = _parse_bandwidth(args.bandwidth)
    wanted = set(args.channels.lower())
    bad = wanted - set(CHANNEL_NAMES)
    if bad:
        raise ValueError(f"unknown channels {sorted(bad)}; expected a subset of 'rgb'")
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    smoothed = {}
    residual = {}
    for name in CHANNEL_NAMES:
        values = frame.channel(name)
        if name not in wanted:
            smoothed[name] = values.copy()
            residual[name] = np.full_like(values, 128.0)
            continue
        data = pixel_dataset(values)
        plan = BandwidthPlan(
            method=method,
            fixed_domain=np.asarray(fixed) if fixed is not None else None,
            grid_points=args.grid_points,
            fixed_range=fixed_range,
            range_multiplier=mult,
            inflation=args.bandwidth_inflation,
            pilot_factor=args.pilot_factor,
        )
        resolved = resolve_bandwidths(data, plan, args.estimator, kernel, range_kernel=range_kernel)
        base = estimator_spec(args.estimator, resolved, kernel, range_kernel,
                              args.pilot_factor, args.iterations)
        spec = resolve_channel_spec(data, base, mult)
        hr = spec.bandwidths.range_bw
        print(
            f"channel {name}: domain bandwidths "
            + ", ".join(f"{v:g}" for v in spec.bandwidths.domain)
            + (f"; range bandwidth {hr:g}" if hr is not None else "")
        )
        s, r = smooth_channel(frame, name, spec, mult, fill=args.fill == "nearest")
        smoothed[name] = quantize_channel(s)
        residual[name] = quantize_channel(r + 128.0)
        if args.dump_csv:
            stem = Path(args.input).stem
            np.savetxt(outdir / f"{stem}.{name}.smoothed.csv", s,
                       delimiter=",", fmt="%.17g")
            np.savetxt(outdir / f"{stem}.{name}.residual.csv", r,
                       delimiter=",", fmt="%.17g")

    stem = Path(args.input).stem
    out_frame = ImageFrame(red=smoothed["r"], green=smoothed["g"], blue=smoothed["b"])
    res_frame = ImageFrame(red=residual["r"], green=residual["g"], blue=residual["b"])
    smoothed_path = outdir / f"{stem}.smoothed.png"
    residual_path = outdir / f"{stem}.residual.png"
    save_image(out_frame, smoothed_path)
    save_image(res_frame, residual_path)
    _write_sidecar(smoothed_path, "smooth-image", args)
    print(f"wrote {smoothed_path} and {residual_path}")
    return 0


# --- parser ---------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="key=value file of defaults (flags override)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")


def _add_bandwidth_flags(p, default_bandwidth="auto-aicc"):
    p.add_argument("--kernel", default="uniform",
                   help="domain kernel: uniform | gaussian | epanechnikov")
    p.add_argument("--range-kernel", default="epanechnikov",
                   help="range (tonal) kernel")
    p.add_argument("--bandwidth", default=default_bandwidth,
                   help="auto-aicc | auto-lscv | comma-separated values")
    p.add_argument("--range-bandwidth", default="auto",
                   help="auto | auto:MULT | value")
    p.add_argument("--bandwidth-inflation", type=float, default=1.0,
                   help="scale factor applied to anisotropic domain bandwidths")
    p.add_argument("--pilot-factor", type=float, default=0.8,
                   help="pilot bandwidth as a fraction of the domain bandwidth")
    p.add_argument("--grid-points", type=int, default=25,
                   help="points in the bandwidth search grid")
    p.add_argument("--iterations", type=int, default=1,
                   help="number of anisotropic passes")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="alcsmooth",
        description="Kernel smoothing for regression functions with abrupt changes",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    registry = {"__root__": parser}

    p = subs.add_parser("simulate", help="draw a synthetic dataset")
    p.add_argument("--dgp", required=True,
                   help="piecewise | continuous | continuous-jump | fire2d")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--sigma", type=float, default=None,
                   help="noise SD (default 0.5; fire2d default sqrt(20))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jump", type=float, default=3.0,
                   help="jump height of the continuous-jump process")
    p.add_argument("--out", default="dataset.csv")
    p.add_argument("--frames", type=int, default=70, help="fire2d: number of frames")
    p.add_argument("--frame", type=int, default=None, help="fire2d: single frame index")
    p.add_argument("--out-dir", default=".", help="fire2d: output directory")
    p.add_argument("--out-prefix", default="fire", help="fire2d: frame file prefix")
    p.add_argument("--grid-size", type=int, default=80)
    p.add_argument("--inside", type=float, default=80.0)
    p.add_argument("--outside", type=float, default=130.0)
    p.add_argument("--r-max", type=float, default=40.0)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)
    registry["simulate"] = p

    p = subs.add_parser("fit", help="fit an estimator to a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--estimator", choices=["lc", "alc", "alct"], default="lc")
    p.add_argument("--truth", default=None,
                   help="DGP name for the oracle pilot and MESE report")
    p.add_argument("--jump", type=float, default=3.0)
    p.add_argument("--targets", default=None, help="CSV of evaluation points")
    p.add_argument("--fill", choices=["nearest"], default=None)
    p.add_argument("--rate-rule", type=float, default=None,
                   help="bandwidth constant c in h = c * n**(-e)")
    p.add_argument("--rate-exponent", type=float, default=None)
    p.add_argument("--out", default="fit.csv")
    _add_bandwidth_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_fit)
    registry["fit"] = p

    p = subs.add_parser("mc", help="Monte Carlo table over (n, sigma) cells")
    p.add_argument("--dgp", required=True)
    p.add_argument("--ns", default="400,800,1600")
    p.add_argument("--sigmas", default="0.1,0.5,1,2")
    p.add_argument("--replicates", type=int, default=125)
    p.add_argument("--estimators", default="lc,alc,alct")
    p.add_argument("--selector", choices=["aicc", "lscv"], default="aicc")
    p.add_argument("--range-multiplier", type=float, default=1.0)
    p.add_argument("--jump", type=float, default=3.0)
    p.add_argument("--seed", type=int, required=True,
                   help="base seed (required: tables must be reproducible)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-prefix", default="mc")
    p.add_argument("--dump-replicates", action="store_true",
                   help="also write per-replicate MESEs")
    _add_bandwidth_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_mc)
    registry["mc"] = p

    p = subs.add_parser("rate", help="empirical convergence-rate slope")
    p.add_argument("--dgp", required=True)
    p.add_argument("--estimator", choices=["lc", "alc", "alct"], default="alct")
    p.add_argument("--ns", default="400,1600,6400,25600")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--constant", type=float, default=0.5)
    p.add_argument("--exponent", type=float, default=None)
    p.add_argument("--kernel", default="uniform")
    p.add_argument("--range-kernel", default="epanechnikov")
    p.add_argument("--range-multiplier", type=float, default=1.0)
    p.add_argument("--pilot-factor", type=float, default=0.8)
    p.add_argument("--jump", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_rate)
    registry["rate"] = p

    p = subs.add_parser("smooth-image", help="per-channel smoothing of a PNG/PPM")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--estimator", choices=["lc", "alc"], default="alc")
    p.add_argument("--channels", default="rgb")
    p.add_argument("--fill", choices=["nearest"], default=None)
    p.add_argument("--dump-csv", action="store_true")
    _add_bandwidth_flags(p, default_bandwidth="3")
    _add_common(p)
    p.set_defaults(func=_cmd_smooth_image)
    registry["smooth-image"] = p

    return parser, registry


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, registry = _build_parser()
    try:
        config_path = _config_path_from(argv)
        if config_path and argv and not argv[0].startswith("-"):
            _apply_config(registry, argv[0], _load_config(config_path))
        args = parser.parse_args(argv)
        return args.func(args) or 0
    except SystemExit as exc:  # argparse --help/--version/usage
        code = exc.code
        return int(code) if code else 0
    except SelectionFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
