"""Command-line front end: ``idsor {filter,fit-pdf,eval,sweep,synth}``.

Filter parameters are layered: built-in defaults < ``--config`` file <
``--set key=value`` flags.  Config and grid files are flat ``key=value``
text; in a grid file the value is a comma-separated list.

Every subcommand writes its outputs atomically and exits 0 only when all of
them are in place; any error prints a one-line diagnostic and exits 2.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import kitti, plotting
from .core import PointCloud
from .errors import ConfigError, FitError, IdsorError
from .evaluation import best_entry, encode_sweep_csv, evaluate, sweep
from .filters import ScanContext, registered, resolve_params, run_filter
from .synth import SceneSpec, make_scene
from .weather import DEFAULT_BIN_WIDTH, build_histogram, fit_gamma_mom

EXIT_ERROR = 2


# --------------------------------------------------------------------------
# parameter parsing
# --------------------------------------------------------------------------

def parse_value(text: str):
    """Best-effort number parsing; anything else stays a string."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_assignment(item: str) -> tuple[str, str]:
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"expected key=value, got {item!r}")
    return key.strip(), value.strip()


def read_kv_file(path) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            key, value = parse_assignment(line)
        except ConfigError:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}") from None
        out[key] = value
    return out


def layered_params(config_file, overrides) -> dict:
    params = {}
    if config_file:
        params.update({k: parse_value(v) for k, v in read_kv_file(config_file).items()})
    for item in overrides or []:
        k, v = parse_assignment(item)
        params[k] = parse_value(v)
    return params


def read_grid(path) -> dict[str, list]:
    grid = {}
    for key, value in read_kv_file(path).items():
        grid[key] = [parse_value(v) for v in value.split(",") if v.strip()]
    return grid


def parse_classes(text: str) -> frozenset:
    try:
        classes = frozenset(int(c) for c in text.split(",") if c.strip())
    except ValueError:
        raise ConfigError(f"--snow-labels expects comma-separated integers, got {text!r}") from None
    if not classes:
        raise ConfigError("--snow-labels is empty")
    return classes


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _load_labeled(args) -> tuple[PointCloud, object]:
    cloud = kitti.read_scan(args.input)
    labels = kitti.read_labels(args.labels, parse_classes(args.snow_labels), n_points=len(cloud))
    return cloud, labels


def _add_figure(files: dict, report_path, fig, enabled: bool) -> None:
    if enabled:
        files[plotting.figure_path_for(report_path)] = plotting.figure_bytes(fig)


def cmd_filter(args) -> int:
    cloud = kitti.read_scan(args.input)
    params = layered_params(args.config, args.set)
    resolve_params(args.filter, params, args.experimental)
    t0 = time.perf_counter()
    mask = run_filter(args.filter, cloud, params, args.experimental)
    elapsed = time.perf_counter() - t0
    out = kitti.ScanFile.from_path(args.out)
    files = {out.path: kitti.encode_scan(cloud.select(mask.keep), out.format)}
    if args.mask_out:
        files[Path(args.mask_out)] = kitti.encode_mask(mask)
    kitti.commit_files(files)
    if "warning" in mask.info:
        print(f"warning: {mask.info['warning']}", file=sys.stderr)
    print(f"filter={args.filter} points_in={len(cloud)} kept={mask.n_kept} "
          f"removed={mask.n_removed} wall_time={elapsed:.3f}s")
    return 0


def cmd_fit_pdf(args) -> int:
    if args.labels and len(args.labels) != len(args.input):
        raise ConfigError(f"got {len(args.input)} scans but {len(args.labels)} label files")
    classes = parse_classes(args.snow_labels)
    params = layered_params(args.config, args.set)
    ranges = []
    for i, path in enumerate(args.input):
        ctx = ScanContext(kitti.read_scan(path))
        sel = np.ones(len(ctx), dtype=bool)
        if args.labels:
            sel &= kitti.read_labels(args.labels[i], classes, n_points=len(ctx)).positive
        if args.removed_by:
            sel &= run_filter(args.removed_by, ctx, params, args.experimental).removed
        ranges.append(ctx.ranges[sel])
    r = np.concatenate(ranges) if ranges else np.empty(0)
    fit = fit_gamma_mom(r)
    hist = build_histogram(r, args.bin_width)

    buf = ["bin_start,count,normalized_density"]
    buf += [f"{s:.6g},{c},{d:.6g}" for s, c, d in zip(hist.bin_starts, hist.counts, hist.density)]
    params_out = Path(args.params_out) if args.params_out else Path(args.out).with_suffix(".params.csv")
    files = {
        Path(args.out): ("\n".join(buf) + "\n").encode(),
        params_out: (
            "k,theta,n_samples,mean,variance\n"
            f"{fit.k:.10g},{fit.theta:.10g},{r.size},{r.mean():.10g},{r.var():.10g}\n"
        ).encode(),
    }
    _add_figure(files, args.out, plotting.range_histogram_figure(hist, fit), not args.no_plot)
    kitti.commit_files(files)
    print(f"k={fit.k:.6g} theta={fit.theta:.6g} n_samples={r.size} bin_width={args.bin_width:g}")
    return 0


def cmd_eval(args) -> int:
    cloud, labels = _load_labeled(args)
    sources = [s for s in (args.mask, args.filtered, args.filter) if s]
    if len(sources) != 1:
        raise ConfigError("eval needs exactly one of --mask, --filtered or --filter")
    if args.mask:
        mask = kitti.read_mask(args.mask, n_points=len(cloud))
    elif args.filtered:
        mask = kitti.mask_from_filtered(cloud, kitti.read_scan(args.filtered))
    else:
        mask = run_filter(args.filter, cloud, layered_params(args.config, args.set), args.experimental)
    report = evaluate(mask, labels)
    fmt = "json" if Path(args.out).suffix.lower() == ".json" else "csv"
    files = {Path(args.out): kitti.encode_report(report, fmt)}
    _add_figure(files, args.out, plotting.report_figure(report), not args.no_plot)
    kitti.commit_files(files)
    print(" ".join(f"{k}={v}" for k, v in zip(kitti.REPORT_FIELDS, kitti.report_row(report))))
    return 0


def cmd_sweep(args) -> int:
    cloud, labels = _load_labeled(args)
    grid = read_grid(args.grid)
    base = layered_params(args.config, args.set)
    entries = sweep(cloud, labels, args.filter, grid, base, args.experimental)
    best = best_entry(entries, args.min_recall)
    files = {Path(args.out): encode_sweep_csv(entries)}
    _add_figure(files, args.out, plotting.sweep_figure(entries, args.filter, best), not args.no_plot)
    kitti.commit_files(files)
    top = entries[0]
    print(f"entries={len(entries)} top: {_describe(top)}")
    if best is not None:
        print(f"best at recall>={args.min_recall:g}: {_describe(best)}")
    return 0


def _describe(entry) -> str:
    cfg = " ".join(f"{k}={v}" for k, v in entry.config.items())
    rep = entry.report
    return f"{cfg} precision={kitti.report_row(rep)[4]} recall={kitti.report_row(rep)[5]}"


def cmd_synth(args) -> int:
    spec = SceneSpec(
        weather_fraction=args.weather_fraction,
        weather_intensity=args.weather_intensity,
        foliage_points=args.foliage_points,
    )
    cloud, labels = make_scene(args.seed, spec)
    out = kitti.ScanFile.from_path(args.out)
    kitti.commit_files({
        out.path: kitti.encode_scan(cloud, out.format),
        Path(args.labels): kitti.encode_labels(labels),
    })
    print(f"points={len(cloud)} weather={int(labels.positive.sum())} seed={args.seed}")
    return 0


# --------------------------------------------------------------------------
# argument parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--set", nargs="+", action="extend", metavar="KEY=VALUE",
                        help="filter parameter overrides")
    common.add_argument("--config", help="flat key=value parameter file")
    common.add_argument("--snow-labels", default="110",
                        help="comma-separated semantic ids counted as weather (default: 110)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--experimental", action="store_true",
                        help="enable experimental baselines (ddior)")
    common.add_argument("--no-plot", action="store_true", help="skip the PNG next to reports")

    parser = argparse.ArgumentParser(prog="idsor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", parents=[common], help="filter a scan")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--filter", default="idsor")
    p.add_argument("--out", required=True, help=".bin (KITTI) or .ply (ASCII)")
    p.add_argument("--mask-out", help="per-point 0/1 byte mask")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("fit-pdf", parents=[common], help="fit the weather range PDF")
    p.add_argument("--in", dest="input", nargs="+", required=True)
    p.add_argument("--labels", nargs="+", help="label files; fit only weather-labelled points")
    p.add_argument("--removed-by", help="fit only points removed by this filter")
    p.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
    p.add_argument("--out", required=True, help="histogram CSV")
    p.add_argument("--params-out", help="fitted parameters CSV (default: <out>.params.csv)")
    p.set_defaults(func=cmd_fit_pdf)

    p = sub.add_parser("eval", parents=[common], help="precision/recall against labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--mask")
    p.add_argument("--filtered")
    p.add_argument("--filter")
    p.add_argument("--out", required=True, help="report .csv or .json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="grid search over filter parameters")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--filter", default="idsor")
    p.add_argument("--grid", required=True, help="key=v1,v2,... per line")
    p.add_argument("--min-recall", type=float, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="generate a labeled synthetic scene")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--weather-fraction", type=float, default=SceneSpec.weather_fraction)
    p.add_argument("--weather-intensity", type=float, default=SceneSpec.weather_intensity)
    p.add_argument("--foliage-points", type=int, default=SceneSpec.foliage_points)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IdsorError, OSError, ValueError) as exc:
        print(f"idsor {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
