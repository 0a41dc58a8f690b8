"""
Command-line entry point.

Values resolve in order: built-in default < ``--config`` JSON < flags.
Exit codes: 0 ok, 2 usage/config, 3 data/format, 4 contract or empty
selection, 5 file I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .camera import Geocalibration
from .errors import ConfigError, GeodepthError
from .evaluation import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_DEPTH_CAP,
    DEFAULT_MAX_DIST,
    EvalSelection,
    apply_scale,
    compute_metrics,
    error_vs_distance,
    heading_offsets,
    median_scale_factor,
    rmse_vs_depthcap,
    scale_scatter,
    valid_pixels,
)
from .losses import DEFAULT_ALPHA_H, DEFAULT_DELTA, LossConfig, masked_mean_loss
from .projection import extract_cutout
from .raster import (
    DEFAULT_CELL_Z,
    DEFAULT_EYE_HEIGHT,
    PerspectiveDepthMap,
    calib_sidecar_path,
    load_depth,
    load_raster,
    normalize_height,
    save_raster,
)
from .registration import SearchGrid, register_orientation
from .testkit import SCENE_KINDS, SceneSpec, generate_scene
from .voxel import RayCastConfig, render_panorama, voxelize

IO_EXIT = 5

# section -> key -> (type, default, help). ``None`` defaults are derived at run time.
OPTIONS = {
    "scene": {
        "kind": (str, "box-field", f"scene kind, one of {', '.join(SCENE_KINDS)}"),
        "grid_width": (int, 64, "grid width in pixels"),
        "grid_height": (int, 64, "grid height in pixels"),
        "gsd": (float, 1.0, "ground sample distance, m/pixel"),
        "seed": (int, 0, "seed for randomized scenes"),
        "params": (dict, {}, "per-kind parameters as JSON, e.g. '{\"distance\": 20}'"),
    },
    "raycast": {
        "step": (float, None, "ray sampling interval in m (default: gsd/2)"),
        "max_range": (float, None, "maximum ray length in m (default: half the grid diagonal)"),
        "pano_width": (int, None, "panorama width (default: 1024, or 2 * pano_height)"),
        "pano_height": (int, None, "panorama height (default: pano_width/2)"),
        "eye_height": (float, None, f"camera height above center terrain, m (default: sidecar or {DEFAULT_EYE_HEIGHT})"),
        "cell_z": (float, None, f"vertical voxel size, m (default: sidecar or {DEFAULT_CELL_Z})"),
        "threads": (int, None, "worker threads for ray casting (default: all)"),
    },
    "calib": {
        "yaw": (float, 0.0, "degrees clockwise from north"),
        "pitch": (float, 0.0, "degrees, positive up"),
        "roll": (float, 0.0, "degrees"),
        "fov": (float, 90.0, "horizontal field of view, degrees"),
        "width": (int, 512, "cutout width in pixels"),
        "height": (int, 512, "cutout height in pixels"),
    },
    "eval": {
        "depth_cap": (float, DEFAULT_DEPTH_CAP, "maximum ground-truth depth admitted, m"),
        "min_depth": (float, 0.0, "ground truth must exceed this, m"),
        "scale_mode": (str, "none", "none | median-gt | median-ref"),
        "bin_width": (float, DEFAULT_BIN_WIDTH, "distance-curve bin width, m"),
        "max_dist": (float, DEFAULT_MAX_DIST, "distance-curve extent, m"),
        "caps": (list, [10.0, 20.0, 40.0, 80.0, 100.0, 150.0, 200.0, 300.0, 400.0], "depth caps for the cap curve"),
    },
    "search": {
        "yaw_min": (float, 0.0, "search yaw start, degrees"),
        "yaw_max": (float, 359.0, "search yaw end, degrees"),
        "yaw_step": (float, 1.0, "search yaw step, degrees"),
        "pitch_min": (float, -10.0, "search pitch start, degrees"),
        "pitch_max": (float, 10.0, "search pitch end, degrees"),
        "pitch_step": (float, 1.0, "search pitch step, degrees"),
        "search_roll": (float, 0.0, "fixed roll during search, degrees"),
        "search_fov": (float, 90.0, "fixed field of view during search, degrees"),
        "min_overlap": (float, 0.25, "minimum fraction of query pixels that must overlap"),
        "top_k": (int, 5, "number of ranked alternatives to report"),
    },
    "loss": {
        "delta": (float, DEFAULT_DELTA, "Pseudo-Huber steepness"),
        "alpha_h": (float, DEFAULT_ALPHA_H, "height-task weight in the combined loss"),
    },
    "noise": {
        "theta": (float, 0.0, "maximum heading error, degrees"),
        "seed": (int, 0, "noise generator seed (PCG64)"),
        "n": (int, 1, "number of draws"),
    },
    "paths": {
        "output": (str, None, "output file"),
        "mask": (str, None, "optional validity mask PFM (non-zero = valid)"),
        "ref": (str, None, "reference depth PFM for median-ref scaling"),
        "figure": (str, None, "also render a PNG figure to this path"),
    },
}

_EVAL_KEYS = ("depth_cap", "min_depth", "scale_mode")
# command -> section -> exposed keys (None = whole section)
SECTIONS_BY_COMMAND = {
    "scene": {"scene": None, "raycast": ("eye_height", "cell_z"), "paths": ("output",)},
    "synth": {"raycast": None, "paths": ("output",)},
    "cutout": {"calib": None, "paths": ("output",)},
    "metrics": {"eval": _EVAL_KEYS, "loss": None, "paths": ("output", "mask", "ref")},
    "calibrate": {"eval": _EVAL_KEYS, "loss": None, "paths": ("output", "mask", "ref")},
    "curves": {"eval": ("depth_cap", "min_depth", "bin_width", "max_dist", "caps"),
               "paths": ("output", "mask", "figure")},
    "register": {"search": None, "paths": ("output",)},
    "noise": {"calib": ("yaw", "pitch", "roll", "fov"), "noise": None, "paths": ("output", "figure")},
}


def _flag(section: str, key: str) -> str:
    if section == "noise" and key == "seed":
        return "--seed"
    if section == "paths" and key == "output":
        return "--output"
    return "--" + key.replace("_", "-")


def _dest(section: str, key: str) -> str:
    return f"{section}__{key}"


def _parse_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_dict(text: str) -> dict:
    try:
        val = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None
    if not isinstance(val, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return val


def _add_section(parser: argparse.ArgumentParser, section: str, keys=None) -> None:
    group = parser.add_argument_group(section)
    for key, (typ, default, help_) in OPTIONS[section].items():
        if keys is not None and key not in keys:
            continue
        conv = {list: _parse_list, dict: _parse_dict}.get(typ, typ)
        if default is not None:
            help_ = f"{help_} [default: {json.dumps(default)}]"
        kwargs = dict(dest=_dest(section, key), type=conv, default=None, help=help_,
                      metavar=key.upper())
        flag = _flag(section, key)
        if flag == "--output":
            group.add_argument("-o", flag, **kwargs)
        else:
            group.add_argument(flag, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geodepth",
        description="Synthetic metric depth from overhead height rasters.",
        epilog=(
            f"defaults: eye_height {DEFAULT_EYE_HEIGHT} m, step gsd/2, max_range half the grid "
            f"diagonal, cell_z {DEFAULT_CELL_Z} m, depth_cap {DEFAULT_DEPTH_CAP:g} m, "
            f"delta {DEFAULT_DELTA:g}, alpha_h {DEFAULT_ALPHA_H:g}. "
            "Exit codes: 0 ok, 2 usage/config, 3 data/format, 4 contract/empty selection, 5 I/O."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, *positionals):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="JSON run configuration")
        for pos, pos_help, nargs in positionals:
            p.add_argument(pos, help=pos_help, nargs=nargs)
        for section, keys in SECTIONS_BY_COMMAND[name].items():
            _add_section(p, section, keys)
        return p

    add("scene", "write a procedural height map (PFM + .geo.json sidecar)")
    add("synth", "render a depth panorama from a height map",
        ("heightmap", "height map PFM with sidecar", None))
    add("cutout", "extract a perspective cutout from a panorama",
        ("pano", "panorama PFM", None))
    add("metrics", "evaluate a prediction against ground truth",
        ("pred", "predicted depth PFM", None), ("gt", "ground-truth depth PFM", None))
    add("calibrate", "metrics with median scaling (default median-gt)",
        ("pred", "predicted depth PFM", None), ("gt", "ground-truth depth PFM", None))
    curves = add("curves", "error-vs-distance, RMSE-vs-cap or median scatter CSV",
                 ("rasters", "PRED GT (distance/cap) or PRED GT pairs (scatter)", "+"))
    curves.add_argument("--mode", choices=("distance", "cap", "scatter"), default="distance")
    add("register", "recover yaw/pitch of a query depth map against a panorama",
        ("query", "query perspective depth PFM", None), ("pano", "panorama PFM", None))
    add("noise", "draw heading-perturbed yaws")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags into ``{section: {key: value}}``."""
    cfg = {s: {k: spec[1] for k, spec in keys.items()} for s, keys in OPTIONS.items()}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        for section, values in doc.items():
            if section not in OPTIONS:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            for key, val in values.items():
                if key not in OPTIONS[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                cfg[section][key] = _coerce(section, key, val)
    for section, keys in OPTIONS.items():
        for key in keys:
            val = getattr(args, _dest(section, key), None)
            if val is not None:
                cfg[section][key] = val
    return cfg


def _coerce(section, key, val):
    typ = OPTIONS[section][key][0]
    if val is None:
        return None
    if typ is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if typ is list and isinstance(val, list) and all(isinstance(v, (int, float)) for v in val):
        return [float(v) for v in val]
    if isinstance(val, typ) and not isinstance(val, bool):
        return val
    raise ConfigError(f"config key {section}.{key} must be {typ.__name__}, got {val!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _require_output(cfg) -> Path:
    out = cfg["paths"]["output"]
    if not out:
        raise ConfigError("an output path is required (-o/--output)")
    return Path(out)


def raycast_config(h, rc: dict) -> RayCastConfig:
    return RayCastConfig.for_heightmap(
        h,
        step=rc["step"],
        max_range=rc["max_range"],
        pano_width=rc["pano_width"],
        pano_height=rc["pano_height"],
        eye_height=rc["eye_height"],
        cell_z=rc["cell_z"],
    )


def cmd_scene(args, cfg):
    s = cfg["scene"]
    spec = SceneSpec(s["kind"], s["grid_width"], s["grid_height"], s["gsd"], s["seed"], s["params"])
    h = generate_scene(spec)
    rc = cfg["raycast"]
    if rc["eye_height"] is not None or rc["cell_z"] is not None:
        from .raster import HeightMap
        h = HeightMap(h.values, h.gsd, rc["eye_height"], rc["cell_z"])
    out = _require_output(cfg)
    save_raster(h, out)
    print(f"scene {spec.kind} {h.width}x{h.height} gsd={h.gsd:g} max={float(h.values.max()):.3f} -> {out}")


def cmd_synth(args, cfg):
    h = normalize_height(load_raster(args.heightmap, "height"))
    rc = raycast_config(h, cfg["raycast"])
    pano = render_panorama(voxelize(h, rc.cell_z), rc, threads=cfg["raycast"]["threads"])
    out = _require_output(cfg)
    save_raster(pano, out)
    hits = pano.values[pano.values > 0]
    lo = float(hits.min()) if hits.size else -1.0
    hi = float(hits.max()) if hits.size else -1.0
    print(
        f"panorama {pano.width}x{pano.height} step={rc.step:g} max_range={rc.max_range:g} "
        f"eye_height={rc.eye_height:g} cell_z={rc.cell_z:g} hit_fraction={pano.hit_fraction():.6f} "
        f"min_depth={lo:.3f} max_depth={hi:.3f} -> {out}"
    )


def calib_from(c: dict) -> Geocalibration:
    return Geocalibration(c["yaw"], c["pitch"], c["roll"], c["fov"])


def cmd_cutout(args, cfg):
    pano = load_raster(args.pano, "depth")
    calib = calib_from(cfg["calib"])
    cut = extract_cutout(pano, calib, cfg["calib"]["width"], cfg["calib"]["height"])
    out = _require_output(cfg)
    save_raster(cut, out)
    n_hit = int((cut.values > 0).sum())
    print(f"cutout {cut.width}x{cut.height} yaw={calib.yaw:g} pitch={calib.pitch:g} "
          f"roll={calib.roll:g} fov={calib.fov:g} valid={n_hit} -> {out}")


def _selection(cfg, shape) -> EvalSelection:
    mask = None
    if cfg["paths"]["mask"]:
        mask = load_depth(cfg["paths"]["mask"]) != 0
        if mask.shape != shape:
            raise ConfigError(f"mask shape {mask.shape} does not match rasters {shape}")
    return EvalSelection(mask, cfg["eval"]["depth_cap"], cfg["eval"]["min_depth"])


def metrics_report(pred, gt, sel: EvalSelection, scale_mode: str, ref=None, delta: float = DEFAULT_DELTA) -> dict:
    """Library-level body of the ``metrics`` command."""
    if scale_mode == "none":
        s = 1.0
    elif scale_mode == "median-gt":
        s = median_scale_factor(pred, gt, sel)
    elif scale_mode == "median-ref":
        if ref is None:
            raise ConfigError("median-ref scaling needs --ref")
        s = median_scale_factor(pred, ref, sel)
    else:
        raise ConfigError(f"unknown scale mode {scale_mode!r}")
    scaled = apply_scale(pred, s) if s != 1.0 else np.asarray(pred, dtype=np.float64)
    m = compute_metrics(scaled, gt, sel)
    valid = valid_pixels(scaled, gt, sel)
    gt64 = np.asarray(gt, dtype=np.float64)
    report = m.to_dict()
    report.update(
        scale=s,
        scale_mode=scale_mode,
        n_excluded_cap=int((gt64 > sel.depth_cap).sum()),
        pseudo_huber=masked_mean_loss(scaled, gt64, valid, delta),
    )
    return report


def cmd_metrics(args, cfg, default_mode="none"):
    pred = load_depth(args.pred)
    gt = load_depth(args.gt)
    if pred.shape != gt.shape:
        raise ConfigError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")
    LossConfig(cfg["loss"]["delta"], cfg["loss"]["alpha_h"])
    mode = cfg["eval"]["scale_mode"]
    if default_mode != "none" and mode == "none" and getattr(args, _dest("eval", "scale_mode")) is None:
        mode = default_mode
    ref = load_depth(cfg["paths"]["ref"]) if cfg["paths"]["ref"] else None
    report = metrics_report(pred, gt, _selection(cfg, gt.shape), mode, ref, cfg["loss"]["delta"])
    text = json.dumps(report, indent=2)
    if cfg["paths"]["output"]:
        Path(cfg["paths"]["output"]).write_text(text + "\n")
    print(text)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v)) if isinstance(v, float) else str(v)


def write_curve_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "n"])
        for p in points:
            w.writerow([_fmt(p.x), _fmt(p.y), p.n])


def cmd_curves(args, cfg):
    out = _require_output(cfg)
    ev = cfg["eval"]
    figure = cfg["paths"]["figure"]
    files = args.rasters
    if args.mode in ("distance", "cap") and len(files) != 2:
        raise ConfigError(f"{args.mode} mode takes exactly PRED GT")
    if args.mode == "scatter" and len(files) % 2:
        raise ConfigError("scatter mode takes PRED GT pairs")

    if args.mode == "scatter":
        rows = []
        for pred_path, gt_path in zip(files[::2], files[1::2]):
            pred, gt = load_depth(pred_path), load_depth(gt_path)
            mg, mp = scale_scatter(pred, gt, _selection(cfg, gt.shape))
            rows.append((Path(pred_path).stem, mg, mp))
        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["image_id", "median_gt", "median_pred"])
            for r in rows:
                w.writerow([r[0], _fmt(r[1]), _fmt(r[2])])
        if figure:
            from .plotting import plot_scatter
            plot_scatter(rows, figure)
        print(f"scatter rows={len(rows)} -> {out}")
        return

    pred, gt = load_depth(files[0]), load_depth(files[1])
    if args.mode == "distance":
        sel = _selection(cfg, gt.shape)
        sel = EvalSelection(sel.mask, ev["max_dist"], ev["min_depth"])
        points = error_vs_distance(pred, gt, sel, ev["bin_width"], ev["max_dist"])
        labels = ("ground-truth depth (m)", "mean absolute error (m)")
    else:
        points = rmse_vs_depthcap(pred, gt, _selection(cfg, gt.shape), ev["caps"])
        labels = ("depth cap (m)", "RMSE (m)")
    write_curve_csv(points, out)
    if figure:
        from .plotting import plot_curve
        plot_curve(points, figure, *labels)
    print(f"curve {args.mode} points={len(points)} populated={sum(p.n > 0 for p in points)} -> {out}")


def cmd_register(args, cfg):
    query_vals = load_depth(args.query)
    calib = None
    side = calib_sidecar_path(args.query)
    if side.exists():
        calib = Geocalibration.from_dict(json.loads(side.read_text()))
    query = PerspectiveDepthMap(query_vals, calib)
    pano = load_raster(args.pano, "depth")
    s = cfg["search"]
    grid = SearchGrid(
        s["yaw_min"], s["yaw_max"], s["yaw_step"],
        s["pitch_min"], s["pitch_max"], s["pitch_step"],
        s["search_roll"], s["search_fov"], s["min_overlap"], s["top_k"],
    )
    result = register_orientation(query, pano, grid)
    text = json.dumps(result.to_dict(), indent=2)
    if cfg["paths"]["output"]:
        Path(cfg["paths"]["output"]).write_text(text + "\n")
    print(text)


def cmd_noise(args, cfg):
    nz = cfg["noise"]
    if nz["n"] < 1:
        raise ConfigError("--n must be at least 1")
    calib = calib_from(cfg["calib"])
    offsets = heading_offsets(nz["theta"], nz["seed"], nz["n"])
    mean_abs = float(np.mean(np.abs(offsets)))
    out = _require_output(cfg)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "yaw", "delta_yaw"])
        for i, u in enumerate(offsets):
            w.writerow([i, _fmt(calib.with_yaw(calib.yaw + float(u)).yaw), _fmt(float(u))])
        w.writerow(["mean_abs", "", _fmt(mean_abs)])
    if cfg["paths"]["figure"]:
        from .plotting import plot_noise
        plot_noise(offsets, nz["theta"], cfg["paths"]["figure"])
    print(f"noise theta={nz['theta']:g} n={nz['n']} seed={nz['seed']} mean_abs_delta={mean_abs:.6f} -> {out}")


COMMANDS = {
    "scene": cmd_scene,
    "synth": cmd_synth,
    "cutout": cmd_cutout,
    "metrics": cmd_metrics,
    "calibrate": lambda a, c: cmd_metrics(a, c, default_mode="median-gt"),
    "curves": cmd_curves,
    "register": cmd_register,
    "noise": cmd_noise,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        COMMANDS[args.command](args, cfg)
    except GeodepthError as exc:
        print(f"geodepth {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"geodepth {args.command}: I/O error: {exc}", file=sys.stderr)
        return IO_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
