"""Batch command-line frontend.

Every command is deterministic given (inputs, config, seed): per-file
RNG streams derive from the base seed and the file's index in the
lexicographically sorted input listing, so directory order, --jobs, and
scheduling never change the output bytes. A manifest.json snapshot of
the run is written next to the outputs.
"""

from __future__ import annotations

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .augment import ssr_augment
from .clutter import (
    RegionMasks,
    hard_seg_variant1,
    hard_seg_variant2,
    merge_clutter,
    random_clutter_crop,
)
from .config import PRESETS, SsrConfig
from .errors import SsrError
from .fileio import read_mask, read_raster, read_ssrf, write_raster
from .gmm import GmmParams, fit_gmm
from .imaging import compute_histogram, log_map, min_max_normalize
from .seeding import GENERATOR, derive_rng
from .stats import image_stats, nll_kernel_sweep, population_report, write_report_json, write_stats_csv

RASTER_EXTS = (".ssrf", ".png")


def _list_inputs(input_dir: Path) -> list[Path]:
    files = [p for p in input_dir.rglob("*") if p.is_file() and p.suffix in RASTER_EXTS]
    return sorted(files, key=lambda p: str(p.relative_to(input_dir)))


def _build_config(config_path, preset, **overrides) -> SsrConfig:
    if config_path:
        cfg = SsrConfig.from_json_file(config_path)
    else:
        cfg = PRESETS[preset or "default"]
    present = {k: v for k, v in overrides.items() if v is not None}
    if present:
        cfg = cfg.replace(**present)
    return cfg


def _write_manifest(output_dir: Path, payload: dict) -> None:
    payload = {"tool_version": __version__, "rng": GENERATOR, **payload}
    with open(output_dir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _finish(failures: list[dict]) -> None:
    for f in failures:
        click.echo(f"error: {f['input']}: {f['error']}", err=True)
    sys.exit(1 if failures else 0)


def _config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False)),
        click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None),
        click.option("--alpha", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--sigma-s", "sigma_s", type=float, default=None),
        click.option("--apply-prob", "apply_probability", type=float, default=None),
        click.option("--bins", "bin_count", type=int, default=None),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Soft segmented randomization toolkit for radar intensity images."""


# ---------------------------------------------------------------------------
# preprocess


def _preprocess_one(task):
    try:
        arr = read_raster(Path(task["input"]))
        out = log_map(min_max_normalize(arr), task["c"])
        write_raster(Path(task["output"]), out, task["fmt"])
        return {"input": task["rel"], "output": task["out_rel"], "status": "ok"}
    except (SsrError, OSError) as exc:
        return {"input": task["rel"], "status": "failed", "error": str(exc)}


@main.command()
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--c", "c", type=float, default=1000.0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["ssrf", "png16"]), default="ssrf")
@click.option("--jobs", type=int, default=1, show_default=True)
def preprocess(input_dir, output_dir, c, fmt, jobs):
    """Min-max normalize and log-map amplitude rasters."""
    output_dir.mkdir(parents=True, exist_ok=True)
    ext = ".ssrf" if fmt == "ssrf" else ".png"
    tasks = []
    for path in _list_inputs(input_dir):
        rel = str(path.relative_to(input_dir))
        out_rel = str(Path(rel).with_suffix(ext))
        out_path = output_dir / out_rel
        out_path.parent.mkdir(parents=True, exist_ok=True)
        tasks.append(
            {"input": str(path), "rel": rel, "output": str(out_path), "out_rel": out_rel,
             "c": c, "fmt": fmt}
        )
    results = _run_tasks(_preprocess_one, tasks, jobs)
    failures = [r for r in results if r["status"] == "failed"]
    _write_manifest(output_dir, {"command": "preprocess", "c": c, "format": fmt,
                                 "files": results})
    _finish(failures)


def _run_tasks(fn, tasks, jobs):
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# augment


def _augment_one(task):
    cfg = SsrConfig.from_dict(task["cfg"])
    out_dir = Path(task["output_dir"])
    rel = task["rel"]
    stem = Path(rel).stem
    try:
        arr = read_raster(Path(task["input"]))
        gmm_path = out_dir / f"{stem}.gmm.json"
        if gmm_path.exists():
            params = GmmParams.from_json_file(gmm_path)
        else:
            params = fit_gmm(compute_histogram(arr, cfg.bin_count), cfg)
            with open(gmm_path, "w") as fh:
                fh.write(params.to_json())
        outputs = []
        for r in range(task["replicas"]):
            rng = derive_rng(task["seed"], task["index"], r)
            applied = bool(rng.random() < cfg.apply_probability)
            if applied:
                out, meta = ssr_augment(arr, params, cfg, rng, return_meta=True)
                delta_mu, delta_sigma = meta.delta_mu, meta.delta_sigma
            else:
                out = arr
                delta_mu = delta_sigma = None
            out_rel = f"{stem}__r{r:03d}{task['ext']}"
            write_raster(out_dir / out_rel, out, task["fmt"])
            sidecar = {
                "base_seed": task["seed"],
                "image_index": task["index"],
                "replica_index": r,
                "applied": applied,
                "delta_mu": delta_mu,
                "delta_sigma": delta_sigma,
                "sigma_s": cfg.sigma_s,
                "gmm": params.to_dict(),
            }
            with open(out_dir / f"{stem}__r{r:03d}.meta.json", "w") as fh:
                json.dump(sidecar, fh, indent=2, sort_keys=True)
            outputs.append({"output": out_rel, "applied": applied})
        return {"input": rel, "index": task["index"], "status": "ok", "outputs": outputs}
    except (SsrError, OSError) as exc:
        return {"input": rel, "index": task["index"], "status": "failed", "error": str(exc)}


@main.command()
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@_config_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--replicas", type=int, default=1, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["ssrf", "png16"]), default="ssrf")
@click.option("--jobs", type=int, default=1, show_default=True)
def augment(input_dir, output_dir, config_path, preset, seed, replicas, fmt, jobs, **overrides):
    """Fit per-image mixtures and emit randomized replicas."""
    cfg = _build_config(config_path, preset, **overrides)
    output_dir.mkdir(parents=True, exist_ok=True)
    ext = ".ssrf" if fmt == "ssrf" else ".png"
    tasks = []
    for index, path in enumerate(_list_inputs(input_dir)):
        tasks.append(
            {"input": str(path), "rel": str(path.relative_to(input_dir)), "index": index,
             "output_dir": str(output_dir), "cfg": cfg.to_dict(), "seed": seed,
             "replicas": replicas, "fmt": fmt, "ext": ext}
        )
    results = _run_tasks(_augment_one, tasks, jobs)
    failures = [r for r in results if r["status"] == "failed"]
    _write_manifest(
        output_dir,
        {"command": "augment", "config": cfg.to_dict(), "base_seed": seed,
         "replicas": replicas, "format": fmt, "files": results},
    )
    _finish(failures)


# ---------------------------------------------------------------------------
# merge


def _merge_one(task):
    rel = task["rel"]
    try:
        arr = read_raster(Path(task["input"]))
        mask_path = Path(task["masks_dir"]) / (Path(rel).stem + ".png")
        if not mask_path.exists():
            raise SsrError(f"missing mask {mask_path.name}")
        target, shadow, clt = read_mask(mask_path)
        masks = RegionMasks(target=target, shadow=shadow, clutter=clt)
        scene = _SCENE_CACHE.get(task["scene"])
        if scene is None:
            scene = np.clip(read_ssrf(task["scene"]), 0.0, 1.0)
            _SCENE_CACHE[task["scene"]] = scene
        rng = derive_rng(task["seed"], task["index"])
        patch, (top, left) = random_clutter_crop(scene, *arr.shape, rng)
        out = merge_clutter(arr, masks, patch)
        out_rel = str(Path(rel).with_suffix(task["ext"]))
        write_raster(Path(task["output_dir"]) / out_rel, out, task["fmt"])
        return {"input": rel, "index": task["index"], "status": "ok",
                "output": out_rel, "crop_top": top, "crop_left": left}
    except (SsrError, OSError) as exc:
        return {"input": rel, "index": task["index"], "status": "failed", "error": str(exc)}


_SCENE_CACHE: dict = {}


@main.command()
@click.argument("measured_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("masks_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("clutter_scene", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["ssrf", "png16"]), default="ssrf")
@click.option("--jobs", type=int, default=1, show_default=True)
def merge(measured_dir, masks_dir, clutter_scene, output_dir, seed, fmt, jobs):
    """Merge measured chips with random crops of a large clutter scene."""
    output_dir.mkdir(parents=True, exist_ok=True)
    ext = ".ssrf" if fmt == "ssrf" else ".png"
    tasks = []
    for index, path in enumerate(_list_inputs(measured_dir)):
        tasks.append(
            {"input": str(path), "rel": str(path.relative_to(measured_dir)), "index": index,
             "masks_dir": str(masks_dir), "scene": str(clutter_scene), "seed": seed,
             "output_dir": str(output_dir), "fmt": fmt, "ext": ext}
        )
    results = _run_tasks(_merge_one, tasks, jobs)
    failures = [r for r in results if r["status"] == "failed"]
    _write_manifest(output_dir, {"command": "merge", "base_seed": seed,
                                 "clutter_scene": str(clutter_scene), "format": fmt,
                                 "files": results})
    _finish(failures)


# ---------------------------------------------------------------------------
# hardseg


def _hardseg_one(task):
    cfg = SsrConfig.from_dict(task["cfg"])
    rel = task["rel"]
    try:
        arr = read_raster(Path(task["input"]))
        mask_path = Path(task["masks_dir"]) / (Path(rel).stem + ".png")
        if not mask_path.exists():
            raise SsrError(f"missing mask {mask_path.name}")
        target, shadow, clt = read_mask(mask_path)
        masks = RegionMasks(target=target, shadow=shadow, clutter=clt)
        rng = derive_rng(task["seed"], task["index"])
        fn = hard_seg_variant1 if task["variant"] == 1 else hard_seg_variant2
        out = fn(arr, masks, cfg, rng)
        out_rel = str(Path(rel).with_suffix(task["ext"]))
        write_raster(Path(task["output_dir"]) / out_rel, out, task["fmt"])
        return {"input": rel, "index": task["index"], "status": "ok", "output": out_rel}
    except (SsrError, OSError) as exc:
        return {"input": rel, "index": task["index"], "status": "failed", "error": str(exc)}


@main.command()
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("masks_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--variant", type=click.IntRange(1, 2), required=True)
@_config_options
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["ssrf", "png16"]), default="ssrf")
@click.option("--jobs", type=int, default=1, show_default=True)
def hardseg(input_dir, masks_dir, output_dir, variant, config_path, preset, seed, fmt, jobs,
            **overrides):
    """Hard-segmentation ablation variants 1 and 2."""
    cfg = _build_config(config_path, preset, **overrides)
    output_dir.mkdir(parents=True, exist_ok=True)
    ext = ".ssrf" if fmt == "ssrf" else ".png"
    tasks = []
    for index, path in enumerate(_list_inputs(input_dir)):
        tasks.append(
            {"input": str(path), "rel": str(path.relative_to(input_dir)), "index": index,
             "masks_dir": str(masks_dir), "variant": variant, "cfg": cfg.to_dict(),
             "seed": seed, "output_dir": str(output_dir), "fmt": fmt, "ext": ext}
        )
    results = _run_tasks(_hardseg_one, tasks, jobs)
    failures = [r for r in results if r["status"] == "failed"]
    _write_manifest(output_dir, {"command": "hardseg", "variant": variant,
                                 "config": cfg.to_dict(), "base_seed": seed,
                                 "format": fmt, "files": results})
    _finish(failures)


# ---------------------------------------------------------------------------
# stats


def _collect_stats(input_dir: Path, cfg: SsrConfig):
    out = []
    for path in _list_inputs(input_dir):
        arr = read_raster(path)
        params = fit_gmm(compute_histogram(arr, cfg.bin_count), cfg)
        out.append(image_stats(arr, params, path=str(path.relative_to(input_dir))))
    return out


@main.command()
@click.argument("dir_a", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("dir_b", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@_config_options
def stats(dir_a, dir_b, output_dir, config_path, preset, **overrides):
    """Per-image clutter statistics and a two-population comparison."""
    cfg = _build_config(config_path, preset, **overrides)
    output_dir.mkdir(parents=True, exist_ok=True)
    try:
        stats_a = _collect_stats(dir_a, cfg)
        stats_b = _collect_stats(dir_b, cfg)
        report = population_report(stats_a, stats_b)
    except SsrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    write_stats_csv(output_dir / "stats_a.csv", stats_a)
    write_stats_csv(output_dir / "stats_b.csv", stats_b)
    write_report_json(output_dir / "report.json", report)
    sys.exit(0)


# ---------------------------------------------------------------------------
# sweep-nll


@main.command("sweep-nll")
@click.argument("input_image", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("output_json", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--k", "k_values", default="1,2,3,4,5", show_default=True,
              help="Comma-separated kernel counts.")
@_config_options
def sweep_nll(input_image, output_json, k_values, config_path, preset, **overrides):
    """Converged NLL versus mixture kernel count for one image."""
    cfg = _build_config(config_path, preset, **overrides)
    try:
        ks = [int(v) for v in k_values.split(",") if v.strip()]
    except ValueError:
        raise click.UsageError(f"cannot parse --k value {k_values!r}")
    try:
        arr = read_raster(input_image)
        hist = compute_histogram(arr, cfg.bin_count)
        sweep = nll_kernel_sweep(hist, ks, cfg)
    except SsrError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    with open(output_json, "w") as fh:
        json.dump({"image": str(input_image), "sweep": [{"k": k, "nll": n} for k, n in sweep]},
                  fh, indent=2)
    sys.exit(0)


if __name__ == "__main__":
    main()
