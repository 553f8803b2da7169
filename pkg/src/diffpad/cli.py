"""Command line interface.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import DiffPadConfig, derive_seed, load_config
from .denoisers import GalleryDenoiser, GaussianPrior, OnnxDenoiser
from .estimator import worker_count
from .imageio import list_images, read_image, write_image
from .localizer import PatchBox
from .metrics import miou, psnr
from .pipeline import apply_patch, defend, localize
from .synthetic import PATCH_KINDS, make_synthetic_patch, random_box
from .theory import empirical_bound_check
from .validation import NumericalError

log = logging.getLogger("diffpad")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

BENCH_COLUMNS = [
    "image_id", "clean_flag", "mse", "tau", "area", "box_top", "box_left", "box_side",
    "miou", "psnr", "runtime_ms", "patch_kind", "patch_frac",
]
DEFAULT_SIZES = (0.03, 0.05, 0.07)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_pipeline_args(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", type=int)
    p.add_argument("--nfe", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--gallery-dir", help="directory of prior images (gallery denoiser)")
    p.add_argument("--model-path", help="ONNX noise-prediction network")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtime_ms (makes reports differ between runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diffpad", description="Diffusion-based adversarial patch decontamination")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("defend", help="localize and inpaint a patch in one image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _add_pipeline_args(p)

    p = sub.add_parser("localize", help="report the detected patch box without inpainting")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.add_argument("--truth-box", help="TOP,LEFT,SIDE of the true patch, adds an miou field")
    _add_pipeline_args(p)

    p = sub.add_parser("verify-bound", help="Monte-Carlo check of the purification bound")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--xi", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--area", type=int, default=0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON config file (schedule section is used)")

    p = sub.add_parser("bench", help="synthetic patch suite over a directory of images")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--output", required=True, help="CSV report path")
    p.add_argument("--sizes", default=",".join(str(s) for s in DEFAULT_SIZES),
                   help="comma-separated patch area fractions")
    p.add_argument("--kinds", default=",".join(PATCH_KINDS))
    _add_pipeline_args(p)
    return parser


def _resolve_config(args) -> DiffPadConfig:
    flags = dict(
        seed=args.seed, scale=args.scale, nfe=args.nfe, sigma=args.sigma,
        gallery_dir=args.gallery_dir, model_path=args.model_path,
    )
    if args.config:
        return load_config(args.config, **flags)
    return DiffPadConfig().replace(**flags)


def _make_denoiser(cfg: DiffPadConfig):
    sched = cfg.make_schedule()
    if cfg.model_path:
        return OnnxDenoiser(cfg.model_path, sched)
    if cfg.gallery_dir:
        paths = list_images(cfg.gallery_dir)
        if not paths:
            raise UsageError(f"no images in gallery directory {cfg.gallery_dir}")
        return GalleryDenoiser([read_image(p) for p in paths], sched, cfg.temperature)
    raise UsageError("a prior is required: pass --gallery-dir or --model-path")


def _read_input(path):
    if not Path(path).is_file():
        raise UsageError(f"cannot read input {path}")
    try:
        return read_image(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot decode {path}: {exc}") from None


def _parse_box(text) -> PatchBox:
    try:
        parts = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed box {text!r}; expected TOP,LEFT,SIDE") from None
    if len(parts) != 3 or parts[0] < 0 or parts[1] < 0 or parts[2] < 1:
        raise UsageError(f"malformed box {text!r}; expected TOP,LEFT,SIDE")
    return PatchBox(*parts)


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_defend(args) -> int:
    cfg = _resolve_config(args)
    x = _read_input(args.input)
    out = Path(args.output)
    if out.suffix.lower() not in (".png", ".ppm", ".pgm"):
        raise UsageError(f"unsupported output format {out.suffix!r}")
    den = _make_denoiser(cfg)
    res = defend(x, cfg, den)
    if res.clean_flag and Path(args.input).suffix.lower() == out.suffix.lower():
        shutil.copyfile(args.input, out)
    else:
        write_image(out, res.output)
    report = res.diagnostics(timing=args.timing)
    report.update(input=str(args.input), output=str(out), seed=cfg.seed)
    _dump(report, out.with_suffix(".json"))
    log.info("wrote %s (clean=%s)", out, res.clean_flag)
    return EXIT_OK


def cmd_localize(args) -> int:
    truth = _parse_box(args.truth_box) if args.truth_box else None
    cfg = _resolve_config(args)
    x = _read_input(args.input)
    if truth is not None:
        try:
            truth.check(x.shape)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    res = localize(x, cfg, _make_denoiser(cfg))
    report = res.diagnostics(timing=args.timing)
    if truth is not None:
        report["miou"] = miou(res.detected, truth, shape=x.shape[:2])
    _dump(report, args.output)
    return EXIT_OK


def cmd_verify_bound(args) -> int:
    if not 0 < args.xi <= 1:
        raise UsageError("--xi must lie in (0, 1]")
    if args.dim < 1 or args.trials < 100 or args.steps < 1:
        raise UsageError("need --dim >= 1, --trials >= 100, --steps >= 1")
    if args.epsilon < 0 or not 0 <= args.area <= args.dim:
        raise UsageError("need --epsilon >= 0 and 0 <= --area <= --dim")
    cfg = load_config(args.config) if args.config else DiffPadConfig()
    rep = empirical_bound_check(
        GaussianPrior.standard(args.dim), args.epsilon, args.area, args.dim, args.xi,
        args.trials, cfg.make_schedule(), seed=args.seed, steps=args.steps,
    )
    out = rep.to_dict()
    margin = args.xi + 3 * math.sqrt(args.xi * (1 - args.xi) / args.trials)
    out.update(dim=args.dim, epsilon=args.epsilon, area=args.area, steps=args.steps,
               seed=args.seed, allowed_rate=margin, within_margin=rep.violation_rate <= margin)
    _dump(out)
    return EXIT_OK


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def _bench_image(path, index, cfg, den, sizes, kinds, timing=False):
    x = read_image(path)
    seed = derive_seed(cfg.seed, index)
    rows = []
    for si, frac in enumerate(sizes):
        for ki, kind in enumerate(kinds):
            rng = np.random.default_rng([seed, si, ki])
            box = random_box(x.shape, frac, rng)
            patch = make_synthetic_patch(kind, box.side, int(rng.integers(2**31)), x.shape[2])
            x_a = apply_patch(x, patch, box)
            res = defend(x_a, cfg.replace(seed=seed), den)
            det = res.detected
            rows.append({
                "image_id": path.stem,
                "clean_flag": res.clean_flag,
                "mse": res.restoration_mse,
                "tau": res.tau,
                "area": res.estimated_area,
                "box_top": None if det is None else det.top,
                "box_left": None if det is None else det.left,
                "box_side": None if det is None else det.side,
                "miou": miou(det, box, shape=x.shape[:2]),
                "psnr": psnr(res.output, x),
                "runtime_ms": round(res.runtime_ms, 3) if timing else None,
                "patch_kind": kind,
                "patch_frac": frac,
            })
    return rows


def cmd_bench(args) -> int:
    try:
        sizes = [float(v) for v in args.sizes.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"malformed --sizes {args.sizes!r}") from None
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bad = [k for k in kinds if k not in PATCH_KINDS]
    if bad or not all(0 < s < 1 for s in sizes):
        raise UsageError(f"bad --kinds {bad} or --sizes {sizes}")
    if not Path(args.input_dir).is_dir():
        raise UsageError(f"not a directory: {args.input_dir}")
    cfg = _resolve_config(args)
    paths = list_images(args.input_dir)
    rows = []
    if paths:
        if not (cfg.gallery_dir or cfg.model_path):
            cfg = cfg.replace(gallery_dir=args.input_dir)
        den = _make_denoiser(cfg)
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            futures = [pool.submit(_bench_image, p, i, cfg, den, sizes, kinds, args.timing)
                       for i, p in enumerate(paths)]
            for f in futures:
                rows.extend(f.result())
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in BENCH_COLUMNS])
    log.info("wrote %d rows to %s", len(rows), args.output)
    return EXIT_OK


COMMANDS = {
    "defend": cmd_defend,
    "localize": cmd_localize,
    "verify-bound": cmd_verify_bound,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"diffpad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"diffpad: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, ImportError) as exc:
        print(f"diffpad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
