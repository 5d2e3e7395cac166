"""Command-line interface: ``segment``, ``synth``, ``eval`` and ``selftest``."""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import selftest
from .core import INIT_MODES, EvolutionConfig
from .io import load_boxes, load_image, load_mask, save_boxes, save_masks, write_png
from .pipeline import segment_image
from .scenes import SceneSpec, evaluate_iou, generate_scene

log = logging.getLogger("boxlevelset")

# flag name -> EvolutionConfig field
CONFIG_FLAGS = {
    "gamma": "gamma",
    "alpha": "alpha",
    "lambda1": "lambda1",
    "lambda2": "lambda2",
    "delta_t": "delta_t",
    "max_iters": "max_iters",
    "init_mode": "init_mode",
}


def _config_from_args(args):
    values = {}
    if args.seed_config_file:
        with open(args.seed_config_file, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for flag, name in CONFIG_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            values[name] = value
    return EvolutionConfig.from_dict(values)


def cmd_segment(args):
    config = _config_from_args(args)
    image = load_image(args.image)
    boxes = load_boxes(args.boxes)
    start = time.perf_counter()
    result = segment_image(image, boxes, config, workers=args.workers)
    save_masks(result, args.out)
    print(f"segmented {len(result.masks)} instance(s) in {time.perf_counter() - start:.2f}s; "
          f"mean objective {result.mean_objective:.6g}; output in {args.out}")
    for id, message in sorted(result.failures.items()):
        print(f"instance {id} failed: {message}", file=sys.stderr)
    return 1 if result.failures else 0


def cmd_synth(args):
    with open(args.spec, encoding="utf-8") as fh:
        spec = SceneSpec.from_dict(json.load(fh))
    image, boxes, truths = generate_scene(spec)
    out = Path(args.out)
    (out / "truth").mkdir(parents=True, exist_ok=True)
    write_png(out / "image.png", np.rint(image.data[:, :, 0] * 255))
    save_boxes(out / "boxes.txt", boxes)
    for box, truth in zip(boxes, truths):
        write_png(out / "truth" / f"mask_{box.id}.png", truth * 255)
    (out / "scene.json").write_text(json.dumps(spec.to_dict(), indent=2), encoding="utf-8")
    print(f"wrote {len(boxes)} instance(s) to {out}")
    return 0


def _mask_files(directory):
    found = {}
    for path in Path(directory).glob("mask_*.png"):
        match = re.fullmatch(r"mask_(\d+)\.png", path.name)
        if match:
            found[int(match.group(1))] = path
    return found


def cmd_eval(args):
    truth = _mask_files(args.truth_dir)
    pred = _mask_files(args.pred_dir)
    if not truth:
        print(f"no mask_<id>.png files in {args.truth_dir}", file=sys.stderr)
        return 2
    scores = {}
    for id, path in sorted(truth.items()):
        gt = load_mask(path)
        if id in pred:
            scores[id] = evaluate_iou(load_mask(pred[id]), gt)
        else:
            log.warning("no prediction for instance %d", id)
            scores[id] = 0.0
        print(f"instance {id}: IoU {scores[id]:.4f}")
    mean = float(np.mean(list(scores.values())))
    print(f"mean IoU {mean:.4f} over {len(scores)} instance(s)")
    if args.json:
        Path(args.json).write_text(
            json.dumps({"iou": {str(k): v for k, v in scores.items()}, "mean_iou": mean}, indent=2),
            encoding="utf-8",
        )
    return 0


def cmd_selftest(args):
    return 0 if selftest.run(seed=args.seed) else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="boxlevelset",
        description="Box-supervised instance segmentation by level-set evolution.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment every box of an image")
    seg.add_argument("--image", required=True, help="PNG or PGM image")
    seg.add_argument("--boxes", required=True, help="box file, one 'id x0 y0 x1 y1' per line")
    seg.add_argument("--out", required=True, help="output directory")
    defaults = EvolutionConfig()
    seg.add_argument("--gamma", type=float, help=f"length weight (default {defaults.gamma})")
    seg.add_argument("--alpha", type=float, help=f"box projection weight (default {defaults.alpha})")
    seg.add_argument("--lambda1", type=float, help=f"image term weight (default {defaults.lambda1})")
    seg.add_argument("--lambda2", type=float,
                     help=f"feature term weight (default {defaults.lambda2})")
    seg.add_argument("--delta-t", dest="delta_t", type=float,
                     help=f"Euler step size (default {defaults.delta_t})")
    seg.add_argument("--max-iters", dest="max_iters", type=int,
                     help=f"iteration cap (default {defaults.max_iters})")
    seg.add_argument("--init-mode", dest="init_mode", choices=INIT_MODES,
                     help=f"initial level set (default {defaults.init_mode})")
    seg.add_argument("--seed-config-file", dest="seed_config_file",
                     help="JSON file of solver settings; explicit flags take precedence")
    seg.add_argument("--workers", type=int, default=1, help="instances evolved in parallel")
    seg.set_defaults(func=cmd_segment)

    syn = sub.add_parser("synth", help="render a synthetic scene with ground truth")
    syn.add_argument("--spec", required=True, help="scene JSON")
    syn.add_argument("--out", required=True, help="output directory")
    syn.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="IoU of predicted masks against ground truth")
    ev.add_argument("--pred-dir", required=True)
    ev.add_argument("--truth-dir", required=True)
    ev.add_argument("--json", help="also write scores to this JSON file")
    ev.set_defaults(func=cmd_eval)

    st = sub.add_parser("selftest", help="run the built-in oracle checks")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
