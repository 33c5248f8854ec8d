"""Command-line interface.

Exit status is 0 on success, 1 for user errors (bad arguments, unreadable
or invalid inputs) and 2 for internal failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .cropper import CropParams, extract_crops
from .errors import SalientCropError
from .evaluation import evaluate
from .imaging import encode_png, read_image, to_grayscale
from .pipeline import (
    PipelineParams,
    analyze_bytes,
    canonical_json,
    extract_training_features,
    list_training_images,
    train_model,
    vocabulary_from_features,
)
from .saliency import compute_saliency
from .sift import detect_keypoints
from .store import load_archive, load_vocabulary, save_model, save_vocabulary
from .vocab import DEFAULT_K

logger = logging.getLogger("salientcrop")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _shared(threshold_default=0.5):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42, help="seed for k-means and SVM shuffling (default 42)")
    p.add_argument("--threshold", type=float, default=threshold_default,
                   help="saliency threshold in (0, 1)" + (" (default 0.5)" if threshold_default else
                                                          " (default: value stored in the model, 0.5)"))
    p.add_argument("--k", type=int, default=DEFAULT_K, help=f"visual words (default {DEFAULT_K})")
    p.add_argument("--c", type=float, default=1.0, help="SVM regularization C (default 1.0)")
    p.add_argument("--tau", type=float, default=None, help="no-class score threshold (default 0.0)")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="salientcrop", description="Saliency crops labelled with SIFT bag-of-words + SVM.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    train_shared = _shared()
    use_shared = _shared(threshold_default=None)

    p = sub.add_parser("build-vocab", parents=[train_shared], help="cluster training descriptors into a vocabulary")
    p.add_argument("--input", required=True, help="directory with one subdirectory per class")
    p.add_argument("--out", required=True, help="vocabulary archive to write")

    p = sub.add_parser("train", parents=[train_shared], help="train vocabulary and classifier")
    p.add_argument("--input", required=True, help="directory with one subdirectory per class")
    p.add_argument("--out", required=True, help="model archive to write")
    p.add_argument("--vocab", help="reuse a vocabulary archive from build-vocab")

    p = sub.add_parser("crop", parents=[train_shared], help="write saliency crops of one image")
    p.add_argument("--image", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--max-crops", type=int, default=None)
    p.add_argument("--saliency-png", help="also dump the saliency map as 8-bit PNG")

    p = sub.add_parser("analyze", parents=[use_shared], help="crop and label one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)

    p = sub.add_parser("evaluate", parents=[use_shared], help="score a model on a path,label CSV manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="write the metrics JSON here as well")

    p = sub.add_parser("serve", parents=[use_shared], help="run the HTTP inference service")
    p.add_argument("--model", default=os.environ.get("SALIENTCROP_MODEL"),
                   help="model archive (env SALIENTCROP_MODEL)")
    p.add_argument("--bind", default=os.environ.get("SALIENTCROP_BIND", "127.0.0.1:8080"),
                   help="host:port (env SALIENTCROP_BIND, default 127.0.0.1:8080)")
    p.add_argument("--max-upload", type=int, default=16 * 1024 * 1024, help="bytes (default 16 MiB)")
    p.add_argument("--timeout", type=float, default=30.0, help="per-request socket timeout in seconds")

    p = sub.add_parser("features", parents=[train_shared], help="dump SIFT keypoints as CSV")
    p.add_argument("--image", required=True)
    p.add_argument("--out", help="CSV path (default stdout)")
    return parser


def _params_for_training(args) -> PipelineParams:
    return PipelineParams().with_threshold(args.threshold)


def load_for_inference(path, threshold=None, tau=None):
    """Vocabulary, model and pipeline params from an archive, with optional overrides."""
    meta, vocab, model = load_archive(path)
    if model is None:
        raise UsageError(f"{path} holds only a vocabulary; run 'train' first")
    params = PipelineParams.from_dict(meta.get("params", {}))
    if threshold is not None:
        params = params.with_threshold(threshold)
    if tau is not None:
        model = model.with_tau(tau)
    return vocab, model, params


def cmd_build_vocab(args):
    params = _params_for_training(args)
    items, _ = list_training_images(args.input)
    features = extract_training_features(items, params)
    vocab = vocabulary_from_features(features, args.k, args.seed)
    save_vocabulary(vocab, args.out, params.to_dict())
    _report(args, {"k": vocab.k, "images": len(items), "descriptors": int(sum(len(f) for f in features)),
                   "out": str(args.out)})


def cmd_train(args):
    params = _params_for_training(args)
    items, names = list_training_images(args.input)
    features = extract_training_features(items, params)
    if args.vocab:
        vocab = load_vocabulary(args.vocab)
    else:
        vocab = vocabulary_from_features(features, args.k, args.seed)
    tau = 0.0 if args.tau is None else args.tau
    model = train_model(features, [n for _, n in items], names, vocab, C=args.c, tau=tau, seed=args.seed)
    save_model(vocab, model, args.out, params.to_dict())
    _report(args, {"k": vocab.k, "classes": list(names), "images": len(items), "out": str(args.out)})


def cmd_crop(args):
    img = read_image(args.image)
    smap = compute_saliency(img)
    crops = extract_crops(img, smap, CropParams(threshold=args.threshold, max_crops=args.max_crops))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    entries = []
    for i, crop in enumerate(crops):
        name = f"{stem}_crop{i}.png"
        (out_dir / name).write_bytes(encode_png(img.crop(*crop.box).data))
        entries.append({
            "file": name,
            "box": {"x": crop.x, "y": crop.y, "w": crop.width, "h": crop.height},
            "peak": {"x": crop.peak.x, "y": crop.peak.y, "value": crop.peak.value},
        })
    if args.saliency_png:
        Path(args.saliency_png).write_bytes(encode_png(smap.values))
    manifest = canonical_json({"image": Path(args.image).name, "crops": entries})
    (out_dir / f"{stem}_crops.json").write_text(manifest + "\n")
    if args.json:
        print(manifest)
    else:
        print(f"{len(entries)} crop(s) written to {out_dir}")


def cmd_analyze(args):
    vocab, model, params = load_for_inference(args.model, args.threshold, args.tau)
    data = Path(args.image).read_bytes()
    result = analyze_bytes(data, vocab, model, params)
    if args.json:
        sys.stdout.write(result.to_json() + "\n")
        return
    for crop, label, score in result.crops:
        score_txt = "n/a" if score is None else f"{score:.3f}"
        print(f"{crop.x},{crop.y} {crop.width}x{crop.height}  {label.name}  score={score_txt}")
    print("counts: " + ", ".join(f"{k}={v}" for k, v in result.counts.items()))


def cmd_evaluate(args):
    vocab, model, params = load_for_inference(args.model, args.threshold, args.tau)
    rep = evaluate(model, vocab, args.manifest, params)
    doc = canonical_json(rep.to_dict())
    if args.out:
        Path(args.out).write_text(doc + "\n")
    if args.json:
        print(doc)
        return
    c, pct = rep.counts, rep.to_dict()["percent"]
    print(f"tests={c.tests} tp={c.tp} fp={c.fp} ({pct['fp']}%) fn={c.fn_} ({pct['fn']}%)")
    print(f"accuracy={pct['accuracy']}% precision={pct['precision']}% recall={pct['recall']}%")


def cmd_serve(args):
    from .service import ServiceConfig, serve

    if not args.model:
        raise UsageError("--model or SALIENTCROP_MODEL is required")
    host, _, port = args.bind.rpartition(":")
    if not port.isdigit():
        raise UsageError(f"bad --bind {args.bind!r}, expected host:port")
    config = ServiceConfig(host or "127.0.0.1", int(port), args.model, threshold=args.threshold, tau=args.tau,
                           max_upload_bytes=args.max_upload, timeout=args.timeout)
    serve(config)


def cmd_features(args):
    img = read_image(args.image)
    keypoints = detect_keypoints(to_grayscale(img))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["x", "y", "scale", "orientation", "response"])
        for kp in keypoints:
            writer.writerow([f"{kp.x:.4f}", f"{kp.y:.4f}", f"{kp.scale:.4f}", f"{kp.orientation:.6f}",
                             f"{kp.response:.6g}"])
    finally:
        if args.out:
            out.close()


def _report(args, info: dict):
    if args.json:
        print(json.dumps(info, sort_keys=True))
    else:
        print(", ".join(f"{k}={v}" for k, v in info.items()))


COMMANDS = {
    "build-vocab": cmd_build_vocab,
    "train": cmd_train,
    "crop": cmd_crop,
    "analyze": cmd_analyze,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
    "features": cmd_features,
}


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (SalientCropError, UsageError, OSError, ValueError) as exc:
        print(f"salientcrop {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # noqa: BLE001
        logger.exception("internal error")
        return 2
    return 0


def main():
    sys.exit(run_command())
