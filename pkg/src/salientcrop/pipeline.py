"""End-to-end orchestration: saliency crops, SIFT, visual words, SVM labels."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import classifier
from .classifier import NO_CLASS_LABEL, ClassLabel, SvmModel
from .cropper import CropParams, CropRegion, extract_crops, saliency_bounding_box
from .errors import InvalidArgument, NoFeatures
from .imaging import GrayImage, RasterImage, decode_image, encode_png, read_image, resize_bilinear, to_grayscale
from .saliency import SaliencyParams, compute_saliency
from .sift import SiftParams, detect_and_describe
from .vocab import Vocabulary, build_vocabulary, histogram

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@dataclass(frozen=True)
class PipelineParams:
    """Settings shared by training, evaluation and analysis.

    Regions whose shorter side is below ``min_classify_px`` are upscaled
    before feature extraction.
    """

    saliency: SaliencyParams = field(default_factory=SaliencyParams)
    crop: CropParams = field(default_factory=CropParams)
    sift: SiftParams = field(default_factory=SiftParams)
    min_classify_px: int = 128

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> PipelineParams:
        if not data:
            return cls()
        sal = dict(data.get("saliency", {}))
        for key in ("center_levels", "surround_offsets", "channel_weights"):
            if key in sal:
                sal[key] = tuple(sal[key])
        return cls(
            saliency=SaliencyParams(**sal),
            crop=CropParams(**data.get("crop", {})),
            sift=SiftParams(**data.get("sift", {})),
            min_classify_px=int(data.get("min_classify_px", 128)),
        )

    def with_threshold(self, threshold: float) -> PipelineParams:
        return replace(self, crop=replace(self.crop, threshold=threshold))


def region_descriptors(region: RasterImage, params: PipelineParams) -> np.ndarray:
    gray = to_grayscale(region).data
    short = min(gray.shape)
    if short < params.min_classify_px:
        scale = params.min_classify_px / short
        gray = resize_bilinear(gray, math.ceil(gray.shape[0] * scale), math.ceil(gray.shape[1] * scale))
    _, desc = detect_and_describe(GrayImage(gray), params.sift)
    return desc


def classify_region(region: RasterImage, vocab: Vocabulary, model: SvmModel,
                    params: PipelineParams) -> tuple[ClassLabel, float | None]:
    """Label and best decision score; regions without features are no-class with score None."""
    try:
        hist = histogram(vocab, region_descriptors(region, params))
    except NoFeatures:
        return NO_CLASS_LABEL, None
    pred = classifier.predict(model, hist)
    return pred.label, pred.best_score


def training_region(img: RasterImage, params: PipelineParams) -> RasterImage:
    """Bounding box of the thresholded saliency map (whole frame when nothing passes)."""
    smap = compute_saliency(img, params.saliency)
    x, y, w, h = saliency_bounding_box(smap, params.crop.threshold)
    return img.crop(x, y, w, h)


def classify_image(img: RasterImage, vocab: Vocabulary, model: SvmModel, params: PipelineParams):
    return classify_region(training_region(img, params), vocab, model, params)


@dataclass
class AnalysisResult:
    image_id: str
    crops: list[tuple[CropRegion, ClassLabel, float | None]]
    counts: dict[str, int]
    crop_images: list[RasterImage] = field(default_factory=list, repr=False)

    def to_dict(self, with_png: bool = False) -> dict:
        entries = []
        for i, (crop, label, score) in enumerate(self.crops):
            entry = {
                "box": {"x": crop.x, "y": crop.y, "w": crop.width, "h": crop.height},
                "label": label.name,
                "score": score,
            }
            if with_png:
                import base64

                entry["png"] = base64.b64encode(encode_png(self.crop_images[i].data)).decode("ascii")
            entries.append(entry)
        return {"image_id": self.image_id, "crops": entries, "counts": dict(self.counts)}

    def to_json(self, with_png: bool = False) -> str:
        return canonical_json(self.to_dict(with_png))


def _round_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise InvalidArgument("non-finite value in output")
        return float(format(obj, ".6g"))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, compact separators, floats at 6 significant digits."""
    return json.dumps(_round_floats(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def image_id_for(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def analyze_image(img: RasterImage, vocab: Vocabulary, model: SvmModel,
                  params: PipelineParams | None = None, image_id: str = "") -> AnalysisResult:
    """Saliency crops, each labelled, plus per-label instance counts.

    Without ``image_id`` the id is hashed from the decoded pixel buffer.
    """
    params = params or PipelineParams()
    if vocab.k != model.k:
        raise InvalidArgument(f"vocabulary has {vocab.k} words, model expects {model.k}")
    smap = compute_saliency(img, params.saliency)
    crops = extract_crops(img, smap, params.crop)
    labelled, images = [], []
    for crop in crops:
        region = img.crop(*crop.box)
        label, score = classify_region(region, vocab, model, params)
        labelled.append((crop, label, score))
        images.append(region)
    counts = Counter(label.name for _, label, _ in labelled)
    return AnalysisResult(image_id or image_id_for(img.data.tobytes()), labelled, dict(sorted(counts.items())), images)


def analyze_bytes(data: bytes, vocab: Vocabulary, model: SvmModel, params: PipelineParams | None = None):
    return analyze_image(decode_image(data), vocab, model, params, image_id_for(data))


def list_training_images(root) -> tuple[list[tuple[Path, str]], tuple[str, ...]]:
    """``(path, class_name)`` pairs from one subdirectory per class."""
    root = Path(root)
    if not root.is_dir():
        raise InvalidArgument(f"{root} is not a directory")
    classes = sorted(p.name for p in root.iterdir() if p.is_dir() and p.name != classifier.NO_CLASS_NAME)
    if set(classes) == set(classifier.DEFAULT_LABELS):
        classes = list(classifier.DEFAULT_LABELS)
    items = []
    for name in classes:
        for path in sorted((root / name).iterdir()):
            if path.suffix.lower() in IMAGE_SUFFIXES:
                items.append((path, name))
    if len(classes) < 2:
        raise InvalidArgument(f"{root} needs at least two class subdirectories")
    return items, tuple(classes)


def extract_training_features(items, params: PipelineParams) -> list[np.ndarray]:
    feats = []
    for path, _ in items:
        img = read_image(path) if isinstance(path, (str, Path)) else path
        feats.append(region_descriptors(training_region(img, params), params))
    return feats


def vocabulary_from_features(features, k: int, seed: int) -> Vocabulary:
    stacked = [f for f in features if len(f)]
    if not stacked:
        raise NoFeatures("training images produced no descriptors")
    return build_vocabulary(np.vstack(stacked), k, seed)


def train_model(features, labels, label_names, vocab: Vocabulary, C: float = 1.0, tau: float = 0.0,
                seed: int = 42) -> SvmModel:
    """Fit the SVM on word histograms; images without descriptors are skipped."""
    hists, kept = [], []
    for desc, label in zip(features, labels):
        if len(desc) == 0:
            logger.warning("skipping a training image with no descriptors (%s)", label)
            continue
        hists.append(histogram(vocab, desc))
        kept.append(label)
    return classifier.train(hists, kept, label_names, C=C, seed=seed, tau=tau)
