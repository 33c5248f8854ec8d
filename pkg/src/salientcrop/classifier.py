"""One-vs-all linear SVM over visual-word histograms, with a no-class rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidArgument, MissingClass

NO_CLASS = -1
NO_CLASS_NAME = "no-class"
DEFAULT_LABELS = ("flowers", "baby", "dog", "car", "painting", "bicycle", "bird", "bottle", "lamp", "fish")
EPOCHS = 200


@dataclass(frozen=True)
class ClassLabel:
    id: int
    name: str

    @property
    def is_no_class(self) -> bool:
        return self.id == NO_CLASS


NO_CLASS_LABEL = ClassLabel(NO_CLASS, NO_CLASS_NAME)


@dataclass(frozen=True, eq=False)
class SvmModel:
    """``weights`` is ``(M, k)`` float32, ``biases`` is ``(M,)`` float32."""

    weights: np.ndarray
    biases: np.ndarray
    labels: tuple[str, ...]
    tau: float = 0.0
    C: float = 1.0

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.shape[0] < 2:
            raise InvalidArgument("need at least 2 classes")
        if self.biases.shape != (self.weights.shape[0],) or len(self.labels) != self.weights.shape[0]:
            raise DimensionMismatch("weights, biases and labels disagree on the class count")

    @property
    def M(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    def label(self, class_id: int) -> ClassLabel:
        if class_id == NO_CLASS:
            return NO_CLASS_LABEL
        return ClassLabel(class_id, self.labels[class_id])

    def label_by_name(self, name: str) -> ClassLabel:
        if name == NO_CLASS_NAME:
            return NO_CLASS_LABEL
        try:
            return ClassLabel(self.labels.index(name), name)
        except ValueError:
            raise InvalidArgument(f"unknown class {name!r}") from None

    def with_tau(self, tau: float) -> SvmModel:
        return SvmModel(self.weights, self.biases, self.labels, float(tau), self.C)


@dataclass(frozen=True, eq=False)
class Prediction:
    label: ClassLabel
    scores: np.ndarray

    @property
    def best_score(self) -> float:
        return float(self.scores.max())


def _bins(h) -> np.ndarray:
    return np.asarray(getattr(h, "bins", h), dtype=np.float64)


def _class_ids(labels, names) -> np.ndarray:
    ids = []
    for lab in labels:
        if isinstance(lab, ClassLabel):
            ids.append(lab.id)
        elif isinstance(lab, str):
            if lab not in names:
                raise InvalidArgument(f"unknown class {lab!r}")
            ids.append(names.index(lab))
        else:
            ids.append(int(lab))
    ids = np.asarray(ids, dtype=np.int64)
    if np.any(ids == NO_CLASS):
        raise InvalidArgument("no-class examples cannot be used for training")
    if np.any((ids < 0) | (ids >= len(names))):
        raise InvalidArgument("class id outside the label table")
    return ids


def hinge_objective(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, lam: float) -> float:
    margins = y * (x @ w + b)
    return 0.5 * lam * float(w @ w + b * b) + float(np.maximum(0.0, 1.0 - margins).mean())


def train_binary(x: np.ndarray, y: np.ndarray, lam: float, order: np.ndarray, epochs: int = EPOCHS,
                 history: list | None = None) -> tuple[np.ndarray, float]:
    """Pegasos subgradient descent on the L2-regularized hinge loss.

    The bias is an extra weight on a constant feature and is regularized
    with the rest. ``order`` fixes the visit order used in every epoch; step
    size at update ``t`` is ``1 / (lam * t)``.
    """
    n, dim = x.shape
    w = np.zeros(dim)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (x[i] @ w + b)
            w *= 1.0 - eta * lam
            b *= 1.0 - eta * lam
            if margin < 1.0:
                w += (eta * y[i]) * x[i]
                b += eta * y[i]
        if history is not None:
            history.append(hinge_objective(w, b, x, y, lam))
    return w, b


def train(histograms, labels, label_names=DEFAULT_LABELS, C: float = 1.0, seed: int = 42,
          tau: float = 0.0, epochs: int = EPOCHS) -> SvmModel:
    """One-vs-all training; class ``i`` positives against all other classes.

    ``labels`` may be class ids, class names or :class:`ClassLabel` values.
    The regularization weight is ``lambda = 1 / (C * n)``.
    """
    names = tuple(label_names)
    x = np.asarray([_bins(h) for h in histograms], dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise DimensionMismatch("histograms must share one dimension")
    if C <= 0:
        raise InvalidArgument("C must be positive")
    ids = _class_ids(labels, names)
    if len(ids) != len(x):
        raise DimensionMismatch("one label per histogram required")
    missing = [names[i] for i in range(len(names)) if not np.any(ids == i)]
    if missing:
        raise MissingClass(f"no training examples for: {', '.join(missing)}")

    n = len(x)
    lam = 1.0 / (C * n)
    order = np.random.default_rng(seed).permutation(n)
    weights = np.zeros((len(names), x.shape[1]))
    biases = np.zeros(len(names))
    for cls in range(len(names)):
        y = np.where(ids == cls, 1.0, -1.0)
        weights[cls], biases[cls] = train_binary(x, y, lam, order, epochs)
    return SvmModel(weights.astype(np.float32), biases.astype(np.float32), names, float(tau), float(C))


def decision_scores(model: SvmModel, h) -> np.ndarray:
    bins = _bins(h)
    if bins.shape[-1] != model.k:
        raise DimensionMismatch(f"histogram dimension {bins.shape[-1]} != {model.k}")
    return bins @ model.weights.T.astype(np.float64) + model.biases.astype(np.float64)


def predict(model: SvmModel, h) -> Prediction:
    """Argmax class (lowest id on ties), or no-class when every score is below tau."""
    scores = decision_scores(model, h)
    best = int(np.argmax(scores))
    if scores[best] < model.tau:
        return Prediction(NO_CLASS_LABEL, scores)
    return Prediction(model.label(best), scores)
