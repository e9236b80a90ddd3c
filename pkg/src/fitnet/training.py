"""Training with fit resampling and best-epoch selection, evaluation and baselines."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .data import LABELS, DatasetSplit, DataStore, FitLabel, LabeledExample, Review, argmax_with_tiebreak
from .metrics import confusion_matrix, macro_f1_score, scores_from_confusion
from .model import FitNetClassifier, make_batch
from .reviews import (
    FitClassifierEncoder,
    HashingEncoder,
    PrecomputedEncoder,
    ProductReviewIndex,
    ReviewEncoder,
    train_fit_classifier,
)


@dataclass
class TrainConfig:
    batch_size: int = 2048
    learning_rate: float = 0.01
    max_epochs: int = 100
    seed: int = 0
    encoder: str = "hashing"
    use_reviews: bool = True

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or not self.learning_rate > 0:
            raise ValueError("batch_size, max_epochs and learning_rate must be positive")


# --------------------------------------------------------------------------
# Metrics


@dataclass
class EvalReport:
    confusion: np.ndarray
    split: str = ""
    model: str = ""
    precision: np.ndarray = field(init=False)
    recall: np.ndarray = field(init=False)
    f1: np.ndarray = field(init=False)

    def __post_init__(self):
        self.confusion = np.asarray(self.confusion, dtype=np.int64)
        self.precision, self.recall, self.f1 = scores_from_confusion(self.confusion)

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    @property
    def support(self) -> np.ndarray:
        return self.confusion.sum(axis=1)

    def to_json(self) -> dict:
        return {
            "split": self.split,
            "model": self.model,
            "confusion": self.confusion.tolist(),
            "per_class": {
                lab.value: {"precision": float(self.precision[i]), "recall": float(self.recall[i]),
                            "f1": float(self.f1[i]), "support": int(self.support[i])}
                for i, lab in enumerate(LABELS)
            },
            "macro_f1": self.macro_f1,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        lines = [f"model: {self.model}   split: {self.split}",
                 f"{'class':<8}{'precision':>11}{'recall':>9}{'f1':>9}{'support':>9}"]
        for i, lab in enumerate(LABELS):
            lines.append(f"{lab.value:<8}{self.precision[i]:>11.4f}{self.recall[i]:>9.4f}"
                         f"{self.f1[i]:>9.4f}{int(self.support[i]):>9d}")
        lines.append(f"macro-F1 {self.macro_f1:.4f}")
        lines.append("confusion (rows true, cols predicted; small fit large)")
        for i, lab in enumerate(LABELS):
            lines.append(f"{lab.value:<8}" + "".join(f"{c:>9d}" for c in self.confusion[i]))
        return "\n".join(lines)


@dataclass
class ComparisonReport:
    baseline_macro_f1: float
    candidate_macro_f1: float

    @property
    def relative_improvement(self) -> float:
        """Improvement of candidate over baseline, in percent of the baseline."""
        return relative_improvement(self.baseline_macro_f1, self.candidate_macro_f1)

    def to_json(self) -> dict:
        return {"baseline_macro_f1": self.baseline_macro_f1,
                "candidate_macro_f1": self.candidate_macro_f1,
                "relative_improvement_pct": self.relative_improvement}

    def to_table(self) -> str:
        return (f"baseline  macro-F1 {self.baseline_macro_f1:.4f}\n"
                f"candidate macro-F1 {self.candidate_macro_f1:.4f}\n"
                f"relative improvement {self.relative_improvement:+.2f}%")


def relative_improvement(baseline: float, candidate: float) -> float:
    if baseline == 0:
        raise ValueError("baseline macro-F1 is zero; relative improvement undefined")
    return (candidate - baseline) / baseline * 100.0


def compare(baseline: EvalReport, candidate: EvalReport) -> ComparisonReport:
    if baseline.split != candidate.split or not np.array_equal(baseline.support, candidate.support):
        raise ValueError("reports were computed on different splits")
    return ComparisonReport(baseline.macro_f1, candidate.macro_f1)


# --------------------------------------------------------------------------
# Encoders and review index


def make_encoder(spec: str, store: DataStore | None = None, seed: int = 0,
                 dim: int = 768, fitclf_params: dict | None = None) -> ReviewEncoder:
    """Encoder from a CLI-style spec: hashing, fitclf or precomputed=<file>."""
    if spec == "hashing":
        return HashingEncoder(dim=dim).fit()
    if spec == "fitclf":
        if store is None:
            raise ValueError("the fit-classifier encoder needs labeled reviews to train on")
        params = {"dim": dim, **(fitclf_params or {})}
        return train_fit_classifier(store.reviews, params, seed=seed)
    if spec.startswith("precomputed="):
        return PrecomputedEncoder.from_file(spec.split("=", 1)[1])
    raise ValueError(f"unknown encoder {spec!r}; expected hashing, fitclf or precomputed=<file>")


def encoder_from_descriptor(desc: dict, tensors: dict | None = None,
                            override: str | None = None) -> ReviewEncoder | None:
    """Rebuild the encoder recorded in a model file."""
    name = desc.get("name")
    if name == "none":
        return None
    if override and override.startswith("precomputed="):
        return make_encoder(override)
    if name == "hashing":
        return HashingEncoder(desc["dim"], desc["n_grams"], desc["salt"]).fit()
    if name == "fitclf":
        return FitClassifierEncoder.from_parameters(desc, tensors or {})
    if name == "precomputed":
        if not desc.get("path"):
            raise ValueError("model used precomputed embeddings but no file is known")
        return PrecomputedEncoder.from_file(desc["path"])
    raise ValueError(f"unknown encoder descriptor {desc!r}")


def encoder_tensors(encoder: ReviewEncoder | None) -> dict[str, np.ndarray]:
    if isinstance(encoder, FitClassifierEncoder):
        return dict(encoder.parameters())
    return {}


# --------------------------------------------------------------------------
# Training


@dataclass
class TrainingLog:
    records: list

    def to_csv(self) -> str:
        lines = ["epoch,loss,val_macro_f1"]
        lines += [f"{r.epoch},{r.loss!r},{r.val_macro_f1!r}" for r in self.records]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def train(config: TrainConfig, split: DatasetSplit, store: DataStore,
          encoder: ReviewEncoder | None = None, index: ProductReviewIndex | None = None,
          **model_params) -> tuple[FitNetClassifier, TrainingLog]:
    """Fit a model on ``split.train`` selecting the epoch by validation macro-F1."""
    if config.use_reviews and index is None:
        if encoder is None:
            raise ValueError("review pathway enabled but no encoder given")
        index = ProductReviewIndex.build(encoder, store.reviews)
    if not config.use_reviews:
        index = None
    model = FitNetClassifier(
        schema=store.schema,
        review_dim=index.dim if index is not None else 0,
        use_reviews=config.use_reviews,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        max_epochs=config.max_epochs,
        random_state=config.seed,
        **model_params,
    )
    X = make_batch(split.train, store, index)
    X_val = make_batch(split.validation, store, index)
    model.fit(X, split.train, eval_set=(X_val, split.validation))
    return model, TrainingLog(model.history_)


Predictor = Callable[[Sequence[LabeledExample]], np.ndarray]


def evaluate(model: FitNetClassifier | Predictor, examples: Sequence[LabeledExample],
             store: DataStore, index: ProductReviewIndex | None = None,
             split: str = "", name: str = "") -> EvalReport:
    if not examples:
        raise ValueError("cannot evaluate on an empty example list")
    y_true = np.array([e.label.index for e in examples])
    if isinstance(model, FitNetClassifier):
        pred = model.predict(make_batch(examples, store, index if model.use_reviews else None))
        name = name or ("fitnet" if model.use_reviews else "fitnet-no-reviews")
    else:
        pred = np.asarray(model(examples), dtype=int)
    return EvalReport(confusion_matrix(y_true, pred), split=split, model=name)


# --------------------------------------------------------------------------
# Only-Reviews baseline


def only_reviews_predict(classifier: FitClassifierEncoder, reviews: Sequence[Review]) -> FitLabel:
    """Majority vote of per-review predictions for one product.

    Ties go to the label with the larger summed probability, then
    fit > small > large. A product without reviews is predicted fit.
    """
    if not reviews:
        return FitLabel.FIT
    probs = classifier.predict_proba(list(reviews))
    labels = argmax_with_tiebreak(probs)
    return vote(labels, probs.sum(axis=0))


def vote(labels: Sequence[int], prob_sums: Sequence[float]) -> FitLabel:
    counts = Counter(int(x) for x in labels)
    top = max(counts.values())
    tied = [c for c in range(3) if counts.get(c, 0) == top]
    # fit > small > large as the final tie-break
    priority = {1: 0, 0: 1, 2: 2}
    best = min(tied, key=lambda c: (-prob_sums[c], priority[c]))
    return FitLabel.from_index(best)


class OnlyReviewsPredictor:
    """Predicts every purchase of a product by majority vote over its reviews."""

    def __init__(self, classifier: FitClassifierEncoder, store: DataStore):
        self.classifier = classifier
        self.by_product = store.reviews_by_product()
        self._cache: dict[str, int] = {}

    def product_label(self, product_id: str) -> FitLabel:
        if product_id not in self._cache:
            label = only_reviews_predict(self.classifier, self.by_product.get(product_id, []))
            self._cache[product_id] = label.index
        return FitLabel.from_index(self._cache[product_id])

    def __call__(self, examples: Sequence[LabeledExample]) -> np.ndarray:
        return np.array([self.product_label(e.product_id).index for e in examples], dtype=int)
