"""Review text encoders and per-product aggregation of review vectors."""
from __future__ import annotations

import re
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils import murmurhash3_32
from sklearn.utils.validation import check_is_fitted

from .data import LABELS, FitLabel, Review, argmax_with_tiebreak
from .metrics import macro_f1_score
from .nn import Adam, DenseLayer, softmax, softmax_cross_entropy

DEFAULT_DIM = 768

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens with punctuation removed."""
    return _TOKEN.findall(text.casefold())


def _text_of(item) -> str:
    return item.text if isinstance(item, Review) else str(item)


def _unique_texts(texts: Sequence[str]) -> tuple[list[str], np.ndarray]:
    index: dict[str, int] = {}
    inverse = np.empty(len(texts), dtype=np.intp)
    for i, t in enumerate(texts):
        inverse[i] = index.setdefault(t, len(index))
    return list(index), inverse


class ReviewEncoder:
    """Maps reviews to fixed-width vectors.

    Subclasses implement ``_encode_texts`` (text-keyed encoders) or override
    ``encode_reviews`` (id-keyed encoders).
    """

    dim: int

    def encode(self, review) -> np.ndarray:
        return self.encode_reviews([review])[0]

    def encode_reviews(self, reviews: Sequence) -> np.ndarray:
        texts = [_text_of(r) for r in reviews]
        if not texts:
            return np.zeros((0, self.dim))
        uniq, inverse = _unique_texts(texts)
        return self._encode_texts(uniq)[inverse]

    def _encode_texts(self, texts: list[str]) -> np.ndarray:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


class HashingEncoder(ReviewEncoder, BaseEstimator, TransformerMixin):
    """Signed feature hashing of unigrams (and bigrams), L2-normalized.

    Stateless: ``fit`` only records the output width.
    """

    def __init__(self, dim: int = DEFAULT_DIM, n_grams: int = 2, salt: int = 0):
        self.dim = dim
        self.n_grams = n_grams
        self.salt = salt

    def fit(self, X=None, y=None):
        if self.n_grams not in (1, 2):
            raise ValueError("n_grams must be 1 or 2")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        self.n_features_out_ = self.dim
        return self

    def transform(self, X) -> np.ndarray:
        return self.encode_reviews(list(X))

    def grams(self, text: str) -> list[str]:
        tokens = tokenize(text)
        out = list(tokens)
        if self.n_grams == 2:
            out.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
        return out

    def raw_counts(self, text: str) -> np.ndarray:
        """Signed bucket counts before normalization."""
        v = np.zeros(self.dim)
        for g in self.grams(text):
            h = murmurhash3_32(g, seed=self.salt, positive=False)
            v[abs(h) % self.dim] += 1.0 if h >= 0 else -1.0
        return v

    def _encode_texts(self, texts: list[str]) -> np.ndarray:
        out = np.array([self.raw_counts(t) for t in texts]).reshape(len(texts), self.dim)
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out

    def descriptor(self) -> dict:
        return {"name": "hashing", "dim": self.dim, "n_grams": self.n_grams, "salt": self.salt}


class FitClassifierEncoder(ReviewEncoder, BaseEstimator, ClassifierMixin, TransformerMixin):
    """Review fit classifier whose hidden layer doubles as an embedding.

    Hashing features feed one ReLU layer of ``dim - 3`` units followed by a
    3-way softmax. ``transform`` returns the hidden activations concatenated
    with the class probabilities, so the output width is ``dim``.

    Parameters
    ----------
    dim : int
        Width of the produced review vectors.
    hash_dim : int
        Width of the hashing features fed to the classifier.
    learning_rate, batch_size, max_epochs :
        Adam settings for training.
    validation_fraction : float
        Share of reviews held out (stratified) to report accuracy and macro-F1.
    random_state : int
        Seed for initialization, the held-out split and batch order.
    """

    def __init__(self, dim: int = DEFAULT_DIM, hash_dim: int = DEFAULT_DIM, n_grams: int = 2,
                 salt: int = 0, learning_rate: float = 0.01, batch_size: int = 256,
                 max_epochs: int = 4, validation_fraction: float = 0.1, random_state: int = 0):
        self.dim = dim
        self.hash_dim = hash_dim
        self.n_grams = n_grams
        self.salt = salt
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    @property
    def hasher(self) -> HashingEncoder:
        return HashingEncoder(self.hash_dim, self.n_grams, self.salt).fit()

    def _init_layers(self, rng):
        if self.dim < 4:
            raise ValueError("dim must be at least 4 (hidden units plus 3 probabilities)")
        self.hidden_ = DenseLayer.initialize(self.hash_dim, self.dim - 3, "relu", rng)
        self.output_ = DenseLayer.initialize(self.dim - 3, 3, "identity", rng)

    def parameters(self) -> dict[str, np.ndarray]:
        return {"hidden.weight": self.hidden_.weight, "hidden.bias": self.hidden_.bias,
                "output.weight": self.output_.weight, "output.bias": self.output_.bias}

    def fit(self, X, y):
        texts = [_text_of(x) for x in X]
        y = np.array([FitLabel(v).index if not isinstance(v, (int, np.integer)) else int(v)
                      for v in y], dtype=int)
        if len(texts) != len(y):
            raise ValueError("X and y lengths differ")
        missing = [LABELS[c].value for c in range(3) if not np.any(y == c)]
        if missing:
            raise ValueError(f"training reviews lack classes: {missing}")
        rng = np.random.default_rng(self.random_state)
        uniq, inverse = _unique_texts(texts)
        feats = self.hasher._encode_texts(uniq)

        train_ix, val_ix = [], []
        for c in range(3):
            ix = rng.permutation(np.flatnonzero(y == c))
            n_val = int(round(self.validation_fraction * len(ix)))
            if len(ix) - n_val < 1:
                n_val = len(ix) - 1
            val_ix.extend(ix[:n_val])
            train_ix.extend(ix[n_val:])
        train_ix = np.sort(np.array(train_ix, dtype=int))
        val_ix = np.sort(np.array(val_ix, dtype=int))

        self._init_layers(rng)
        params = self.parameters()
        opt = Adam(self.learning_rate)
        self.loss_curve_ = []
        for _ in range(self.max_epochs):
            order = rng.permutation(train_ix)
            total = 0.0
            for start in range(0, len(order), self.batch_size):
                b = order[start:start + self.batch_size]
                x = feats[inverse[b]]
                h, c1 = self.hidden_.forward(x)
                logits, c2 = self.output_.forward(h)
                loss, dlogits, _ = softmax_cross_entropy(logits, y[b])
                dh, g2 = self.output_.backward(dlogits, c2)
                _, g1 = self.hidden_.backward(dh, c1)
                grads = {f"hidden.{k}": v for k, v in g1.items()}
                grads.update({f"output.{k}": v for k, v in g2.items()})
                opt.step(params, grads)
                total += loss * len(b)
            self.loss_curve_.append(total / len(order))

        self.classes_ = np.arange(3)
        self.validation_accuracy_ = float("nan")
        self.validation_macro_f1_ = float("nan")
        if len(val_ix):
            pred = self.predict([texts[i] for i in val_ix])
            self.validation_accuracy_ = float(np.mean(pred == y[val_ix]))
            self.validation_macro_f1_ = macro_f1_score(y[val_ix], pred)
        return self

    def _forward_texts(self, texts: list[str]):
        check_is_fitted(self, "hidden_")
        x = self.hasher._encode_texts(texts)
        h, _ = self.hidden_.forward(x)
        logits, _ = self.output_.forward(h)
        return h, softmax(logits)

    def _encode_texts(self, texts: list[str]) -> np.ndarray:
        h, probs = self._forward_texts(texts)
        return np.hstack([h, probs])

    def predict_proba(self, X) -> np.ndarray:
        texts = [_text_of(x) for x in X]
        if not texts:
            return np.zeros((0, 3))
        uniq, inverse = _unique_texts(texts)
        return self._forward_texts(uniq)[1][inverse]

    def predict(self, X) -> np.ndarray:
        return argmax_with_tiebreak(self.predict_proba(X))

    def transform(self, X) -> np.ndarray:
        return self.encode_reviews(list(X))

    def classify(self, review) -> tuple[FitLabel, np.ndarray]:
        probs = self.predict_proba([review])[0]
        return FitLabel.from_index(argmax_with_tiebreak(probs)[0]), probs

    def descriptor(self) -> dict:
        return {"name": "fitclf", "dim": self.dim, "hash_dim": self.hash_dim,
                "n_grams": self.n_grams, "salt": self.salt}

    @classmethod
    def from_parameters(cls, descriptor: Mapping, tensors: Mapping[str, np.ndarray]):
        enc = cls(dim=descriptor["dim"], hash_dim=descriptor["hash_dim"],
                  n_grams=descriptor["n_grams"], salt=descriptor["salt"])
        enc.hidden_ = DenseLayer(tensors["hidden.weight"], tensors["hidden.bias"], "relu")
        enc.output_ = DenseLayer(tensors["output.weight"], tensors["output.bias"], "identity")
        enc.classes_ = np.arange(3)
        return enc


def train_fit_classifier(reviews: Iterable[Review], config: Mapping | None = None,
                         seed: int = 0) -> FitClassifierEncoder:
    """Train a fit classifier encoder on labeled reviews (unlabeled ones are skipped)."""
    labeled = [r for r in reviews if r.label is not None]
    enc = FitClassifierEncoder(**dict(config or {}), random_state=seed)
    return enc.fit([r.text for r in labeled], [r.label for r in labeled])


def classify_review(encoder: FitClassifierEncoder, review) -> tuple[FitLabel, np.ndarray]:
    return encoder.classify(review)


class PrecomputedEncoder(ReviewEncoder):
    """Vectors looked up by review id, e.g. from an external language model."""

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int, path: str | None = None):
        self.dim = int(dim)
        self.path = path
        self.vectors = {}
        for rid, v in vectors.items():
            v = np.asarray(v, dtype=np.float64)
            if v.shape != (self.dim,):
                raise ValueError(f"vector for {rid} has shape {v.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"vector for {rid} is not finite")
            self.vectors[rid] = v

    @classmethod
    def from_file(cls, path) -> "PrecomputedEncoder":
        return cls(*read_embeddings(path), path=str(path))

    def encode_reviews(self, reviews: Sequence[Review]) -> np.ndarray:
        out = np.zeros((len(reviews), self.dim))
        for i, r in enumerate(reviews):
            rid = r.review_id if isinstance(r, Review) else str(r)
            try:
                out[i] = self.vectors[rid]
            except KeyError:
                raise KeyError(f"no precomputed embedding for review {rid}") from None
        return out

    def descriptor(self) -> dict:
        return {"name": "precomputed", "dim": self.dim, "path": self.path}


def read_embeddings(path) -> tuple[dict[str, np.ndarray], int]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("dim="):
            raise ValueError(f"{path}: first line must be dim=<d>")
        dim = int(first[4:])
        if dim < 1:
            raise ValueError(f"{path}: dim must be positive")
        vectors = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
    return vectors, dim


def write_embeddings(vectors: Mapping[str, np.ndarray], dim: int, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"dim={dim}\n")
        for rid, v in vectors.items():
            fh.write(rid + "," + ",".join(repr(float(x)) for x in v) + "\n")


class ProductReviewIndex:
    """Review vectors grouped by product, encoded once."""

    def __init__(self, vectors_by_product: Mapping[str, np.ndarray], dim: int):
        self.dim = int(dim)
        self._vectors = {}
        self._means = {}
        for pid, vecs in vectors_by_product.items():
            vecs = np.array(vecs, dtype=np.float64).reshape(-1, self.dim)
            vecs.setflags(write=False)
            self._vectors[pid] = vecs
        self._zero = np.zeros(self.dim)
        self._zero.setflags(write=False)

    @classmethod
    def build(cls, encoder: ReviewEncoder, reviews: Sequence[Review]) -> "ProductReviewIndex":
        reviews = list(reviews)
        vecs = encoder.encode_reviews(reviews)
        grouped: dict[str, list[np.ndarray]] = {}
        for r, v in zip(reviews, vecs):
            grouped.setdefault(r.product_id, []).append(v)
        return cls(grouped, encoder.dim)

    def vectors(self, product_id: str) -> np.ndarray:
        return self._vectors.get(product_id, np.zeros((0, self.dim)))

    def aggregate(self, product_id: str) -> np.ndarray:
        """Mean review vector of a product; zeros when it has no reviews."""
        if product_id not in self._vectors:
            return self._zero
        if product_id not in self._means:
            self._means[product_id] = mean_vector(self._vectors[product_id])
        return self._means[product_id]

    def matrix(self, product_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.aggregate(p) for p in product_ids]).reshape(len(product_ids), self.dim)


def mean_vector(vecs: np.ndarray) -> np.ndarray:
    """Row mean computed in a canonical row order, so it ignores input order."""
    vecs = np.asarray(vecs, dtype=np.float64)
    if len(vecs) == 1:
        return vecs[0].copy()
    order = np.lexsort(vecs.T[::-1])
    mean = vecs[order].sum(axis=0) / len(vecs)
    mean.setflags(write=False)
    return mean


def aggregate(index: ProductReviewIndex, product_id: str) -> np.ndarray:
    return index.aggregate(product_id)
