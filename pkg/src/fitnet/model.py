"""Three-pathway residual network for size-and-fit prediction.

Customer features, product features and the mean review vector of the
product each pass through their own stack of residual blocks; the three
10-wide embeddings are concatenated (customer, product, review) and fed to a
combined residual stack ending in a 3-logit dense layer.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .data import (
    LABELS,
    UNKNOWN,
    Customer,
    DataStore,
    FeatureSchema,
    FitLabel,
    LabeledExample,
    Product,
    SchemaError,
    argmax_with_tiebreak,
    resample_fit_indices,
)
from .metrics import macro_f1_score
from .nn import Adam, DenseLayer, ResidualBlock, ShapeError, Stack, softmax, softmax_cross_entropy

MAGIC = b"FITNET1"
FORMAT_VERSION = 1
PREDICT_CHUNK = 8192

RECOMMENDATIONS = {
    FitLabel.SMALL: "buy one size large",
    FitLabel.LARGE: "buy one size small",
    FitLabel.FIT: "",
}


class ModelFormatError(ValueError):
    """Model file is truncated, corrupt or of an unsupported version."""


class SchemaMismatchError(ValueError):
    """Model was trained against a different feature schema."""


def recommendation_text(label: FitLabel) -> str:
    return RECOMMENDATIONS[FitLabel(label)]


@dataclass(frozen=True)
class Prediction:
    probabilities: tuple[float, float, float]
    label: FitLabel
    recommendation_text: str

    @classmethod
    def from_probabilities(cls, probs) -> "Prediction":
        probs = np.asarray(probs, dtype=np.float64)
        label = FitLabel.from_index(argmax_with_tiebreak(probs)[0])
        return cls(tuple(float(p) for p in probs), label, recommendation_text(label))


# --------------------------------------------------------------------------
# Inputs


@dataclass
class FitBatch:
    """Raw feature columns for a batch of (customer, product) pairs.

    Review vectors are held as one row per distinct product in
    ``review_table`` and gathered through ``review_rows``.
    """

    columns: dict[str, np.ndarray]
    review_table: np.ndarray | None = None
    review_rows: np.ndarray | None = None

    def __len__(self) -> int:
        return len(next(iter(self.columns.values())))

    @property
    def reviews(self) -> np.ndarray | None:
        if self.review_table is None:
            return None
        return self.review_table[self.review_rows]

    def take(self, idx) -> "FitBatch":
        idx = np.asarray(idx)
        cols = {k: v[idx] for k, v in self.columns.items()}
        rows = None if self.review_rows is None else self.review_rows[idx]
        return FitBatch(cols, self.review_table, rows)


def make_batch(pairs: Sequence, store: DataStore, index=None) -> FitBatch:
    """Build a batch from LabeledExamples or (customer_id, product_id) pairs.

    ``index`` is a ProductReviewIndex; without it the batch carries no
    review vectors.
    """
    cids, pids = [], []
    for p in pairs:
        if isinstance(p, LabeledExample):
            cids.append(p.customer_id)
            pids.append(p.product_id)
        else:
            cids.append(p[0])
            pids.append(p[1])
    try:
        custs = [store.customers[c] for c in cids]
    except KeyError as exc:
        raise KeyError(f"unknown customer_id {exc.args[0]}") from None
    try:
        prods = [store.products[p] for p in pids]
    except KeyError as exc:
        raise KeyError(f"unknown product_id {exc.args[0]}") from None
    columns = {}
    for f in store.schema.features:
        ents = custs if f.owner == "customer" else prods
        vals = [e.values[f.name] for e in ents]
        columns[f.name] = np.array(vals, dtype=object if f.categorical else np.float64)
    if index is None:
        return FitBatch(columns)
    uniq = list(dict.fromkeys(pids))
    pos = {p: i for i, p in enumerate(uniq)}
    table = index.matrix(uniq)
    return FitBatch(columns, table, np.array([pos[p] for p in pids], dtype=np.intp))


def encode_labels(y) -> np.ndarray:
    out = []
    for v in y:
        if isinstance(v, (int, np.integer)):
            if not 0 <= v < 3:
                raise ValueError(f"label index {v} out of range")
            out.append(int(v))
        elif isinstance(v, LabeledExample):
            out.append(v.label.index)
        else:
            out.append(FitLabel(v).index)
    return np.array(out, dtype=int)


# --------------------------------------------------------------------------
# Network


def _rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8"))])


def _seeded_stack(widths, seed: int, prefix: str) -> Stack:
    # one generator per block, so a block's init does not depend on its neighbours' shapes
    widths = list(widths)
    return Stack([ResidualBlock.initialize(a, b, _rng_for(seed, f"{prefix}.{i}"))
                  for i, (a, b) in enumerate(zip(widths, widths[1:]))])


class FitNetwork:
    """Parameters and hand-derived forward/backward passes of the network."""

    def __init__(self, schema: FeatureSchema, review_dim: int, pathway_widths=(25, 15, 10),
                 combined_widths=(50, 100, 200, 500), seed: int = 0):
        self.schema = schema
        self.review_dim = int(review_dim)
        self.pathway_widths = tuple(pathway_widths)
        self.combined_widths = tuple(combined_widths)
        self.embeddings = {
            f.name: _rng_for(seed, f"embedding.{f.name}").uniform(
                -0.05, 0.05, size=(len(f.vocabulary) + 1, f.embedding_dim))
            for f in schema.features if f.categorical
        }
        self.vocab_index = {
            f.name: {v: i for i, v in enumerate(f.vocabulary)}
            for f in schema.features if f.categorical
        }
        self.numeric_mean = {f.name: np.zeros(1) for f in schema.features if not f.categorical}
        self.numeric_std = {f.name: np.ones(1) for f in schema.features if not f.categorical}
        self.pathways: dict[str, Stack] = {}
        for owner in ("customer", "product"):
            width = sum(f.width for f in schema.owned_by(owner))
            self.pathways[owner] = _seeded_stack((width, *self.pathway_widths), seed, owner)
        if self.review_dim > 0:
            self.pathways["review"] = _seeded_stack((self.review_dim, *self.pathway_widths),
                                                    seed, "review")
        combined_in = len(self.pathways) * self.pathway_widths[-1]
        self.combined = _seeded_stack((combined_in, *self.combined_widths), seed, "combined")
        self.head = DenseLayer.initialize(self.combined_widths[-1], 3, "identity",
                                          _rng_for(seed, "head"))

    @property
    def uses_reviews(self) -> bool:
        return "review" in self.pathways

    @property
    def combined_in_dim(self) -> int:
        return self.combined.in_dim

    def parameters(self) -> dict[str, np.ndarray]:
        """Trainable arrays by name; updating them in place updates the network."""
        params = {f"embedding.{k}": v for k, v in self.embeddings.items()}
        for owner, stack in self.pathways.items():
            params.update({f"{owner}.{k}": v for k, v in stack.parameters().items()})
        params.update({f"combined.{k}": v for k, v in self.combined.parameters().items()})
        params.update({f"head.{k}": v for k, v in self.head.parameters().items()})
        return params

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for name in self.numeric_mean:
            out[f"stats.{name}.mean"] = self.numeric_mean[name]
            out[f"stats.{name}.std"] = self.numeric_std[name]
        return out

    def set_numeric_stats(self, columns: Mapping[str, np.ndarray]) -> None:
        for name in self.numeric_mean:
            x = np.asarray(columns[name], dtype=np.float64)
            std = float(x.std()) if len(x) else 1.0
            self.numeric_mean[name][0] = float(x.mean()) if len(x) else 0.0
            self.numeric_std[name][0] = std if std >= 1e-8 else 1.0

    def encode_columns(self, columns: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Category strings to embedding rows (UNKNOWN gets the last row)."""
        out = {}
        for f in self.schema.features:
            if f.name not in columns:
                raise SchemaError(f"missing feature {f.name}")
            col = columns[f.name]
            if f.categorical:
                lookup = self.vocab_index[f.name]
                unk = len(lookup)
                out[f.name] = np.fromiter((lookup.get(v, unk) for v in col), dtype=np.intp,
                                          count=len(col))
            else:
                out[f.name] = np.asarray(col, dtype=np.float64)
        return out

    def _preprocess(self, owner: str, coded: Mapping[str, np.ndarray]) -> np.ndarray:
        parts = []
        for f in self.schema.owned_by(owner):
            x = coded[f.name]
            if f.categorical:
                parts.append(self.embeddings[f.name][x])
            else:
                z = (x - self.numeric_mean[f.name][0]) / self.numeric_std[f.name][0]
                parts.append(z[:, None])
        return np.hstack(parts)

    def forward(self, coded: Mapping[str, np.ndarray], reviews: np.ndarray | None = None):
        n = len(next(iter(coded.values())))
        caches = {}
        embeddings = []
        for owner in ("customer", "product"):
            h = self._preprocess(owner, coded)
            e, caches[owner] = self.pathways[owner].forward(h)
            embeddings.append(e)
        if self.uses_reviews:
            if reviews is None:
                raise ShapeError("network expects review vectors")
            reviews = np.asarray(reviews, dtype=np.float64).reshape(n, -1)
            if reviews.shape[1] != self.review_dim:
                raise ShapeError(f"review vectors have width {reviews.shape[1]}, "
                                 f"expected {self.review_dim}")
            e, caches["review"] = self.pathways["review"].forward(reviews)
            embeddings.append(e)
        e = np.hstack(embeddings)
        z, caches["combined"] = self.combined.forward(e)
        logits, caches["head"] = self.head.forward(z)
        caches["coded"] = coded
        return logits, caches

    def backward(self, dlogits: np.ndarray, caches) -> dict[str, np.ndarray]:
        grads = {}
        dz, g = self.head.backward(dlogits, caches["head"])
        grads.update({f"head.{k}": v for k, v in g.items()})
        de, g = self.combined.backward(dz, caches["combined"])
        grads.update({f"combined.{k}": v for k, v in g.items()})
        width = self.pathway_widths[-1]
        owners = list(self.pathways)
        for i, owner in enumerate(owners):
            dh, g = self.pathways[owner].backward(de[:, i * width:(i + 1) * width], caches[owner])
            grads.update({f"{owner}.{k}": v for k, v in g.items()})
            if owner == "review":
                continue
            col = 0
            for f in self.schema.owned_by(owner):
                if f.categorical:
                    ge = np.zeros_like(self.embeddings[f.name])
                    np.add.at(ge, caches["coded"][f.name], dh[:, col:col + f.embedding_dim])
                    grads[f"embedding.{f.name}"] = ge
                col += f.width
        return grads

    def loss_and_grads(self, coded, reviews, y) -> tuple[float, dict[str, np.ndarray]]:
        """Mean cross-entropy of a batch and its gradient for every parameter."""
        logits, caches = self.forward(coded, reviews)
        loss, dlogits, _ = softmax_cross_entropy(logits, np.asarray(y))
        return loss, self.backward(dlogits, caches)

    def pathway_embeddings(self, coded, reviews=None) -> dict[str, np.ndarray]:
        """Per-pathway outputs, for inspecting shapes and ablations."""
        out = {}
        for owner in ("customer", "product"):
            out[owner] = self.pathways[owner].forward(self._preprocess(owner, coded))[0]
        if self.uses_reviews:
            out["review"] = self.pathways["review"].forward(reviews)[0]
        return out


# --------------------------------------------------------------------------
# Estimator


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_macro_f1: float
    n_saturated: int = 0


def select_best_epoch(scores: Sequence[float]) -> int:
    """1-based epoch with the highest score; the earliest one on ties."""
    if not scores:
        raise ValueError("no epochs to select from")
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return best + 1


class FitNetClassifier(BaseEstimator, ClassifierMixin):
    """Size-and-fit classifier over customer, product and review inputs.

    Classes are label indices in (small, fit, large) order. Each epoch
    rebalances the training set so fit examples match small + large, and
    the parameters of the epoch with the best validation macro-F1 are kept.

    Parameters
    ----------
    schema : FeatureSchema
        Customer and product features.
    review_dim : int
        Width of the review vectors; ignored when ``use_reviews`` is False.
    use_reviews : bool
        False drops the review pathway (customer and product features only).
    batch_size, learning_rate, max_epochs :
        Adam minibatch training settings.
    pathway_widths, combined_widths : tuple of int
        Output widths of successive residual blocks.
    resample : bool
        Rebalance the fit class every epoch.
    random_state : int
        Seed for initialization, resampling and shuffling.
    """

    def __init__(self, schema: FeatureSchema | None = None, review_dim: int = 768,
                 use_reviews: bool = True, batch_size: int = 2048, learning_rate: float = 0.01,
                 max_epochs: int = 100, pathway_widths=(25, 15, 10),
                 combined_widths=(50, 100, 200, 500), resample: bool = True,
                 random_state: int = 0, verbose: bool = False):
        self.schema = schema
        self.review_dim = review_dim
        self.use_reviews = use_reviews
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.pathway_widths = pathway_widths
        self.combined_widths = combined_widths
        self.resample = resample
        self.random_state = random_state
        self.verbose = verbose

    def _build_network(self) -> FitNetwork:
        if self.schema is None:
            raise ValueError("schema is required")
        for name in ("batch_size", "max_epochs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        return FitNetwork(self.schema, self.review_dim if self.use_reviews else 0,
                          self.pathway_widths, self.combined_widths, self.random_state)

    def _check_batch(self, X: FitBatch) -> None:
        if not isinstance(X, FitBatch):
            raise TypeError("X must be a FitBatch (see make_batch)")
        if self.use_reviews and X.review_table is None:
            raise ValueError("model uses reviews but the batch has no review vectors")

    def fit(self, X: FitBatch, y, eval_set: tuple[FitBatch, Sequence] | None = None):
        self._check_batch(X)
        y = encode_labels(y)
        if len(y) != len(X):
            raise ValueError("X and y lengths differ")
        net = self._build_network()
        net.set_numeric_stats(X.columns)
        self.network_ = net
        self.classes_ = np.arange(3)
        coded = net.encode_columns(X.columns)
        params = net.parameters()
        opt = Adam(self.learning_rate)

        val = None
        if eval_set is not None:
            self._check_batch(eval_set[0])
            val = (net.encode_columns(eval_set[0].columns), eval_set[0], encode_labels(eval_set[1]))

        self.history_: list[EpochRecord] = []
        best_score, best_snapshot = -np.inf, None
        for epoch in range(1, int(self.max_epochs) + 1):
            rng = np.random.default_rng([int(self.random_state), epoch])
            idx = resample_fit_indices(y, rng) if self.resample else np.arange(len(y))
            order = rng.permutation(idx)
            total, saturated = 0.0, 0
            for b, start in enumerate(range(0, len(order), self.batch_size)):
                rows = order[start:start + self.batch_size]
                cb = {k: v[rows] for k, v in coded.items()}
                reviews = X.review_table[X.review_rows[rows]] if net.uses_reviews else None
                logits, cache = net.forward(cb, reviews)
                loss, dlogits, sat = softmax_cross_entropy(logits, y[rows])
                if not np.isfinite(loss):
                    raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch {b}")
                opt.step(params, net.backward(dlogits, cache))
                total += loss * len(rows)
                saturated += sat
            score = float("nan")
            if val is not None:
                score = self._validation_score(*val)
                if score > best_score:
                    best_score = score
                    best_snapshot = {k: v.copy() for k, v in params.items()}
                    self.best_epoch_ = epoch
            self.history_.append(EpochRecord(epoch, total / len(order), score, saturated))
            if self.verbose:
                print(f"epoch {epoch:3d} loss {total / len(order):.4f} val_macro_f1 {score:.4f}")
        if best_snapshot is not None:
            for k, v in params.items():
                v[...] = best_snapshot[k]
        else:
            self.best_epoch_ = int(self.max_epochs)
        return self

    def _validation_score(self, coded, X: FitBatch, y: np.ndarray) -> float:
        return macro_f1_score(y, argmax_with_tiebreak(self._predict_coded(coded, X)))

    def _predict_coded(self, coded, X: FitBatch) -> np.ndarray:
        net = self.network_
        n = len(next(iter(coded.values())))
        out = np.empty((n, 3))
        for start in range(0, n, PREDICT_CHUNK):
            sl = slice(start, start + PREDICT_CHUNK)
            reviews = X.review_table[X.review_rows[sl]] if net.uses_reviews else None
            logits, _ = net.forward({k: v[sl] for k, v in coded.items()}, reviews)
            out[sl] = softmax(logits)
        return out

    def predict_proba(self, X: FitBatch) -> np.ndarray:
        check_is_fitted(self, "network_")
        self._check_batch(X)
        return self._predict_coded(self.network_.encode_columns(X.columns), X)

    def predict(self, X: FitBatch) -> np.ndarray:
        return argmax_with_tiebreak(self.predict_proba(X))

    def predict_example(self, customer: Customer, product: Product,
                        review_vector=None) -> Prediction:
        check_is_fitted(self, "network_")
        columns = {}
        for f in self.schema.features:
            ent = customer if f.owner == "customer" else product
            if f.name not in ent.values:
                raise SchemaError(f"{f.owner} {ent.id}: missing feature {f.name}")
            columns[f.name] = np.array([ent.values[f.name]],
                                       dtype=object if f.categorical else np.float64)
        reviews = None
        if self.network_.uses_reviews:
            if review_vector is None:
                review_vector = np.zeros(self.review_dim)
            reviews = np.asarray(review_vector, dtype=np.float64).reshape(1, -1)
        logits, _ = self.network_.forward(self.network_.encode_columns(columns), reviews)
        return Prediction.from_probabilities(softmax(logits)[0])

    def preprocess(self, entity: Customer | Product, owner: str) -> np.ndarray:
        """Concatenated z-scores and embedding rows of one entity."""
        check_is_fitted(self, "network_")
        columns = {}
        for f in self.schema.owned_by(owner):
            if f.name not in entity.values:
                raise SchemaError(f"{owner} {entity.id}: missing feature {f.name}")
            columns[f.name] = np.array([entity.values[f.name]],
                                       dtype=object if f.categorical else np.float64)
        net = self.network_
        coded = {}
        for f in self.schema.owned_by(owner):
            col = columns[f.name]
            if f.categorical:
                lookup = net.vocab_index[f.name]
                coded[f.name] = np.array([lookup.get(col[0], len(lookup))])
            else:
                coded[f.name] = col
        return net._preprocess(owner, coded)[0]


def initialize_model(schema: FeatureSchema, **params) -> FitNetClassifier:
    """An unfitted-by-data model with initialized parameters and neutral stats."""
    model = FitNetClassifier(schema=schema, **params)
    model.network_ = model._build_network()
    model.classes_ = np.arange(3)
    model.history_ = []
    model.best_epoch_ = 0
    return model


# --------------------------------------------------------------------------
# Persistence


@dataclass
class ModelBundle:
    model: FitNetClassifier
    encoder: dict
    encoder_tensors: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def schema_hash(self) -> str:
        return self.model.schema.hash


def _hyperparameters(model: FitNetClassifier) -> dict:
    params = model.get_params(deep=False)
    params.pop("schema")
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


def save_model(model: FitNetClassifier, path, encoder: Mapping | None = None,
               encoder_tensors: Mapping[str, np.ndarray] | None = None,
               metadata: Mapping | None = None) -> None:
    """Write the model as magic bytes, a JSON header and float64 tensors.

    Layout: ``FITNET1`` | uint32 LE header length | header JSON | payload.
    The header lists every tensor's name, shape and byte offset into the
    little-endian row-major payload.
    """
    check_is_fitted(model, "network_")
    net = model.network_
    tensors = {}
    tensors.update({f"model.{k}": v for k, v in net.parameters().items()})
    tensors.update({f"model.{k}": v for k, v in net.buffers().items()})
    tensors.update({f"encoder.{k}": v for k, v in (encoder_tensors or {}).items()})
    entries, chunks, offset = [], [], 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset,
                        "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    header = {
        "version": FORMAT_VERSION,
        "schema_hash": model.schema.hash,
        "schema": model.schema.to_json(),
        "encoder": dict(encoder or {"name": "none"}),
        "hyperparameters": _hyperparameters(model),
        "best_epoch": int(getattr(model, "best_epoch_", 0)),
        "history": [[r.epoch, r.loss, r.val_macro_f1, r.n_saturated]
                    for r in getattr(model, "history_", [])],
        "metadata": dict(metadata or {}),
        "tensors": entries,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for c in chunks:
            fh.write(c)


def load_model(path, schema: FeatureSchema | None = None) -> ModelBundle:
    """Read a model file; with ``schema`` given, refuse a model trained on another one."""
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    pos = len(MAGIC)
    if len(raw) < pos + 4:
        raise ModelFormatError(f"{path}: truncated header")
    (hlen,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    if len(raw) < pos + hlen:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[pos:pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: corrupt header: {exc}") from exc
    pos += hlen
    if header.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {header.get('version')}")
    payload = raw[pos:]
    expected = sum(e["nbytes"] for e in header["tensors"])
    if len(payload) != expected:
        raise ModelFormatError(f"{path}: payload has {len(payload)} bytes, expected {expected}")

    file_schema = FeatureSchema.from_json(header["schema"])
    if file_schema.hash != header["schema_hash"]:
        raise ModelFormatError(f"{path}: schema hash does not match embedded schema")
    if schema is not None and schema.hash != header["schema_hash"]:
        raise SchemaMismatchError(
            f"{path}: model schema hash {header['schema_hash']} differs from data schema "
            f"hash {schema.hash}")

    tensors = {}
    for e in header["tensors"]:
        buf = payload[e["offset"]:e["offset"] + e["nbytes"]]
        tensors[e["name"]] = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(e["shape"])

    hp = {k: tuple(v) if isinstance(v, list) else v for k, v in header["hyperparameters"].items()}
    model = initialize_model(file_schema, **hp)
    net = model.network_
    targets = {f"model.{k}": v for k, v in net.parameters().items()}
    targets.update({f"model.{k}": v for k, v in net.buffers().items()})
    if set(targets) != {k for k in tensors if k.startswith("model.")}:
        raise ModelFormatError(f"{path}: tensor set does not match the architecture")
    for name, dest in targets.items():
        if tensors[name].shape != dest.shape:
            raise ModelFormatError(f"{path}: tensor {name} has shape {tensors[name].shape}, "
                                   f"expected {dest.shape}")
        dest[...] = tensors[name]
    model.best_epoch_ = header["best_epoch"]
    model.history_ = [EpochRecord(int(a), b, c, int(d)) for a, b, c, d in header["history"]]
    enc_tensors = {k[len("encoder."):]: v for k, v in tensors.items() if k.startswith("encoder.")}
    return ModelBundle(model, header["encoder"], enc_tensors, header["metadata"])


__all__ = [
    "FitBatch", "FitNetClassifier", "FitNetwork", "ModelBundle", "ModelFormatError",
    "Prediction", "SchemaMismatchError", "EpochRecord", "initialize_model", "load_model",
    "make_batch", "recommendation_text", "save_model", "select_best_epoch", "LABELS", "UNKNOWN",
]
