"""Domain entities, transaction labeling, splitting and file ingestion."""
from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

UNKNOWN = "UNKNOWN"

RETURN_REASONS = ("SIZE_SMALL", "SIZE_LARGE", "OTHER")


class SchemaError(ValueError):
    """Raised when a feature schema or an entity does not validate."""


class IngestionError(ValueError):
    """Raised when input records cannot be resolved or parsed."""


class FitLabel(str, enum.Enum):
    SMALL = "small"
    FIT = "fit"
    LARGE = "large"

    @property
    def index(self) -> int:
        return _LABEL_INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "FitLabel":
        return LABELS[int(i)]


# Class index order used by every array of probabilities/logits.
LABELS = (FitLabel.SMALL, FitLabel.FIT, FitLabel.LARGE)
_LABEL_INDEX = {lab: i for i, lab in enumerate(LABELS)}
# fit > small > large when scores tie.
TIE_BREAK_ORDER = (1, 0, 2)


def argmax_with_tiebreak(scores) -> np.ndarray:
    """Row-wise argmax over the three classes, ties resolved fit > small > large."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    reordered = scores[:, TIE_BREAK_ORDER]
    return np.asarray(TIE_BREAK_ORDER)[np.argmax(reordered, axis=1)]


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    owner: str
    kind: str
    embedding_dim: int | None = None
    vocabulary: tuple[str, ...] = ()

    @property
    def categorical(self) -> bool:
        return self.kind == "categorical"

    @property
    def width(self) -> int:
        """Width of this feature after preprocessing."""
        return self.embedding_dim if self.categorical else 1

    def to_json(self) -> dict:
        out = {"name": self.name, "owner": self.owner, "kind": self.kind}
        if self.categorical:
            out["embedding_dim"] = self.embedding_dim
            out["vocabulary"] = list(self.vocabulary)
        return out


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names in {names}")
        for f in self.features:
            if not f.name or f.name == "id":
                raise SchemaError(f"invalid feature name {f.name!r}")
            if f.owner not in ("customer", "product"):
                raise SchemaError(f"feature {f.name}: owner must be customer or product")
            if f.kind not in ("categorical", "numerical"):
                raise SchemaError(f"feature {f.name}: kind must be categorical or numerical")
            if f.categorical:
                if not f.embedding_dim or f.embedding_dim < 1:
                    raise SchemaError(f"feature {f.name}: embedding_dim must be positive")
                if not f.vocabulary:
                    raise SchemaError(f"feature {f.name}: empty vocabulary")
                if len(set(f.vocabulary)) != len(f.vocabulary):
                    raise SchemaError(f"feature {f.name}: duplicate vocabulary entries")
                if UNKNOWN in f.vocabulary:
                    raise SchemaError(f"feature {f.name}: {UNKNOWN} is reserved")
        if not self.customer_features:
            raise SchemaError("schema needs at least one customer feature")
        if not self.product_features:
            raise SchemaError("schema needs at least one product feature")

    @property
    def customer_features(self) -> tuple[FeatureSpec, ...]:
        return tuple(f for f in self.features if f.owner == "customer")

    @property
    def product_features(self) -> tuple[FeatureSpec, ...]:
        return tuple(f for f in self.features if f.owner == "product")

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(f"no feature named {name}")

    def owned_by(self, owner: str) -> tuple[FeatureSpec, ...]:
        return tuple(f for f in self.features if f.owner == owner)

    def to_json(self) -> dict:
        return {"features": [f.to_json() for f in self.features]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "FeatureSchema":
        try:
            raw = obj["features"]
            specs = []
            for item in raw:
                extra = set(item) - {"name", "owner", "kind", "embedding_dim", "vocabulary"}
                if extra:
                    raise SchemaError(f"unknown schema keys {sorted(extra)}")
                specs.append(FeatureSpec(
                    name=str(item["name"]),
                    owner=str(item["owner"]),
                    kind=str(item["kind"]),
                    embedding_dim=item.get("embedding_dim"),
                    vocabulary=tuple(str(v) for v in item.get("vocabulary", ())),
                ))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema: {exc}") from exc
        return cls(tuple(specs))

    @property
    def hash(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def validate_entity(self, entity: "Customer | Product", owner: str) -> None:
        for f in self.owned_by(owner):
            if f.name not in entity.values:
                raise SchemaError(f"{owner} {entity.id}: missing feature {f.name}")
            value = entity.values[f.name]
            if f.categorical:
                if not isinstance(value, str):
                    raise SchemaError(f"{owner} {entity.id}: feature {f.name} must be a string")
                if value not in f.vocabulary and value != UNKNOWN:
                    raise SchemaError(
                        f"{owner} {entity.id}: value {value!r} not in vocabulary of {f.name}")
            elif not math.isfinite(float(value)):
                raise SchemaError(f"{owner} {entity.id}: feature {f.name} is not finite")


@dataclass(frozen=True)
class Customer:
    id: str
    values: Mapping[str, str | float]


@dataclass(frozen=True)
class Product:
    id: str
    values: Mapping[str, str | float]


@dataclass(frozen=True)
class Transaction:
    transaction_id: str
    customer_id: str
    product_id: str
    returned: bool
    return_reason: str | None = None

    def __post_init__(self):
        if self.returned and self.return_reason not in RETURN_REASONS:
            raise IngestionError(
                f"transaction {self.transaction_id}: returned without a valid reason")
        if not self.returned and self.return_reason is not None:
            raise IngestionError(
                f"transaction {self.transaction_id}: reason given for a kept purchase")


@dataclass(frozen=True)
class Review:
    review_id: str
    product_id: str
    text: str
    label: FitLabel | None = None


@dataclass(frozen=True)
class LabeledExample:
    customer_id: str
    product_id: str
    label: FitLabel
    transaction_id: str | None = None


@dataclass(frozen=True)
class DatasetSplit:
    train: list[LabeledExample]
    validation: list[LabeledExample]
    test: list[LabeledExample]

    def __getitem__(self, name: str) -> list[LabeledExample]:
        if name not in ("train", "validation", "test"):
            raise KeyError(name)
        return getattr(self, name)


@dataclass
class DataStore:
    """Everything read from one data directory."""

    schema: FeatureSchema
    customers: dict[str, Customer]
    products: dict[str, Product]
    transactions: list[Transaction] = field(default_factory=list)
    reviews: list[Review] = field(default_factory=list)

    def reviews_by_product(self) -> dict[str, list[Review]]:
        out: dict[str, list[Review]] = {}
        for r in self.reviews:
            out.setdefault(r.product_id, []).append(r)
        return out


def derive_label(t: Transaction) -> FitLabel | None:
    if not t.returned:
        return FitLabel.FIT
    if t.return_reason == "SIZE_SMALL":
        return FitLabel.SMALL
    if t.return_reason == "SIZE_LARGE":
        return FitLabel.LARGE
    return None


def build_dataset(
    transactions: Iterable[Transaction],
    customers: Mapping[str, Customer],
    products: Mapping[str, Product],
    schema: FeatureSchema,
) -> list[LabeledExample]:
    seen = set()
    examples = []
    for t in transactions:
        if t.transaction_id in seen:
            raise IngestionError(f"duplicate transaction_id {t.transaction_id}")
        seen.add(t.transaction_id)
        if t.customer_id not in customers:
            raise IngestionError(
                f"transaction {t.transaction_id}: unknown customer_id {t.customer_id}")
        if t.product_id not in products:
            raise IngestionError(
                f"transaction {t.transaction_id}: unknown product_id {t.product_id}")
        label = derive_label(t)
        if label is not None:
            examples.append(LabeledExample(t.customer_id, t.product_id, label, t.transaction_id))
    return examples


def _apportion(quotas: np.ndarray, total: int, caps: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``quotas`` to integers summing to ``total``."""
    counts = np.minimum(np.floor(quotas).astype(int), caps)
    remainders = quotas - counts
    # stable order: largest remainder first, then label order
    order = sorted(range(len(quotas)), key=lambda i: (-remainders[i], i))
    short = total - counts.sum()
    while short > 0:
        progressed = False
        for i in order:
            if short == 0:
                break
            if counts[i] < caps[i]:
                counts[i] += 1
                short -= 1
                progressed = True
        if not progressed:
            break
    return counts


def split_dataset(examples: Sequence[LabeledExample], seed: int) -> DatasetSplit:
    """Stratified 80:10:10 split, deterministic for a given seed.

    Within each split examples keep their input order.
    """
    n = len(examples)
    if n < 10:
        raise ValueError(f"need at least 10 examples to split, got {n}")
    rng = np.random.default_rng(seed)
    by_label = [np.array([i for i, e in enumerate(examples) if e.label is lab], dtype=int)
                for lab in LABELS]
    counts = np.array([len(ix) for ix in by_label])

    n_train = int(round(0.8 * n))
    n_val = int(round(0.1 * n))
    train_per = _apportion(0.8 * counts, n_train, counts)
    val_per = _apportion(0.1 * counts, n_val, counts - train_per)

    parts = ([], [], [])
    for ix, n_tr, n_va in zip(by_label, train_per, val_per):
        perm = rng.permutation(ix)
        parts[0].extend(perm[:n_tr])
        parts[1].extend(perm[n_tr:n_tr + n_va])
        parts[2].extend(perm[n_tr + n_va:])
    train, val, test = ([examples[i] for i in sorted(p)] for p in parts)
    return DatasetSplit(train, val, test)


def resample_fit_indices(labels: Sequence[int] | np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices of a training set in which #fit equals #small + #large.

    Small and large indices are all kept, in input order. Fit indices are
    subsampled without replacement when over-represented and drawn with
    replacement otherwise.
    """
    labels = np.asarray(labels)
    fit_ix = np.flatnonzero(labels == FitLabel.FIT.index)
    other_ix = np.flatnonzero(labels != FitLabel.FIT.index)
    target = len(other_ix)
    if target == 0:
        raise ValueError("training set has no small or large examples")
    if len(fit_ix) == target:
        chosen = fit_ix
    elif len(fit_ix) > target:
        chosen = np.sort(rng.choice(fit_ix, size=target, replace=False))
    else:
        if len(fit_ix) == 0:
            raise ValueError("training set has no fit examples to resample")
        chosen = np.concatenate([fit_ix, rng.choice(fit_ix, size=target - len(fit_ix), replace=True)])
    return np.concatenate([other_ix, chosen])


def resample_fit(train: Sequence[LabeledExample], seed) -> list[LabeledExample]:
    if not train:
        raise ValueError("empty training set")
    labels = [e.label.index for e in train]
    idx = resample_fit_indices(labels, np.random.default_rng(seed))
    return [train[i] for i in idx]


# --------------------------------------------------------------------------
# File I/O


def _parse_bool(raw: str, where: str) -> bool:
    if raw in ("0", "1"):
        return raw == "1"
    raise IngestionError(f"{where}: returned must be 0 or 1, got {raw!r}")


def _check_header(path: Path, header: list[str] | None, expected: Sequence[str]) -> None:
    if header is None or list(header) != list(expected):
        raise IngestionError(f"{path.name}: expected header {','.join(expected)}, got {header}")


def read_schema(path) -> FeatureSchema:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return FeatureSchema.from_json(obj)


def write_schema(schema: FeatureSchema, path) -> None:
    Path(path).write_text(json.dumps(schema.to_json(), indent=2) + "\n", encoding="utf-8")


def read_transactions(path) -> list[Transaction]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(path, next(reader, None),
                      ["transaction_id", "customer_id", "product_id", "returned", "return_reason"])
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise IngestionError(f"{path.name}:{lineno}: expected 5 fields")
            tid, cid, pid, returned, reason = row
            out.append(Transaction(tid, cid, pid, _parse_bool(returned, f"{path.name}:{lineno}"),
                                   reason or None))
    return out


def write_transactions(transactions: Iterable[Transaction], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["transaction_id", "customer_id", "product_id", "returned", "return_reason"])
        for t in transactions:
            w.writerow([t.transaction_id, t.customer_id, t.product_id,
                        int(t.returned), t.return_reason or ""])


def _read_entities(path, schema: FeatureSchema, owner: str, cls):
    path = Path(path)
    feats = schema.owned_by(owner)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["id"] + [f.name for f in feats]
        if header is None or header[0] != "id" or sorted(header[1:]) != sorted(expected[1:]):
            missing = sorted(set(expected) - set(header or []))
            extra = sorted(set(header or []) - set(expected))
            raise IngestionError(
                f"{path.name}: header does not match schema (missing {missing}, unexpected {extra})")
        kinds = {f.name: f for f in feats}
        out = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise IngestionError(f"{path.name}:{lineno}: expected {len(header)} fields")
            values: dict[str, str | float] = {}
            for name, raw in zip(header[1:], row[1:]):
                if kinds[name].categorical:
                    values[name] = raw
                else:
                    try:
                        values[name] = float(raw)
                    except ValueError as exc:
                        raise IngestionError(
                            f"{path.name}:{lineno}: feature {name} is not a number: {raw!r}") from exc
            entity = cls(row[0], values)
            try:
                schema.validate_entity(entity, owner)
            except SchemaError as exc:
                raise IngestionError(f"{path.name}:{lineno}: {exc}") from exc
            if entity.id in out:
                raise IngestionError(f"{path.name}:{lineno}: duplicate id {entity.id}")
            out[entity.id] = entity
    return out


def _write_entities(entities: Iterable, path, schema: FeatureSchema, owner: str) -> None:
    feats = schema.owned_by(owner)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f.name for f in feats])
        for e in entities:
            w.writerow([e.id] + [e.values[f.name] if f.categorical else repr(float(e.values[f.name]))
                                 for f in feats])


def read_customers(path, schema: FeatureSchema) -> dict[str, Customer]:
    return _read_entities(path, schema, "customer", Customer)


def read_products(path, schema: FeatureSchema) -> dict[str, Product]:
    return _read_entities(path, schema, "product", Product)


def write_customers(customers: Iterable[Customer], path, schema: FeatureSchema) -> None:
    _write_entities(customers, path, schema, "customer")


def write_products(products: Iterable[Product], path, schema: FeatureSchema) -> None:
    _write_entities(products, path, schema, "product")


def read_reviews(path) -> list[Review]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(path, next(reader, None), ["review_id", "product_id", "text", "label"])
        out = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise IngestionError(f"{path.name}:{lineno}: expected 4 fields")
            rid, pid, text, label = row
            text = text.strip()
            if not text:
                raise IngestionError(f"{path.name}:{lineno}: review {rid} has empty text")
            try:
                lab = FitLabel(label) if label else None
            except ValueError as exc:
                raise IngestionError(f"{path.name}:{lineno}: bad label {label!r}") from exc
            out.append(Review(rid, pid, text, lab))
    return out


def write_reviews(reviews: Iterable[Review], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("review_id,product_id,text,label\n")
        for r in reviews:
            text = r.text.replace('"', '""')
            fh.write(f'{r.review_id},{r.product_id},"{text}",{r.label.value if r.label else ""}\n')


def load_data_dir(path, schema_path=None) -> DataStore:
    """Read schema.json and the four CSV files from ``path``."""
    path = Path(path)
    schema = read_schema(schema_path or path / "schema.json")
    for name in ("customers.csv", "products.csv", "transactions.csv"):
        if not (path / name).exists():
            raise IngestionError(f"missing data file {path / name}")
    customers = read_customers(path / "customers.csv", schema)
    products = read_products(path / "products.csv", schema)
    transactions = read_transactions(path / "transactions.csv")
    reviews = read_reviews(path / "reviews.csv") if (path / "reviews.csv").exists() else []
    for r in reviews:
        if r.product_id not in products:
            raise IngestionError(f"review {r.review_id}: unknown product_id {r.product_id}")
    return DataStore(schema, customers, products, transactions, reviews)


def write_data_dir(store: DataStore, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_schema(store.schema, path / "schema.json")
    write_customers(store.customers.values(), path / "customers.csv", store.schema)
    write_products(store.products.values(), path / "products.csv", store.schema)
    write_transactions(store.transactions, path / "transactions.csv")
    write_reviews(store.reviews, path / "reviews.csv")
