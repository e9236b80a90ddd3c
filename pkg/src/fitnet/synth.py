"""Synthetic marketplace with a controllable fit signal.

Customers have a latent true size; products have a nominal size plus a
brand offset (visible through the brand feature) and a hidden per-product
size-chart bias. Some products run small or large; only reviews reveal
which. A purchase is labeled small when the customer's true size exceeds
the product's effective size by more than a threshold, large when it falls
short by more than the threshold, and fit otherwise.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .data import (
    Customer,
    DataStore,
    FeatureSchema,
    FeatureSpec,
    FitLabel,
    Product,
    Review,
    Transaction,
    write_data_dir,
)

SIZE_NAMES = ("XS", "S", "M", "L", "XL", "XXL")
SIZE_VALUES = np.array([84.0, 92.0, 100.0, 108.0, 116.0, 124.0])
AGE_BANDS = ("18-24", "25-34", "35-44", "45-54", "55+")
CATEGORIES = ("jacket", "coat", "blazer", "hoodie", "parka")
FABRICS = ("cotton", "denim", "leather", "nylon", "polyester", "wool")
N_BRANDS = 20

# Per-product hidden bias: (share of catalog, offset in size units).
PRODUCT_TYPES = {"true": (0.92, 0.0), "runs_small": (0.05, -8.0), "runs_large": (0.03, 8.0)}

SMALL_PHRASES = ("runs small", "is too tight", "feels smaller than expected",
                 "made me wish I had sized up", "is snug around the chest")
LARGE_PHRASES = ("runs large", "is very loose", "feels bigger than expected",
                 "made me wish I had sized down", "is baggy around the waist")
FIT_PHRASES = ("is true to size", "is a perfect fit", "fits just right",
               "fits exactly as expected", "fits like my usual size")
LEXICON = {FitLabel.SMALL: SMALL_PHRASES, FitLabel.LARGE: LARGE_PHRASES, FitLabel.FIT: FIT_PHRASES}

ITEMS = ("jacket", "piece", "one", "coat")
NEUTRAL_CLAUSES = ("the colour is lovely", "delivery was quick", "the stitching looks good",
                   "the fabric feels nice", "packaging was neat", "good value for money",
                   "it arrived on time", "the zip is sturdy", "the pockets are handy",
                   "the seller was helpful")


@dataclass(frozen=True)
class GenConfig:
    n_customers: int = 20000
    n_products: int = 1000
    n_transactions: int = 50000
    small_rate: float = 0.0452
    large_rate: float = 0.0168
    review_rate: float = 0.6
    review_signal: float = 0.9
    seed: int = 0
    # None: calibrate threshold and global shift so that label rates hit the targets.
    size_threshold: float | None = None
    customer_size_std: float = 8.0
    size_choice_noise: float = 2.0
    # share of purchases made one size above or below the customer's usual size
    off_size_rate: float = 0.15
    reported_size_noise: float = 0.1
    brand_offset_std: float = 0.5
    product_jitter_std: float = 0.1

    def validate(self) -> None:
        for name in ("n_customers", "n_products", "n_transactions"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive count")
        for name in ("small_rate", "large_rate"):
            rate = getattr(self, name)
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {rate}")
            if round(rate * self.n_transactions) < 1:
                raise ValueError(f"{name}={rate} yields no examples with "
                                 f"{self.n_transactions} transactions")
        if self.small_rate + self.large_rate >= 1.0:
            raise ValueError("small_rate + large_rate must be below 1")
        for name in ("review_rate", "review_signal", "off_size_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.size_threshold is not None and self.size_threshold <= 0:
            raise ValueError("size_threshold must be positive")
        for name in ("customer_size_std", "size_choice_noise", "reported_size_noise",
                     "brand_offset_std", "product_jitter_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_dict(cls, obj: dict) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown GenConfig keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LatentWorld:
    customer_true_size: np.ndarray
    product_nominal_size: np.ndarray
    product_offset: np.ndarray
    product_type: list[str]
    brand_offset: np.ndarray
    threshold: float

    @property
    def product_effective_size(self) -> np.ndarray:
        return self.product_nominal_size + self.product_offset


@dataclass
class SyntheticMarketplace:
    store: DataStore
    world: LatentWorld
    customer_ids: list[str]
    product_ids: list[str]

    @property
    def schema(self) -> FeatureSchema:
        return self.store.schema

    def realized_rates(self) -> dict[str, float]:
        n = len(self.store.transactions)
        counts = {"small": 0, "large": 0}
        for t in self.store.transactions:
            if t.return_reason == "SIZE_SMALL":
                counts["small"] += 1
            elif t.return_reason == "SIZE_LARGE":
                counts["large"] += 1
        return {k: v / n for k, v in counts.items()}


def default_schema() -> FeatureSchema:
    return FeatureSchema((
        FeatureSpec("usual_size", "customer", "categorical", 4, SIZE_NAMES),
        FeatureSpec("age_band", "customer", "categorical", 3, AGE_BANDS),
        FeatureSpec("size_delta", "customer", "numerical"),
        FeatureSpec("brand", "product", "categorical", 4,
                    tuple(f"brand_{i:02d}" for i in range(N_BRANDS))),
        FeatureSpec("category", "product", "categorical", 3, CATEGORIES),
        FeatureSpec("fabric", "product", "categorical", 3, FABRICS),
        FeatureSpec("nominal_size", "product", "numerical"),
    ))


def label_from_gap(gap: np.ndarray, threshold: float) -> np.ndarray:
    """Label indices from customer size minus product effective size."""
    out = np.full(gap.shape, FitLabel.FIT.index)
    out[gap > threshold] = FitLabel.SMALL.index
    out[gap < -threshold] = FitLabel.LARGE.index
    return out


def _calibrate(gap: np.ndarray, small_rate: float, large_rate: float) -> tuple[float, float]:
    """Threshold and shift so that exactly round(n*rate) gaps fall in each tail."""
    n = len(gap)
    srt = np.sort(gap)
    k_small = int(round(n * small_rate))
    k_large = int(round(n * large_rate))
    hi = 0.5 * (srt[n - k_small - 1] + srt[n - k_small])
    lo = 0.5 * (srt[k_large - 1] + srt[k_large])
    return 0.5 * (hi - lo), 0.5 * (hi + lo)


def emit_review_text(label: FitLabel, informative: bool, rng: np.random.Generator) -> str:
    item = ITEMS[rng.integers(len(ITEMS))]
    clause = NEUTRAL_CLAUSES[rng.integers(len(NEUTRAL_CLAUSES))]
    if informative:
        phrases = LEXICON[FitLabel(label)]
        phrase = phrases[rng.integers(len(phrases))]
        if rng.random() < 0.5:
            return f"This {item} {phrase}."
        return f"This {item} {phrase}, and {clause}."
    other = NEUTRAL_CLAUSES[rng.integers(len(NEUTRAL_CLAUSES))]
    if other == clause or rng.random() < 0.5:
        return f"{clause.capitalize()}."
    return f"{clause.capitalize()} and {other}."


def generate(config: GenConfig | None = None) -> SyntheticMarketplace:
    config = config or GenConfig()
    config.validate()
    rng = np.random.default_rng(config.seed)
    schema = default_schema()
    nc, np_, nt = config.n_customers, config.n_products, config.n_transactions

    # customers
    true_size = rng.normal(100.0, config.customer_size_std, nc)
    perceived = true_size + rng.normal(0.0, config.size_choice_noise, nc)
    bucket = np.abs(perceived[:, None] - SIZE_VALUES[None, :]).argmin(axis=1)
    reported = true_size + rng.normal(0.0, config.reported_size_noise, nc)
    age = rng.integers(len(AGE_BANDS), size=nc)

    # products; nominal sizes follow customer demand
    demand = np.bincount(bucket, minlength=len(SIZE_VALUES)) + 1.0
    p_bucket = rng.choice(len(SIZE_VALUES), size=np_, p=demand / demand.sum())
    brand = rng.integers(N_BRANDS, size=np_)
    brand_offset = rng.normal(0.0, config.brand_offset_std, N_BRANDS)
    category = rng.integers(len(CATEGORIES), size=np_)
    fabric = rng.integers(len(FABRICS), size=np_)
    type_names = list(PRODUCT_TYPES)
    type_probs = np.array([PRODUCT_TYPES[k][0] for k in type_names])
    type_ix = rng.choice(len(type_names), size=np_, p=type_probs / type_probs.sum())
    type_offset = np.array([PRODUCT_TYPES[k][1] for k in type_names])[type_ix]
    offset = brand_offset[brand] + type_offset + rng.normal(0.0, config.product_jitter_std, np_)
    nominal = SIZE_VALUES[p_bucket]

    # transactions: customers mostly buy a product in their usual size
    by_bucket = [np.flatnonzero(p_bucket == b) for b in range(len(SIZE_VALUES))]
    t_cust = rng.integers(nc, size=nt)
    step = np.where(rng.random(nt) < 0.5, -1, 1) * (rng.random(nt) < config.off_size_rate)
    t_bucket = np.clip(bucket[t_cust] + step, 0, len(SIZE_VALUES) - 1)
    t_prod = np.empty(nt, dtype=int)
    for b in range(len(SIZE_VALUES)):
        rows = np.flatnonzero(t_bucket == b)
        pool = by_bucket[b]
        if len(pool) == 0:
            nearest = min((abs(b2 - b), b2) for b2 in range(len(SIZE_VALUES)) if len(by_bucket[b2]))
            pool = by_bucket[nearest[1]]
        t_prod[rows] = pool[rng.integers(len(pool), size=len(rows))]

    gap = true_size[t_cust] - (nominal[t_prod] + offset[t_prod])
    if config.size_threshold is None:
        threshold, shift = _calibrate(gap, config.small_rate, config.large_rate)
        if threshold <= 0:
            raise ValueError("label rates are infeasible: no positive size threshold "
                             "separates the requested tails")
    else:
        threshold, shift = float(config.size_threshold), 0.0
    offset = offset + shift
    gap = gap - shift
    labels = label_from_gap(gap, threshold)

    cust_ids = [f"C{i:06d}" for i in range(nc)]
    prod_ids = [f"P{i:05d}" for i in range(np_)]
    customers = {
        cid: Customer(cid, {"usual_size": SIZE_NAMES[bucket[i]], "age_band": AGE_BANDS[age[i]],
                            "size_delta": round(float(reported[i] - SIZE_VALUES[bucket[i]]), 2)})
        for i, cid in enumerate(cust_ids)
    }
    products = {
        pid: Product(pid, {"brand": f"brand_{brand[i]:02d}", "category": CATEGORIES[category[i]],
                           "fabric": FABRICS[fabric[i]], "nominal_size": float(nominal[i])})
        for i, pid in enumerate(prod_ids)
    }
    reasons = {FitLabel.SMALL.index: "SIZE_SMALL", FitLabel.LARGE.index: "SIZE_LARGE"}
    transactions = []
    reviews = []
    has_review = rng.random(nt) < config.review_rate
    informative = rng.random(nt) < config.review_signal
    for k in range(nt):
        lab = int(labels[k])
        reason = reasons.get(lab)
        transactions.append(Transaction(f"T{k:07d}", cust_ids[t_cust[k]], prod_ids[t_prod[k]],
                                        reason is not None, reason))
        if has_review[k]:
            text = emit_review_text(FitLabel.from_index(lab), bool(informative[k]), rng)
            reviews.append(Review(f"R{len(reviews):07d}", prod_ids[t_prod[k]], text,
                                  FitLabel.from_index(lab)))

    world = LatentWorld(
        customer_true_size=true_size,
        product_nominal_size=nominal,
        product_offset=offset,
        product_type=[type_names[i] for i in type_ix],
        brand_offset=brand_offset,
        threshold=float(threshold),
    )
    store = DataStore(schema, customers, products, transactions, reviews)
    return SyntheticMarketplace(store, world, cust_ids, prod_ids)


def write_latent_world(market: SyntheticMarketplace, path) -> None:
    """Dump latent sizes so labels can be recomputed from them.

    Product rows carry the effective size; the ``threshold`` row carries the
    gap beyond which a purchase is labeled small or large.
    """
    w = market.world
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["entity", "id", "true_size", "offset", "product_type"])
        for i, cid in enumerate(market.customer_ids):
            out.writerow(["customer", cid, repr(float(w.customer_true_size[i])), "0.0", ""])
        eff = w.product_effective_size
        for i, pid in enumerate(market.product_ids):
            out.writerow(["product", pid, repr(float(eff[i])), repr(float(w.product_offset[i])),
                          w.product_type[i]])
        out.writerow(["threshold", "delta", repr(w.threshold), "0.0", ""])


def read_latent_world(path) -> tuple[dict[str, float], dict[str, float], float]:
    """Return (customer true sizes, product effective sizes, threshold)."""
    cust, prod, threshold = {}, {}, None
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["entity"] == "customer":
                cust[row["id"]] = float(row["true_size"])
            elif row["entity"] == "product":
                prod[row["id"]] = float(row["true_size"])
            elif row["entity"] == "threshold":
                threshold = float(row["true_size"])
    if threshold is None:
        raise ValueError(f"{path}: no threshold row")
    return cust, prod, threshold


def write_marketplace(market: SyntheticMarketplace, out_dir) -> Path:
    out_dir = Path(out_dir)
    write_data_dir(market.store, out_dir)
    write_latent_world(market, out_dir / "latent_world.csv")
    return out_dir
