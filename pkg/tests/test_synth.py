import filecmp
from collections import Counter

import numpy as np
import pytest

from fitnet.data import FitLabel, build_dataset, derive_label, load_data_dir
from fitnet.synth import (
    FIT_PHRASES,
    LARGE_PHRASES,
    SMALL_PHRASES,
    GenConfig,
    _calibrate,
    generate,
    label_from_gap,
    read_latent_world,
    write_marketplace,
)

SMALL_CFG = dict(n_customers=2000, n_products=200, n_transactions=6000)
LEXICON = {FitLabel.SMALL: SMALL_PHRASES, FitLabel.LARGE: LARGE_PHRASES, FitLabel.FIT: FIT_PHRASES}


@pytest.fixture(scope="module")
def market():
    return generate(GenConfig(**SMALL_CFG, seed=4))


def test_rates_near_targets():
    m = generate(GenConfig(n_customers=5000, n_products=500, n_transactions=20000, seed=1))
    rates = m.realized_rates()
    assert abs(rates["small"] - 0.0452) <= 0.2 * 0.0452
    assert abs(rates["large"] - 0.0168) <= 0.2 * 0.0168


def test_custom_rates_hit():
    m = generate(GenConfig(**SMALL_CFG, small_rate=0.1, large_rate=0.05, seed=2))
    rates = m.realized_rates()
    assert rates["small"] == pytest.approx(0.1, rel=0.2)
    assert rates["large"] == pytest.approx(0.05, rel=0.2)


def test_labels_follow_latent_world(market, tmp_path):
    write_marketplace(market, tmp_path)
    cust, prod, threshold = read_latent_world(tmp_path / "latent_world.csv")
    assert threshold > 0
    for t in load_data_dir(tmp_path).transactions:
        gap = cust[t.customer_id] - prod[t.product_id]
        expected = FitLabel.from_index(int(label_from_gap(np.array([gap]), threshold)[0]))
        assert derive_label(t) is expected


def test_every_review_label_matches_a_transaction(market):
    tx = Counter((t.product_id, derive_label(t)) for t in market.store.transactions)
    rv = Counter((r.product_id, r.label) for r in market.store.reviews)
    for key, n in rv.items():
        assert n <= tx[key]


def test_review_rate(market):
    assert len(market.store.reviews) == pytest.approx(0.6 * 6000, rel=0.05)


def test_full_signal_uses_lexicon():
    m = generate(GenConfig(**SMALL_CFG, review_signal=1.0, seed=3))
    for r in m.store.reviews:
        assert any(p in r.text for p in LEXICON[r.label])


def test_no_signal_uses_no_lexicon():
    m = generate(GenConfig(**SMALL_CFG, review_signal=0.0, seed=3))
    phrases = SMALL_PHRASES + LARGE_PHRASES + FIT_PHRASES
    for r in m.store.reviews:
        assert not any(p in r.text for p in phrases)


def test_outputs_pass_ingestion(market, tmp_path):
    write_marketplace(market, tmp_path)
    store = load_data_dir(tmp_path)
    examples = build_dataset(store.transactions, store.customers, store.products, store.schema)
    assert len(examples) == len(store.transactions)
    assert {p.name for p in tmp_path.iterdir()} == {
        "schema.json", "customers.csv", "products.csv", "transactions.csv", "reviews.csv",
        "latent_world.csv"}


def test_byte_identical_reruns(tmp_path):
    a = write_marketplace(generate(GenConfig(**SMALL_CFG, seed=9)), tmp_path / "a")
    b = write_marketplace(generate(GenConfig(**SMALL_CFG, seed=9)), tmp_path / "b")
    for name in ("customers.csv", "products.csv", "transactions.csv", "reviews.csv",
                 "latent_world.csv", "schema.json"):
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_seeds_differ():
    a = generate(GenConfig(**SMALL_CFG, seed=1)).store.transactions
    b = generate(GenConfig(**SMALL_CFG, seed=2)).store.transactions
    assert a != b


def test_fixed_threshold_used_as_given():
    m = generate(GenConfig(**SMALL_CFG, size_threshold=6.0, seed=0))
    assert m.world.threshold == 6.0


@pytest.mark.parametrize("bad", [
    {"small_rate": 0.6, "large_rate": 0.5},
    {"small_rate": 0.0},
    {"review_signal": 1.5},
    {"n_transactions": 0},
    {"size_threshold": -1.0},
])
def test_invalid_configs(bad):
    with pytest.raises(ValueError):
        GenConfig(**bad).validate()


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError, match="colour"):
        GenConfig.from_dict({"colour": "red"})
    assert GenConfig.from_dict({"seed": 5}).seed == 5


def test_calibrate_exact_tails():
    gap = np.arange(100, dtype=float)
    threshold, shift = _calibrate(gap, 0.1, 0.05)
    labels = label_from_gap(gap - shift, threshold)
    assert (labels == FitLabel.SMALL.index).sum() == 10
    assert (labels == FitLabel.LARGE.index).sum() == 5
