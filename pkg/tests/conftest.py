import pytest

from fitnet.data import build_dataset, split_dataset
from fitnet.reviews import HashingEncoder, ProductReviewIndex
from fitnet.synth import GenConfig, generate


class Tiny:
    """A small marketplace with its split and a 32-wide hashing index."""

    def __init__(self, seed=0):
        self.market = generate(GenConfig(n_customers=1500, n_products=150, n_transactions=5000,
                                         small_rate=0.1, large_rate=0.06, seed=seed))
        self.store = self.market.store
        self.examples = build_dataset(self.store.transactions, self.store.customers,
                                      self.store.products, self.store.schema)
        self.split = split_dataset(self.examples, seed)
        self.encoder = HashingEncoder(dim=32).fit()
        self.index = ProductReviewIndex.build(self.encoder, self.store.reviews)


@pytest.fixture(scope="session")
def tiny():
    return Tiny()


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for a criterion, then assert it."""

    def record(name, ok, detail):
        line = f"{name} {'PASS' if ok else 'FAIL'} {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record
