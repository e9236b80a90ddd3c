"""``fitnet`` command line: generate, train, eval, compare, predict.

Exit codes: 0 success, 2 input or validation error, 3 schema mismatch,
1 anything else.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
from threadpoolctl import threadpool_limits

from .data import (
    IngestionError,
    SchemaError,
    build_dataset,
    load_data_dir,
    split_dataset,
)
from .model import ModelFormatError, SchemaMismatchError, load_model, recommendation_text, save_model
from .reviews import ProductReviewIndex
from .synth import GenConfig, generate as generate_market, write_marketplace
from .training import (
    TrainConfig,
    compare as compare_reports,
    encoder_from_descriptor,
    encoder_tensors,
    evaluate,
    make_encoder,
    train as train_model,
)

SPLITS = ("train", "validation", "test")


class InputError(click.ClickException):
    exit_code = 2


def _load_store(data, schema):
    return load_data_dir(data, schema)


def _split(store, seed):
    examples = build_dataset(store.transactions, store.customers, store.products, store.schema)
    return split_dataset(examples, seed)


def _load_bundle(path, schema):
    if not Path(path).exists():
        raise InputError(f"model file not found: {path}")
    return load_model(path, schema)


def _index_for(bundle, store, reviews=None, override=None):
    if not bundle.model.use_reviews:
        return None
    encoder = encoder_from_descriptor(bundle.encoder, bundle.encoder_tensors, override)
    return ProductReviewIndex.build(encoder, store.reviews if reviews is None else reviews)


def _evaluate_bundle(bundle, store, split_name, seed, override=None):
    seed = bundle.metadata.get("seed", 0) if seed is None else seed
    part = getattr(_split(store, seed), split_name)
    index = _index_for(bundle, store, override=override)
    return evaluate(bundle.model, part, store, index, split=split_name)


@click.group()
@click.option("--seed", type=int, default=None, help="Overrides every config seed.")
@click.pass_context
def cli(ctx, seed):
    """Size and fit prediction with review-aware residual networks."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed


@cli.command()
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON object with generator settings.")
@click.option("--n-customers", type=int)
@click.option("--n-products", type=int)
@click.option("--n-transactions", type=int)
@click.option("--small-rate", type=float)
@click.option("--large-rate", type=float)
@click.option("--review-rate", type=float)
@click.option("--review-signal", type=float)
@click.option("--size-threshold", type=float)
@click.pass_context
def generate(ctx, out, config_path, **overrides):
    """Write a synthetic marketplace into OUT."""
    settings = {}
    if config_path:
        settings.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
    settings.update({k: v for k, v in overrides.items() if v is not None})
    if ctx.obj["seed"] is not None:
        settings["seed"] = ctx.obj["seed"]
    config = GenConfig.from_dict(settings)
    config.validate()
    market = generate_market(config)
    write_marketplace(market, out)
    rates = market.realized_rates()
    click.echo(f"small rate {rates['small']:.4f} (target {config.small_rate:.4f})")
    click.echo(f"large rate {rates['large']:.4f} (target {config.large_rate:.4f})")


@cli.command()
@click.option("--data", required=True, type=click.Path(file_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), default=".")
@click.option("--encoder", default="hashing", show_default=True,
              help="hashing, fitclf or precomputed=<file>")
@click.option("--no-reviews", is_flag=True, help="Train the baseline without reviews.")
@click.option("--batch-size", type=int, default=2048, show_default=True)
@click.option("--lr", type=float, default=0.01, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--dim", type=int, default=768, show_default=True, help="Review vector width.")
@click.option("--verbose", is_flag=True)
@click.pass_context
def train(ctx, data, schema, out, encoder, no_reviews, batch_size, lr, epochs, dim, verbose):
    """Train a model; writes model.bin, train.log and val_report.json."""
    seed = ctx.obj["seed"] if ctx.obj["seed"] is not None else 0
    config = TrainConfig(batch_size=batch_size, learning_rate=lr, max_epochs=epochs, seed=seed,
                         encoder=encoder, use_reviews=not no_reviews)
    store = _load_store(data, schema)
    split = _split(store, seed)
    enc = index = None
    if config.use_reviews:
        enc = make_encoder(encoder, store, seed=seed, dim=dim)
        index = ProductReviewIndex.build(enc, store.reviews)
    model, log = train_model(config, split, store, enc, index, verbose=verbose)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    descriptor = enc.descriptor() if enc is not None else {"name": "none"}
    save_model(model, out / "model.bin", descriptor, encoder_tensors(enc), {"seed": seed})
    log.write(out / "train.log")
    report = evaluate(model, split.validation, store, index, split="validation")
    (out / "val_report.json").write_text(report.dumps(), encoding="utf-8")
    click.echo(f"best epoch {model.best_epoch_}, validation macro-F1 {report.macro_f1:.4f}")


@cli.command(name="eval")
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(file_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False), default=None)
@click.option("--split", "split_name", type=click.Choice(SPLITS), default="test", show_default=True)
@click.option("--encoder", default=None, help="precomputed=<file> to override the stored path.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="JSON report path (default: <split>_report.json next to the model).")
@click.pass_context
def eval_(ctx, model_path, data, schema, split_name, encoder, out):
    """Evaluate a model on one split of the data."""
    store = _load_store(data, schema)
    bundle = _load_bundle(model_path, store.schema)
    report = _evaluate_bundle(bundle, store, split_name, ctx.obj["seed"], encoder)
    report.model = Path(model_path).name
    out = Path(out) if out else Path(model_path).with_name(f"{split_name}_report.json")
    out.write_text(report.dumps(), encoding="utf-8")
    click.echo(report.to_table())


@cli.command()
@click.option("--baseline", required=True, type=click.Path(dir_okay=False))
@click.option("--candidate", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(file_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False), default=None)
@click.option("--split", "split_name", type=click.Choice(SPLITS), default="test", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print JSON instead of a table.")
@click.pass_context
def compare(ctx, baseline, candidate, data, schema, split_name, as_json):
    """Relative macro-F1 improvement of CANDIDATE over BASELINE."""
    store = _load_store(data, schema)
    base = _load_bundle(baseline, None)
    cand = _load_bundle(candidate, None)
    if base.schema_hash != cand.schema_hash:
        raise SchemaMismatchError(f"models disagree on schema: {base.schema_hash} vs "
                                  f"{cand.schema_hash}")
    if base.schema_hash != store.schema.hash:
        raise SchemaMismatchError(f"model schema hash {base.schema_hash} differs from data "
                                  f"schema hash {store.schema.hash}")
    seed = ctx.obj["seed"]
    if seed is None and base.metadata.get("seed") != cand.metadata.get("seed"):
        raise InputError("models were trained on different splits; pass --seed to pick one")
    r_base = _evaluate_bundle(base, store, split_name, seed)
    r_cand = _evaluate_bundle(cand, store, split_name, seed)
    result = compare_reports(r_base, r_cand)
    click.echo(json.dumps(result.to_json(), sort_keys=True) if as_json else result.to_table())


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(file_okay=False))
@click.option("--schema", type=click.Path(dir_okay=False), default=None)
@click.option("--customer", "customer_id", required=True)
@click.option("--product", "product_id", required=True)
@click.option("--encoder", default=None, help="precomputed=<file> to override the stored path.")
def predict(model_path, data, schema, customer_id, product_id, encoder):
    """Fit probabilities and recommendation for one customer and product."""
    store = _load_store(data, schema)
    bundle = _load_bundle(model_path, store.schema)
    if customer_id not in store.customers:
        raise InputError(f"unknown customer_id {customer_id}")
    if product_id not in store.products:
        raise InputError(f"unknown product_id {product_id}")
    vector = None
    own = store.reviews_by_product().get(product_id, [])
    index = _index_for(bundle, store, own, encoder)
    if index is not None:
        vector = index.aggregate(product_id)
    pred = bundle.model.predict_example(store.customers[customer_id],
                                        store.products[product_id], vector)
    for name, p in zip(("small", "fit", "large"), pred.probabilities):
        click.echo(f"{name} {p:.6f}")
    click.echo(f"label {pred.label.value}")
    click.echo(f"recommendation {recommendation_text(pred.label)}".rstrip())


def main(argv=None) -> int:
    threads = os.environ.get("FITNET_THREADS", "1")
    try:
        n_threads = int(threads)
        if n_threads < 1:
            raise ValueError
    except ValueError:
        click.echo(f"Error: FITNET_THREADS must be a positive integer, got {threads!r}", err=True)
        return 2
    with threadpool_limits(n_threads):
        try:
            cli.main(args=argv, prog_name="fitnet", standalone_mode=False)
        except click.exceptions.Abort:
            click.echo("Aborted.", err=True)
            return 1
        except click.ClickException as exc:
            exc.show()
            return exc.exit_code
        except SchemaMismatchError as exc:
            click.echo(f"Error: {exc}", err=True)
            return 3
        except (IngestionError, SchemaError, ModelFormatError, KeyError, ValueError,
                FileNotFoundError, json.JSONDecodeError) as exc:
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
            click.echo(f"Error: {msg}", err=True)
            return 2
        except Exception as exc:  # noqa: BLE001
            click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
