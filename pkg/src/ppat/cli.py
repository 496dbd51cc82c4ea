"""Command-line interface: dataset tooling, captioning, training,
assessment, evaluation, ablations, and the HTTP service."""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from . import report
from .captions import (
    CaptionCache,
    MockCaptionClient,
    RemoteCaptionClient,
    default_prompt,
    ensure_captions,
    mock_caption,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .data import make_folds, read_corpus, synth_corpus, write_corpus
from .errors import PpatError
from .evaluate import cross_validate, cross_validate_logreg, cross_validate_mlp, run_ablations
from .model import (
    ModelConfig,
    VsllmModel,
    config_from_dict,
    config_to_dict,
    train,
)
from .raster import rasterize, write_raw_image
from .service import canonical_json, create_app
from .sketch import decompose, parse_sketch_json, serialize_sketch


def _load_config(path: str | None, epochs: int | None, seed: int | None) -> ModelConfig:
    if path is None:
        config = ModelConfig()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            config = config_from_dict(json.load(fh))
    if epochs is not None:
        config = dataclasses.replace(config, epochs=epochs)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


def _caption_texts(records, cache_path: str | None, template_version: str) -> dict[str, str]:
    """Caption texts per record id; cache-first, mock provider for misses."""
    if cache_path is None:
        cache_path = Path("captions.ndjson")
    cache = CaptionCache(cache_path)
    prompt = default_prompt(template_version)
    client = MockCaptionClient()
    by_id = ensure_captions([r.sketch for r in records], prompt, client, cache)
    return {record_id: rec.caption_text for record_id, rec in by_id.items()}


@click.group()
def main():
    """Drawing-based depression screening toolkit."""


@main.command(name="decompose")
@click.argument("sketch_file", type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), required=True, help="output directory")
def decompose_cmd(sketch_file, out_dir):
    """Split a sketch into its 12 cumulative sub-sketches."""
    sketch = parse_sketch_json(Path(sketch_file).read_bytes())
    seq = decompose(sketch)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, sub in enumerate(seq.sub_sketches, start=1):
        (out / f"{sketch.sketch_id}_{i:02d}.json").write_text(serialize_sketch(sub) + "\n")
    click.echo("step,cumulative_strokes")
    for i, count in enumerate(seq.cumulative_counts, start=1):
        click.echo(f"{i},{count}")


@main.command()
@click.argument("sketch_file", type=click.Path(exists=True))
@click.option("--size", default=96, show_default=True, help="output width and height")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--strip", "strip_path", type=click.Path(), default=None,
              help="also write a 12-frame figure (PNG)")
def render(sketch_file, size, out_path, strip_path):
    """Rasterize a sketch; .png extension writes PNG, anything else writes
    the raw RGB container (8-byte width/height header + pixels)."""
    sketch = parse_sketch_json(Path(sketch_file).read_bytes())
    image = rasterize(sketch, size, size)
    out = Path(out_path)
    if out.suffix.lower() == ".png":
        from PIL import Image

        Image.frombytes("RGB", (image.width, image.height), image.pixels).save(out)
    else:
        write_raw_image(image, out)
    click.echo(f"wrote {out} ({image.width}x{image.height}, ink {image.ink_coverage():.4f})")
    if strip_path:
        report.plot_frame_strip(sketch, strip_path, size)
        click.echo(f"wrote {strip_path}")


@main.command()
@click.argument("corpus_file", type=click.Path(exists=True))
@click.option("--provider", type=click.Choice(["mock", "remote"]), default="mock",
              show_default=True)
@click.option("--endpoint", default=None, help="remote provider URL")
@click.option("--template-version", default="v1", show_default=True)
@click.option("--cache", "cache_path", type=click.Path(), default="captions.ndjson",
              show_default=True)
@click.option("--concurrency", default=4, show_default=True)
def caption(corpus_file, provider, endpoint, template_version, cache_path, concurrency):
    """Generate captions for every sketch in a corpus, cache-first."""
    records = read_corpus(corpus_file)
    cache = CaptionCache(cache_path)
    before = len(cache)
    if provider == "remote":
        if not endpoint:
            raise click.UsageError("--endpoint is required with --provider remote")
        client = RemoteCaptionClient(endpoint)
    else:
        client = MockCaptionClient()
    prompt = default_prompt(template_version)
    ensure_captions([r.sketch for r in records], prompt, client, cache, concurrency)
    click.echo(
        f"captioned {len(records)} sketches ({len(cache) - before} new, "
        f"{before} already cached) -> {cache_path}"
    )


@main.command(name="synth")
@click.option("--n", default=690, show_default=True)
@click.option("--pos-frac", default=117 / 690, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def synth_cmd(n, pos_frac, seed, out_path):
    """Generate a seeded synthetic corpus."""
    records = synth_corpus(n, pos_frac, seed)
    write_corpus(records, out_path)
    positives = sum(r.label for r in records)
    click.echo(f"wrote {len(records)} records ({positives} positive) -> {out_path}")


@main.command(name="train")
@click.option("--corpus", "corpus_file", type=click.Path(exists=True), required=True)
@click.option("--captions", "captions_path", type=click.Path(), default=None,
              help="caption cache (generated with the mock provider if absent)")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "ckpt_path", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=None, help="override config epochs")
@click.option("--seed", type=int, default=None, help="override config seed")
@click.option("--report-dir", type=click.Path(), default=None,
              help="write the training curve figure and epoch log here")
def train_cmd(corpus_file, captions_path, config_path, ckpt_path, epochs, seed, report_dir):
    """Train on a corpus and write a checkpoint."""
    config = _load_config(config_path, epochs, seed)
    records = read_corpus(corpus_file)
    captions = _caption_texts(records, captions_path, "v1")
    dataset = [(r.sketch, captions.get(r.record_id, ""), r.label) for r in records]
    result = train(dataset, config)
    final = result.log[-1]
    save_checkpoint(
        ckpt_path,
        result.params,
        metadata={
            "config": config_to_dict(config),
            "epochs_run": len(result.log),
            "stopped": result.stopped,
            "final_train_accuracy": final.train_accuracy,
        },
    )
    click.echo(
        f"trained {len(result.log)} epochs (stop: {result.stopped}), "
        f"final loss {final.mean_loss:.4f}, train acc {final.train_accuracy:.3f}"
    )
    click.echo(f"wrote {ckpt_path}")
    if report_dir:
        out = Path(report_dir)
        report.write_metrics_json([s.to_dict() for s in result.log], out / "train_log.json")
        report.plot_training_curve(result.log, out / "train_curve.png")
        click.echo(f"wrote {out / 'train_log.json'} and {out / 'train_curve.png'}")


@main.command()
@click.option("--ckpt", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--sketch", "sketch_file", type=click.Path(exists=True), required=True)
@click.option("--caption", "caption_text", default=None,
              help="caption text; defaults to the offline mock caption")
def assess(ckpt_path, sketch_file, caption_text):
    """Run inference on one sketch and print the assessment JSON."""
    params, metadata = load_checkpoint(ckpt_path)
    config = config_from_dict(metadata["config"])
    model = VsllmModel(config)
    sketch = parse_sketch_json(Path(sketch_file).read_bytes())
    if caption_text is None:
        caption_text = mock_caption(sketch)
    assessment = model.forward(sketch, caption_text, params)
    click.echo(canonical_json(assessment.to_dict()))


@main.command(name="eval")
@click.option("--corpus", "corpus_file", type=click.Path(exists=True), required=True)
@click.option("--captions", "captions_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--folds", default=5, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--epochs", type=int, default=None, help="override config epochs")
@click.option("--baselines/--no-baselines", default=True, show_default=True,
              help="also run the feature-vector baselines on the same folds")
@click.option("--out-dir", type=click.Path(), default="eval_out", show_default=True)
def eval_cmd(corpus_file, captions_path, config_path, folds, seed, epochs, baselines, out_dir):
    """Cross-validate the pipeline (and baselines) on one fold plan."""
    config = _load_config(config_path, epochs, seed)
    records = read_corpus(corpus_file)
    captions = _caption_texts(records, captions_path, "v1")
    plan = make_folds(records, seed, folds)
    out = Path(out_dir)

    results = {"pipeline": cross_validate(records, captions, config, plan)}
    if baselines:
        results["logreg"] = cross_validate_logreg(records, plan)
        results["mlp"] = cross_validate_mlp(records, plan)
    report.write_metrics_json(results, out / "metrics.json")
    report.write_fold_csv(list(results.values()), out / "folds.csv")
    report.plot_fold_accuracies(results, out / "fold_accuracy.png")
    for name, metrics in results.items():
        click.echo(f"{name}: mean 5-fold accuracy {metrics['mean_acc']:.4f}")
    click.echo(f"wrote {out / 'metrics.json'}, {out / 'folds.csv'}, {out / 'fold_accuracy.png'}")


@main.command()
@click.option("--corpus", "corpus_file", type=click.Path(exists=True), required=True)
@click.option("--captions", "captions_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--epochs", type=int, default=None, help="override config epochs")
@click.option("--out-dir", type=click.Path(), default="ablation_out", show_default=True)
def ablate(corpus_file, captions_path, config_path, seed, epochs, out_dir):
    """Run the four ablation rows (no_caption, no_temporal, ce, full) on one
    shared fold plan and write the comparison table."""
    config = _load_config(config_path, epochs, seed)
    records = read_corpus(corpus_file)
    captions = _caption_texts(records, captions_path, "v1")
    plan = make_folds(records, seed)
    rows = run_ablations(records, captions, config, plan)
    out = Path(out_dir)
    report.write_metrics_json(rows, out / "ablation.json")
    report.write_fold_csv(rows, out / "ablation.csv")
    report.plot_ablation_rows(rows, out / "ablation.png")
    click.echo("row,mean_acc")
    for row in rows:
        click.echo(f"{row['row']},{row['mean_acc']:.4f}")
    click.echo(f"wrote {out / 'ablation.json'}, {out / 'ablation.csv'}, {out / 'ablation.png'}")


@main.command()
@click.option("--ckpt", "ckpt_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.option("--provider", type=click.Choice(["mock", "remote"]), default="mock",
              show_default=True)
@click.option("--endpoint", default=None, help="remote caption provider URL")
@click.option("--cors-origin", multiple=True, default=("*",), show_default=True)
@click.option("--token", default=None, help="require this bearer token")
def serve(ckpt_path, store_dir, host, port, provider, endpoint, cors_origin, token):
    """Run the HTTP assessment service."""
    import uvicorn

    app = create_app(
        store_dir,
        ckpt_path,
        provider=provider,
        endpoint=endpoint,
        cors_origins=tuple(cors_origin),
        auth_token=token,
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


def entrypoint():
    try:
        main(standalone_mode=True)
    except PpatError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
