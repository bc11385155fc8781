"""Command-line entry point.

Exit codes are a stable contract: 0 success, 2 config error, 3 input error,
4 backend unavailable.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click

from . import dataprep
from .backends import BackendHandle, ROLE_SPAN_EXTRACTOR
from .codes import select_control_codes
from .config import AppConfig, load_config
from .errors import BackendUnavailable, ConfigError, InputError, PipelineUnavailable
from .models import Paragraph
from .pipeline import (
    BASELINE_VARIANTS,
    run_baseline,
    run_pipeline,
)
from .textanalysis import extract_keyphrases

log = logging.getLogger("consistent")

EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_BACKEND = 4


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(exc, EXIT_CONFIG)
        except InputError as exc:
            _fail(exc, EXIT_INPUT)
        except (BackendUnavailable, PipelineUnavailable) as exc:
            _fail(exc, EXIT_BACKEND)
    return wrapper


def _fail(exc: Exception, code: int):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Path to the YAML config file.")
@click.option("--jobs", type=int, default=None,
              help="Worker pool size for batch commands (default: logical cores).")
@click.option("--log-level", default="warning", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
@click.pass_context
def main(ctx, config_path, jobs, log_level):
    """Question-generation pipeline and editorial review service."""
    logging.basicConfig(level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {
        "config_path": config_path,
        "jobs": jobs or os.cpu_count() or 1,
    }


def _config(ctx) -> AppConfig:
    cfg = load_config(ctx.obj["config_path"])
    log.info("effective config: %s", json.dumps(cfg.describe(), sort_keys=True))
    return cfg


def _emit_lines(lines, out_path: str | None):
    if out_path and out_path != "-":
        with open(out_path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")
    else:
        for line in lines:
            click.echo(line)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _read_paragraphs(path: str) -> list[Paragraph]:
    paragraphs = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                paragraphs.append(Paragraph.from_dict(data))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise InputError(f"{path}:{i + 1}: bad paragraph record: {exc}") from exc
    if not paragraphs:
        raise InputError(f"{path}: no paragraph records")
    return paragraphs


@main.command()
@click.option("--file", "file_path", type=click.Path(exists=True), default=None,
              help="Read text from this file instead of stdin.")
@click.option("--max-ngram", default=3, show_default=True)
@click.option("--top-k", default=10, show_default=True)
@click.option("--dedup", default=0.9, show_default=True)
@guarded
def keywords(file_path, max_ngram, top_k, dedup):
    """Extract salient keyphrases from UTF-8 text (stdin or --file)."""
    if file_path:
        with open(file_path, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = sys.stdin.read()
    for kp in extract_keyphrases(text, max_ngram=max_ngram, top_k=top_k, dedup_threshold=dedup):
        click.echo(_dumps({"phrase": kp.phrase, "score": kp.score, "ngram_len": kp.ngram_len}))


@main.command()
@click.option("--paragraph-file", required=True, type=click.Path(exists=True))
@click.option("--extractor-url", default=None,
              help="Span-extractor endpoint; overrides the config entry.")
@click.option("--max-codes", type=int, default=None)
@click.pass_context
@guarded
def codes(ctx, paragraph_file, extractor_url, max_codes):
    """Select control codes for each paragraph in a JSONL file."""
    cfg = _config(ctx)
    code_cfg = cfg.codes
    if max_codes is not None:
        import dataclasses

        code_cfg = dataclasses.replace(code_cfg, max_codes=max_codes)
    if extractor_url:
        extractor = BackendHandle(role=ROLE_SPAN_EXTRACTOR, endpoint=extractor_url)
    else:
        extractor = cfg.handles().span_extractor
    for paragraph in _read_paragraphs(paragraph_file):
        for code in select_control_codes(paragraph, extractor, code_cfg):
            click.echo(_dumps(code.to_dict()))


@main.command()
@click.option("--paragraphs", "paragraphs_path", required=True, type=click.Path(exists=True),
              help='JSONL file of {"id","text","domain","headline"} records.')
@click.option("--out", "out_path", default="-", show_default=True)
@click.option("--seed", type=int, default=None, help="Override decode seed.")
@click.pass_context
@guarded
def run(ctx, paragraphs_path, out_path, seed):
    """Run the full pipeline over a paragraph batch; emits one result per line."""
    cfg = _config(ctx)
    decode_cfg = cfg.decode
    if seed is not None:
        import dataclasses

        decode_cfg = dataclasses.replace(decode_cfg, seed=seed)
    handles = cfg.handles()
    paragraphs = _read_paragraphs(paragraphs_path)

    def process(paragraph: Paragraph) -> str:
        result = run_pipeline(paragraph, handles, cfg.codes, cfg.filter, decode_cfg)
        return _dumps(result.to_dict())

    with ThreadPoolExecutor(max_workers=ctx.obj["jobs"]) as pool:
        lines = list(pool.map(process, paragraphs))
    _emit_lines(lines, out_path)


@main.command()
@click.option("--variant", required=True,
              type=click.Choice(["lead", "random-in", "random-out", "squad"]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--paragraphs", "paragraphs_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default="-", show_default=True)
@click.pass_context
@guarded
def baseline(ctx, variant, seed, paragraphs_path, out_path):
    """Run a comparison variant (no answerability filtering)."""
    cfg = _config(ctx)
    internal = {"lead": "lead", "random-in": "random_in",
                "random-out": "random_out", "squad": "squad_style"}[variant]
    assert internal in BASELINE_VARIANTS
    handles = cfg.handles()
    lines = []
    for paragraph in _read_paragraphs(paragraphs_path):
        result = run_baseline(
            internal, paragraph, handles, cfg.codes, cfg.filter, cfg.decode,
            seed=seed, out_of_paragraph_vocab=list(cfg.baselines.random_out_vocab),
        )
        lines.append(_dumps(result.to_dict()))
    _emit_lines(lines, out_path)


@main.command("prep-triples")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--rejects", "rejects_path", required=True, type=click.Path())
@click.option("--min-answer-tokens", default=dataprep.DEFAULT_MIN_ANSWER_TOKENS,
              show_default=True)
@guarded
def prep_triples(in_path, out_path, rejects_path, min_answer_tokens):
    """Build training triples from a JSONL file of QA pairs."""
    n_triples = n_rejects = 0
    with open(in_path, encoding="utf-8") as src, \
            open(out_path, "w", encoding="utf-8") as out, \
            open(rejects_path, "w", encoding="utf-8") as rej:
        for item in dataprep.stream_triples(src, min_answer_tokens):
            if isinstance(item, dataprep.TrainingTriple):
                out.write(_dumps(item.to_dict()) + "\n")
                n_triples += 1
            else:
                rej.write(_dumps(item.to_dict()) + "\n")
                n_rejects += 1
    click.echo(f"triples={n_triples} rejects={n_rejects} total={n_triples + n_rejects}",
               err=True)


@main.command("validate-eval")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--strict", is_flag=True,
              help="Require the canonical per-domain counts of a full set.")
@guarded
def validate_eval(in_path, strict):
    """Validate an evaluation-set JSONL file and report per-domain counts."""
    records, counts = dataprep.load_eval_set(in_path, strict=strict)
    report = {"total": len(records), "domains": counts, "strict": strict}
    click.echo(_dumps(report))


@main.command()
@click.option("--listen", default=None, help="host:port (overrides config).")
@click.option("--ui-dir", default=None, type=click.Path(),
              help="Directory of built dashboard assets to serve at /.")
@click.pass_context
@guarded
def serve(ctx, listen, ui_dir):
    """Start the review/publish HTTP service."""
    import uvicorn

    from .service.app import create_app
    from .store import ReviewStore

    cfg = _config(ctx)
    addr = listen or cfg.service.listen_addr
    host, _, port = addr.partition(":")
    if not port:
        raise ConfigError(f"listen address must be host:port, got {addr!r}")
    store = ReviewStore(cfg.service.store_path)
    app = create_app(store, auth_token=cfg.service.auth_token,
                     ui_dir=ui_dir or cfg.service.ui_dir)
    uvicorn.run(app, host=host, port=int(port), log_level="warning")


if __name__ == "__main__":
    main()
