"""Corpus-to-report harness for code-switched Arabic-English speech translation.

Exit codes: 0 success, 1 usage or config error, 2 partial pipeline failure,
3 evaluation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchError, degradation, measure_latency, measure_throughput, render_bench
from .clients import EmbeddingClient, ChatClient
from .config import ConfigError, HarnessConfig, load_config, parse_config, validate_paths
from .corpus import CorpusFormatError, DuplicateSegmentError, codeswitch_stats, dump_hypotheses, \
    load_corpus, load_hypotheses, validate_corpus
from .metrics.report import MetricReport, render_markdown, timestamp_metadata
from .metrics.scoring import EvaluationError, IncomparableReportsError, fingerprint, rank_systems, \
    render_leaderboard, score_system
from .pipeline import CheckpointError, batch_run
from .preprocess.audio import MelConfig, read_wav, resample_audio, segment_audio, mel_spectrogram
from .preprocess.text import normalize_text
from .prompts import translation_template
from .tokenize.bpe import TokenizerModel, train_bpe
from .tokenize.compare import compare_tokenizers, corpus_fertility, render_comparison
from .tokenize.demo import DEMO_MODELS, load_demo_model

log = logging.getLogger("codeswitch_eval")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_EVAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------- helpers


def _config(args) -> HarnessConfig:
    cfg = load_config(args.config) if args.config else parse_config({}, Path.cwd(), check_paths=False)
    changes = {}
    if getattr(args, "corpus", None):
        changes["corpus"] = type(cfg.corpus)(Path(args.corpus), args.format or cfg.corpus.format,
                                              cfg.corpus.expect)
    if getattr(args, "output_dir", None):
        changes["output_dir"] = Path(args.output_dir)
    if getattr(args, "metrics", None):
        changes["metrics"] = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    if getattr(args, "max_in_flight", None):
        changes["max_in_flight"] = args.max_in_flight
    if changes:
        cfg = cfg.replace(**changes)
        validate_paths(cfg)
    return cfg


def _corpus(cfg: HarnessConfig):
    if cfg.corpus.path is None:
        raise UsageError("no corpus given (set [corpus].path or pass --corpus)")
    return load_corpus(cfg.corpus.path, cfg.corpus.format)


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _tokenizer_models(cfg: HarnessConfig, overrides: list[str]) -> dict[str, TokenizerModel]:
    refs = dict(cfg.tokenizer.models)
    for item in overrides or []:
        name, sep, ref = item.partition("=")
        if not sep:
            raise UsageError(f"--model expects NAME=PATH, got {item!r}")
        refs[name] = ref
    if not refs:
        refs = {name: f"demo:{name}" for name in DEMO_MODELS}
    models = {}
    for name, ref in refs.items():
        models[name] = load_demo_model(ref[5:]) if ref.startswith("demo:") else TokenizerModel.load(ref)
    return models


# --------------------------------------------------------------------------- subcommands


def cmd_ingest(args) -> int:
    cfg = _config(args)
    corpus = _corpus(cfg)
    expect = dict(cfg.corpus.expect or {})
    for split in ("test", "train"):
        value = getattr(args, f"expect_{split}")
        if value is not None:
            expect[split] = value
    report = validate_corpus(corpus, expect or None)
    stats = codeswitch_stats(corpus, normalize=cfg.normalization is not None, config=cfg.normalization)
    doc = {"corpus": corpus.name, "n_segments": len(corpus), "validation": report.to_dict(),
           "codeswitch": stats.to_dict(), "metadata": timestamp_metadata()}
    _write_json(cfg.output_dir / f"{corpus.name}.ingest.json", doc)
    counts = report.split_counts
    print(f"{corpus.name}: {len(corpus)} segments "
          f"(test {counts['test']}, train {counts['train']}, other {counts['other']})")
    print(f"arabic tokens {stats.arabic_token_fraction:.3f}, latin {stats.latin_token_fraction:.3f}, "
          f"segments with a switch {stats.segments_with_switch}")
    if not report.passed:
        print(f"validation failed: deltas {report.deltas}", file=sys.stderr)
        return EXIT_EVAL
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _config(args)
    if args.text is not None:
        print(normalize_text(args.text, cfg.normalization) if cfg.normalization else args.text)
        return EXIT_OK
    if args.audio:
        items = [(Path(args.audio).stem, Path(args.audio))]
    else:
        corpus = _corpus(cfg)
        items = [(s.id, corpus.audio_path(s)) for s in corpus if s.audio is not None]
    out = cfg.output_dir / "features"
    out.mkdir(parents=True, exist_ok=True)
    mel_cfg = MelConfig()
    n_clips = 0
    for sid, path in items:
        clip = resample_audio(read_wav(path, sid))
        for k, piece in enumerate(segment_audio(clip)):
            np.save(out / f"{sid}_{k:03d}.npy", mel_spectrogram(piece, mel_cfg).data.astype(np.float32))
            n_clips += 1
    print(f"wrote {n_clips} feature matrices for {len(items)} recording(s) to {out}")
    return EXIT_OK


def cmd_tokenize(args) -> int:
    cfg = _config(args)
    if args.train is not None:
        if not args.save:
            raise UsageError("--train needs --save PATH")
        corpus = _corpus(cfg)
        model = train_bpe([s.source_cs for s in corpus], args.train)
        model.save(args.save)
        print(f"trained {len(model.merges)} merges, saved to {args.save}")
        return EXIT_OK
    models = _tokenizer_models(cfg, args.model)
    if args.stats:
        corpus = _corpus(cfg)
        fert = corpus_fertility(models, [s.source_cs for s in corpus])
        lines = ["| Model | Fertility |", "|---|---:|"] + [f"| {k} | {v:.3f} |" for k, v in fert.items()]
        print("\n".join(lines))
        return EXIT_OK
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8").strip("\n")
    elif args.text is not None:
        text = args.text
    else:
        raise UsageError("give TEXT, --file or --stats")
    print(render_comparison(compare_tokenizers(models, text)))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    corpus = _corpus(cfg)
    hyps = load_hypotheses(args.hyp, args.system_id, args.target)
    embed = grader = None
    if "bert_f1" in cfg.metrics and "embeddings" in cfg.endpoints:
        embed = EmbeddingClient(cfg.endpoints["embeddings"])
    if "llm_grade" in cfg.metrics and "grader" in cfg.endpoints:
        grader = ChatClient(cfg.endpoints["grader"])
    try:
        report = score_system(corpus, hyps, cfg.metrics, embed_client=embed, grader_client=grader,
                              normalization=cfg.normalization)
    finally:
        for c in (embed, grader):
            if c is not None:
                c.close()
    stem = cfg.output_dir / f"{hyps.system_id}.{hyps.target_lang}"
    stem.parent.mkdir(parents=True, exist_ok=True)
    report.save(stem.with_suffix(stem.suffix + ".report.json"))
    table = render_markdown([report])
    _write_text(stem.with_suffix(stem.suffix + ".report.md"), table)
    print(table, end="")
    print(f"coverage {report.coverage:.3f} over {report.n_segments} segment(s)")
    return EXIT_OK


def _pipeline_fingerprint(cfg: HarnessConfig, target: str) -> str:
    doc = {
        "asr": cfg.endpoints["asr"].model_id,
        "mt": cfg.endpoints["mt"].model_id if "mt" in cfg.endpoints else None,
        "target": target,
        "prompt": translation_template(target).to_dict() if target != "cs" else None,
        "normalization": cfg.normalization.to_dict() if cfg.normalization else None,
        "join": " ",
    }
    return fingerprint(doc)


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    asr = cfg.endpoint("asr")
    mt = cfg.endpoint("mt") if args.target != "cs" else cfg.endpoints.get("mt", asr)
    corpus = _corpus(cfg)
    out = cfg.output_dir
    checkpoint = Path(args.checkpoint) if args.checkpoint else out / f"{args.system_id}.{args.target}.checkpoint.jsonl"
    result = batch_run(corpus, asr, mt, args.target, checkpoint, system_id=args.system_id,
                       max_in_flight=cfg.max_in_flight, normalization=cfg.normalization)
    stem = f"{args.system_id}.{args.target}"
    dump_hypotheses(result.hypotheses, out / f"{stem}.hyp.jsonl")
    dump_hypotheses(result.transcripts, out / f"{args.system_id}.asr.hyp.jsonl")
    runlog = result.log.to_dict()
    wall = runlog.pop("wall_s")
    doc = {"config_fingerprint": _pipeline_fingerprint(cfg, args.target), "system_id": args.system_id,
           "target_lang": args.target, **runlog, "metadata": {**timestamp_metadata(), "wall_s": wall}}
    _write_json(out / f"{stem}.runlog.json", doc)
    print(f"{len(result.hypotheses)} hypotheses ({len(result.log.resumed)} resumed), "
          f"{len(result.log.failures)} failure(s); fingerprint {doc['config_fingerprint']}")
    return EXIT_PARTIAL if result.log.partial_failure else EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    results, deltas, doc = [], None, {}
    if args.prompts:
        prompts = [ln for ln in Path(args.prompts).read_text(encoding="utf-8").splitlines() if ln.strip()]
        results.append(measure_throughput(cfg.endpoint("mt"), prompts, args.warmup))
    if args.audio:
        clip = segment_audio(resample_audio(read_wav(args.audio)))[0]
        results.append(measure_latency(cfg.endpoint("asr"), clip, args.repeats))
    if args.full or args.quant:
        if not (args.full and args.quant):
            raise UsageError("--full and --quant go together")
        full, quant = MetricReport.load(args.full), MetricReport.load(args.quant)
        deltas = degradation(full, quant)
        doc["config_fingerprint"] = full.config_fingerprint
        doc["degradation"] = deltas
    if not results and deltas is None:
        raise UsageError("nothing to benchmark: give --prompts, --audio or --full/--quant")
    doc["results"] = [r.to_dict() for r in results]
    doc["metadata"] = timestamp_metadata()
    doc.setdefault("config_fingerprint", fingerprint({"endpoints": cfg.to_dict()["endpoints"]}))
    table = render_bench(results, deltas)
    _write_json(cfg.output_dir / "bench.json", doc)
    _write_text(cfg.output_dir / "bench.md", table + f"\nconfig fingerprint: {doc['config_fingerprint']}\n")
    print(table, end="")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _config(args)
    reports = [MetricReport.load(p) for p in args.reports]
    table = render_markdown(reports)
    doc = {"reports": [r.system_id for r in reports]}
    if args.rank:
        entries = rank_systems(reports, args.rank)
        board = render_leaderboard(entries, args.rank)
        table += "\n" + board + f"\nconfig fingerprint: {reports[0].config_fingerprint}\n"
        doc["config_fingerprint"] = reports[0].config_fingerprint
        doc["rank_by"] = args.rank
        doc["leaderboard"] = [{"rank": e.rank, "system_id": e.system_id, "value": e.value} for e in entries]
    else:
        doc["config_fingerprints"] = sorted({r.config_fingerprint for r in reports})
    doc["metadata"] = timestamp_metadata()
    _write_json(cfg.output_dir / "report.json", doc)
    _write_text(cfg.output_dir / "report.md", table)
    print(table, end="")
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-c", "--config", help="TOML config file")
    common.add_argument("--output-dir", help="override output_dir")
    common.add_argument("-v", "--verbose", action="store_true")

    corpus_opts = _Parser(add_help=False)
    corpus_opts.add_argument("--corpus", help="override corpus.path")
    corpus_opts.add_argument("--format", choices=("jsonl", "tsv"), help="override corpus.format")

    parser = _Parser(prog="codeswitch-eval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common, corpus_opts], help="load and validate a corpus")
    p.add_argument("--expect-test", type=int)
    p.add_argument("--expect-train", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", parents=[common, corpus_opts], help="normalize text or extract log-mel features")
    p.add_argument("--text", help="print the normalized form of TEXT")
    p.add_argument("--audio", help="one WAV file instead of the corpus audio")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("tokenize", parents=[common, corpus_opts], help="compare tokenizers")
    p.add_argument("text", nargs="?")
    p.add_argument("--file")
    p.add_argument("--model", action="append", metavar="NAME=PATH", help="add or replace a tokenizer model")
    p.add_argument("--stats", action="store_true", help="aggregate fertility over the corpus source side")
    p.add_argument("--train", type=int, metavar="VOCAB", help="train a BPE model on the corpus source side")
    p.add_argument("--save", help="where --train writes the model")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("evaluate", parents=[common, corpus_opts], help="score a hypothesis file")
    p.add_argument("--hyp", required=True, help="{id, text} JSONL")
    p.add_argument("--target", required=True, choices=("en", "ar", "cs"))
    p.add_argument("--system-id")
    p.add_argument("--metrics", help="comma-separated metric set")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common, corpus_opts], help="run the cascade over the corpus")
    p.add_argument("--target", required=True, choices=("en", "ar", "cs"))
    p.add_argument("--checkpoint")
    p.add_argument("--system-id", default="cascade")
    p.add_argument("--max-in-flight", type=int)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", parents=[common], help="throughput, latency and degradation")
    p.add_argument("--prompts", help="file with one prompt per line")
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--audio", help="WAV whose first 30 s clip is timed")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--full", help="report of the full-precision system")
    p.add_argument("--quant", help="report of the quantized system")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", parents=[common], help="render and rank saved reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--rank", metavar="METRIC")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, CheckpointError, CorpusFormatError, DuplicateSegmentError,
            FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvaluationError, IncomparableReportsError, BenchError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
