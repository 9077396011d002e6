"""Command-line entry points.

A single declarative YAML config drives full runs (``run``); every stage
is also exposed as its own subcommand for shell-pipeline composition.
Exit codes: 0 success, 1 validation failure, 2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from corpusprep import ngram_lm, pipeline, subword
from corpusprep.config import ConfigError, load_config
from corpusprep.core import read_jsonl, write_jsonl, write_rejects

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_STAGE = 2


def _add_config_arg(p):
    p.add_argument("--config", required=True, help="pipeline config YAML")


def _add_io_args(p):
    p.add_argument("--input", required=True, help="input JSONL")
    p.add_argument("--output", required=True, help="output JSONL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corpusprep",
        description="Corpus curation and pretraining data preparation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a pipeline config")
    _add_config_arg(p)

    p = sub.add_parser("run", help="run the configured pipeline")
    _add_config_arg(p)
    p.add_argument("--resume", action="store_true", help="resume from manifest")

    p = sub.add_parser("stats", help="render the report table for a finished run")
    p.add_argument("--report", required=True, help="path to report.json")

    for stage in ("filter", "dedup-exact", "dedup-near", "lm-score", "token-count",
                  "sample"):
        p = sub.add_parser(stage, help=f"run only the {stage} stage")
        _add_config_arg(p)
        _add_io_args(p)

    p = sub.add_parser("pack", help="pack and mask tokenized documents")
    _add_config_arg(p)
    p.add_argument("--input", required=True, help="input JSONL")
    p.add_argument("--output", required=True, help="output .bin path")
    p.add_argument("--sidecar", default=None, help="metadata JSONL path")

    p = sub.add_parser("lm-train", help="train the n-gram LM on a reference corpus")
    p.add_argument("--input", required=True, help="reference corpus JSONL")
    p.add_argument("--output", required=True, help="model file path")
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--min-count", type=int, default=2)

    p = sub.add_parser("tokenize", help="tokenize text against a vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--dump", action="store_true", help="emit id:piece pairs")

    return parser


_STAGE_FNS = {
    "filter": pipeline.stage_filter,
    "dedup-exact": pipeline.stage_dedup_exact,
    "dedup-near": pipeline.stage_dedup_near,
    "lm-score": pipeline.stage_lm_score,
    "token-count": pipeline.stage_token_count,
    "sample": pipeline.stage_sample,
}


def _run_single_stage(args) -> int:
    cfg = load_config(args.config)
    docs = list(read_jsonl(args.input))
    kept, stats, rejects = _STAGE_FNS[args.command](docs, cfg)
    write_jsonl(kept, args.output)
    write_rejects(rejects, args.output + ".rejects")
    print(json.dumps(stats.to_dict(), ensure_ascii=False, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            load_config(args.config)
            print("config ok")
            return EXIT_OK

        if args.command == "run":
            cfg = load_config(args.config)
            report = pipeline.run_pipeline(cfg, resume=args.resume)
            report.check_conservation()
            print(pipeline.report_table(report.to_dict()))
            print(
                f"total wall time: {report.total_wall_time:.2f}s", file=sys.stderr
            )
            return EXIT_OK

        if args.command == "stats":
            with open(args.report, encoding="utf-8") as fh:
                print(pipeline.report_table(json.load(fh)))
            return EXIT_OK

        if args.command in _STAGE_FNS:
            return _run_single_stage(args)

        if args.command == "pack":
            cfg = load_config(args.config)
            docs = list(read_jsonl(args.input))
            sidecar = args.sidecar or str(Path(args.output).with_suffix(".meta.jsonl"))
            _, stats, _ = pipeline.stage_pack(
                docs, cfg, out_bin=args.output, out_sidecar=sidecar
            )
            print(json.dumps(stats.to_dict(), ensure_ascii=False, indent=2))
            return EXIT_OK

        if args.command == "lm-train":
            docs = read_jsonl(args.input)
            model = ngram_lm.train_kn(docs, order=args.order, min_count=args.min_count)
            model.save(args.output)
            print(
                f"trained order-{model.order} model: |vocab|={model.vocab_size}, "
                f"{model.total_tokens} top-order grams"
            )
            return EXIT_OK

        if args.command == "tokenize":
            vocab = subword.load_vocab(args.vocab)
            ids = subword.tokenize(args.text, vocab)
            if args.dump:
                for i in ids:
                    print(f"{i}:{subword.escape_token(vocab.pieces[i])}")
            else:
                print(" ".join(str(i) for i in ids))
            return EXIT_OK

        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return EXIT_VALIDATION
    except subword.VocabError as e:
        print(f"vocabulary error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except pipeline.StageFailure as e:
        print(f"stage failure: {e}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
