"""Stage sequencing, resume manifest, and run reporting.

Every stage reads the previous stage's JSONL, writes its own JSONL plus a
``.rejects`` sidecar, and appends itself to the work-dir manifest so an
interrupted run can resume exactly. All randomness derives from the config
seed, so reruns with an identical config and input are byte-identical.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from corpusprep import exact_dedup, near_dedup, ngram_lm, packing, quality, sampler, subword
from corpusprep.config import PipelineConfig
from corpusprep.core import (
    Document,
    StageStats,
    normalize_text,
    read_jsonl,
    write_jsonl,
    write_rejects,
)

MANIFEST_NAME = "manifest.json"
REPORT_NAME = "report.json"


class StageFailure(RuntimeError):
    pass


@dataclass
class RunReport:
    config_hash: str
    stages: list = field(default_factory=list)  # StageStats in order
    diagnostics: int = 0  # malformed input lines
    total_wall_time: float = 0.0

    def initial_per_source_words(self) -> dict:
        if not self.stages:
            return {}
        return {s: v.words_in for s, v in sorted(self.stages[0].per_source.items())}

    def final_per_source_words(self) -> dict:
        if not self.stages:
            return {}
        return {s: v.words_out for s, v in sorted(self.stages[-1].per_source.items())}

    def check_conservation(self) -> None:
        """Exact integer reconciliation of totals against rejections."""
        for stats in self.stages:
            stats.check_conservation()
            for src, s in stats.per_source.items():
                assert s.words_in == s.words_out + s.rejected_words, (
                    stats.stage,
                    src,
                )
        for prev, cur in zip(self.stages, self.stages[1:]):
            assert prev.docs_out == cur.docs_in, (prev.stage, cur.stage)
            assert prev.words_out == cur.words_in, (prev.stage, cur.stage)

    def to_dict(self) -> dict:
        # wall time excluded so reports are byte-stable across reruns
        return {
            "config_hash": self.config_hash,
            "diagnostics": self.diagnostics,
            "stages": [s.to_dict() for s in self.stages],
            "per_source_words_initial": self.initial_per_source_words(),
            "per_source_words_final": self.final_per_source_words(),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")


def report_table(report: dict) -> str:
    """Render per-source word counts in millions, with a filtered total."""
    initial = report["per_source_words_initial"]
    final = report["per_source_words_final"]
    rows = [("Source", "Initial (M)", "Final (M)")]
    for src in sorted(initial):
        rows.append(
            (src, f"{initial[src] / 1e6:.1f}", f"{final.get(src, 0) / 1e6:.1f}")
        )
    rows.append(
        (
            "Total after filtering and deduplication",
            f"{sum(initial.values()) / 1e6:.1f}",
            f"{sum(final.values()) / 1e6:.1f}",
        )
    )
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = []
    for i, row in enumerate(rows):
        lines.append(
            "  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip()
        )
        if i == 0 or i == len(rows) - 2:
            lines.append("-" * (sum(widths) + 4))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Stage implementations: list[Document] -> (list[Document], StageStats,
# rejects). The pack stage also writes its binary output.
# --------------------------------------------------------------------------


def stage_filter(docs, cfg: PipelineConfig):
    stats = StageStats(stage="filter")
    rejects = []
    kept = []
    for doc in docs:
        doc = doc.with_text(normalize_text(doc.text))
        doc = quality.strip_boilerplate(doc)
        stats.record_in(doc)
        reason = quality.apply_heuristics(doc, cfg.heuristics)
        if reason is not None:
            stats.record_reject(doc, reason)
            rejects.append({"id": doc.id, "stage": "filter", "reason": reason})
        else:
            stats.record_out(doc)
            kept.append(doc)
    return kept, stats.finish(), rejects


def stage_dedup_exact(docs, cfg: PipelineConfig):
    rejects = []
    ordered = sorted(docs, key=lambda d: (d.source, d.id))
    kept, stats = exact_dedup.dedup_exact(ordered, rejects=rejects)
    return kept, stats, rejects


def stage_dedup_near(docs, cfg: PipelineConfig, cluster_report_path=None):
    rejects = []
    clusters = []
    kept, stats = near_dedup.dedup_near(
        docs, cfg.near_dedup, rejects=rejects, cluster_report=clusters
    )
    if cluster_report_path is not None:
        with open(cluster_report_path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in clusters:
                fh.write(json.dumps(rec, ensure_ascii=False, separators=(", ", ": ")))
                fh.write("\n")
    return kept, stats, rejects


def stage_lm_score(docs, cfg: PipelineConfig):
    model = ngram_lm.load_model(cfg.lm.model_path)
    rejects = []
    kept, stats = ngram_lm.filter_by_perplexity(
        docs, model, cfg.lm.policy, rejects=rejects
    )
    return kept, stats, rejects


def stage_token_count(docs, cfg: PipelineConfig):
    vocab = subword.load_vocab(cfg.vocab.path, cfg.vocab.expected_size)
    stats = StageStats(stage="token_count")
    for doc in docs:
        stats.record_in(doc)
        subword.token_count(doc, vocab)
        stats.record_out(doc)
    return docs, stats.finish(), []


def stage_sample(docs, cfg: PipelineConfig):
    rejects = []
    kept, stats = sampler.sample_to_quota(
        docs,
        cfg.quotas,
        seed=cfg.seed,
        mode=cfg.sample.mode,
        overshoot=cfg.sample.overshoot,
        rejects=rejects,
    )
    return kept, stats, rejects


def stage_pack(docs, cfg: PipelineConfig, out_bin, out_sidecar):
    vocab = subword.load_vocab(cfg.vocab.path, cfg.vocab.expected_size)
    stats = StageStats(stage="pack")
    for doc in docs:
        stats.record_in(doc)
    tokenized = ((doc.id, subword.tokenize(doc.text, vocab)) for doc in docs)
    windows, efficiency = packing.pack_greedy(
        tokenized,
        cfg.pack.seq_len,
        bos_id=vocab.bos_id,
        eos_id=vocab.eos_id,
        pad_id=vocab.pad_id,
        split=cfg.pack.split,
    )

    def records():
        for i, seq in enumerate(windows):
            rng = packing.window_rng(cfg.seed, i)
            masked, plan = packing.apply_masking(
                seq,
                cfg.pack.mask,
                mask_id=vocab.mask_id,
                special_ids=vocab.special_ids,
                vocab_size=vocab.size,
                rng=rng,
            )
            yield masked, seq, plan

    n = packing.write_packed(out_bin, out_sidecar, records(), cfg.pack.seq_len)
    for doc in docs:
        stats.record_out(doc)
    stats.extra["windows"] = n
    stats.extra["efficiency"] = f"{efficiency:.6f}"
    return docs, stats.finish(), []


def _load_manifest(work_dir: Path) -> Optional[dict]:
    path = work_dir / MANIFEST_NAME
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _save_manifest(work_dir: Path, manifest: dict) -> None:
    with open(work_dir / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def run_pipeline(
    cfg: PipelineConfig,
    resume: bool = False,
    fail_after: Optional[str] = None,
) -> RunReport:
    """Execute the configured stages in order.

    With resume=True, stages recorded complete in the work-dir manifest
    (for the same config hash) are skipped and the pipeline continues from
    the last completed stage's output. *fail_after* injects a failure after
    the named stage completes, for resume testing.
    """
    t0 = time.monotonic()
    work_dir = Path(cfg.work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.config_hash()

    manifest = _load_manifest(work_dir) if resume else None
    if manifest is not None and manifest.get("config_hash") != config_hash:
        raise StageFailure(
            "manifest config hash does not match; refusing to resume"
        )
    completed = list(manifest["completed"]) if manifest else []
    stage_stats_cache = dict(manifest["stats"]) if manifest else {}

    diagnostics: list = []
    if completed:
        idx_last = cfg.stages.index(completed[-1])
        last_out = work_dir / f"{idx_last:02d}_{completed[-1]}.jsonl"
        docs = list(read_jsonl(last_out))
        n_diagnostics = int(manifest.get("diagnostics", 0))
    else:
        docs = list(read_jsonl(cfg.input, diagnostics=diagnostics))
        n_diagnostics = len(diagnostics)

    report = RunReport(config_hash=config_hash, diagnostics=n_diagnostics)
    stats_dicts = dict(stage_stats_cache)

    for idx, stage in enumerate(cfg.stages):
        out_path = work_dir / f"{idx:02d}_{stage}.jsonl"
        rejects_path = Path(str(out_path) + ".rejects")
        if idx < len(completed):
            if completed[idx] != stage:
                raise StageFailure(
                    f"manifest stage order mismatch at {idx}: "
                    f"{completed[idx]} != {stage}"
                )
            continue
        try:
            if stage == "filter":
                docs, stats, rejects = stage_filter(docs, cfg)
            elif stage == "dedup_exact":
                docs, stats, rejects = stage_dedup_exact(docs, cfg)
            elif stage == "dedup_near":
                docs, stats, rejects = stage_dedup_near(
                    docs, cfg, cluster_report_path=work_dir / "clusters.jsonl"
                )
            elif stage == "lm_score":
                docs, stats, rejects = stage_lm_score(docs, cfg)
            elif stage == "token_count":
                docs, stats, rejects = stage_token_count(docs, cfg)
            elif stage == "sample":
                docs, stats, rejects = stage_sample(docs, cfg)
            elif stage == "pack":
                docs, stats, rejects = stage_pack(
                    docs,
                    cfg,
                    out_bin=work_dir / "packed.bin",
                    out_sidecar=work_dir / "packed.meta.jsonl",
                )
            else:
                raise StageFailure(f"unknown stage {stage!r}")
        except StageFailure:
            raise
        except Exception as e:
            raise StageFailure(f"stage {stage} failed: {e}") from e

        write_jsonl(docs, out_path)
        write_rejects(rejects, rejects_path)
        stats.check_conservation()
        stats_dicts[stage] = stats.to_dict()
        completed.append(stage)
        _save_manifest(
            work_dir,
            {
                "config_hash": config_hash,
                "completed": completed,
                "stats": stats_dicts,
                "diagnostics": n_diagnostics,
            },
        )
        print(
            f"[{stage}] in={stats.docs_in} out={stats.docs_out} "
            f"rejected={stats.rejected_docs} ({stats.wall_time:.2f}s)",
            file=sys.stderr,
        )
        if fail_after == stage:
            raise StageFailure(f"injected failure after stage {stage}")

    report.stages = [_stats_from_dict(stats_dicts[s]) for s in cfg.stages]
    report.total_wall_time = time.monotonic() - t0
    report.save(work_dir / REPORT_NAME)
    return report


def _stats_from_dict(d: dict) -> StageStats:
    from corpusprep.core import SourceStats

    stats = StageStats(stage=d["stage"])
    stats.docs_in = d["docs_in"]
    stats.docs_out = d["docs_out"]
    stats.words_in = d["words_in"]
    stats.words_out = d["words_out"]
    stats.rejected = dict(d["rejected"])
    stats.per_source = {s: SourceStats(**v) for s, v in d["per_source"].items()}
    stats.extra = dict(d["extra"])
    return stats
