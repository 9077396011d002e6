from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpusprep.packing import (
    ACTION_KEEP,
    ACTION_MASK,
    ACTION_RANDOM,
    MaskConfig,
    apply_masking,
    pack_greedy,
    read_packed,
    sample_spans,
    truncated_geometric_pmf,
    window_rng,
    write_packed,
)
from corpusprep.synthetic import lognormal_token_docs

BOS, EOS, PAD, MASK = 3, 4, 1, 2
SPECIALS = frozenset({0, 1, 2, 3, 4})
VOCAB = 1000


def toy_docs(lengths, start=100):
    return [
        (f"doc{i}", list(range(start, start + n))) for i, n in enumerate(lengths)
    ]


class TestPackGreedy:
    def test_exact_fit_single_window(self):
        docs = toy_docs([510])  # +bos/eos = 512
        wins, eff = pack_greedy(docs, 512, BOS, EOS, PAD)
        assert len(wins) == 1
        assert eff == 1.0
        assert wins[0].pad_count == 0

    def test_two_half_docs_per_window(self):
        docs = toy_docs([254, 254])
        wins, eff = pack_greedy(docs, 512, BOS, EOS, PAD)
        assert len(wins) == 1
        assert eff == 1.0
        assert wins[0].boundaries == [(0, 256, "doc0"), (256, 512, "doc1")]

    def test_split_streams_across_windows(self):
        docs = toy_docs([300, 300])
        wins, eff = pack_greedy(docs, 512, BOS, EOS, PAD, split=True)
        assert len(wins) == 2
        # doc1 continues in window 2; padding only in final window
        assert wins[0].pad_count == 0
        assert wins[1].pad_count == 512 * 2 - (302 + 302)

    def test_no_split_mode_pads(self):
        docs = toy_docs([300, 300])
        wins, _ = pack_greedy(docs, 512, BOS, EOS, PAD, split=False)
        assert len(wins) == 2
        assert all(len(w.boundaries) == 1 for w in wins)

    def test_overlong_doc_chunked(self):
        docs = toy_docs([2000])
        wins, _ = pack_greedy(docs, 512, BOS, EOS, PAD, split=False)
        assert len(wins) == 4
        ids = [t for w in wins for t in w.tokens.tolist()]
        assert ids.count(PAD) == 4 * 512 - 2002

    def test_token_multiset_conserved(self):
        docs = lognormal_token_docs(300, VOCAB, SPECIALS, mean_len=120, seed=5)
        wins, _ = pack_greedy(docs, 512, BOS, EOS, PAD)
        got = Counter()
        for w in wins:
            body = w.tokens[: 512 - w.pad_count].tolist()
            got.update(t for t in body if t not in (BOS, EOS, PAD))
        want = Counter(t for _, ids in docs for t in ids)
        assert got == want

    def test_boundaries_cover_non_pad_exactly(self):
        docs = lognormal_token_docs(100, VOCAB, SPECIALS, mean_len=90, seed=6)
        wins, _ = pack_greedy(docs, 256, BOS, EOS, PAD)
        for w in wins:
            covered = sorted(
                i for s, e, _ in w.boundaries for i in range(s, e)
            )
            assert covered == list(range(256 - w.pad_count))

    def test_efficiency_above_99_percent(self):
        docs = lognormal_token_docs(2000, VOCAB, SPECIALS, mean_len=400, seed=7)
        for seq_len in (512, 1024):
            wins, eff = pack_greedy(docs, seq_len, BOS, EOS, PAD)
            assert eff > 0.99

    @settings(deadline=None, max_examples=20)
    @given(st.lists(st.integers(1, 300), min_size=1, max_size=60), st.sampled_from([64, 128, 512]))
    def test_conservation_property(self, lengths, seq_len):
        docs = toy_docs(lengths)
        wins, eff = pack_greedy(docs, seq_len, BOS, EOS, PAD)
        non_pad = sum(seq_len - w.pad_count for w in wins)
        assert non_pad == sum(lengths) + 2 * len(lengths)
        assert 0 < eff <= 1.0


class TestSampleSpans:
    def test_tiny_rate_empty(self):
        rng = np.random.default_rng(0)
        assert sample_spans(100, 0.005, rng=rng) == []

    def test_full_rate_single_position(self):
        rng = np.random.default_rng(0)
        assert sample_spans(1, 1.0, max_span=1, rng=rng) == [(0, 1)]

    def test_spans_non_overlapping_within_bounds(self):
        rng = np.random.default_rng(1)
        spans = sample_spans(500, 0.3, rng=rng)
        occupied = set()
        for start, length in spans:
            assert start >= 0 and start + length <= 500
            cells = set(range(start, start + length))
            assert not cells & occupied
            occupied |= cells

    def test_coverage_hits_target_exactly(self):
        rng = np.random.default_rng(2)
        for L, rate in [(512, 0.3), (1000, 0.15), (257, 0.2)]:
            spans = sample_spans(L, rate, rng=rng)
            assert sum(ln for _, ln in spans) == int(rate * L)

    def test_rate_and_span_length_statistics(self):
        # analytic truncated-geometric mean as the oracle
        pmf = truncated_geometric_pmf(0.2, 10)
        expected_mean = float(np.sum(np.arange(1, 11) * pmf))
        rng = np.random.default_rng(3)
        total = covered = 0
        lengths = []
        for _ in range(1000):
            L = 1000
            spans = sample_spans(L, 0.3, geom_p=0.2, max_span=10, rng=rng)
            total += L
            covered += sum(ln for _, ln in spans)
            lengths.extend(ln for _, ln in spans)
        assert total >= 10**6
        assert abs(covered / total - 0.3) <= 0.005
        assert abs(np.mean(lengths) - expected_mean) <= 0.02 * expected_mean

    def test_deterministic_given_seed(self):
        a = sample_spans(300, 0.25, rng=np.random.default_rng(9))
        b = sample_spans(300, 0.25, rng=np.random.default_rng(9))
        assert a == b


class TestApplyMasking:
    def _window(self, seed=0, seq_len=512):
        docs = lognormal_token_docs(40, VOCAB, SPECIALS, mean_len=150, seed=seed)
        wins, _ = pack_greedy(docs, seq_len, BOS, EOS, PAD)
        return wins[0]

    def test_zero_positions_identity(self):
        w = self._window()
        cfg = MaskConfig(scheme="token", rate=0.0001)
        masked, plan = apply_masking(
            w, cfg, MASK, SPECIALS, VOCAB, np.random.default_rng(0)
        )
        if not plan.positions:
            assert np.array_equal(masked, w.tokens)

    def test_all_mask_action_config(self):
        w = self._window()
        cfg = MaskConfig(scheme="token", rate=0.999, p_mask=1.0, p_random=0.0)
        masked, plan = apply_masking(
            w, cfg, MASK, SPECIALS, VOCAB, np.random.default_rng(0)
        )
        for pos in plan.positions:
            assert masked[pos] == MASK

    def test_specials_and_padding_never_masked(self):
        w = self._window()
        for scheme in ("span", "token"):
            cfg = MaskConfig(scheme=scheme, rate=0.4)
            _, plan = apply_masking(
                w, cfg, MASK, SPECIALS, VOCAB, np.random.default_rng(1)
            )
            for pos in plan.positions:
                assert int(w.tokens[pos]) not in SPECIALS
                assert pos < w.seq_len - w.pad_count

    def test_spans_stay_within_document_segments(self):
        w = self._window(seed=2)
        cfg = MaskConfig(scheme="span", rate=0.3)
        _, plan = apply_masking(
            w, cfg, MASK, SPECIALS, VOCAB, np.random.default_rng(2)
        )
        segments = [(s, e) for s, e, _ in w.boundaries]
        runs = []
        for pos in plan.positions:
            if runs and runs[-1][1] == pos:
                runs[-1] = (runs[-1][0], pos + 1)
            else:
                runs.append((pos, pos + 1))
        for start, end in runs:
            assert any(s <= start and end <= e for s, e in segments)

    def test_action_split_statistics(self):
        rng = np.random.default_rng(3)
        docs = lognormal_token_docs(800, VOCAB, SPECIALS, mean_len=300, seed=4)
        wins, _ = pack_greedy(docs, 512, BOS, EOS, PAD)
        counts = Counter()
        n_positions = 0
        for i, w in enumerate(wins):
            _, plan = apply_masking(
                w, MaskConfig(scheme="token", rate=0.15), MASK, SPECIALS, VOCAB,
                window_rng(77, i),
            )
            counts.update(plan.actions)
            n_positions += len(plan.positions)
        assert n_positions > 20_000
        assert abs(counts[ACTION_MASK] / n_positions - 0.8) <= 0.01
        assert abs(counts[ACTION_RANDOM] / n_positions - 0.1) <= 0.01
        assert abs(counts[ACTION_KEEP] / n_positions - 0.1) <= 0.01

    def test_deterministic_given_window_seed(self):
        w = self._window(seed=5)
        cfg = MaskConfig()
        m1, p1 = apply_masking(w, cfg, MASK, SPECIALS, VOCAB, window_rng(1, 0))
        m2, p2 = apply_masking(w, cfg, MASK, SPECIALS, VOCAB, window_rng(1, 0))
        assert np.array_equal(m1, m2)
        assert p1.positions == p2.positions and p1.actions == p2.actions


class TestBinaryFormat:
    def test_round_trip(self, tmp_path):
        docs = lognormal_token_docs(50, VOCAB, SPECIALS, mean_len=100, seed=8)
        wins, _ = pack_greedy(docs, 256, BOS, EOS, PAD)
        cfg = MaskConfig()
        records = []
        for i, w in enumerate(wins):
            masked, plan = apply_masking(
                w, cfg, MASK, SPECIALS, VOCAB, window_rng(5, i)
            )
            records.append((masked, w, plan))
        bin_path = tmp_path / "packed.bin"
        side_path = tmp_path / "packed.meta.jsonl"
        n = write_packed(bin_path, side_path, records, 256)
        assert n == len(wins)
        back = list(read_packed(bin_path))
        assert len(back) == len(wins)
        for rec, (masked, w, plan) in zip(back, records):
            assert np.array_equal(rec["tokens"], masked)
            assert rec["pad_count"] == w.pad_count
            assert rec["boundaries"] == [(s, e) for s, e, _ in w.boundaries]
            assert [m[0] for m in rec["masks"]] == plan.positions
        side_lines = side_path.read_text().strip().split("\n")
        assert len(side_lines) == len(wins)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"NOPE" + b"\x00" * 10)
        with pytest.raises(ValueError, match="magic"):
            list(read_packed(p))
