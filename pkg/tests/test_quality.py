import dataclasses

from hypothesis import given, strategies as st

from corpusprep.core import Document
from corpusprep.quality import HeuristicConfig, apply_heuristics, strip_boilerplate

LATVIAN_PARAGRAPH = (
    "Rīga ir Latvijas galvaspilsēta un lielākā pilsēta visās Baltijas valstīs. "
    "Pilsēta atrodas Daugavas krastos netālu no tās ietekas Rīgas jūras līcī. "
    "Vecrīga ir iekļauta UNESCO pasaules mantojuma sarakstā kopš 1997. gada."
)


def doc(text, **kw):
    return Document(id=kw.pop("id", "d"), source=kw.pop("source", "s"), text=text, **kw)


class TestStripBoilerplate:
    def test_repeated_short_line_kept_once(self):
        text = "\n".join(["Cookie notice"] * 5 + ["saturs šeit"])
        out = strip_boilerplate(doc(text))
        assert out.text.split("\n").count("Cookie notice") == 1
        assert "saturs šeit" in out.text
        assert out.word_count == 4

    def test_no_repeats_identity(self):
        d = doc("pirmā rinda\notrā rinda")
        assert strip_boilerplate(d).text == d.text

    def test_long_lines_never_dropped(self):
        line = "gara rinda " * 10  # > 80 chars
        out = strip_boilerplate(doc(f"{line}\n{line}"))
        assert out.text.count(line.rstrip()) == 2

    def test_golden_cleaned_fixture(self):
        page = "Sākums | Ziņas | Kontakti\nŠodienas galvenā ziņa par laikapstākļiem.\nSākums | Ziņas | Kontakti\nOtrs rindkopas teikums seko šeit.\nSākums | Ziņas | Kontakti"
        expected = "Sākums | Ziņas | Kontakti\nŠodienas galvenā ziņa par laikapstākļiem.\nOtrs rindkopas teikums seko šeit."
        assert strip_boilerplate(doc(page)).text == expected

    @given(st.lists(st.sampled_from(["a", "bb", "rinda viena", "cita"]), max_size=30))
    def test_idempotent(self, lines):
        d = doc("\n".join(lines))
        once = strip_boilerplate(d)
        assert strip_boilerplate(once).text == once.text


class TestApplyHeuristics:
    def test_too_short(self):
        cfg = HeuristicConfig(min_words=10)
        assert apply_heuristics(doc("tikai trīs vārdi"), cfg) == "too_short"

    def test_digit_ratio(self):
        cfg = HeuristicConfig(min_words=1, max_digit_ratio=0.3, min_alpha_ratio=0.0,
                              min_latvian_char_ratio=0.0)
        d = doc("123 456 789 012 555")
        assert apply_heuristics(d, cfg) == "digit_ratio"

    def test_alpha_checked_before_digit(self):
        # all-digit text violates both; alpha ratio comes first in order
        cfg = HeuristicConfig(min_words=1, max_digit_ratio=0.3, min_alpha_ratio=0.6,
                              min_latvian_char_ratio=0.0)
        assert apply_heuristics(doc("123 456 789"), cfg) == "alpha_ratio"

    def test_fluent_latvian_kept_with_defaults(self):
        # hand-count: 38 words, overwhelmingly alphabetic, diacritics well
        # above 0.5% of letters, no repeated lines
        assert apply_heuristics(doc(LATVIAN_PARAGRAPH), HeuristicConfig()) is None

    def test_latvian_ratio_rejects_english(self):
        text = " ".join(["plain english text without any marks"] * 5)
        assert apply_heuristics(doc(text), HeuristicConfig()) == "latvian_ratio"

    def test_deterministic(self):
        d = doc(LATVIAN_PARAGRAPH)
        cfg = HeuristicConfig()
        assert apply_heuristics(d, cfg) == apply_heuristics(d, cfg)

    @given(
        st.text(alphabet="abā1 \n", min_size=0, max_size=120),
        st.integers(0, 5),
        st.floats(0.0, 1.0),
        st.floats(0.0, 1.0),
    )
    def test_loosening_never_rejects_kept(self, text, dmin, da, dd):
        base = HeuristicConfig(min_words=5, max_words=50, min_alpha_ratio=0.5,
                               max_digit_ratio=0.4, min_latvian_char_ratio=0.01,
                               max_repeated_line_ratio=0.5)
        loose = dataclasses.replace(
            base,
            min_words=max(0, base.min_words - dmin),
            max_words=base.max_words + dmin,
            min_alpha_ratio=base.min_alpha_ratio * (1 - da),
            max_digit_ratio=min(1.0, base.max_digit_ratio + dd * (1 - base.max_digit_ratio)),
            min_latvian_char_ratio=base.min_latvian_char_ratio * (1 - da),
            max_repeated_line_ratio=min(1.0, base.max_repeated_line_ratio + dd),
        )
        d = doc(text)
        if apply_heuristics(d, base) is None:
            assert apply_heuristics(d, loose) is None
