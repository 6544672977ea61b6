import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asim.embeddings import build_vocab
from asim.errors import EmptyUnitError, ParseError
from asim.porter import stem
from asim.stopwords import STOP_WORDS
from asim.text import (
    KU_COLUMNS,
    RawRecord,
    assemble_ku,
    clean_text,
    escape_field,
    parse_askubuntu,
    parse_ku_dataset,
    tokenize,
    unescape_field,
    write_tsv,
)


class TestPorter:
    # classic published behavior, spot-checked by hand against the rules
    CASES = [
        ("caresses", "caress"), ("ponies", "poni"), ("ties", "ti"),
        ("caress", "caress"), ("cats", "cat"),
        ("feed", "feed"), ("agreed", "agre"), ("plastered", "plaster"),
        ("bled", "bled"), ("motoring", "motor"), ("sing", "sing"),
        ("hopping", "hop"), ("falling", "fall"), ("filing", "file"),
        ("happy", "happi"), ("sky", "sky"),
        ("relational", "relat"), ("conditional", "condit"),
        ("rational", "ration"), ("digitizer", "digit"), ("operator", "oper"),
        ("triplicate", "triplic"), ("formative", "form"),
        ("formalize", "formal"), ("electrical", "electr"),
        ("hopeful", "hope"), ("goodness", "good"),
        ("revival", "reviv"), ("allowance", "allow"), ("inference", "infer"),
        ("airliner", "airlin"), ("adjustable", "adjust"),
        ("replacement", "replac"), ("adjustment", "adjust"),
        ("dependent", "depend"), ("adoption", "adopt"),
        ("communism", "commun"), ("activate", "activ"),
        ("probate", "probat"), ("rate", "rate"), ("cease", "ceas"),
        ("controll", "control"), ("roll", "roll"),
        ("removing", "remov"), ("tags", "tag"), ("value", "valu"),
        ("using", "us"), ("java", "java"), ("html", "html"),
        ("regex", "regex"), ("questions", "question"),
    ]

    @pytest.mark.parametrize("word,expected", CASES)
    def test_known_stems(self, word, expected):
        assert stem(word) == expected

    def test_short_words_untouched(self):
        assert stem("a") == "a"
        assert stem("is") == "is"


class TestCleanText:
    def test_tags_and_url(self):
        assert clean_text("<p>see https://x.io now</p>") == "see urltok now"

    def test_code_block_and_number(self):
        got = clean_text("<code>int x=1;</code>use 42 threads", strip_code=True)
        assert got == "use numtok threads"

    def test_code_kept_when_not_stripping(self):
        got = clean_text("<code>foo bar</code> baz", strip_code=False)
        assert got == "foo bar baz"

    def test_empty(self):
        assert clean_text("") == ""

    def test_entities_decoded_then_stripped(self):
        assert clean_text("&lt;p&gt;hello&lt;/p&gt;") == "hello"

    def test_unterminated_tag_degrades(self):
        assert clean_text("keep <a href='x  dropped") == "keep"

    def test_bare_less_than_is_punctuation(self):
        assert clean_text("a < b") == "a b"

    def test_case_preserved(self):
        assert clean_text("Remove HTMLTags") == "Remove HTMLTags"

    @given(st.text(max_size=300))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, raw):
        once = clean_text(raw)
        assert clean_text(once) == once

    @given(st.text(max_size=300))
    @settings(max_examples=100, deadline=None)
    def test_never_throws(self, raw):
        clean_text(raw, strip_code=True)
        clean_text(raw, strip_code=False)


class TestTokenize:
    def test_reference_sentence(self):
        got = tokenize(clean_text("Removing html tags with regex Java"))
        assert got == ["remov", "html", "tag", "regex", "java"]

    def test_camel_split_then_stem(self):
        assert tokenize("TreeMap getValue") == ["tree", "map", "get", "valu"]

    def test_all_stop_words(self):
        assert tokenize("the of and") == []

    def test_letter_digit_boundary(self):
        assert tokenize("log4j") == ["log", "4j"]

    @given(st.text(max_size=200))
    @settings(max_examples=150, deadline=None)
    def test_no_uppercase_no_stopwords(self, raw):
        for tok in tokenize(clean_text(raw)):
            assert tok == tok.lower()
            assert tok not in STOP_WORDS
            assert tok


def make_vocab(texts):
    return build_vocab([tokenize(clean_text(t)) for t in texts])


class TestAssembleKu:
    def test_title_only(self):
        title = "How to remove HTML tag in Java"
        vocab = make_vocab([title])
        ku = assemble_ku(title, "", "", vocab)
        assert ku.tokens == ["remov", "html", "tag", "java"]
        assert len(ku) == 4
        assert ku.source_parts == (4, 4)

    def test_truncation_keeps_head(self):
        words = " ".join(f"kam{c1}{c2}b" for c1 in "bcdfghjklmnpqrstvz"
                         for c2 in "bcdfghjklmnpqrstvz")  # 324 distinct tokens
        vocab = make_vocab([words])
        ku = assemble_ku(words, "", "", vocab, max_len=250)
        assert len(ku) == 250
        assert ku.tokens == tokenize(clean_text(words))[:250]

    def test_null_answers_treated_empty(self):
        vocab = make_vocab(["declare array"])
        ku = assemble_ku("declare array", "", "null", vocab)
        assert ku.tokens == ["declar", "arrai"]

    def test_empty_unit_error_carries_pair_id(self):
        vocab = make_vocab(["word"])
        with pytest.raises(EmptyUnitError, match="p-17"):
            assemble_ku("the of", "", "null", vocab, pair_id="p-17")

    def test_ids_parallel_tokens(self):
        vocab = make_vocab(["alpha beta gamma"])
        ku = assemble_ku("alpha beta", "unseenword", "", vocab)
        assert len(ku.token_ids) == len(ku.tokens)
        assert all(i >= 1 for i in ku.token_ids)

    @given(st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta"]),
                    min_size=1, max_size=20))
    @settings(max_examples=50, deadline=None)
    def test_length_bounds(self, words):
        vocab = make_vocab([" ".join(words)])
        ku = assemble_ku(" ".join(words), "", "", vocab, max_len=250)
        assert 1 <= len(ku) <= 250


def ku_record(i, label):
    return RawRecord(pair_id=f"p{i}", x_id=f"q{i}a", y_id=f"q{i}b",
                     x_title=f"title alpha {i}", x_body="body text\twith tab",
                     x_answers="an answer\nwith newline",
                     y_title=f"title beta {i}", y_body="other body",
                     y_answers="null", label=label)


class TestParsing:
    def test_round_trip_counts_and_labels(self, tmp_path):
        labels = ["duplicate", "direct", "indirect", "isolated"] * 25
        records = [ku_record(i, lab) for i, lab in enumerate(labels)]
        path = tmp_path / "data.tsv"
        write_tsv(path, records)
        got = parse_ku_dataset(path)
        assert len(got) == 100
        hist = {}
        for r in got:
            hist[r.label] = hist.get(r.label, 0) + 1
        assert hist == {lab: 25 for lab in set(labels)}
        assert got[0].x_body == "body text\twith tab"
        assert got[0].x_answers == "an answer\nwith newline"

    def test_table_like_duplicate_row(self, tmp_path):
        rec = RawRecord(
            pair_id="1", x_id="36734301",
            x_title="How to declare a call a 2d array in java",
            x_body="I am trying to read an image's pixels", x_answers="null",
            y_id="19894714", y_title="How can I create 2D arrays in java",
            y_body="How would I go about designing something",
            y_answers="You would replace name", label="duplicate")
        path = tmp_path / "one.tsv"
        write_tsv(path, [rec])
        got = parse_ku_dataset(path)
        assert got[0].label == "duplicate"
        assert got[0].x_id == "36734301"

    def test_empty_file_warns(self, tmp_path, caplog):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        with caplog.at_level(logging.WARNING):
            assert parse_ku_dataset(path) == []
        assert any("no data rows" in m for m in caplog.messages)

    def test_unknown_label_names_row(self, tmp_path):
        records = [ku_record(0, "duplicate"), ku_record(1, "duplicate")]
        path = tmp_path / "bad.tsv"
        write_tsv(path, records)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write("\t".join(["p2", "a", "t", "b", "x", "b", "t", "b", "y",
                                "related"]) + "\n")
        with pytest.raises(ParseError, match="related") as exc:
            parse_ku_dataset(path)
        assert exc.value.line == 4

    def test_column_mismatch_names_row(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("\t".join(KU_COLUMNS) + "\np1\tonly\tthree\n")
        with pytest.raises(ParseError, match="columns"):
            parse_ku_dataset(path)

    def test_askubuntu_pairs(self, tmp_path):
        path = tmp_path / "au.tsv"
        rows = [
            ("1", "Where can I find the source code of Ubuntu?",
             "I would like to know where to find the source code",
             "How can I know which is the source of a shared library?",
             "How can I get access to the source code", "duplicate"),
            ("2", "Grafics on Thinkpad R50e", "After installing there is no driver",
             "How to share files between guest and host?",
             "I searched on the internet", "non-duplicate"),
        ]
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write("\t".join(row) + "\n")
        got = parse_askubuntu(path)
        assert [r.label for r in got] == ["duplicate", "non-duplicate"]
        assert got[0].x_answers == ""

    def test_askubuntu_malformed_row_positioned(self, tmp_path):
        path = tmp_path / "au.tsv"
        path.write_text("1\ta\tb\tc\td\tduplicate\n2\tbroken row\n")
        with pytest.raises(ParseError) as exc:
            parse_askubuntu(path)
        assert exc.value.line == 2


@given(st.text(max_size=100))
@settings(max_examples=200, deadline=None)
def test_field_escaping_round_trips(value):
    assert unescape_field(escape_field(value)) == value
    assert "\t" not in escape_field(value)
    assert "\n" not in escape_field(value)
