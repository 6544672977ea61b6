"""Raw text to token-id pipeline and dataset file parsing.

Cleaning order: entity decode, HTML/code removal (regex-free scanner),
URL and standalone-number sentinels, punctuation to spaces, whitespace
normalization. Tokenization: whitespace split, camel-case split
(lower->Upper and letter->digit boundaries), lowercase, stop-word
removal, Porter stemming. Case is preserved through cleaning because the
camel splitter needs it.
"""

from __future__ import annotations

import html
import logging
import re
import string
from dataclasses import dataclass, field

from .errors import EmptyUnitError, ParseError
from .porter import stem
from .stopwords import STOP_WORDS

log = logging.getLogger(__name__)

MAX_KU_LEN = 250
URL_TOKEN = "urltok"
NUM_TOKEN = "numtok"

KU_LABELS = ("duplicate", "direct", "indirect", "isolated")
BINARY_LABELS = ("duplicate", "non-duplicate")

KU_COLUMNS = ("pair_id", "x_id", "x_title", "x_body", "x_answers",
              "y_id", "y_title", "y_body", "y_answers", "label")
ASKUBUNTU_COLUMNS = ("pair_id", "x_title", "x_body", "y_title", "y_body", "label")

_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\"']+")
_NUM_RE = re.compile(r"(?<![A-Za-z0-9])\d+(?:\.\d+)?(?![A-Za-z0-9])")
_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


@dataclass
class RawRecord:
    pair_id: str
    x_title: str
    x_body: str
    x_answers: str
    y_title: str
    y_body: str
    y_answers: str
    label: str
    x_id: str = ""
    y_id: str = ""


@dataclass
class KnowledgeUnit:
    """Processed token sequence of one question plus its answers."""

    token_ids: list[int]
    tokens: list[str]
    source_parts: tuple[int, int] = field(default=(0, 0))

    def __len__(self):
        return len(self.token_ids)


def _strip_markup(text: str, strip_code: bool) -> str:
    """Drop tags (and code-block contents when asked) with a char scanner.

    Malformed markup degrades gracefully: a '<' that does not open a tag is
    treated as punctuation, an unterminated tag swallows the remainder.
    """
    out = []
    i = 0
    n = len(text)
    code_depth = 0
    while i < n:
        ch = text[i]
        if ch == "<":
            k = i + 1
            closing = False
            if k < n and text[k] == "/":
                closing = True
                k += 1
            name_start = k
            while k < n and text[k].isalnum():
                k += 1
            name = text[name_start:k].lower()
            if not name:
                out.append(" ")
                i += 1
                continue
            end = text.find(">", k)
            if end == -1:
                break
            if strip_code and name in ("code", "pre"):
                if closing:
                    code_depth = max(0, code_depth - 1)
                elif text[end - 1] != "/":
                    code_depth += 1
            out.append(" ")
            i = end + 1
            continue
        if code_depth == 0:
            out.append(ch)
        i += 1
    return "".join(out)


def clean_text(raw: str, strip_code: bool = True) -> str:
    """Normalize a raw HTML-bearing string to plain space-separated words."""
    if not raw:
        return ""
    text = html.unescape(raw)
    text = _strip_markup(text, strip_code)
    text = _URL_RE.sub(f" {URL_TOKEN} ", text)
    text = _NUM_RE.sub(f" {NUM_TOKEN} ", text)
    text = text.translate(_PUNCT_TABLE)
    return " ".join(text.split())


def _camel_split(token: str) -> list[str]:
    parts = []
    start = 0
    for i in range(1, len(token)):
        prev, cur = token[i - 1], token[i]
        if (prev.islower() and cur.isupper()) or (prev.isalpha() and cur.isdigit()):
            parts.append(token[start:i])
            start = i
    parts.append(token[start:])
    return parts


def tokenize(text: str) -> list[str]:
    """Cleaned text -> ordered stems with stop words removed."""
    tokens = []
    for raw_tok in text.split():
        for piece in _camel_split(raw_tok):
            low = piece.lower()
            if not low or low in STOP_WORDS:
                continue
            tokens.append(stem(low))
    return tokens


def _answers_text(answers: str) -> str:
    # dataset dumps use a literal "null" for questions without answers
    return "" if answers.strip().lower() == "null" else answers


def assemble_ku(title: str, body: str, answers: str, vocab,
                max_len: int = MAX_KU_LEN, pair_id: str | None = None) -> KnowledgeUnit:
    """Concatenate title + body + answers tokens, head-truncated to max_len."""
    title_toks = tokenize(clean_text(title))
    body_toks = tokenize(clean_text(body))
    answer_toks = tokenize(clean_text(_answers_text(answers)))
    tokens = title_toks + body_toks + answer_toks
    if not tokens:
        ctx = f" (pair {pair_id})" if pair_id else ""
        raise EmptyUnitError(f"knowledge unit empty after cleaning{ctx}")
    tokens = tokens[:max_len]
    bounds = (min(len(title_toks), len(tokens)),
              min(len(title_toks) + len(body_toks), len(tokens)))
    ids = [vocab.id_of(t) for t in tokens]
    return KnowledgeUnit(token_ids=ids, tokens=tokens, source_parts=bounds)


# ---------------------------------------------------------------------------
# TSV parsing; embedded tabs/newlines are stored escaped


def escape_field(value: str) -> str:
    # \r needs its own escape: text-mode reads would fold it into \n
    return (value.replace("\\", "\\\\").replace("\t", "\\t")
            .replace("\n", "\\n").replace("\r", "\\r"))


def unescape_field(value: str) -> str:
    out = []
    i = 0
    while i < len(value):
        ch = value[i]
        if ch == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "r":
                out.append("\r")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _parse_tsv(path, columns, labels, build):
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if lineno == 1 and tuple(fields) == columns:
                continue
            if len(fields) != len(columns):
                raise ParseError(
                    f"expected {len(columns)} columns, found {len(fields)}",
                    path=path, line=lineno)
            fields = [unescape_field(f) for f in fields]
            row = dict(zip(columns, fields))
            if row["label"] not in labels:
                raise ParseError(
                    f"unknown label {row['label']!r} (expected one of {', '.join(labels)})",
                    path=path, line=lineno)
            records.append(build(row))
    if not records:
        log.warning("%s: no data rows", path)
    return records


def parse_ku_dataset(path) -> list[RawRecord]:
    """Read the 4-class knowledge-unit pair format (10 columns)."""
    def build(row):
        return RawRecord(pair_id=row["pair_id"],
                         x_title=row["x_title"], x_body=row["x_body"],
                         x_answers=row["x_answers"],
                         y_title=row["y_title"], y_body=row["y_body"],
                         y_answers=row["y_answers"],
                         label=row["label"],
                         x_id=row["x_id"], y_id=row["y_id"])

    return _parse_tsv(path, KU_COLUMNS, KU_LABELS, build)


def parse_askubuntu(path) -> list[RawRecord]:
    """Read the binary duplicate-question format (6 columns, no answers)."""
    def build(row):
        return RawRecord(pair_id=row["pair_id"],
                         x_title=row["x_title"], x_body=row["x_body"],
                         x_answers="",
                         y_title=row["y_title"], y_body=row["y_body"],
                         y_answers="",
                         label=row["label"])

    return _parse_tsv(path, ASKUBUNTU_COLUMNS, BINARY_LABELS, build)


def write_tsv(path, records: list[RawRecord], binary: bool = False) -> None:
    """Write records in the matching column format, header included."""
    columns = ASKUBUNTU_COLUMNS if binary else KU_COLUMNS
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(columns) + "\n")
        for r in records:
            if binary:
                fields = (r.pair_id, r.x_title, r.x_body, r.y_title, r.y_body, r.label)
            else:
                fields = (r.pair_id, r.x_id, r.x_title, r.x_body, r.x_answers,
                          r.y_id, r.y_title, r.y_body, r.y_answers, r.label)
            fh.write("\t".join(escape_field(f) for f in fields) + "\n")
