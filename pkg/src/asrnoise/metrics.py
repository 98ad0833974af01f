"""Corpus-level error rates (insertion/deletion/substitution %, WER, SER)."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .align import Alignment, count_errors

RATE_FIELDS = ("ins_rate", "del_rate", "sub_rate", "wer", "ser")
_COLUMNS = (
    ("Insertions", "ins_rate"),
    ("Deletions", "del_rate"),
    ("Substitutions", "sub_rate"),
    ("WER", "wer"),
    ("SER", "ser"),
)


def _pct(num: int, den: int) -> Optional[float]:
    return 100.0 * num / den if den > 0 else None


@dataclass(frozen=True)
class ErrorReport:
    """Error counts for a set of sentences.

    Counts are canonical.  Rates are percentages derived on access at full
    precision and are ``None`` when their denominator is zero.  WER may exceed
    100 when hypotheses are insertion-heavy.
    """

    n_ref_words: int = 0
    n_sentences: int = 0
    n_error_sentences: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def sub_rate(self) -> Optional[float]:
        return _pct(self.substitutions, self.n_ref_words)

    @property
    def del_rate(self) -> Optional[float]:
        return _pct(self.deletions, self.n_ref_words)

    @property
    def ins_rate(self) -> Optional[float]:
        return _pct(self.insertions, self.n_ref_words)

    @property
    def wer(self) -> Optional[float]:
        return _pct(self.errors, self.n_ref_words)

    @property
    def ser(self) -> Optional[float]:
        return _pct(self.n_error_sentences, self.n_sentences)

    def counts(self) -> dict:
        return asdict(self)

    def to_dict(self) -> dict:
        d = self.counts()
        for name in RATE_FIELDS:
            d[name] = getattr(self, name)
        return d

    @classmethod
    def from_counts(cls, d: dict) -> "ErrorReport":
        return cls(**{k: int(d[k]) for k in cls.__dataclass_fields__})


EMPTY = ErrorReport()


def sentence_report(a: Alignment) -> ErrorReport:
    c = count_errors(a)
    return ErrorReport(
        n_ref_words=a.ref_len,
        n_sentences=1,
        n_error_sentences=1 if c.errors else 0,
        substitutions=c.substitutions,
        deletions=c.deletions,
        insertions=c.insertions,
    )


def merge(r1: ErrorReport, r2: ErrorReport) -> ErrorReport:
    return ErrorReport(
        *(getattr(r1, f) + getattr(r2, f) for f in ErrorReport.__dataclass_fields__)
    )


def score_corpus(alignments: Iterable[Alignment]) -> ErrorReport:
    n_ref = n_sent = n_err = s = d = i = 0
    for a in alignments:
        c = count_errors(a)
        n_ref += a.ref_len
        n_sent += 1
        if c.errors:
            n_err += 1
        s += c.substitutions
        d += c.deletions
        i += c.insertions
    return ErrorReport(n_ref, n_sent, n_err, s, d, i)


def fmt_rate(x: Optional[float]) -> str:
    return "n/a" if x is None else f"{x:.1f}"


def format_rows(rows) -> str:
    """Render ``(label, report)`` rows as a error-rate grid, rates to one decimal."""
    header = ["Data"] + [c for c, _ in _COLUMNS]
    body = [[label] + [fmt_rate(getattr(r, f)) for _, f in _COLUMNS] for label, r in rows]
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    return "\n".join(
        "  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() for line in [header] + body
    )


def format_table(report: ErrorReport, label: str = "Corpus") -> str:
    return format_rows([(label, report)])


def format_keyvalue(report: ErrorReport) -> str:
    lines = [f"{k}={v}" for k, v in report.counts().items()]
    lines += [f"{name}={fmt_rate(getattr(report, name))}" for name in RATE_FIELDS]
    return "\n".join(lines)
