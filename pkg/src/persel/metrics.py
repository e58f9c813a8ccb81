"""Error rates and per-phone detection statistics.

The phone error rate of an alignment is (S + D + I) / N, with N the
reference phone count; values are kept as exact rationals and rendered
to decimals only at the output boundary. Corpus-level rates pool raw
counts across utterances (the sclite/Kaldi convention) rather than
averaging per-utterance rates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .alignment import (
    Alignment,
    DELETE,
    ErrorCounts,
    INSERT,
    MATCH,
    SUBSTITUTE,
    align,
)
from .errors import (
    EmptyCorpusError,
    ReferenceMismatchError,
    UndefinedRateError,
)
from .formatting import DEFAULT_PLACES, decimal_str


@dataclass(frozen=True)
class ScoringFilter:
    """Which tokens enter alignment.

    The default excludes the silence phone and the word-boundary token
    but keeps everything else (punctuation tokens included). The filter
    is explicit configuration and its description is recorded in every
    report so results stay interpretable.
    """

    excluded: frozenset[str] = frozenset()

    @classmethod
    def standard(cls, silence: str | None = "sil", boundary: str | None = None) -> "ScoringFilter":
        labels = {lab for lab in (silence, boundary) if lab}
        return cls(frozenset(labels))

    @classmethod
    def score_all(cls) -> "ScoringFilter":
        return cls(frozenset())

    def apply(self, seq: Sequence[str]) -> tuple[str, ...]:
        if not self.excluded:
            return tuple(seq)
        return tuple(tok for tok in seq if tok not in self.excluded)

    def describe(self) -> str:
        if not self.excluded:
            return "score all tokens"
        return "exclude " + ",".join(sorted(self.excluded))


def per(alignment: Alignment) -> Fraction:
    """Phone error rate of one alignment, as an exact rational."""
    return alignment.counts.rate


@dataclass(frozen=True)
class ErrorRateReport:
    """Per-utterance and pooled counts; pooled equals the sum of rows."""

    per_utterance: dict[str, ErrorCounts]
    pooled: ErrorCounts

    @property
    def pooled_rate(self) -> Fraction:
        return self.pooled.rate

    def to_json_dict(self, places: int = DEFAULT_PLACES) -> dict:
        def entry(c: ErrorCounts) -> dict:
            d = c.to_json_dict()
            rate = c.rate
            d["rate"] = decimal_str(rate, places)
            d["rate_exact"] = [rate.numerator, rate.denominator]
            return d

        return {
            "pooled": entry(self.pooled),
            "utterances": {uid: entry(c) for uid, c in self.per_utterance.items()},
        }

    def to_text(self, places: int = DEFAULT_PLACES, label: str = "PER") -> str:
        p = self.pooled
        lines = [
            f"pooled {label} {decimal_str(p.rate, places)}  "
            f"[C={p.hits} S={p.substitutions} D={p.deletions} I={p.insertions} N={p.ref_length}]"
        ]
        width = max((len(u) for u in self.per_utterance), default=0)
        for uid, c in self.per_utterance.items():
            lines.append(
                f"{uid.ljust(width)}  {decimal_str(c.rate, places)}  "
                f"[C={c.hits} S={c.substitutions} D={c.deletions} I={c.insertions} N={c.ref_length}]"
            )
        return "\n".join(lines)


def corpus_per(alignments: Mapping[str, Alignment]) -> ErrorRateReport:
    """Pool alignments keyed by utterance id into a corpus report."""
    if not alignments:
        raise EmptyCorpusError()
    per_utt: dict[str, ErrorCounts] = {}
    pooled = ErrorCounts()
    for utt_id, alignment in alignments.items():
        per_utt[utt_id] = alignment.counts
        pooled = pooled + alignment.counts
    return ErrorRateReport(per_utt, pooled)


def split_words(seq: Sequence[str], boundary: str) -> list[str]:
    """Split a phone sequence into word tokens at the boundary phone.

    A word is a maximal run of phones between boundaries, rendered as the
    space-joined phone labels (labels contain no whitespace, so the join
    is collision-free). Empty runs from leading, trailing, or doubled
    boundaries are dropped.
    """
    words: list[str] = []
    current: list[str] = []
    for tok in seq:
        if tok == boundary:
            if current:
                words.append(" ".join(current))
                current = []
        else:
            current.append(tok)
    if current:
        words.append(" ".join(current))
    return words


def word_counts(
    reference: Sequence[str], hypothesis: Sequence[str], boundary: str
) -> ErrorCounts:
    """Word-level C/S/D/I counts after splitting on the boundary phone."""
    ref_words = split_words(reference, boundary)
    if not ref_words:
        raise UndefinedRateError("no reference words after splitting on the boundary")
    hyp_words = split_words(hypothesis, boundary)
    if not hyp_words:
        return ErrorCounts(deletions=len(ref_words))
    return align(ref_words, hyp_words).counts


def word_error_rate(
    reference: Sequence[str], hypothesis: Sequence[str], boundary: str
) -> Fraction:
    """Word error rate: the phone-rate formula applied to word tokens."""
    return word_counts(reference, hypothesis, boundary).rate


def corpus_wer(
    references: Mapping[str, Sequence[str]],
    hypotheses: Mapping[str, Sequence[str]],
    boundary: str,
) -> ErrorRateReport:
    """Pooled word error rate; a missing hypothesis counts as all deletions."""
    if not references:
        raise EmptyCorpusError()
    per_utt: dict[str, ErrorCounts] = {}
    pooled = ErrorCounts()
    for utt_id, ref in references.items():
        counts = word_counts(ref, hypotheses.get(utt_id, ()), boundary)
        per_utt[utt_id] = counts
        pooled = pooled + counts
    return ErrorRateReport(per_utt, pooled)


@dataclass
class PhoneTally:
    """How one reference phone fared across a corpus of alignments."""

    occurrences: int = 0
    correct: int = 0
    substituted_as: Counter = field(default_factory=Counter)
    deleted: int = 0

    @property
    def substituted(self) -> int:
        return sum(self.substituted_as.values())


@dataclass
class PhoneStats:
    """Per-phone detection tallies over a reference corpus."""

    tallies: dict[str, PhoneTally] = field(default_factory=dict)

    def total_occurrences(self) -> int:
        return sum(t.occurrences for t in self.tallies.values())

    def total_correct(self) -> int:
        return sum(t.correct for t in self.tallies.values())

    def occurrence_map(self) -> dict[str, int]:
        return {p: t.occurrences for p, t in self.tallies.items()}

    def to_json_dict(self) -> dict:
        return {
            p: {
                "occurrences": t.occurrences,
                "correct": t.correct,
                "substituted_as": {q: t.substituted_as[q] for q in sorted(t.substituted_as)},
                "deleted": t.deleted,
            }
            for p, t in sorted(self.tallies.items())
        }

    def to_text(self) -> str:
        lines = [f"{'phone':<10} {'occ':>7} {'correct':>7} {'sub':>7} {'del':>7}"]
        for p in sorted(self.tallies):
            t = self.tallies[p]
            lines.append(
                f"{p:<10} {t.occurrences:>7} {t.correct:>7} {t.substituted:>7} {t.deleted:>7}"
            )
        lines.append(
            f"{'TOTAL':<10} {self.total_occurrences():>7} {self.total_correct():>7}"
        )
        return "\n".join(lines)


def phone_stats(alignments: Iterable[Alignment]) -> PhoneStats:
    """Tally match/substitution/deletion ops per reference phone.

    "Correctly detected" means a match op on the reference phone under
    the deterministic alignment; insertions carry no reference phone and
    do not appear here, so occurrences sum to the pooled N.
    """
    stats = PhoneStats()
    for alignment in alignments:
        for op in alignment.ops:
            if op.tag == INSERT:
                continue
            tally = stats.tallies.get(op.ref)
            if tally is None:
                tally = stats.tallies.setdefault(op.ref, PhoneTally())
            tally.occurrences += 1
            if op.tag == MATCH:
                tally.correct += 1
            elif op.tag == SUBSTITUTE:
                tally.substituted_as[op.hyp] += 1
            elif op.tag == DELETE:
                tally.deleted += 1
    return stats


@dataclass(frozen=True)
class DetectionDelta:
    """Correct-detection difference for one phone between two models."""

    phone: str
    occurrences: int
    correct_a: int
    correct_b: int

    @property
    def difference(self) -> int:
        return self.correct_b - self.correct_a


@dataclass(frozen=True)
class DetectionDeltaReport:
    """All phones ranked by detection difference (model B minus model A)."""

    rows: tuple[DetectionDelta, ...]
    k: int

    @property
    def top(self) -> tuple[DetectionDelta, ...]:
        return self.rows[: self.k]

    @property
    def bottom(self) -> tuple[DetectionDelta, ...]:
        return self.rows[-self.k :] if self.rows else ()

    @property
    def improved(self) -> int:
        return sum(1 for r in self.rows if r.difference > 0)

    @property
    def unchanged(self) -> int:
        return sum(1 for r in self.rows if r.difference == 0)

    @property
    def reduced(self) -> int:
        return sum(1 for r in self.rows if r.difference < 0)

    @property
    def total_correct_a(self) -> int:
        return sum(r.correct_a for r in self.rows)

    @property
    def total_correct_b(self) -> int:
        return sum(r.correct_b for r in self.rows)

    @property
    def total_occurrences(self) -> int:
        return sum(r.occurrences for r in self.rows)

    def to_csv(self) -> str:
        lines = ["phone,occurrences,correct_a,correct_b,difference"]
        for r in self.rows:
            lines.append(
                f"{r.phone},{r.occurrences},{r.correct_a},{r.correct_b},{r.difference}"
            )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "rows": [
                {
                    "phone": r.phone,
                    "occurrences": r.occurrences,
                    "correct_a": r.correct_a,
                    "correct_b": r.correct_b,
                    "difference": r.difference,
                }
                for r in self.rows
            ],
            "k": self.k,
            "improved": self.improved,
            "unchanged": self.unchanged,
            "reduced": self.reduced,
            "total_occurrences": self.total_occurrences,
            "total_correct_a": self.total_correct_a,
            "total_correct_b": self.total_correct_b,
        }

    def to_text(self) -> str:
        def block(rows: Iterable[DetectionDelta]) -> list[str]:
            return [
                f"{r.phone:<10} {r.occurrences:>8} {r.correct_a:>10} {r.correct_b:>10} {r.difference:>+7}"
                for r in rows
            ]

        header = f"{'phone':<10} {'occ':>8} {'correct_a':>10} {'correct_b':>10} {'diff':>7}"
        lines = [header, *block(self.top)]
        if len(self.rows) > 2 * self.k:
            lines.append("...")
        if len(self.rows) > self.k:
            lines.extend(block(self.rows[max(self.k, len(self.rows) - self.k):]))
        lines.append(
            f"phones improved/unchanged/reduced: {self.improved}/{self.unchanged}/{self.reduced}  "
            f"correct {self.total_correct_a} -> {self.total_correct_b} of {self.total_occurrences}"
        )
        return "\n".join(lines)


def detection_delta(
    stats_a: PhoneStats, stats_b: PhoneStats, k: int = 5
) -> DetectionDeltaReport:
    """Rank phones by correct-detection difference between two models.

    Both statistics must come from the same reference corpus, so their
    occurrence maps must be identical. Ties in the ranking break toward
    higher occurrence counts, then lexicographic phone label.
    """
    occ_a, occ_b = stats_a.occurrence_map(), stats_b.occurrence_map()
    if occ_a != occ_b:
        diff = set(occ_a.items()) ^ set(occ_b.items())
        phones = sorted({p for p, _ in diff})
        raise ReferenceMismatchError(
            f"occurrence maps differ (phones: {', '.join(phones[:5])}); "
            "statistics were not computed on the same reference corpus"
        )
    rows = [
        DetectionDelta(
            phone=p,
            occurrences=occ_a[p],
            correct_a=stats_a.tallies[p].correct,
            correct_b=stats_b.tallies[p].correct,
        )
        for p in occ_a
    ]
    rows.sort(key=lambda r: (-r.difference, -r.occurrences, r.phone))
    return DetectionDeltaReport(tuple(rows), k)
