"""Pairwise preference ballots and their aggregation.

Listeners compare two models' recordings pair by pair, picking A, B, or
Both when equally intelligible. Ballots arrive as CSV with header
``participant_id,cohort,pair_id,choice``; cohorts are native (L1) and
non-native (L2) listeners. The overall row pools ballots rather than
averaging cohort percentages: with equal cohort sizes the two coincide,
and pooling stays well-defined for unequal cohorts. Raw ballot counts
are always reported next to the percentages, so the denominators are
never ambiguous.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

from .errors import BallotFormatError, DuplicateBallotError, NoBallotsError
from .formatting import percent_str

COHORTS = ("L1", "L2")
CHOICES = ("A", "B", "Both")
BALLOT_HEADER = ("participant_id", "cohort", "pair_id", "choice")


@dataclass(frozen=True)
class PreferenceBallot:
    participant_id: str
    cohort: str
    pair_id: str
    choice: str


@dataclass(frozen=True)
class PreferenceRow:
    """Counts for one cohort (or the pooled overall row)."""

    count_a: int = 0
    count_b: int = 0
    count_both: int = 0

    @property
    def ballot_count(self) -> int:
        return self.count_a + self.count_b + self.count_both

    def pct(self, places: int = 1) -> tuple[str, str, str]:
        total = self.ballot_count
        return (
            percent_str(self.count_a, total, places),
            percent_str(self.count_b, total, places),
            percent_str(self.count_both, total, places),
        )

    def __add__(self, other: "PreferenceRow") -> "PreferenceRow":
        return PreferenceRow(
            self.count_a + other.count_a,
            self.count_b + other.count_b,
            self.count_both + other.count_both,
        )


@dataclass(frozen=True)
class PreferenceSummary:
    """Per-cohort and pooled preference percentages, Table-style."""

    cohorts: dict[str, PreferenceRow]
    overall: PreferenceRow

    def to_json_dict(self) -> dict:
        def row(r: PreferenceRow) -> dict:
            a, b, both = r.pct()
            return {
                "pct_a": a,
                "pct_b": b,
                "pct_both": both,
                "count_a": r.count_a,
                "count_b": r.count_b,
                "count_both": r.count_both,
                "ballot_count": r.ballot_count,
            }

        return {
            "cohorts": {c: row(r) for c, r in self.cohorts.items()},
            "overall": row(self.overall),
        }

    def to_text(self) -> str:
        labels = [*self.cohorts, "overall"]
        rows = [*self.cohorts.values(), self.overall]
        header = "model".ljust(9) + "".join(lab.rjust(9) for lab in labels)
        pcts = [r.pct() for r in rows]
        lines = [header]
        for i, name in enumerate(("Model-A", "Model-B", "Both")):
            lines.append(name.ljust(9) + "".join(p[i].rjust(9) for p in pcts))
        lines.append("ballots".ljust(9) + "".join(str(r.ballot_count).rjust(9) for r in rows))
        return "\n".join(lines)


def tally(ballots: Sequence[PreferenceBallot]) -> PreferenceSummary:
    """Aggregate ballots into per-cohort rows plus a pooled overall row."""
    if not ballots:
        raise NoBallotsError()
    seen: set[tuple[str, str]] = set()
    counts: dict[str, list[int]] = {}
    for ballot in ballots:
        if ballot.cohort not in COHORTS:
            raise BallotFormatError(f"unknown cohort {ballot.cohort!r}", 0)
        if ballot.choice not in CHOICES:
            raise BallotFormatError(f"unknown choice {ballot.choice!r}", 0)
        key = (ballot.participant_id, ballot.pair_id)
        if key in seen:
            raise DuplicateBallotError(ballot.participant_id, ballot.pair_id)
        seen.add(key)
        row = counts.setdefault(ballot.cohort, [0, 0, 0])
        row[CHOICES.index(ballot.choice)] += 1
    cohorts = {
        c: PreferenceRow(*counts[c]) for c in sorted(counts)
    }
    overall = PreferenceRow()
    for row in cohorts.values():
        overall = overall + row
    return PreferenceSummary(cohorts, overall)


def load_ballots(csv_text: str) -> list[PreferenceBallot]:
    """Parse a ballot CSV, preserving row order."""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise BallotFormatError("missing header row", 1) from None
    if tuple(h.strip() for h in header) != BALLOT_HEADER:
        raise BallotFormatError(
            f"header must be {','.join(BALLOT_HEADER)!r}, got {','.join(header)!r}", 1
        )
    ballots: list[PreferenceBallot] = []
    seen: dict[tuple[str, str], int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise BallotFormatError(f"expected 4 fields, got {len(row)}", lineno)
        participant, cohort, pair, choice = (f.strip() for f in row)
        if not participant or not pair:
            raise BallotFormatError("participant_id and pair_id must be non-empty", lineno)
        if cohort not in COHORTS:
            raise BallotFormatError(f"unknown cohort {cohort!r}", lineno)
        if choice not in CHOICES:
            raise BallotFormatError(f"unknown choice {choice!r}", lineno)
        key = (participant, pair)
        if key in seen:
            raise DuplicateBallotError(participant, pair, lineno)
        seen[key] = lineno
        ballots.append(PreferenceBallot(participant, cohort, pair, choice))
    return ballots
