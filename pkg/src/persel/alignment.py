"""Minimum-edit-distance alignment between phone sequences.

Unit costs (substitution = deletion = insertion = 1), the convention of
sclite and Kaldi scoring tools. Traceback tie-breaking is fixed to
match > substitute > delete > insert at every cell, which makes op
sequences, and therefore all per-phone statistics derived from them,
byte-reproducible across runs and platforms.

Sequences are short (utterance-length), so the full O(|ref|*|hyp|) table
with traceback is used; no banding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

from .errors import EmptyReferenceError, UndefinedRateError

MATCH = "C"
SUBSTITUTE = "S"
DELETE = "D"
INSERT = "I"


class EditOp(NamedTuple):
    """One alignment step: tag is C/S/D/I; ref/hyp is None where absent."""

    tag: str
    ref: str | None
    hyp: str | None


# Distinct ops are few (bounded by the squared phone inventory), so they
# are interned; this keeps large corpus alignments cheap.
@lru_cache(maxsize=None)
def _op(tag: str, ref: str | None, hyp: str | None) -> EditOp:
    return EditOp(tag, ref, hyp)


@dataclass(frozen=True)
class ErrorCounts:
    """The C/S/D/I tallies of one or more alignments."""

    hits: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def ref_length(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def hyp_length(self) -> int:
        return self.hits + self.substitutions + self.insertions

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> Fraction:
        """errors / ref_length as an exact rational."""
        if self.ref_length == 0:
            raise UndefinedRateError()
        return Fraction(self.errors, self.ref_length)

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(
            self.hits + other.hits,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )

    def to_json_dict(self) -> dict:
        return {
            "hits": self.hits,
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_length": self.ref_length,
        }


@dataclass(frozen=True)
class Alignment:
    """An op trace plus its counts; counts always agree with the ops."""

    ops: tuple[EditOp, ...]
    counts: ErrorCounts

    @classmethod
    def from_ops(cls, ops: Sequence[EditOp]) -> "Alignment":
        """Build an alignment from ops, recounting and validating them."""
        c = s = d = i = 0
        for op in ops:
            if op.tag == MATCH:
                if op.ref != op.hyp:
                    raise ValueError(f"match op with differing phones: {op}")
                c += 1
            elif op.tag == SUBSTITUTE:
                if op.ref == op.hyp:
                    raise ValueError(f"substitution op with equal phones: {op}")
                s += 1
            elif op.tag == DELETE:
                d += 1
            elif op.tag == INSERT:
                i += 1
            else:
                raise ValueError(f"unknown op tag: {op.tag!r}")
        return cls(tuple(ops), ErrorCounts(c, s, d, i))

    @property
    def ref_length(self) -> int:
        return self.counts.ref_length

    @property
    def hyp_length(self) -> int:
        return self.counts.hyp_length


def align(reference: Sequence[str], hypothesis: Sequence[str]) -> Alignment:
    """Optimal unit-cost alignment of hypothesis against reference.

    The reference must be non-empty (an empty reference makes the error
    rate undefined); the hypothesis may be empty, which yields pure
    deletions. Deterministic: DP ties are resolved during traceback as
    match > substitute > delete > insert at each cell.
    """
    n, m = len(reference), len(hypothesis)
    if n == 0:
        raise EmptyReferenceError()

    rows = [list(range(m + 1))]
    prev = rows[0]
    for i in range(1, n + 1):
        ri = reference[i - 1]
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            best = prev[j - 1] + (ri != hypothesis[j - 1])
            up = prev[j] + 1
            if up < best:
                best = up
            left = cur[j - 1] + 1
            if left < best:
                best = left
            cur[j] = best
        rows.append(cur)
        prev = cur

    ops: list[EditOp] = []
    hits = subs = dels = inss = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            r, h = reference[i - 1], hypothesis[j - 1]
            if r == h:
                # with unit costs the diagonal is always optimal on a match
                ops.append(_op(MATCH, r, h))
                hits += 1
                i -= 1
                j -= 1
                continue
            cell = rows[i][j]
            if rows[i - 1][j - 1] + 1 == cell:
                ops.append(_op(SUBSTITUTE, r, h))
                subs += 1
                i -= 1
                j -= 1
                continue
            if rows[i - 1][j] + 1 == cell:
                ops.append(_op(DELETE, r, None))
                dels += 1
                i -= 1
                continue
            ops.append(_op(INSERT, None, h))
            inss += 1
            j -= 1
        elif i > 0:
            ops.append(_op(DELETE, reference[i - 1], None))
            dels += 1
            i -= 1
        else:
            ops.append(_op(INSERT, None, hypothesis[j - 1]))
            inss += 1
            j -= 1
    ops.reverse()
    return Alignment(tuple(ops), ErrorCounts(hits, subs, dels, inss))


def edit_distance(reference: Sequence[str], hypothesis: Sequence[str]) -> int:
    """Unit-cost Levenshtein distance; both sequences may be empty."""
    if len(reference) < len(hypothesis):
        reference, hypothesis = hypothesis, reference
    if not hypothesis:
        return len(reference)
    prev = list(range(len(hypothesis) + 1))
    for i, r in enumerate(reference, start=1):
        cur = [i] + [0] * len(hypothesis)
        for j, h in enumerate(hypothesis, start=1):
            best = prev[j - 1] + (r != h)
            up = prev[j] + 1
            if up < best:
                best = up
            left = cur[j - 1] + 1
            if left < best:
                best = left
            cur[j] = best
        prev = cur
    return prev[-1]


def apply_ops(ops: Sequence[EditOp], reference: Sequence[str]) -> list[str]:
    """Replay an op trace against its reference, reconstructing the hypothesis.

    Raises ValueError when the ops do not consume the reference exactly;
    used to validate alignments in tests and format checks.
    """
    out: list[str] = []
    pos = 0
    for op in ops:
        if op.tag in (MATCH, SUBSTITUTE, DELETE):
            if pos >= len(reference) or reference[pos] != op.ref:
                raise ValueError(f"op {op} does not match reference at position {pos}")
            pos += 1
        if op.tag in (MATCH, SUBSTITUTE, INSERT):
            if op.hyp is None:
                raise ValueError(f"op {op} lacks a hypothesis phone")
            out.append(op.hyp)
    if pos != len(reference):
        raise ValueError(f"ops consumed {pos} of {len(reference)} reference phones")
    return out


def format_alignment(alignment: Alignment, gap: str = "*") -> str:
    """Three-row text rendering: reference, op tags, hypothesis."""
    ref_row, tag_row, hyp_row = [], [], []
    for op in alignment.ops:
        r = op.ref if op.ref is not None else gap
        h = op.hyp if op.hyp is not None else gap
        width = max(len(r), len(h), 1)
        ref_row.append(r.ljust(width))
        tag_row.append(op.tag.ljust(width))
        hyp_row.append(h.ljust(width))
    return (
        f"REF: {' '.join(ref_row).rstrip()}\n"
        f"OPS: {' '.join(tag_row).rstrip()}\n"
        f"HYP: {' '.join(hyp_row).rstrip()}"
    )
