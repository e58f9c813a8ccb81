"""Phone alphabet definition and Kaldi-style transcript parsing.

Phones are opaque tokens: non-empty strings without whitespace, compared
byte-for-byte. The toolkit never interprets them phonetically, so Hindi
common-label-set symbols, IPA, or plain ASCII all pass through untouched.

File formats handled here:

* inventory file — one token per line, ``#`` comment lines, an optional
  ``<tab>special`` class tag for word-boundary / punctuation / silence
  tokens;
* transcript file — Kaldi ``text`` convention, ``<utt-id> <tok> <tok> ...``
  per line, UTF-8, LF line endings. Lines starting with ``#`` are skipped
  so generated fixtures can carry a provenance header.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicatePhoneError,
    DuplicateUtteranceError,
    EmptyInventoryError,
    EmptyReferenceError,
    InventoryFormatError,
    UnknownPhoneError,
)

log = logging.getLogger(__name__)

SPECIAL_TAG = "special"


def _check_label(label: str, line: int) -> None:
    if not label:
        raise InventoryFormatError("empty phone label", line)
    if any(ch.isspace() for ch in label):
        raise InventoryFormatError(f"phone label {label!r} contains whitespace", line)


@dataclass(frozen=True)
class PhoneInventory:
    """The phone alphabet: regular phones plus special tokens.

    `phones` and `specials` are disjoint; specials hold word-boundary,
    punctuation and silence tokens that a scoring filter may exclude.
    """

    phones: frozenset[str]
    specials: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.phones:
            raise EmptyInventoryError()
        overlap = self.phones & self.specials
        if overlap:
            raise EmptyInventoryError(
                f"phones and specials overlap: {sorted(overlap)}"
            )

    def __contains__(self, label: str) -> bool:
        return label in self.phones or label in self.specials

    @property
    def all_labels(self) -> frozenset[str]:
        return self.phones | self.specials

    def to_text(self) -> str:
        lines = [*sorted(self.phones)]
        lines.extend(f"{label}\t{SPECIAL_TAG}" for label in sorted(self.specials))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Utterance:
    """One identified phone sequence; the unit of scoring."""

    utt_id: str
    phones: tuple[str, ...]


def parse_inventory(text_content: str) -> PhoneInventory:
    """Parse an inventory file. Ordering in the file is irrelevant."""
    phones: set[str] = set()
    specials: set[str] = set()
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text_content.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.split("\t")
        label = parts[0].strip()
        _check_label(label, lineno)
        if len(parts) == 1:
            target = phones
        elif len(parts) == 2 and parts[1].strip() == SPECIAL_TAG:
            target = specials
        else:
            raise InventoryFormatError(f"unrecognized class tag on {label!r}", lineno)
        if label in seen:
            raise DuplicatePhoneError(label, lineno)
        seen[label] = lineno
        target.add(label)
    if not phones:
        raise EmptyInventoryError()
    return PhoneInventory(frozenset(phones), frozenset(specials))


def parse_transcripts(
    text_content: str,
    inventory: PhoneInventory | None = None,
    strict: bool = False,
    allow_empty: bool = False,
) -> list[Utterance]:
    """Parse a Kaldi-style transcript file into utterances, in file order.

    With `strict` set (requires `inventory`), any token outside the
    inventory raises `UnknownPhoneError`. Without it, unknown tokens are
    kept and summarized in a single log warning. `allow_empty` permits
    id-only lines, which are legal for hypothesis corpora (the decoder
    emitted nothing) but an error for references.
    """
    if strict and inventory is None:
        raise ValueError("strict parsing requires an inventory")
    utterances: list[Utterance] = []
    seen: dict[str, int] = {}
    unknown: Counter[str] = Counter()
    for lineno, raw in enumerate(text_content.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        utt_id, tokens = parts[0], parts[1:]
        if utt_id in seen:
            raise DuplicateUtteranceError(utt_id, lineno)
        seen[utt_id] = lineno
        if not tokens and not allow_empty:
            raise EmptyReferenceError(utt_id)
        if inventory is not None:
            for tok in tokens:
                if tok not in inventory:
                    if strict:
                        raise UnknownPhoneError(tok, utt_id)
                    unknown[tok] += 1
        utterances.append(Utterance(utt_id, tuple(tokens)))
    if unknown:
        kinds = ", ".join(f"{t} ({c})" for t, c in unknown.most_common(10))
        log.warning(
            "%d token type(s), %d occurrence(s) outside the inventory: %s",
            len(unknown), sum(unknown.values()), kinds,
        )
    return utterances


def format_transcripts(utterances: Iterable[Utterance]) -> str:
    """Serialize utterances back to the transcript format."""
    lines = []
    for utt in utterances:
        lines.append(f"{utt.utt_id} {' '.join(utt.phones)}".rstrip())
    return "\n".join(lines) + "\n" if lines else ""


def unknown_token_counts(
    utterances: Iterable[Utterance], inventory: PhoneInventory
) -> Counter[str]:
    """Occurrence counts of tokens outside the inventory."""
    unknown: Counter[str] = Counter()
    for utt in utterances:
        for tok in utt.phones:
            if tok not in inventory:
                unknown[tok] += 1
    return unknown


@dataclass(frozen=True)
class CoverageSummary:
    """Which regular phones a corpus exercises, and how often each token occurs.

    `phone_counts` covers every token seen in the corpus (specials and
    unknown tokens included), so its values always sum to
    `total_phone_occurrences`. The present/missing accounting refers to
    the regular phone set only.
    """

    unique_phones_present: int
    inventory_size: int
    missing_phones: tuple[str, ...]
    total_phone_occurrences: int
    phone_counts: Mapping[str, int] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "unique_phones_present": self.unique_phones_present,
            "inventory_size": self.inventory_size,
            "missing_phones": list(self.missing_phones),
            "total_phone_occurrences": self.total_phone_occurrences,
            "phone_counts": {p: self.phone_counts[p] for p in sorted(self.phone_counts)},
        }


def coverage_report(
    corpus: Sequence[Utterance], inventory: PhoneInventory
) -> CoverageSummary:
    """Per-phone occurrence counts and unique-phone coverage of a corpus."""
    counts: Counter[str] = Counter()
    for utt in corpus:
        counts.update(utt.phones)
    present = {p for p in counts if p in inventory.phones}
    missing = tuple(sorted(inventory.phones - present))
    return CoverageSummary(
        unique_phones_present=len(present),
        inventory_size=len(inventory.phones),
        missing_phones=missing,
        total_phone_occurrences=sum(counts.values()),
        phone_counts=dict(counts),
    )
