"""Phone-level back-off n-gram language models with ARPA serialization.

Each utterance is wrapped in sentence markers: one ``<s>`` of context at
the front (never predicted, stored with log10 probability -99 in the
ARPA convention) and a predicted ``</s>`` at the end. Counts are taken
over every in-utterance window of length 1..order whose last token is
not ``<s>``, and conditional denominators are continuation sums, so
maximum-likelihood models normalize exactly per context.

Two smoothing modes:

* ``witten-bell`` (default) — interpolated Witten-Bell, deterministic and
  parameter-free, well behaved on small phone vocabularies where
  count-of-count estimators degenerate;
* ``add-k`` — additive smoothing with configurable k; k = 0 gives the
  unsmoothed maximum-likelihood model.

Stored probabilities cover seen n-grams (all vocabulary unigrams at
order 1); the remaining mass reaches unseen events through standard
back-off weights. A context with no leftover mass gets log10 weight -99
(the usual stand-in for log of zero), which keeps export -> import an
identity. Decoding with the model is out of scope; external recognizers
consume the ARPA file.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    ArpaFormatError,
    EmptyCorpusError,
    InvalidOrderError,
    ZeroProbabilityError,
)
from .inventory import Utterance

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LOG10_ZERO = -99.0
OOV_FLOOR_LOG10 = -7.0  # floor probability 1e-7 for mapped unknowns

WITTEN_BELL = "witten-bell"
ADD_K = "add-k"


class ArpaEntry(NamedTuple):
    """log10 probability and optional log10 back-off weight."""

    logp: float
    bow: float | None = None


@dataclass
class NGramModel:
    """A back-off n-gram model over phone tokens plus sentence markers."""

    order: int
    levels: tuple[dict[tuple[str, ...], ArpaEntry], ...]
    smoothing: str = "imported"

    def __post_init__(self) -> None:
        if self.order < 1:
            raise InvalidOrderError(self.order)
        if len(self.levels) != self.order:
            raise ValueError("levels must hold one table per order")

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(g[0] for g in self.levels[0])

    @property
    def predictable(self) -> frozenset[str]:
        return self.vocabulary - {BOS}

    def entry_count(self, n: int) -> int:
        return len(self.levels[n - 1])

    def logprob(self, word: str, context: Sequence[str] = ()) -> float | None:
        """ARPA back-off lookup; None when the probability is exactly zero."""
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        return self._lookup(word, ctx)

    def _lookup(self, word: str, ctx: tuple[str, ...]) -> float | None:
        entry = self.levels[len(ctx)].get(ctx + (word,))
        if entry is not None:
            return entry.logp
        if not ctx:
            return None  # no unigram: probability is zero
        ctx_entry = self.levels[len(ctx) - 1].get(ctx)
        bow = ctx_entry.bow if ctx_entry is not None and ctx_entry.bow is not None else 0.0
        shorter = self._lookup(word, ctx[1:])
        return None if shorter is None else bow + shorter


def _collect_counts(
    corpus: Sequence[Utterance], order: int
) -> list[dict[tuple[str, ...], int]]:
    counts: list[dict[tuple[str, ...], int]] = [defaultdict(int) for _ in range(order)]
    for utt in corpus:
        toks = (BOS, *utt.phones, EOS)
        for n in range(1, order + 1):
            level = counts[n - 1]
            for i in range(len(toks) - n + 1):
                gram = toks[i : i + n]
                if gram[-1] == BOS:
                    continue  # the begin marker is context only, never an event
                level[gram] += 1
    return counts


def train(
    corpus: Sequence[Utterance],
    order: int,
    smoothing: str = WITTEN_BELL,
    k: float = 1.0,
) -> NGramModel:
    """Train an n-gram model on a transcript corpus.

    Deterministic for fixed inputs: entries are stored in sorted order
    and all arithmetic is plain float evaluation of closed-form count
    ratios. The vocabulary is corpus-derived (seen tokens plus the end
    marker).
    """
    if order < 1:
        raise InvalidOrderError(order)
    if not corpus:
        raise EmptyCorpusError("cannot train on an empty corpus")
    if smoothing not in (WITTEN_BELL, ADD_K):
        raise ValueError(f"unknown smoothing mode {smoothing!r}")
    if smoothing == ADD_K and k < 0:
        raise ValueError("add-k smoothing requires k >= 0")

    counts = _collect_counts(corpus, order)
    unigram_counts = counts[0]
    vocab = sorted(w for (w,) in unigram_counts)
    vocab_size = len(vocab)
    total = sum(unigram_counts.values())

    levels: list[dict[tuple[str, ...], ArpaEntry]] = [dict() for _ in range(order)]

    # unigrams: every vocabulary token gets mass; <s> is a -99 placeholder
    if smoothing == WITTEN_BELL:
        # types-seen equals vocab size here, reducing WB to add-one form
        types = vocab_size
        denom = total + types
        uni = {w: (unigram_counts[(w,)] + types / vocab_size) / denom for w in vocab}
    else:
        denom = total + k * vocab_size
        if denom == 0:
            raise EmptyCorpusError("no unigram events")
        uni = {w: (unigram_counts[(w,)] + k) / denom for w in vocab}
    for w in vocab:
        levels[0][(w,)] = ArpaEntry(math.log10(uni[w]))
    levels[0][(BOS,)] = ArpaEntry(LOG10_ZERO)
    levels[0] = dict(sorted(levels[0].items()))

    model = NGramModel(order, tuple(levels), _smoothing_label(smoothing, k))

    for n in range(2, order + 1):
        continuations: dict[tuple[str, ...], dict[str, int]] = defaultdict(dict)
        for gram, c in counts[n - 1].items():
            continuations[gram[:-1]][gram[-1]] = c

        table = levels[n - 1]
        for ctx in sorted(continuations):
            conts = continuations[ctx]
            ctx_total = sum(conts.values())
            types = len(conts)
            probs: dict[str, float] = {}
            lower_seen_mass = 0.0
            for w, c in conts.items():
                lower = model._lookup(w, ctx[1:])
                lower_p = 10.0 ** lower if lower is not None else 0.0
                lower_seen_mass += lower_p
                if smoothing == WITTEN_BELL:
                    probs[w] = (c + types * lower_p) / (ctx_total + types)
                else:
                    probs[w] = (c + k) / (ctx_total + k * vocab_size)
            for w in sorted(probs):
                table[ctx + (w,)] = ArpaEntry(math.log10(probs[w]))
            # back-off weight on the context entry one level down
            leftover = 1.0 - sum(probs.values())
            lower_leftover = 1.0 - lower_seen_mass
            if leftover <= 1e-12 or lower_leftover <= 1e-12:
                bow = LOG10_ZERO
            else:
                bow = math.log10(leftover) - math.log10(lower_leftover)
            ctx_entry = levels[n - 2][ctx]
            levels[n - 2][ctx] = ArpaEntry(ctx_entry.logp, bow)

    return model


def _smoothing_label(smoothing: str, k: float) -> str:
    return f"{ADD_K}({k:g})" if smoothing == ADD_K else WITTEN_BELL


@dataclass(frozen=True)
class PerplexityReport:
    """Perplexity plus the bookkeeping behind it."""

    perplexity: float
    log10_total: float
    events: int
    oov_events: int
    oov_mode: str


def evaluate_perplexity(
    model: NGramModel, corpus: Sequence[Utterance], oov: str = "strict"
) -> PerplexityReport:
    """Score a corpus: 10 ** (-(sum log10 p) / T) over T events.

    Events are every corpus token plus one end marker per utterance.
    `oov` is "strict" (a zero-probability event raises) or "unk"
    (out-of-vocabulary tokens map to an unknown token scored at the
    1e-7 floor).
    """
    if oov not in ("strict", "unk"):
        raise ValueError(f"unknown OOV mode {oov!r}")
    if not corpus:
        raise EmptyCorpusError("cannot score an empty corpus")
    vocab = model.vocabulary
    total = 0.0
    events = 0
    oov_events = 0
    for utt in corpus:
        history: list[str] = [BOS]
        for tok in (*utt.phones, EOS):
            word = tok
            if tok not in vocab:
                if oov == "strict":
                    raise ZeroProbabilityError((tok,))
                word = UNK
            lp = model.logprob(word, history)
            if lp is None:
                if oov == "strict":
                    raise ZeroProbabilityError((*history[-(model.order - 1):], word) if model.order > 1 else (word,))
                lp = OOV_FLOOR_LOG10
                oov_events += 1
            elif word == UNK:
                oov_events += 1
                lp = max(lp, OOV_FLOOR_LOG10)
            total += lp
            events += 1
            history.append(word)
    return PerplexityReport(
        perplexity=10.0 ** (-total / events),
        log10_total=total,
        events=events,
        oov_events=oov_events,
        oov_mode=oov,
    )


def perplexity(model: NGramModel, corpus: Sequence[Utterance], oov: str = "strict") -> float:
    return evaluate_perplexity(model, corpus, oov).perplexity


def export_arpa(model: NGramModel) -> str:
    """Serialize to the standard ARPA back-off format.

    Header comment records the smoothing mode; log10 values print with
    6 decimal places; entries are sorted for byte reproducibility.
    """
    lines = [f"# persel phone n-gram model; smoothing: {model.smoothing}", ""]
    lines.append("\\data\\")
    for n in range(1, model.order + 1):
        lines.append(f"ngram {n}={model.entry_count(n)}")
    for n in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{n}-grams:")
        for gram in sorted(model.levels[n - 1]):
            entry = model.levels[n - 1][gram]
            row = f"{entry.logp:.6f}\t{' '.join(gram)}"
            if entry.bow is not None:
                row += f"\t{entry.bow:.6f}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    return "\n".join(lines) + "\n"


def import_arpa(text: str) -> NGramModel:
    """Parse an ARPA file, validating counts and structural consistency."""
    lines = text.splitlines()
    idx = 0
    nlines = len(lines)

    def fail(msg: str, lineno: int) -> ArpaFormatError:
        return ArpaFormatError(msg, lineno)

    while idx < nlines and lines[idx].strip() != "\\data\\":
        idx += 1
    if idx >= nlines:
        raise fail("missing \\data\\ header", nlines)
    idx += 1

    declared: dict[int, int] = {}
    while idx < nlines:
        line = lines[idx].strip()
        if not line:
            idx += 1
            continue
        if line.startswith("\\"):
            break
        if not line.startswith("ngram "):
            raise fail(f"unexpected line in \\data\\ section: {line!r}", idx + 1)
        body = line[len("ngram "):]
        n_str, _, count_str = body.partition("=")
        try:
            n, count = int(n_str), int(count_str)
        except ValueError:
            raise fail(f"malformed count declaration: {line!r}", idx + 1) from None
        if n < 1 or count < 0 or n in declared:
            raise fail(f"invalid count declaration: {line!r}", idx + 1)
        declared[n] = count
        idx += 1
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise fail("count declarations must cover orders 1..N", idx)

    order = max(declared)
    levels: list[dict[tuple[str, ...], ArpaEntry]] = [dict() for _ in range(order)]
    entry_lines: list[dict[tuple[str, ...], int]] = [dict() for _ in range(order)]

    current: int | None = None
    saw_end = False
    while idx < nlines:
        line = lines[idx].strip()
        lineno = idx + 1
        idx += 1
        if not line:
            continue
        if line == "\\end\\":
            saw_end = True
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            try:
                current = int(line[1:-len("-grams:")])
            except ValueError:
                raise fail(f"malformed section header {line!r}", lineno) from None
            if current not in declared:
                raise fail(f"section \\{current}-grams: was not declared", lineno)
            continue
        if current is None:
            raise fail(f"entry outside any n-gram section: {line!r}", lineno)
        fields = line.split()
        if len(fields) == current + 1:
            bow = None
        elif len(fields) == current + 2:
            if current == order:
                raise fail("dangling back-off weight on a highest-order entry", lineno)
            try:
                bow = float(fields[-1])
            except ValueError:
                raise fail(f"malformed back-off weight {fields[-1]!r}", lineno) from None
        else:
            raise fail(
                f"expected {current + 1} or {current + 2} fields, got {len(fields)}", lineno
            )
        try:
            logp = float(fields[0])
        except ValueError:
            raise fail(f"malformed log probability {fields[0]!r}", lineno) from None
        gram = tuple(fields[1 : current + 1])
        if gram in levels[current - 1]:
            raise fail(f"duplicate {current}-gram {' '.join(gram)!r}", lineno)
        levels[current - 1][gram] = ArpaEntry(logp, bow)
        entry_lines[current - 1][gram] = lineno

    if not saw_end:
        raise fail("missing \\end\\ marker", nlines)
    for n, count in declared.items():
        if len(levels[n - 1]) != count:
            raise fail(
                f"\\data\\ declares {count} {n}-grams but section holds {len(levels[n - 1])}",
                nlines,
            )
    for n in range(2, order + 1):
        for gram, lineno in entry_lines[n - 1].items():
            if gram[:-1] not in levels[n - 2]:
                raise fail(
                    f"prefix {' '.join(gram[:-1])!r} of stored {n}-gram is missing", lineno
                )

    levels = [dict(sorted(level.items())) for level in levels]
    return NGramModel(order, tuple(levels), smoothing="imported")


def context_prob_sums(model: NGramModel) -> dict[tuple[str, ...], float]:
    """Total conditional probability per stored context; 1.0 when normalized.

    Sums run over the predictable vocabulary through the full back-off
    lookup, for every stored gram shorter than the model order plus the
    empty context.
    """
    words = sorted(model.predictable)
    sums: dict[tuple[str, ...], float] = {}
    contexts: Iterable[tuple[str, ...]] = [()]
    for n in range(1, model.order):
        contexts = list(contexts) + list(model.levels[n - 1])
    for ctx in contexts:
        total = 0.0
        for w in words:
            lp = model._lookup(w, ctx)
            if lp is not None:
                total += 10.0 ** lp
        sums[ctx] = total
    return sums
