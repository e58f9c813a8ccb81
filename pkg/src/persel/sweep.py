"""PER evaluation across training checkpoints and selection policies.

A manifest lists checkpoints as a JSON array of
``{"epoch": int, "hypothesis_path": str, "validation_loss"?: float}``.
Evaluation follows a schedule (default: start at epoch 50, then every
10 epochs, which suits typical TTS sweeps); manifest entries off the
schedule are skipped but still count for loss-based selection, since
losses are usually available for every epoch while decoding is not.

Selection is argmin with ties resolved toward the smallest epoch (the
cheapest model). A missing hypothesis utterance scores as an empty
decode, i.e. all deletions: late-epoch attention failures can produce
empty synthesis, and dropping such utterances would bias PER downward.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .alignment import ErrorCounts, align
from .errors import (
    DuplicateEpochError,
    EmptyReferenceError,
    EmptySweepError,
    IdMismatchError,
    InvalidEpochError,
    ManifestFormatError,
    NoLossDataError,
    SweepIOError,
)
from .formatting import DEFAULT_PLACES, decimal_str
from .inventory import Utterance, parse_transcripts
from .metrics import ScoringFilter

DEFAULT_TOLERANCE = 0.005


@dataclass(frozen=True)
class CheckpointRecord:
    """One checkpoint: epoch, its decoded transcripts, an optional loss."""

    epoch: int
    hypothesis_path: str
    validation_loss: float | None = None


def load_manifest(text_content: str) -> list[CheckpointRecord]:
    """Parse a manifest; records come back sorted by epoch."""
    try:
        data = json.loads(text_content)
    except json.JSONDecodeError as exc:
        raise ManifestFormatError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ManifestFormatError("manifest must be a JSON array")
    records: list[CheckpointRecord] = []
    seen: set[int] = set()
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise ManifestFormatError(f"manifest entry {i} is not an object")
        epoch = raw.get("epoch")
        if isinstance(epoch, bool) or not isinstance(epoch, int) or epoch < 1:
            raise InvalidEpochError(epoch)
        if epoch in seen:
            raise DuplicateEpochError(epoch)
        seen.add(epoch)
        path = raw.get("hypothesis_path")
        if not isinstance(path, str) or not path:
            raise ManifestFormatError(f"manifest entry {i} lacks a hypothesis_path")
        loss = raw.get("validation_loss")
        if loss is not None and (isinstance(loss, bool) or not isinstance(loss, (int, float))):
            raise ManifestFormatError(f"manifest entry {i} validation_loss is not a number")
        if loss is not None and loss < 0:
            raise ManifestFormatError(f"manifest entry {i} validation_loss is negative")
        records.append(CheckpointRecord(epoch, path, None if loss is None else float(loss)))
    return sorted(records, key=lambda r: r.epoch)


@dataclass(frozen=True)
class EvalSchedule:
    """Which epochs get a PER point: start_epoch, then every `stride`."""

    start_epoch: int = 50
    stride: int = 10

    def __post_init__(self) -> None:
        if self.start_epoch < 1 or self.stride < 1:
            raise ManifestFormatError("schedule needs start_epoch >= 1 and stride >= 1")

    def covers(self, epoch: int) -> bool:
        return epoch >= self.start_epoch and (epoch - self.start_epoch) % self.stride == 0


@dataclass(frozen=True)
class SweepPoint:
    """Pooled counts for one evaluated checkpoint."""

    epoch: int
    counts: ErrorCounts
    loss: float | None = None

    @property
    def per(self) -> Fraction:
        return self.counts.rate


@dataclass
class SweepReport:
    """The PER curve plus everything needed to reproduce and select from it."""

    points: list[SweepPoint]
    skipped_epochs: list[int] = field(default_factory=list)
    scoring: str = "score all tokens"
    schedule: EvalSchedule = field(default_factory=EvalSchedule)
    selected_by_loss: int | None = None
    baseline_per: float | None = None
    tolerance: float = DEFAULT_TOLERANCE
    converged_at: int | None = None

    @property
    def selected_by_per(self) -> int:
        return select_best_per(self)

    def set_baseline(self, baseline_per: float, tolerance: float = DEFAULT_TOLERANCE) -> None:
        self.baseline_per = baseline_per
        self.tolerance = tolerance
        self.converged_at = convergence_check(self, baseline_per, tolerance)

    def to_json_dict(self, places: int = DEFAULT_PLACES) -> dict:
        points = []
        for p in self.points:
            rate = p.per
            points.append({
                "epoch": p.epoch,
                "per": decimal_str(rate, places),
                "per_exact": [rate.numerator, rate.denominator],
                "loss": p.loss,
                **p.counts.to_json_dict(),
            })
        return {
            "points": points,
            "skipped_epochs": list(self.skipped_epochs),
            "scoring": self.scoring,
            "schedule": {"start_epoch": self.schedule.start_epoch, "stride": self.schedule.stride},
            "selected_by_per": self.selected_by_per if self.points else None,
            "selected_by_loss": self.selected_by_loss,
            "baseline_per": self.baseline_per,
            "tolerance": self.tolerance,
            "converged_at": self.converged_at,
        }

    def to_json(self, places: int = DEFAULT_PLACES) -> str:
        return json.dumps(self.to_json_dict(places), indent=2, sort_keys=True) + "\n"


def select_best_per(report: SweepReport) -> int:
    """Epoch with the least PER; ties go to the smallest epoch."""
    if not report.points:
        raise EmptySweepError()
    best = min(report.points, key=lambda p: (p.per, p.epoch))
    return best.epoch


def select_best_loss(manifest: Sequence[CheckpointRecord]) -> int:
    """Epoch with the least validation loss; ties go to the smallest epoch."""
    with_loss = [r for r in manifest if r.validation_loss is not None]
    if not with_loss:
        raise NoLossDataError()
    best = min(with_loss, key=lambda r: (r.validation_loss, r.epoch))
    return best.epoch


def convergence_check(
    report: SweepReport, baseline_per: float, tolerance: float = DEFAULT_TOLERANCE
) -> int | None:
    """First scheduled epoch whose PER is within tolerance of the baseline.

    The baseline is the pooled PER of ASR decodes of the original
    recordings; a synthesized curve that reaches it has converged to
    recording-level intelligibility.
    """
    if baseline_per < 0:
        raise ManifestFormatError("baseline_per must be >= 0")
    if tolerance <= 0:
        raise ManifestFormatError("tolerance must be > 0")
    for point in report.points:
        if abs(float(point.per) - baseline_per) <= tolerance:
            return point.epoch
    return None


def _evaluate_checkpoint(
    record: CheckpointRecord,
    filtered_refs: dict[str, tuple[str, ...]],
    scoring: ScoringFilter,
    base_dir: Path | None,
) -> SweepPoint:
    path = Path(record.hypothesis_path)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SweepIOError(record.epoch, str(path), exc) from exc
    hyps = parse_transcripts(text, inventory=None, strict=False, allow_empty=True)
    hyp_map = {u.utt_id: u.phones for u in hyps}
    extra = [uid for uid in hyp_map if uid not in filtered_refs]
    if extra:
        raise IdMismatchError(record.epoch, sorted(extra))
    pooled = ErrorCounts()
    for utt_id, ref in filtered_refs.items():
        hyp = scoring.apply(hyp_map.get(utt_id, ()))
        pooled = pooled + align(ref, hyp).counts
    return SweepPoint(record.epoch, pooled, record.validation_loss)


def evaluate_sweep(
    manifest: Sequence[CheckpointRecord],
    reference: Sequence[Utterance],
    schedule: EvalSchedule | None = None,
    scoring: ScoringFilter | None = None,
    base_dir: str | Path | None = None,
    jobs: int = 1,
) -> SweepReport:
    """Compute one pooled PER point per scheduled checkpoint.

    `base_dir` resolves relative hypothesis paths (normally the manifest
    directory). A hypothesis utterance missing from a checkpoint scores
    as an empty decode; an id absent from the reference is an error.
    `jobs` evaluates checkpoints concurrently (0 = one worker per CPU);
    assembly is keyed by epoch, so the degree never changes the result.
    """
    schedule = schedule or EvalSchedule()
    scoring = scoring or ScoringFilter.standard()
    base = Path(base_dir) if base_dir is not None else None

    filtered_refs: dict[str, tuple[str, ...]] = {}
    for utt in reference:
        seq = scoring.apply(utt.phones)
        if not seq:
            raise EmptyReferenceError(utt.utt_id)
        filtered_refs[utt.utt_id] = seq

    scheduled = [r for r in manifest if schedule.covers(r.epoch)]
    skipped = [r.epoch for r in manifest if not schedule.covers(r.epoch)]

    if jobs == 1 or len(scheduled) <= 1:
        points = [
            _evaluate_checkpoint(r, filtered_refs, scoring, base) for r in scheduled
        ]
    else:
        workers = jobs if jobs > 0 else min(len(scheduled), os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(
                pool.map(
                    lambda r: _evaluate_checkpoint(r, filtered_refs, scoring, base),
                    scheduled,
                )
            )

    selected_by_loss: int | None
    try:
        selected_by_loss = select_best_loss(manifest)
    except NoLossDataError:
        selected_by_loss = None

    return SweepReport(
        points=sorted(points, key=lambda p: p.epoch),
        skipped_epochs=skipped,
        scoring=scoring.describe(),
        schedule=schedule,
        selected_by_loss=selected_by_loss,
    )


def emit_curve(report: SweepReport, places: int = DEFAULT_PLACES) -> tuple[str, str]:
    """Render the curve as (CSV text, JSON text).

    CSV header is ``epoch,per,loss`` with the loss column blank where
    absent; the JSON mirrors the full report structure.
    """
    lines = ["epoch,per,loss"]
    for p in report.points:
        loss = "" if p.loss is None else repr(p.loss)
        lines.append(f"{p.epoch},{decimal_str(p.per, places)},{loss}")
    return "\n".join(lines) + "\n", report.to_json(places)
