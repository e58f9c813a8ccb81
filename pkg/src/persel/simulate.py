"""Synthetic ASR-error channel for fixtures with known ground truth.

Corrupts reference phone sequences with configurable substitution,
deletion and insertion rates. Every random draw comes from numpy's
PCG64 generator seeded through SeedSequence, so output is reproducible
bit-for-bit across runs and platforms; per-utterance streams are derived
from (seed, blake2b-64(utt_id)), which makes parallel generation
identical to serial.

Draw order per utterance is fixed: one uniform array for the per-phone
edit decisions, one for the insertion slots (one slot before the first
phone and one after every phone), then per-position target/insertion
draws in position order. The exact injected S/D/I counts are logged
alongside each fixture so tests can tell channel truth from alignment
reinterpretation.
"""

from __future__ import annotations

import hashlib
import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    NoSubstituteAvailableError,
    ScenarioFormatError,
)
from .inventory import PhoneInventory, Utterance, format_transcripts

GENERATOR_NAME = "PCG64"
_RATE_EPS = 1e-9


def _utterance_key(utt_id: str) -> int:
    digest = hashlib.blake2b(utt_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class CorruptionConfig:
    """Channel parameters: independent per-phone edits plus slot insertions.

    `p_sub` is the global substitution probability; `sub_rates` overrides
    it per phone (uncovered phones fall back to the global rate). For
    every phone, its substitution rate plus `p_del` must stay within 1.
    `confusion` maps a source phone to a target distribution (rows sum to
    1, no self mass); without it targets are uniform over the regular
    phones minus the source.
    """

    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    sub_rates: Mapping[str, float] | None = None
    confusion: Mapping[str, Mapping[str, float]] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        for name, value in (("p_sub", self.p_sub), ("p_del", self.p_del)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 <= self.p_ins < 1.0:
            raise ConfigError(f"p_ins must be in [0, 1), got {self.p_ins}")
        rates = [self.p_sub, *(self.sub_rates or {}).values()]
        for rate in rates:
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"substitution rate must be in [0, 1], got {rate}")
            if rate + self.p_del > 1.0 + _RATE_EPS:
                raise ConfigError(
                    f"substitution rate {rate} plus p_del {self.p_del} exceeds 1"
                )
        if self.confusion is not None:
            for source, row in self.confusion.items():
                total = sum(row.values())
                if not math.isclose(total, 1.0, abs_tol=1e-9):
                    raise ConfigError(
                        f"confusion row for {source!r} sums to {total}, expected 1"
                    )
                if source in row:
                    raise ConfigError(f"confusion row for {source!r} has self mass")
                if any(p < 0 for p in row.values()):
                    raise ConfigError(f"confusion row for {source!r} has negative mass")

    def sub_rate(self, phone: str) -> float:
        if self.sub_rates is not None and phone in self.sub_rates:
            return self.sub_rates[phone]
        return self.p_sub

    def max_sub_rate(self) -> float:
        return max([self.p_sub, *(self.sub_rates or {}).values()])

    def describe(self) -> str:
        parts = [f"p_sub={self.p_sub:g}", f"p_del={self.p_del:g}", f"p_ins={self.p_ins:g}"]
        if self.sub_rates:
            parts.append(f"per-phone sub rates for {len(self.sub_rates)} phone(s)")
        parts.append("confusion map" if self.confusion else "uniform substitution targets")
        return " ".join(parts)


@dataclass(frozen=True)
class InjectedCounts:
    """Ground-truth edits performed by the channel."""

    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "InjectedCounts") -> "InjectedCounts":
        return InjectedCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )


class _Sampler:
    """Pre-resolved sampling tables for one (config, inventory) pair."""

    def __init__(self, config: CorruptionConfig, inventory: PhoneInventory):
        self.config = config
        self.phones = sorted(inventory.phones)
        if len(self.phones) < 2 and config.max_sub_rate() > 0:
            raise NoSubstituteAvailableError()
        self._uniform_targets: dict[str, list[str]] = {}
        self._rows: dict[str, tuple[list[str], list[float]]] = {}
        if config.confusion:
            for source, row in config.confusion.items():
                targets = sorted(row)
                cum: list[float] = []
                acc = 0.0
                for t in targets:
                    acc += row[t]
                    cum.append(acc)
                self._rows[source] = (targets, cum)

    def draw_target(self, source: str, rng: np.random.Generator) -> str:
        row = self._rows.get(source)
        if row is not None:
            targets, cum = row
            return targets[min(bisect_left(cum, rng.random() * cum[-1]), len(targets) - 1)]
        targets = self._uniform_targets.get(source)
        if targets is None:
            targets = [p for p in self.phones if p != source]
            if not targets:
                raise NoSubstituteAvailableError()
            self._uniform_targets[source] = targets
        return targets[int(rng.integers(len(targets)))]

    def draw_insertion(self, rng: np.random.Generator) -> str:
        return self.phones[int(rng.integers(len(self.phones)))]


def _corrupt_seq(
    seq: Sequence[str],
    config: CorruptionConfig,
    sampler: _Sampler,
    rng: np.random.Generator,
) -> tuple[tuple[str, ...], InjectedCounts]:
    n = len(seq)
    edit_draws = rng.random(n)
    slot_draws = rng.random(n + 1)
    out: list[str] = []
    subs = dels = inss = 0
    p_del, p_ins = config.p_del, config.p_ins
    for i in range(n + 1):
        if slot_draws[i] < p_ins:
            out.append(sampler.draw_insertion(rng))
            inss += 1
        if i == n:
            break
        phone = seq[i]
        u = edit_draws[i]
        if u < p_del:
            dels += 1
        elif u < p_del + config.sub_rate(phone):
            out.append(sampler.draw_target(phone, rng))
            subs += 1
        else:
            out.append(phone)
    return tuple(out), InjectedCounts(subs, dels, inss)


def corrupt(
    seq: Sequence[str], config: CorruptionConfig, inventory: PhoneInventory
) -> tuple[str, ...]:
    """Pass one phone sequence through the error channel.

    Deterministic for a fixed config: the stream starts at
    SeedSequence(config.seed). For per-utterance independence use
    `corrupt_corpus`, which derives one stream per utterance id.
    """
    sampler = _Sampler(config, inventory)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed)))
    corrupted, _ = _corrupt_seq(seq, config, sampler, rng)
    return corrupted


def corrupt_corpus(
    utterances: Sequence[Utterance],
    config: CorruptionConfig,
    inventory: PhoneInventory,
) -> tuple[list[Utterance], dict[str, InjectedCounts]]:
    """Corrupt a corpus with one independent stream per utterance."""
    sampler = _Sampler(config, inventory)
    out: list[Utterance] = []
    injected: dict[str, InjectedCounts] = {}
    for utt in utterances:
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((config.seed, _utterance_key(utt.utt_id))))
        )
        corrupted, counts = _corrupt_seq(utt.phones, config, sampler, rng)
        out.append(Utterance(utt.utt_id, corrupted))
        injected[utt.utt_id] = counts
    return out, injected


@dataclass(frozen=True)
class ScenarioStep:
    """One simulated checkpoint: an epoch, its channel, an optional loss."""

    epoch: int
    config: CorruptionConfig
    validation_loss: float | None = None


@dataclass(frozen=True)
class SweepScenario:
    """An error-rate trajectory over training epochs."""

    steps: tuple[ScenarioStep, ...]

    def __post_init__(self) -> None:
        epochs = [s.epoch for s in self.steps]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ScenarioFormatError(f"epochs must be strictly increasing, got {epochs}")


def derive_step_seed(base_seed: int, epoch: int) -> int:
    """Stable per-epoch seed so every checkpoint gets its own stream."""
    return int(np.random.SeedSequence((base_seed, epoch)).generate_state(1)[0])


def load_scenario(text: str) -> SweepScenario:
    """Parse a scenario description.

    JSON object: {"seed": int, "steps": [{"epoch": int, "p_sub": float,
    "p_del": float, "p_ins": float, "validation_loss"?: float,
    "sub_rates"?: {...}, "confusion"?: {...}, "seed"?: int}, ...]}.
    Steps without a seed get one derived from (seed, epoch).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "steps" not in data:
        raise ScenarioFormatError('scenario must be an object with a "steps" array')
    base_seed = data.get("seed", 0)
    if not isinstance(base_seed, int) or isinstance(base_seed, bool):
        raise ScenarioFormatError('scenario "seed" must be an integer')
    steps = []
    raw_steps = data["steps"]
    if not isinstance(raw_steps, list) or not raw_steps:
        raise ScenarioFormatError('"steps" must be a non-empty array')
    for i, raw in enumerate(raw_steps):
        if not isinstance(raw, dict) or "epoch" not in raw:
            raise ScenarioFormatError(f'step {i} must be an object with an "epoch"')
        epoch = raw["epoch"]
        if not isinstance(epoch, int) or isinstance(epoch, bool) or epoch < 1:
            raise ScenarioFormatError(f"step {i} epoch must be a positive integer")
        seed = raw.get("seed", derive_step_seed(base_seed, epoch))
        try:
            config = CorruptionConfig(
                p_sub=float(raw.get("p_sub", 0.0)),
                p_del=float(raw.get("p_del", 0.0)),
                p_ins=float(raw.get("p_ins", 0.0)),
                sub_rates=raw.get("sub_rates"),
                confusion=raw.get("confusion"),
                seed=seed,
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"step {i} is malformed: {exc}") from exc
        loss = raw.get("validation_loss")
        if loss is not None and not isinstance(loss, (int, float)):
            raise ScenarioFormatError(f"step {i} validation_loss must be a number")
        steps.append(ScenarioStep(epoch, config, None if loss is None else float(loss)))
    return SweepScenario(tuple(steps))


def _fixture_header(step: ScenarioStep) -> str:
    cfg = step.config
    return (
        f"# synthetic decode for epoch {step.epoch}\n"
        f"# rng: {GENERATOR_NAME} via SeedSequence((seed, blake2b64(utt_id))), seed={cfg.seed}\n"
        f"# channel: {cfg.describe()}\n"
    )


def generate_sweep(
    references: Sequence[Utterance],
    scenario: SweepScenario,
    inventory: PhoneInventory,
    out_dir: str | Path,
    manifest_name: str = "manifest.json",
) -> str:
    """Write one hypothesis transcript per scenario step plus a manifest.

    Each hypothesis file carries a provenance header and a JSON-lines
    edit-log sidecar with the injected S/D/I per utterance. Manifest
    paths are relative to the manifest location, so a generated tree is
    byte-identical for a fixed seed regardless of where it lives.
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    records = []
    for step in scenario.steps:
        corrupted, injected = corrupt_corpus(references, step.config, inventory)
        hyp_name = f"hyp_epoch{step.epoch:04d}.txt"
        log_name = f"hyp_epoch{step.epoch:04d}.edits.jsonl"
        try:
            (out_path / hyp_name).write_text(
                _fixture_header(step) + format_transcripts(corrupted), encoding="utf-8"
            )
            with (out_path / log_name).open("w", encoding="utf-8") as fh:
                for utt in corrupted:
                    counts = injected[utt.utt_id]
                    fh.write(json.dumps({
                        "utt_id": utt.utt_id,
                        "injected": {
                            "S": counts.substitutions,
                            "D": counts.deletions,
                            "I": counts.insertions,
                        },
                    }, sort_keys=True) + "\n")
        except OSError as exc:
            raise OSError(f"epoch {step.epoch}: {exc}") from exc
        record: dict = {"epoch": step.epoch, "hypothesis_path": hyp_name}
        if step.validation_loss is not None:
            record["validation_loss"] = step.validation_loss
        records.append(record)
    manifest_text = json.dumps(records, indent=2, sort_keys=True) + "\n"
    (out_path / manifest_name).write_text(manifest_text, encoding="utf-8")
    return manifest_text


def synthetic_corpus(
    inventory: PhoneInventory,
    count: int,
    min_len: int = 5,
    max_len: int = 25,
    seed: int = 0,
    id_prefix: str = "utt",
    phones: Sequence[str] | None = None,
) -> list[Utterance]:
    """Deterministic random reference corpus, handy for fixtures and demos.

    Draws uniformly over `phones` (default: all regular phones, sorted);
    lengths are uniform on [min_len, max_len].
    """
    if count < 1 or min_len < 1 or max_len < min_len:
        raise ConfigError("invalid corpus shape")
    universe = list(phones) if phones is not None else sorted(inventory.phones)
    unknown = [p for p in universe if p not in inventory]
    if not universe or unknown:
        raise ConfigError(f"corpus phones must be a non-empty inventory subset: {unknown[:5]}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    width = max(4, len(str(count)))
    utterances = []
    for i in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        seq = tuple(universe[int(j)] for j in rng.integers(len(universe), size=length))
        utterances.append(Utterance(f"{id_prefix}{i:0{width}d}", seq))
    return utterances
