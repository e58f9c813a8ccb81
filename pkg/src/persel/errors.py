"""Exception hierarchy for the toolkit.

Two families matter for the CLI exit-code contract: ``ValidationError``
(bad input data or configuration, exit code 2) and ``InputIOError``
(unreadable/unwritable files, exit code 3).
"""

from __future__ import annotations


class PerselError(Exception):
    """Base class for every toolkit error."""


class ValidationError(PerselError):
    """Invalid input data or configuration. CLI exit code 2."""


class InputIOError(PerselError):
    """File could not be read or written. CLI exit code 3."""


# --- phone inventory / transcripts -------------------------------------

class DuplicatePhoneError(ValidationError):
    def __init__(self, label: str, line: int):
        self.label = label
        self.line = line
        super().__init__(f"duplicate phone {label!r} at line {line}")


class EmptyInventoryError(ValidationError):
    def __init__(self, message: str = "inventory defines no phones"):
        super().__init__(message)


class InventoryFormatError(ValidationError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")


class DuplicateUtteranceError(ValidationError):
    def __init__(self, utt_id: str, line: int):
        self.utt_id = utt_id
        self.line = line
        super().__init__(f"duplicate utterance id {utt_id!r} at line {line}")


class UnknownPhoneError(ValidationError):
    def __init__(self, label: str, utt_id: str):
        self.label = label
        self.utt_id = utt_id
        super().__init__(f"token {label!r} in utterance {utt_id!r} is not in the inventory")


class EmptyReferenceError(ValidationError):
    def __init__(self, utt_id: str | None = None):
        self.utt_id = utt_id
        where = f" (utterance {utt_id!r})" if utt_id else ""
        super().__init__(f"reference phone sequence is empty{where}")


# --- metrics ------------------------------------------------------------

class UndefinedRateError(ValidationError):
    def __init__(self, message: str = "error rate undefined: reference length is zero"):
        super().__init__(message)


class EmptyCorpusError(ValidationError):
    def __init__(self, message: str = "corpus contains no utterances"):
        super().__init__(message)


class ReferenceMismatchError(ValidationError):
    """Two per-phone statistics were not computed on the same reference corpus."""


# --- n-gram language models ---------------------------------------------

class InvalidOrderError(ValidationError):
    def __init__(self, order: int):
        self.order = order
        super().__init__(f"n-gram order must be >= 1, got {order}")


class ZeroProbabilityError(ValidationError):
    def __init__(self, ngram: tuple[str, ...]):
        self.ngram = ngram
        super().__init__(f"zero probability for n-gram {' '.join(ngram)!r}")


class ArpaFormatError(ValidationError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")


# --- sweep --------------------------------------------------------------

class DuplicateEpochError(ValidationError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"duplicate epoch {epoch} in manifest")


class InvalidEpochError(ValidationError):
    def __init__(self, value: object):
        self.value = value
        super().__init__(f"epoch must be a positive integer, got {value!r}")


class ManifestFormatError(ValidationError):
    """Manifest is not a JSON array of checkpoint records."""


class EmptySweepError(ValidationError):
    def __init__(self, message: str = "sweep report has no evaluated points"):
        super().__init__(message)


class NoLossDataError(ValidationError):
    def __init__(self, message: str = "no checkpoint carries a validation loss"):
        super().__init__(message)


class IdMismatchError(ValidationError):
    def __init__(self, epoch: int, extra_ids: list[str]):
        self.epoch = epoch
        self.extra_ids = extra_ids
        shown = ", ".join(extra_ids[:5])
        super().__init__(
            f"hypothesis for epoch {epoch} contains {len(extra_ids)} id(s) "
            f"absent from the reference: {shown}"
        )


class SweepIOError(InputIOError):
    def __init__(self, epoch: int, path: str, cause: Exception):
        self.epoch = epoch
        self.path = path
        super().__init__(f"cannot read hypothesis for epoch {epoch}: {path}: {cause}")


# --- corruption simulator -----------------------------------------------

class NoSubstituteAvailableError(ValidationError):
    def __init__(self, message: str = "inventory has fewer than 2 phones; substitution impossible"):
        super().__init__(message)


class ScenarioFormatError(ValidationError):
    """Sweep scenario description is malformed."""


class ConfigError(ValidationError):
    """Corruption channel configuration violates its invariants."""


# --- preference ballots --------------------------------------------------

class DuplicateBallotError(ValidationError):
    def __init__(self, participant_id: str, pair_id: str, line: int | None = None):
        self.participant_id = participant_id
        self.pair_id = pair_id
        self.line = line
        where = f" at line {line}" if line is not None else ""
        super().__init__(f"duplicate ballot ({participant_id!r}, {pair_id!r}){where}")


class NoBallotsError(ValidationError):
    def __init__(self, message: str = "no ballots to tally"):
        super().__init__(message)


class BallotFormatError(ValidationError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")
