"""persel: phone-error-rate scoring and TTS checkpoint selection.

The toolkit scores ASR-decoded transcripts of synthesized speech against
reference phone transcripts, selects the checkpoint with the least phone
error rate, and produces the supporting analyses: per-phone detection
statistics, detection deltas between two models, phone n-gram language
models with ARPA round-tripping, and pairwise preference tallies. A
seeded corruption simulator generates sweep fixtures with known ground
truth for validation.
"""

from .alignment import (
    Alignment,
    EditOp,
    ErrorCounts,
    align,
    apply_ops,
    edit_distance,
    format_alignment,
)
from .inventory import (
    CoverageSummary,
    PhoneInventory,
    Utterance,
    coverage_report,
    format_transcripts,
    parse_inventory,
    parse_transcripts,
)
from .metrics import (
    DetectionDelta,
    DetectionDeltaReport,
    ErrorRateReport,
    PhoneStats,
    PhoneTally,
    ScoringFilter,
    corpus_per,
    corpus_wer,
    detection_delta,
    per,
    phone_stats,
    split_words,
    word_error_rate,
)
from .ngram import (
    NGramModel,
    PerplexityReport,
    evaluate_perplexity,
    export_arpa,
    import_arpa,
    perplexity,
    train,
)
from .preference import (
    PreferenceBallot,
    PreferenceSummary,
    load_ballots,
    tally,
)
from .simulate import (
    CorruptionConfig,
    InjectedCounts,
    ScenarioStep,
    SweepScenario,
    corrupt,
    corrupt_corpus,
    generate_sweep,
    load_scenario,
    synthetic_corpus,
)
from .sweep import (
    CheckpointRecord,
    EvalSchedule,
    SweepPoint,
    SweepReport,
    convergence_check,
    emit_curve,
    evaluate_sweep,
    load_manifest,
    select_best_loss,
    select_best_per,
)

__version__ = "0.1.0"
