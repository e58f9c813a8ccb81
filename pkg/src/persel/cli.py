"""Command-line interface: one executable, one subcommand per operation.

Exit codes: 0 success, 2 input-validation error (including usage errors),
3 I/O error. ``--json`` switches stdout to the machine-readable report,
which is the stability contract for downstream tooling; the human text
output is explicitly unstable. All randomized behavior lives in the
``simulate`` subcommand and is fully determined by the scenario seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .alignment import align, format_alignment
from .errors import IdMismatchError, InputIOError, PerselError, ValidationError
from .formatting import DEFAULT_PLACES, decimal_str
from .inventory import (
    PhoneInventory,
    Utterance,
    coverage_report,
    parse_inventory,
    parse_transcripts,
    unknown_token_counts,
)
from .metrics import (
    ScoringFilter,
    corpus_per,
    corpus_wer,
    detection_delta,
    phone_stats,
)
from .ngram import evaluate_perplexity, export_arpa, import_arpa, train
from .preference import load_ballots, tally
from .simulate import generate_sweep, load_scenario
from .sweep import (
    EvalSchedule,
    emit_curve,
    evaluate_sweep,
    load_manifest,
)

PROG = "persel"
THREADS_ENV = "PERSEL_THREADS"


def _read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputIOError(f"cannot write {path}: {exc}") from exc


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def _precision(value: str) -> int:
    places = int(value)
    if not 1 <= places <= 10:
        raise argparse.ArgumentTypeError("precision must be in [1, 10]")
    return places


def _jobs(value: str) -> int:
    jobs = int(value)
    if jobs < 0:
        raise argparse.ArgumentTypeError("jobs must be >= 0")
    return jobs


def _default_jobs() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        return max(0, int(raw))
    except ValueError:
        return 1


def _load_inventory(args: argparse.Namespace) -> PhoneInventory | None:
    if getattr(args, "inventory", None) is None:
        return None
    return parse_inventory(_read_text(args.inventory))


def _scoring(args: argparse.Namespace) -> ScoringFilter:
    if getattr(args, "score_specials", False):
        return ScoringFilter.score_all()
    return ScoringFilter.standard(
        silence=getattr(args, "silence", "sil"),
        boundary=getattr(args, "boundary", None),
    )


def _load_refs(path: str, inventory: PhoneInventory | None) -> list[Utterance]:
    return parse_transcripts(_read_text(path), inventory, strict=inventory is not None)


def _load_hyps(path: str) -> list[Utterance]:
    return parse_transcripts(_read_text(path), inventory=None, allow_empty=True)


def _paired_alignments(refs, hyps, scoring):
    """Align hypothesis utterances against references by id.

    Missing hypotheses score as empty decodes; ids absent from the
    reference are an error.
    """
    hyp_map = {u.utt_id: u.phones for u in hyps}
    extra = sorted(uid for uid in hyp_map if uid not in {u.utt_id for u in refs})
    if extra:
        raise IdMismatchError(0, extra)
    alignments = {}
    for utt in refs:
        ref_seq = scoring.apply(utt.phones)
        hyp_seq = scoring.apply(hyp_map.get(utt.utt_id, ()))
        alignments[utt.utt_id] = align(ref_seq, hyp_seq)
    return alignments


# --- subcommand handlers -------------------------------------------------

def _cmd_validate(args: argparse.Namespace) -> int:
    inventory = parse_inventory(_read_text(args.inventory))
    corpus = parse_transcripts(
        _read_text(args.corpus),
        inventory,
        strict=args.strict,
        allow_empty=args.hyp,
    )
    coverage = coverage_report(corpus, inventory)
    unknown = unknown_token_counts(corpus, inventory)
    if args.json:
        _print_json({
            "inventory": {
                "phones": len(inventory.phones),
                "specials": sorted(inventory.specials),
            },
            "utterances": len(corpus),
            "coverage": coverage.to_json_dict(),
            "unknown_tokens": {t: unknown[t] for t in sorted(unknown)},
        })
        return 0
    print(f"inventory: {len(inventory.phones)} phones, {len(inventory.specials)} specials")
    print(f"corpus: {len(corpus)} utterances, {coverage.total_phone_occurrences} tokens")
    print(
        f"coverage: {coverage.unique_phones_present}/{coverage.inventory_size} phones present"
    )
    if coverage.missing_phones:
        print(f"missing: {' '.join(coverage.missing_phones)}")
    if unknown:
        kinds = " ".join(f"{t}({unknown[t]})" for t in sorted(unknown))
        print(f"unknown tokens: {kinds}")
    return 0


def _cmd_align(args: argparse.Namespace) -> int:
    inventory = _load_inventory(args)
    refs = _load_refs(args.ref, inventory)
    hyps = _load_hyps(args.hyp)
    ref_map = {u.utt_id: u.phones for u in refs}
    utt_id = args.utt
    if utt_id is None:
        if len(refs) != 1:
            raise ValidationError("reference has several utterances; pass --utt ID")
        utt_id = refs[0].utt_id
    if utt_id not in ref_map:
        raise ValidationError(f"utterance {utt_id!r} not found in the reference")
    scoring = _scoring(args)
    hyp_map = {u.utt_id: u.phones for u in hyps}
    alignment = align(scoring.apply(ref_map[utt_id]), scoring.apply(hyp_map.get(utt_id, ())))
    rate = alignment.counts.rate
    if args.json:
        _print_json({
            "utt_id": utt_id,
            "scoring": scoring.describe(),
            "ops": [{"tag": op.tag, "ref": op.ref, "hyp": op.hyp} for op in alignment.ops],
            **alignment.counts.to_json_dict(),
            "per": decimal_str(rate, args.precision),
            "per_exact": [rate.numerator, rate.denominator],
        })
        return 0
    print(f"utterance {utt_id}")
    print(format_alignment(alignment))
    c = alignment.counts
    print(
        f"C={c.hits} S={c.substitutions} D={c.deletions} I={c.insertions} N={c.ref_length} "
        f"PER={decimal_str(rate, args.precision)}"
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    inventory = _load_inventory(args)
    refs = _load_refs(args.ref, inventory)
    hyps = _load_hyps(args.hyp)
    scoring = _scoring(args)
    alignments = _paired_alignments(refs, hyps, scoring)
    report = corpus_per(alignments)
    stats = phone_stats(alignments.values())
    wer_report = None
    if args.boundary:
        hyp_map = {u.utt_id: u.phones for u in hyps}
        wer_report = corpus_wer(
            {u.utt_id: u.phones for u in refs},
            {u.utt_id: hyp_map.get(u.utt_id, ()) for u in refs},
            args.boundary,
        )
    if args.json:
        payload = {
            "scoring": scoring.describe(),
            "per": report.to_json_dict(args.precision),
            "phone_stats": stats.to_json_dict(),
        }
        if wer_report is not None:
            payload["wer"] = wer_report.to_json_dict(args.precision)
        _print_json(payload)
        return 0
    print(f"scoring: {scoring.describe()}")
    pooled = report.pooled
    print(
        f"pooled PER {decimal_str(report.pooled_rate, args.precision)}  "
        f"[C={pooled.hits} S={pooled.substitutions} D={pooled.deletions} "
        f"I={pooled.insertions} N={pooled.ref_length}]"
    )
    if wer_report is not None:
        print(f"pooled WER {decimal_str(wer_report.pooled_rate, args.precision)}")
    if args.per_utt:
        for uid, counts in report.per_utterance.items():
            print(f"{uid}  {decimal_str(counts.rate, args.precision)}")
    if args.stats:
        print(stats.to_text())
    return 0


def _cmd_delta(args: argparse.Namespace) -> int:
    inventory = _load_inventory(args)
    refs = _load_refs(args.ref, inventory)
    scoring = _scoring(args)
    stats_a = phone_stats(_paired_alignments(refs, _load_hyps(args.hyp_a), scoring).values())
    stats_b = phone_stats(_paired_alignments(refs, _load_hyps(args.hyp_b), scoring).values())
    report = detection_delta(stats_a, stats_b, k=args.top)
    if args.csv:
        _write_text(args.csv, report.to_csv())
    if args.json:
        _print_json({"scoring": scoring.describe(), **report.to_json_dict()})
        return 0
    print(f"scoring: {scoring.describe()}")
    print(report.to_text())
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(_read_text(manifest_path))
    inventory = _load_inventory(args)
    refs = _load_refs(args.ref, inventory)
    scoring = _scoring(args)
    schedule = EvalSchedule(start_epoch=args.start, stride=args.stride)
    report = evaluate_sweep(
        manifest,
        refs,
        schedule=schedule,
        scoring=scoring,
        base_dir=manifest_path.parent,
        jobs=args.jobs,
    )
    baseline = args.baseline_per
    if args.baseline_hyp:
        baseline_alignments = _paired_alignments(refs, _load_hyps(args.baseline_hyp), scoring)
        baseline = float(corpus_per(baseline_alignments).pooled_rate)
    if baseline is not None:
        report.set_baseline(baseline, args.tolerance)
    if args.curve_csv or args.curve_json:
        csv_text, json_text = emit_curve(report, args.precision)
        if args.curve_csv:
            _write_text(args.curve_csv, csv_text)
        if args.curve_json:
            _write_text(args.curve_json, json_text)
    if args.json:
        print(report.to_json(args.precision), end="")
        return 0
    for p in report.points:
        loss = "" if p.loss is None else f" loss={p.loss!r}"
        print(f"epoch={p.epoch} per={decimal_str(p.per, args.precision)}{loss}")
    if report.skipped_epochs:
        print(f"skipped epochs: {' '.join(str(e) for e in report.skipped_epochs)}")
    print(f"selected_by_per={report.selected_by_per}")
    if report.selected_by_loss is not None:
        print(f"selected_by_loss={report.selected_by_loss}")
    if baseline is not None:
        where = report.converged_at if report.converged_at is not None else "never"
        print(f"baseline_per={baseline:.6g} tolerance={report.tolerance:g} converged_at={where}")
    return 0


def _cmd_lm_train(args: argparse.Namespace) -> int:
    inventory = _load_inventory(args)
    corpus = _load_refs(args.corpus, inventory)
    model = train(corpus, args.order, smoothing=args.smoothing, k=args.k)
    text = export_arpa(model)
    if args.out:
        _write_text(args.out, text)
        counts = " ".join(f"{n}:{model.entry_count(n)}" for n in range(1, model.order + 1))
        print(f"wrote {args.out} (order {model.order}, entries {counts})")
    else:
        print(text, end="")
    return 0


def _cmd_lm_ppl(args: argparse.Namespace) -> int:
    model = import_arpa(_read_text(args.model))
    corpus = parse_transcripts(_read_text(args.corpus))
    result = evaluate_perplexity(model, corpus, oov=args.oov)
    if args.json:
        _print_json({
            "perplexity": result.perplexity,
            "log10_total": result.log10_total,
            "events": result.events,
            "oov_events": result.oov_events,
            "oov_mode": result.oov_mode,
        })
        return 0
    print(
        f"perplexity={result.perplexity:.6f} events={result.events} "
        f"oov={result.oov_events} ({result.oov_mode})"
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    inventory = parse_inventory(_read_text(args.inventory))
    refs = _load_refs(args.ref, inventory)
    scenario = load_scenario(_read_text(args.scenario))
    try:
        generate_sweep(refs, scenario, inventory, args.out_dir)
    except OSError as exc:
        raise InputIOError(f"cannot write fixtures: {exc}") from exc
    manifest = str(Path(args.out_dir) / "manifest.json")
    epochs = [s.epoch for s in scenario.steps]
    if args.json:
        _print_json({"manifest": manifest, "epochs": epochs, "utterances": len(refs)})
        return 0
    print(f"wrote {len(epochs)} checkpoint fixture(s) to {args.out_dir}")
    print(f"manifest: {manifest}")
    return 0


def _cmd_prefs(args: argparse.Namespace) -> int:
    ballots = load_ballots(_read_text(args.ballots))
    summary = tally(ballots)
    if args.json:
        _print_json(summary.to_json_dict())
        return 0
    print(summary.to_text())
    return 0


# --- parser construction --------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Phone-error-rate scoring and checkpoint selection for TTS sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument(
        "--precision", type=_precision, default=DEFAULT_PLACES,
        help="decimal places for rendered rates (1-10, default 4)",
    )

    scoring = argparse.ArgumentParser(add_help=False)
    scoring.add_argument("--inventory", help="phone inventory file")
    scoring.add_argument(
        "--silence", default="sil",
        help="silence label excluded from scoring (default: sil)",
    )
    scoring.add_argument(
        "--boundary", default=None,
        help="word-boundary label; excluded from scoring and used for WER",
    )
    scoring.add_argument(
        "--score-specials", action="store_true",
        help="score every token, including silence and boundary",
    )

    p = sub.add_parser("validate", parents=[common], help="check inventory and corpus, report coverage")
    p.add_argument("--inventory", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--strict", action="store_true", help="fail on tokens outside the inventory")
    p.add_argument("--hyp", action="store_true", help="corpus is a hypothesis (empty decodes allowed)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("align", parents=[common, scoring], help="print one utterance alignment")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--utt", help="utterance id (defaults to the only one)")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("eval", parents=[common, scoring], help="corpus PER/WER and phone statistics")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--per-utt", action="store_true", help="list per-utterance rates")
    p.add_argument("--stats", action="store_true", help="print the per-phone table")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("delta", parents=[common, scoring], help="two-model phone detection report")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp-a", required=True, help="decodes of model A")
    p.add_argument("--hyp-b", required=True, help="decodes of model B")
    p.add_argument("--top", type=int, default=5, help="rows in the top/bottom views (default 5)")
    p.add_argument("--csv", help="write the full delta list as CSV")
    p.set_defaults(func=_cmd_delta)

    p = sub.add_parser("sweep", parents=[common, scoring], help="evaluate a checkpoint manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--start", type=int, default=50, help="first scheduled epoch (default 50)")
    p.add_argument("--stride", type=int, default=10, help="epoch stride (default 10)")
    p.add_argument("--baseline-per", type=float, default=None,
                   help="PER of original-recording decodes, for the convergence check")
    p.add_argument("--baseline-hyp", default=None,
                   help="transcripts of original-recording decodes; computes the baseline")
    p.add_argument("--tolerance", type=float, default=0.005,
                   help="absolute convergence band (default 0.005)")
    p.add_argument("--curve-csv", help="write the PER curve as CSV")
    p.add_argument("--curve-json", help="write the full report as JSON")
    p.add_argument("--jobs", type=_jobs, default=_default_jobs(),
                   help=f"parallel checkpoint evaluations, 0 = auto (env {THREADS_ENV})")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("lm", help="phone n-gram language models")
    lm_sub = p.add_subparsers(dest="lm_command", required=True)
    q = lm_sub.add_parser("train", parents=[common], help="train and export an ARPA model")
    q.add_argument("--corpus", required=True)
    q.add_argument("--inventory")
    q.add_argument("--order", type=int, required=True)
    q.add_argument("--smoothing", choices=["witten-bell", "add-k"], default="witten-bell")
    q.add_argument("--k", type=float, default=1.0, help="additive constant for add-k")
    q.add_argument("--out", help="output ARPA path (default: stdout)")
    q.set_defaults(func=_cmd_lm_train)
    q = lm_sub.add_parser("ppl", parents=[common], help="perplexity of a corpus under an ARPA model")
    q.add_argument("--model", required=True)
    q.add_argument("--corpus", required=True)
    q.add_argument("--oov", choices=["strict", "unk"], default="strict")
    q.set_defaults(func=_cmd_lm_ppl)

    p = sub.add_parser("simulate", parents=[common], help="generate corrupted sweep fixtures")
    p.add_argument("--ref", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("prefs", parents=[common], help="tally pairwise preference ballots")
    p.add_argument("--ballots", required=True, help="ballot CSV")
    p.set_defaults(func=_cmd_prefs)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputIOError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except PerselError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
