"""Command-line interface: ``asrnoise <subcommand> ...``.

Exit status: 0 success, 1 I/O failure, 2 usage error, 3 unparseable input,
4 validation failure (including warnings that make a run incomplete).
Data goes to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import confusion, corpus as corpus_mod, dsteval, inject as inject_mod, metrics
from .align import PRESETS, align, count_errors, render
from .corpus import CorpusError
from .parallel import default_jobs
from .textnorm import NORMALIZER_VERSION, tokenize_hypothesis, tokenize_reference

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4

CONFIG_VERSION = 1

log = logging.getLogger("asrnoise")


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


class ValidationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# helpers -----------------------------------------------------------------------

def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=1)


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as f:
            cfg = tomllib.load(f)
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"config {path}: {e}") from None
    if cfg.get("version") != CONFIG_VERSION:
        raise UsageError(f"config {path}: expected version = {CONFIG_VERSION}")
    return cfg


def _tokenize_pair(p, ref_punct: str):
    ref = tokenize_reference(p.ref_text) if ref_punct == "keep" else tokenize_hypothesis(p.ref_text)
    return ref, tokenize_hypothesis(p.hyp_text)


def _read_pairs(path):
    try:
        return corpus_mod.read_pairs(path)
    except CorpusError as e:
        raise ParseError(str(e)) from None


def _read_corpus(path, fmt):
    try:
        return corpus_mod.read_dialogues(path, fmt)
    except CorpusError as e:
        raise ParseError(str(e)) from None


def _read_model(path):
    try:
        return confusion.load(path)
    except (ValueError, KeyError, TypeError) as e:
        raise ParseError(f"{path}: bad confusion model ({e})") from None


def _nonneg_fraction(s: str):
    from fractions import Fraction

    try:
        f = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a fraction: {s!r}") from None
    if not 0 <= f <= 1:
        raise argparse.ArgumentTypeError("fraction must lie in [0, 1]")
    return f


def _seed(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _jobs(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("jobs must be >= 1")
    return v


# subcommands -------------------------------------------------------------------

def cmd_align(args) -> int:
    cfg = PRESETS[args.weights]
    pairs = _read_pairs(args.pairs)
    out = []
    for p in pairs:
        ref, hyp = _tokenize_pair(p, args.ref_punct)
        a = align(ref, hyp, cfg)
        c = count_errors(a)
        if args.format == "structured":
            out.append(json.dumps({
                "id": p.id, "ops": a.op_string(), "cost": a.cost,
                "matches": c.matches, "substitutions": c.substitutions,
                "deletions": c.deletions, "insertions": c.insertions,
            }, sort_keys=True, ensure_ascii=False))
        else:
            r_row, h_row, e_row = render(a, ref, hyp)
            out.append(
                f"id: {p.id}\nREF:  {r_row}\nHYP:  {h_row}\nEval: {e_row}\n"
                f"Scores: (#C #S #D #I) {c.matches} {c.substitutions} {c.deletions} {c.insertions}\n"
            )
    if out:
        _emit("\n".join(out))
    return EXIT_OK


def score_pairs(pairs, weights: str = "unit", ref_punct: str = "drop") -> metrics.ErrorReport:
    cfg = PRESETS[weights]
    return metrics.score_corpus(align(*_tokenize_pair(p, ref_punct), cfg) for p in pairs)


def _report_out(report: metrics.ErrorReport, fmt: str, label: str) -> str:
    if fmt == "structured":
        return _json(report.to_dict())
    if fmt == "keyvalue":
        return metrics.format_keyvalue(report)
    return metrics.format_table(report, label)


def cmd_score(args) -> int:
    report = score_pairs(_read_pairs(args.pairs), args.weights, args.ref_punct)
    _emit(_report_out(report, args.format, args.label))
    return EXIT_OK


def build_model_from_pairs(pairs, weights="unit", ref_punct="keep", source_id=None):
    cfg = PRESETS[weights]

    def triples():
        for p in pairs:
            ref, hyp = _tokenize_pair(p, ref_punct)
            yield ref, hyp, align(ref, hyp, cfg)

    meta = {
        "source": source_id or "",
        "normalizer": NORMALIZER_VERSION,
        "weights": weights,
        "reference_punctuation": ref_punct,
        "n_pairs": len(pairs),
    }
    return confusion.build_model(triples(), meta)


def cmd_model_build(args) -> int:
    pairs = _read_pairs(args.pairs)
    model = build_model_from_pairs(pairs, args.weights, args.ref_punct, args.source_id or str(args.pairs))
    confusion.save(model, args.output)
    rates = confusion.model_error_rates(model) if model.profiles else None
    msg = f"wrote {args.output}: {len(model.profiles)} token profiles, {len(model.insertion_profiles)} insertion anchors"
    if rates:
        msg += f" (ins {rates.ins_rate:.1f}%, del {rates.del_rate:.1f}%, sub {rates.sub_rate:.1f}%)"
    print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_model_inspect(args) -> int:
    model = _read_model(args.model)
    if args.format == "structured":
        doc = {}
        if not args.tokens:
            r = confusion.model_error_rates(model)
            wr = confusion.model_error_rates(model, words_only=True)
            doc["summary"] = {"profiles": len(model.profiles),
                              "insertion_anchors": len(model.insertion_profiles),
                              "rates": r._asdict(), "word_rates": wr._asdict()}
        for tok in args.tokens:
            p = model.query(tok)
            doc[tok] = None if p is None else {
                "total": p.total,
                "outcomes": [{"outcome": o.label(), "count": c, "probability": c / p.total}
                             for o, c in p.ordered()],
            }
        _emit(_json(doc))
    else:
        lines = []
        if not args.tokens:
            r = confusion.model_error_rates(model)
            wr = confusion.model_error_rates(model, words_only=True)
            lines.append(f"{len(model.profiles)} token profiles, {len(model.insertion_profiles)} insertion anchors")
            lines.append(f"expected rates: ins {r.ins_rate:.1f}%, del {r.del_rate:.1f}%, sub {r.sub_rate:.1f}%")
            lines.append(f"word-only rates: ins {wr.ins_rate:.1f}%, del {wr.del_rate:.1f}%, sub {wr.sub_rate:.1f}%")
        for tok in args.tokens:
            p = model.query(tok)
            lines.append(f'"{tok}": no profile' if p is None else confusion.describe(p))
        _emit("\n".join(lines))
    missing = [t for t in args.tokens if model.query(t) is None]
    return EXIT_VALIDATION if missing else EXIT_OK


def _injection_config(args) -> inject_mod.InjectionConfig:
    slots = args.slots
    if isinstance(slots, str):
        slots = [s.strip() for s in slots.split(",") if s.strip()]
    try:
        return inject_mod.InjectionConfig(
            seed=args.seed,
            mode=args.mode,
            slot_noise_fraction=args.slot_fraction,
            target_slots=frozenset(slots) if slots else inject_mod.DEFAULT_TARGET_SLOTS,
            user_turns_only=not args.include_system,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def run_inject(args):
    cfg = _injection_config(args)
    model = _read_model(args.model)
    corpus = _read_corpus(args.corpus, args.corpus_format)
    try:
        noisy, injection_log = inject_mod.inject_corpus(corpus, model, cfg, jobs=args.jobs)
    except inject_mod.InjectionError as e:
        raise ValidationFailure(str(e)) from None
    corpus_mod.write_dialogues(noisy, args.output)
    if args.log:
        injection_log.write(args.log)
    for w in injection_log.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return corpus, noisy, injection_log


def cmd_inject(args) -> int:
    _, _, injection_log = run_inject(args)
    print(f"{len(injection_log.rewrites)} rewrites", file=sys.stderr)
    return EXIT_VALIDATION if injection_log.warnings else EXIT_OK


def cmd_validate(args) -> int:
    clean = _read_corpus(args.clean, args.corpus_format)
    noisy = _read_corpus(args.noisy, "native")
    try:
        report = inject_mod.validate_injection(
            clean, noisy, user_turns_only=not args.include_system,
            cfg=PRESETS[args.weights], jobs=args.jobs,
        )
    except inject_mod.InjectionError as e:
        raise ValidationFailure(str(e)) from None
    _emit(_report_out(report, args.format, args.label))
    return EXIT_OK


def cmd_jga(args) -> int:
    gold = _read_corpus(args.gold, args.gold_format)
    try:
        preds = dsteval.read_predictions(args.pred)
        report = dsteval.joint_goal_accuracy(gold, preds, normalize_values=not args.no_normalize)
    except CorpusError as e:
        raise ParseError(str(e)) from None
    if args.format == "structured":
        _emit(_json(report.to_dict(per_turn=args.per_turn)))
    else:
        jga = "n/a" if report.jga is None else f"{report.jga:.2f}"
        lines = [f"JGA {jga}% ({report.n_exact}/{report.n_turns} turns)"]
        if report.missing:
            lines.append(f"missing predictions: {len(report.missing)}")
        if args.per_turn:
            for r in report.per_turn:
                flag = "missing" if r.missing else ("match" if r.matched else "miss")
                lines.append(f"{r.dialogue_id}\t{r.turn}\t{flag}")
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    """pairs -> model-build -> inject -> validate, as configured in one TOML file."""
    cfg = args.config_data
    try:
        pairs_path = cfg["pairs"]["path"]
        model_path = cfg["model"]["output"]
        inj = cfg["inject"]
    except KeyError as e:
        raise UsageError(f"pipeline config lacks {e}") from None
    weights = cfg.get("align", {}).get("weights", "unit")
    if weights not in PRESETS:
        raise UsageError(f"unknown weights preset {weights!r}")
    pairs = _read_pairs(pairs_path)
    dev_report = score_pairs(pairs, weights, cfg.get("align", {}).get("ref_punct", "drop"))
    model = build_model_from_pairs(pairs, weights, cfg["model"].get("ref_punct", "keep"), pairs_path)
    confusion.save(model, model_path)

    ns = argparse.Namespace(
        seed=_seed(str(inj.get("seed", 0))),
        mode=inj.get("mode", "stochastic"),
        slot_fraction=_nonneg_fraction(str(inj.get("slot_fraction", 0))),
        slots=inj.get("slots"),
        include_system=not inj.get("user_turns_only", True),
        model=model_path,
        corpus=inj["corpus"],
        corpus_format=inj.get("corpus_format", "native"),
        output=inj["output"],
        log=inj.get("log"),
        jobs=args.jobs,
    )
    clean, noisy, injection_log = run_inject(ns)
    post = inject_mod.validate_injection(clean, noisy, not ns.include_system,
                                         PRESETS[weights], jobs=args.jobs)
    if args.format == "structured":
        doc = {"transcripts": dev_report.to_dict(), "injected": post.to_dict(),
               "rewrites": len(injection_log.rewrites), "warnings": injection_log.warnings}
        _emit(_json(doc))
    else:
        _emit(metrics.format_rows([("Transcripts", dev_report), ("Error-Injected", post)]))
    report_path = cfg.get("validate", {}).get("report")
    if report_path:
        Path(report_path).write_text(_json({"transcripts": dev_report.to_dict(),
                                            "injected": post.to_dict()}) + "\n", encoding="utf-8")
    return EXIT_VALIDATION if injection_log.warnings else EXIT_OK


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asrnoise", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        p.add_argument("--format", choices=["text", "structured", "keyvalue"], default="text")
        if config:
            p.add_argument("--config", help="TOML config; its [<subcommand>] table supplies defaults")

    def weights(p):
        p.add_argument("--weights", choices=sorted(PRESETS), default="unit",
                       help="alignment costs: unit (1,1,1) or sclite (sub 4, ins 3, del 3)")

    def jobs(p):
        p.add_argument("--jobs", type=_jobs, default=None,
                       help="worker processes (default: $ASRNOISE_JOBS or 1)")

    p = sub.add_parser("align", help="align transcript pairs and print edit operations")
    p.add_argument("--pairs", required=True, help="pairs JSONL ('-' for stdin)")
    p.add_argument("--ref-punct", choices=["keep", "drop"], default="drop")
    weights(p); common(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("score", help="insertion/deletion/substitution %%, WER and SER of transcript pairs")
    p.add_argument("--pairs", required=True, help="pairs JSONL ('-' for stdin)")
    p.add_argument("--ref-punct", choices=["keep", "drop"], default="drop")
    p.add_argument("--label", default="Transcriptions")
    weights(p); common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("model-build", help="learn a confusion model from transcript pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--ref-punct", choices=["keep", "drop"], default="keep")
    p.add_argument("--source-id", default=None)
    weights(p); common(p)
    p.set_defaults(func=cmd_model_build)

    p = sub.add_parser("model-inspect", help="print token profiles of a confusion model")
    p.add_argument("--model", required=True)
    p.add_argument("tokens", nargs="*")
    common(p)
    p.set_defaults(func=cmd_model_inspect)

    p = sub.add_parser("inject", help="inject model errors into a dialogue corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--corpus-format", choices=[f.value for f in corpus_mod.CorpusFormat], default="native")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output", required=True, help="noisy corpus (native JSONL, '-' for stdout)")
    p.add_argument("--log", help="write the rewrite log (JSONL) here")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--mode", choices=[m.value for m in inject_mod.Mode], default="stochastic")
    p.add_argument("--slot-fraction", type=_nonneg_fraction, default=0)
    p.add_argument("--slots", default=None, help="comma-separated target slots")
    p.add_argument("--include-system", action="store_true", help="also noise system turns")
    jobs(p); common(p)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("validate", help="re-measure error rates of a noisy corpus against the clean one")
    p.add_argument("--clean", required=True)
    p.add_argument("--noisy", required=True)
    p.add_argument("--corpus-format", choices=[f.value for f in corpus_mod.CorpusFormat], default="native")
    p.add_argument("--include-system", action="store_true")
    p.add_argument("--label", default="Error-Injected")
    weights(p); jobs(p); common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("jga", help="joint goal accuracy of dialogue-state predictions")
    p.add_argument("--gold", required=True)
    p.add_argument("--gold-format", choices=[f.value for f in corpus_mod.CorpusFormat], default="native")
    p.add_argument("--pred", required=True)
    p.add_argument("--no-normalize", action="store_true", help="compare values verbatim")
    p.add_argument("--per-turn", action="store_true")
    common(p)
    p.set_defaults(func=cmd_jga)

    p = sub.add_parser("pipeline", help="score, model-build, inject and validate from one config")
    p.add_argument("--config", required=True)
    jobs(p)
    p.add_argument("--format", choices=["text", "structured"], default="text")
    p.set_defaults(func=cmd_pipeline)
    return parser


def _prescan(argv: List[str]):
    """``(subcommand, config path)`` from raw argv, before any flag is required."""
    command = next((a for a in argv if not a.startswith("-")), None)
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    return command, path


def _apply_config(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    command, path = _prescan(argv)
    choices = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    if not path or command not in choices or command == "pipeline":
        args = parser.parse_args(argv)
        if getattr(args, "config", None) and args.command == "pipeline":
            args.config_data = _load_config(args.config)
        return args
    cfg = _load_config(path)
    section = cfg.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config [{command}] must be a table")
    sub = choices[command]
    known = {a.dest for a in sub._actions} - {"help", "config", "func"}  # noqa: SLF001
    unknown = set(section) - known
    if unknown:
        raise UsageError(f"config [{command}] has unknown keys: {', '.join(sorted(unknown))}")
    # config values become defaults, so explicit flags still win
    coerced = {}
    for a in sub._actions:  # noqa: SLF001
        if a.dest not in section:
            continue
        v = section[a.dest]
        if a.dest == "slots" and isinstance(v, list):
            v = ",".join(v)
        if a.type is not None and not isinstance(v, bool):
            try:
                v = a.type(str(v))
            except argparse.ArgumentTypeError as e:
                raise UsageError(f"config {a.dest}: {e}") from None
        if a.choices is not None and v not in a.choices:
            raise UsageError(f"config {a.dest}: {v!r} not in {sorted(a.choices)}")
        coerced[a.dest] = v
        a.required = False
    sub.set_defaults(**coerced)
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if hasattr(args, "jobs") and args.jobs is None:
            args.jobs = default_jobs()
        return args.func(args)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        print(f"asrnoise: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"asrnoise: parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationFailure as e:
        print(f"asrnoise: validation failed: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"asrnoise: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"asrnoise: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
