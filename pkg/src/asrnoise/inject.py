"""Inject confusion-model errors into a written dialogue corpus.

Every decision is drawn from :mod:`asrnoise.rng`, keyed by the position of
the token in the corpus, so the output depends only on the corpus, the
model and the config, never on processing order or worker count.

Rewritten user turns keep the original characters of every untouched
token; replaced or inserted tokens appear in normalised (lower-case) form.
Dialogue states are copied through unchanged.
"""
from __future__ import annotations

import json
import logging
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from . import rng
from .align import UNIT, AlignConfig, align
from .confusion import SENTENCE_START, ConfusionModel, Outcome, OutcomeKind
from .corpus import Dialogue, Turn
from .metrics import EMPTY, ErrorReport, merge, score_corpus
from .parallel import map_chunks
from .textnorm import Span, iter_spans, nfc, tokenize_reference

log = logging.getLogger(__name__)

LOG_FORMAT_VERSION = 1

DEFAULT_TARGET_SLOTS = frozenset(
    {
        "attraction-name",
        "hotel-name",
        "restaurant-name",
        "taxi-departure",
        "taxi-destination",
        "train-departure",
        "train-destination",
    }
)


class InjectionError(ValueError):
    pass


class Mode(str, Enum):
    STOCHASTIC = "stochastic"
    QUOTA = "quota"


@dataclass(frozen=True)
class InjectionConfig:
    seed: int = 0
    mode: Mode = Mode.STOCHASTIC
    slot_noise_fraction: Fraction = Fraction(0)
    target_slots: FrozenSet[str] = DEFAULT_TARGET_SLOTS
    user_turns_only: bool = True

    def __post_init__(self):
        rng.check_seed(self.seed)
        object.__setattr__(self, "mode", Mode(self.mode))
        frac = self.slot_noise_fraction
        if isinstance(frac, float):
            frac = Fraction(repr(frac))
        frac = Fraction(frac)
        if not 0 <= frac <= 1:
            raise ValueError(f"slot_noise_fraction must lie in [0, 1], got {self.slot_noise_fraction}")
        object.__setattr__(self, "slot_noise_fraction", frac)
        object.__setattr__(self, "target_slots", frozenset(self.target_slots))
        if frac > 0 and not self.target_slots:
            raise ValueError("target_slots must be non-empty when slot_noise_fraction > 0")


@dataclass(frozen=True)
class Rewrite:
    """One change made by the injector.

    ``position`` is the index of the reference token in its turn; insertions
    use the position of their anchor token, ``-1`` for sentence start.
    """

    dialogue_id: str
    turn: int
    position: int
    kind: str
    original: Tuple[str, ...]
    produced: Tuple[str, ...]
    mode: str

    def sort_key(self):
        return (self.dialogue_id, self.turn, self.position, self.kind == "insert")

    def to_record(self) -> dict:
        return {
            "v": LOG_FORMAT_VERSION,
            "dialogue_id": self.dialogue_id,
            "turn": self.turn,
            "position": self.position,
            "kind": self.kind,
            "original": list(self.original),
            "produced": list(self.produced),
            "mode": self.mode,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Rewrite":
        return cls(
            rec["dialogue_id"],
            int(rec["turn"]),
            int(rec["position"]),
            rec["kind"],
            tuple(rec["original"]),
            tuple(rec["produced"]),
            rec["mode"],
        )


@dataclass
class InjectionLog:
    rewrites: List[Rewrite] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def sort(self) -> None:
        self.rewrites.sort(key=Rewrite.sort_key)

    def dumps(self) -> str:
        return "".join(
            json.dumps(r.to_record(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
            + "\n"
            for r in sorted(self.rewrites, key=Rewrite.sort_key)
        )

    def write(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def read(cls, path) -> "InjectionLog":
        out = cls()
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    out.rewrites.append(Rewrite.from_record(json.loads(line)))
        return out


# sampling tables ---------------------------------------------------------------

class _Table:
    """Cumulative integer counts for inverse-CDF sampling."""

    __slots__ = ("items", "cum", "total")

    def __init__(self, items: Sequence, counts: Sequence[int]):
        self.items = list(items)
        self.cum = []
        acc = 0
        for c in counts:
            acc += c
            self.cum.append(acc)
        self.total = acc

    def pick(self, r: int):
        return self.items[bisect_right(self.cum, r)]


@dataclass
class _Tables:
    outcomes: Dict[str, _Table]
    errors: Dict[str, _Table]
    insertions: Dict[str, _Table]

    @classmethod
    def from_model(cls, model: ConfusionModel) -> "_Tables":
        outcomes, errors, insertions = {}, {}, {}
        for tok, p in model.profiles.items():
            if not p.has_errors:
                continue
            ordered = p.ordered()
            outcomes[tok] = _Table([o for o, _ in ordered], [c for _, c in ordered])
            err = p.error_outcomes()
            errors[tok] = _Table([o for o, _ in err], [c for _, c in err])
        for anchor, ip in model.insertion_profiles.items():
            if ip.insertions:
                seqs = ip.ordered()
                insertions[anchor] = _Table(
                    [()] + [s for s, _ in seqs], [ip.none_count] + [c for _, c in seqs]
                )
        return cls(outcomes, errors, insertions)


def _produce(o: Outcome) -> Tuple[str, ...]:
    return () if o.kind is OutcomeKind.DELETE else o.target


def _kind(produced: Tuple[str, ...]) -> str:
    return "substitute" if produced else "delete"


# turn rendering ----------------------------------------------------------------

def render_turn(
    text: str,
    spans: Sequence[Span],
    replace: Dict[int, Tuple[str, ...]],
    after: Dict[int, Tuple[str, ...]],
) -> str:
    """Splice rewritten tokens into ``text`` (the NFC form ``spans`` index into).

    Untouched tokens and the whitespace between them are copied.  A space is
    added wherever a rewrite would otherwise glue two tokens together.  If the
    result does not re-tokenise to the planned token sequence, the planned
    surfaces are space-joined instead.
    """
    expected: List[str] = list(after.get(-1, ()))
    for p, sp in enumerate(spans):
        expected.extend(replace[p] if p in replace else (sp.token.surface,))
        expected.extend(after.get(p, ()))

    lead_end = spans[0].start if spans else len(text)
    buf = [text[:lead_end]]
    emitted = dirty = False
    if -1 in after:
        buf.append(" ".join(after[-1]))
        emitted = dirty = True
    cursor = lead_end
    sep: Optional[str] = None
    for p, sp in enumerate(spans):
        gap = text[cursor:sp.start]
        sep = gap if sep is None else (sep or gap)
        cursor = sp.end
        touched = p in replace or p in after
        dirty = dirty or p in replace
        parts = [" ".join(replace[p])] if p in replace else [text[sp.start:sp.end]]
        if p in after:
            parts.append(" ".join(after[p]))
        chunk = " ".join(x for x in parts if x)
        if not chunk:
            continue
        if not emitted:
            sep = ""
        elif dirty and not sep:
            sep = " "
        buf.append(sep)
        buf.append(chunk)
        emitted = True
        sep = None
        dirty = touched
    buf.append(text[cursor:])
    out = "".join(buf)
    if [t.surface for t in tokenize_reference(out)] != expected:
        out = " ".join(expected)
    return out


# planning ----------------------------------------------------------------------

@dataclass
class _TurnPlan:
    replace: Dict[int, Tuple[str, ...]] = field(default_factory=dict)
    after: Dict[int, Tuple[str, ...]] = field(default_factory=dict)
    modes: Dict[int, str] = field(default_factory=dict)
    frozen: set = field(default_factory=set)


def _noisable(turn: Turn, cfg: InjectionConfig) -> bool:
    return turn.is_user or not cfg.user_turns_only


def _stochastic_plan(
    spans: Sequence[Span], tables: _Tables, ts: rng.TurnStream, plan: _TurnPlan
) -> None:
    outcomes, insertions = tables.outcomes, tables.insertions
    start = insertions.get(SENTENCE_START)
    if start is not None:
        seq = start.pick(ts.below(start.total, -1, rng.INSERTION))
        if seq:
            plan.after[-1] = seq
    for p, sp in enumerate(spans):
        tok = sp.token.surface
        table = outcomes.get(tok)
        if table is not None and p not in plan.frozen:
            o = table.pick(ts.below(table.total, p, rng.OUTCOME))
            if o.is_error:
                plan.replace[p] = _produce(o)
        ins = insertions.get(tok)
        if ins is not None:
            seq = ins.pick(ts.below(ins.total, p, rng.INSERTION))
            if seq:
                plan.after[p] = seq


def _apply_plan(did: str, k: int, turn: Turn, text: str, spans, plan: _TurnPlan, mode: str):
    rewrites = []
    for p, produced in plan.replace.items():
        rewrites.append(
            Rewrite(did, k, p, _kind(produced), (spans[p].token.surface,), produced,
                    plan.modes.get(p, mode))
        )
    for p, seq in plan.after.items():
        rewrites.append(Rewrite(did, k, p, "insert", (), seq, mode))
    if not rewrites:
        return turn, rewrites
    return Turn(turn.speaker, render_turn(text, spans, plan.replace, plan.after), turn.state), rewrites


def _process_chunk(payload, dialogues):
    """Rewrite a chunk of dialogues.  ``payload`` is ``(tables, cfg, fixed plans)``."""
    tables, cfg, fixed, stochastic = payload
    out, rewrites = [], []
    for d in dialogues:
        new_turns = []
        changed = False
        for k, turn in enumerate(d.turns):
            key = (d.id, k)
            if not _noisable(turn, cfg) and key not in fixed:
                new_turns.append(turn)
                continue
            plan = fixed.get(key)
            if plan is None:
                plan = _TurnPlan()
            elif stochastic:
                plan = _TurnPlan(dict(plan.replace), dict(plan.after), dict(plan.modes), set(plan.frozen))
            text = nfc(turn.text)
            spans = list(iter_spans(text))
            if stochastic and _noisable(turn, cfg):
                _stochastic_plan(spans, tables, rng.TurnStream(cfg.seed, d.id, k), plan)
            t, rw = _apply_plan(d.id, k, turn, text, spans, plan, cfg.mode.value)
            changed = changed or rw
            rewrites.extend(rw)
            new_turns.append(t)
        out.append(Dialogue(d.id, tuple(new_turns)) if changed else d)
    return out, rewrites


def largest_remainder(n: int, counts: Sequence[int]) -> List[int]:
    """Apportion ``n`` items proportionally to ``counts``; ties go to the earlier category."""
    total = sum(counts)
    if total <= 0:
        raise ValueError("counts must sum to a positive number")
    base = [n * c // total for c in counts]
    rems = [n * c % total for c in counts]
    left = n - sum(base)
    for idx in sorted(range(len(counts)), key=lambda i: (-rems[i], i))[:left]:
        base[idx] += 1
    return base


def _quota_plans(corpus, tables: _Tables, cfg: InjectionConfig, fixed: Dict) -> Dict:
    """Assign outcomes so per-token frequencies match the profile ratios exactly."""
    occ: Dict[str, list] = {}
    ins_occ: Dict[str, list] = {}
    for d in corpus:
        for k, turn in enumerate(d.turns):
            if not _noisable(turn, cfg):
                continue
            ts = rng.TurnStream(cfg.seed, d.id, k)
            frozen = fixed[(d.id, k)].frozen if (d.id, k) in fixed else ()
            if SENTENCE_START in tables.insertions:
                ins_occ.setdefault(SENTENCE_START, []).append(
                    (ts.u64(-1, rng.INSERTION_QUOTA_ORDER), d.id, k, -1)
                )
            for p, sp in enumerate(iter_spans(turn.text)):
                tok = sp.token.surface
                if tok in tables.outcomes and p not in frozen:
                    occ.setdefault(tok, []).append((ts.u64(p, rng.QUOTA_ORDER), d.id, k, p))
                if tok in tables.insertions:
                    ins_occ.setdefault(tok, []).append(
                        (ts.u64(p, rng.INSERTION_QUOTA_ORDER), d.id, k, p)
                    )

    plans: Dict = {}

    def plan_for(did, k) -> _TurnPlan:
        key = (did, k)
        if key not in plans:
            base = fixed.get(key)
            plans[key] = (
                _TurnPlan(dict(base.replace), dict(base.after), dict(base.modes), set(base.frozen))
                if base else _TurnPlan()
            )
        return plans[key]

    for tok, items in occ.items():
        table = tables.outcomes[tok]
        counts = [table.cum[0]] + [b - a for a, b in zip(table.cum, table.cum[1:])]
        quotas = largest_remainder(len(items), counts)
        items.sort()
        idx = 0
        for outcome, q in zip(table.items, quotas):
            for _, did, k, p in items[idx : idx + q]:
                if outcome.is_error:
                    plan_for(did, k).replace[p] = _produce(outcome)
            idx += q
    for anchor, items in ins_occ.items():
        table = tables.insertions[anchor]
        counts = [table.cum[0]] + [b - a for a, b in zip(table.cum, table.cum[1:])]
        quotas = largest_remainder(len(items), counts)
        items.sort()
        idx = 0
        for seq, q in zip(table.items, quotas):
            for _, did, k, p in items[idx : idx + q]:
                if seq:
                    plan_for(did, k).after[p] = seq
            idx += q
    for key, plan in fixed.items():
        plans.setdefault(key, plan)
    return plans


# slot values -------------------------------------------------------------------

@dataclass(frozen=True)
class SlotOccurrence:
    dialogue_id: str
    turn: int
    slot: str
    start: int
    length: int


def find_slot_occurrences(corpus, target_slots) -> List[SlotOccurrence]:
    """First verbatim (normalised) match of each target-slot value in each user turn."""
    found = []
    for d in corpus:
        for k, turn in enumerate(d.turns):
            if not turn.is_user or turn.state is None:
                continue
            toks = None
            claimed: set = set()
            for slot in sorted(turn.state.slots):
                if slot not in target_slots:
                    continue
                value = [t.surface for t in tokenize_reference(turn.state.slots[slot])]
                if not value:
                    continue
                if toks is None:
                    toks = [t.surface for t in tokenize_reference(turn.text)]
                n = len(value)
                for s in range(len(toks) - n + 1):
                    if toks[s : s + n] == value:
                        span = set(range(s, s + n))
                        if not span & claimed:
                            claimed |= span
                            found.append(SlotOccurrence(d.id, k, slot, s, n))
                        break
    return found


def _round_half_up(x: Fraction) -> int:
    return int((x + Fraction(1, 2)).__floor__())


def _slot_plans(corpus, model: ConfusionModel, tables: _Tables, cfg: InjectionConfig, report: InjectionLog):
    plans: Dict = {}
    if cfg.slot_noise_fraction == 0:
        return plans
    if not any(t.state is not None for d in corpus for t in d.turns):
        raise InjectionError("slot-value noise requested but the corpus has no state annotations")
    texts = {(d.id, k): t.text for d in corpus for k, t in enumerate(d.turns)}
    eligible = []
    for occ in find_slot_occurrences(corpus, cfg.target_slots):
        toks = [t.surface for t in tokenize_reference(texts[(occ.dialogue_id, occ.turn)])]
        value = toks[occ.start : occ.start + occ.length]
        if any(tok in tables.errors for tok in value):
            eligible.append((occ, value))
    if not eligible:
        msg = (
            f"slot-value noise fraction {cfg.slot_noise_fraction} requested but no "
            "target-slot occurrence has a token with error outcomes"
        )
        report.warnings.append(msg)
        log.warning(msg)
        return plans
    n_pick = _round_half_up(cfg.slot_noise_fraction * len(eligible))
    keyed = sorted(
        (rng.u64(cfg.seed, o.dialogue_id, o.turn, o.start, rng.SLOT_SELECT), o.dialogue_id, o.turn, o.start, i)
        for i, (o, _) in enumerate(eligible)
    )
    for *_, i in keyed[:n_pick]:
        occ, value = eligible[i]
        plan = plans.setdefault((occ.dialogue_id, occ.turn), _TurnPlan())
        ts = rng.TurnStream(cfg.seed, occ.dialogue_id, occ.turn)
        for off, tok in enumerate(value):
            p = occ.start + off
            plan.frozen.add(p)
            table = tables.errors.get(tok)
            if table is None:
                continue
            plan.replace[p] = _produce(table.pick(ts.below(table.total, p, rng.SLOT_OUTCOME)))
            plan.modes[p] = "slot"
    return plans


# public API --------------------------------------------------------------------

def _run(corpus, model, cfg: InjectionConfig, general: bool, jobs: int):
    corpus = list(corpus)
    tables = _Tables.from_model(model)
    out_log = InjectionLog()
    fixed = _slot_plans(corpus, model, tables, cfg, out_log)
    stochastic = general and cfg.mode is Mode.STOCHASTIC
    if general and cfg.mode is Mode.QUOTA:
        fixed = _quota_plans(corpus, tables, cfg, fixed)
    results = map_chunks(_process_chunk, (tables, cfg, fixed, stochastic), corpus, jobs)
    noisy = []
    for dialogues, rewrites in results:
        noisy.extend(dialogues)
        out_log.rewrites.extend(rewrites)
    out_log.sort()
    return noisy, out_log


def inject_corpus(
    corpus: Sequence[Dialogue], model: ConfusionModel, cfg: InjectionConfig, jobs: int = 1
) -> Tuple[List[Dialogue], InjectionLog]:
    """Rewrite every noisable turn with errors sampled from ``model``.

    With ``cfg.slot_noise_fraction > 0`` the slot-value pass of
    :func:`inject_slot_values` runs first and the tokens of the selected
    occurrences are excluded from the general pass.
    """
    return _run(corpus, model, cfg, True, jobs)


def inject_slot_values(
    corpus: Sequence[Dialogue], model: ConfusionModel, cfg: InjectionConfig, jobs: int = 1
) -> Tuple[List[Dialogue], InjectionLog]:
    """Perturb ``round(fraction * eligible)`` target-slot value occurrences, nothing else.

    An occurrence is eligible when at least one of its tokens has an error
    outcome in ``model``.  Each such token of a selected occurrence is
    replaced by an error outcome drawn with Correct excluded.
    """
    return _run(corpus, model, cfg, False, jobs)


def _check_parallel(clean: Sequence[Dialogue], noisy: Sequence[Dialogue]) -> None:
    if len(clean) != len(noisy):
        raise InjectionError(f"corpora differ in size: {len(clean)} vs {len(noisy)} dialogues")
    for a, b in zip(clean, noisy):
        if a.id != b.id:
            raise InjectionError(f"dialogue order differs: {a.id!r} vs {b.id!r}")
        if len(a.turns) != len(b.turns):
            raise InjectionError(f"dialogue {a.id!r}: turn counts differ")
        for k, (x, y) in enumerate(zip(a.turns, b.turns)):
            if x.speaker is not y.speaker or x.state != y.state:
                raise InjectionError(f"dialogue {a.id!r} turn {k}: speaker or state differs")


def realign(clean, noisy, user_turns_only: bool = True, cfg: AlignConfig = UNIT):
    """Yield ``(clean tokens, noisy tokens, alignment)`` per compared turn."""
    _check_parallel(clean, noisy)
    for a, b in zip(clean, noisy):
        for x, y in zip(a.turns, b.turns):
            if user_turns_only and not x.is_user:
                continue
            ref = tokenize_reference(x.text)
            hyp = tokenize_reference(y.text)
            yield ref, hyp, align(ref, hyp, cfg)


def _score_chunk(payload, pairs):
    user_turns_only, cfg = payload
    clean = [c for c, _ in pairs]
    noisy = [n for _, n in pairs]
    return score_corpus(a for _, _, a in realign(clean, noisy, user_turns_only, cfg))


def validate_injection(
    clean: Sequence[Dialogue],
    noisy: Sequence[Dialogue],
    user_turns_only: bool = True,
    cfg: AlignConfig = UNIT,
    jobs: int = 1,
) -> ErrorReport:
    """Score each noisy turn against its clean counterpart (clean is the reference)."""
    clean, noisy = list(clean), list(noisy)
    _check_parallel(clean, noisy)
    report = EMPTY
    for part in map_chunks(_score_chunk, (user_turns_only, cfg), list(zip(clean, noisy)), jobs):
        report = merge(report, part)
    return report
