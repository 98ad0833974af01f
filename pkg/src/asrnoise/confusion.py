"""Per-token confusion model learned from aligned transcripts.

Each reference token gets a :class:`TokenProfile` counting how often it was
recognised correctly, deleted, or substituted by a specific token sequence.
Insertions that cannot be merged into a neighbouring substitution are
credited to the reference token on their left (or to :data:`SENTENCE_START`)
in an :class:`InsertionProfile`.  Counts are canonical; probabilities are
derived from them on demand.
"""
from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

from .align import Alignment, OpKind, check_alignment
from .textnorm import NORMALIZER_VERSION, make_token

MODEL_FORMAT = "asrnoise.confusion"
MODEL_VERSION = 1
# "<" and ">" are punctuation, so no token surface can ever equal this
SENTENCE_START = "<s>"


class OutcomeKind(str, Enum):
    CORRECT = "correct"
    DELETE = "delete"
    SUBSTITUTE = "substitute"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    target: Tuple[str, ...] = ()

    def __post_init__(self):
        if (self.kind is OutcomeKind.SUBSTITUTE) != bool(self.target):
            raise ValueError(f"substitution outcomes need a non-empty target, got {self!r}")

    @property
    def is_error(self) -> bool:
        return self.kind is not OutcomeKind.CORRECT

    def sort_key(self):
        return (self.kind.value, self.target)

    def produced(self, source: str) -> Tuple[str, ...]:
        if self.kind is OutcomeKind.CORRECT:
            return (source,)
        return self.target

    def label(self) -> str:
        if self.kind is OutcomeKind.SUBSTITUTE:
            return " ".join(self.target)
        return self.kind.value


CORRECT = Outcome(OutcomeKind.CORRECT)
DELETED = Outcome(OutcomeKind.DELETE)


def substituted(*target: str) -> Outcome:
    return Outcome(OutcomeKind.SUBSTITUTE, tuple(target))


@dataclass(frozen=True)
class TokenProfile:
    token: str
    total: int
    outcomes: Dict[Outcome, int]

    def __post_init__(self):
        if self.total < 1:
            raise ValueError(f"profile for {self.token!r} has total {self.total} < 1")
        if sum(self.outcomes.values()) != self.total:
            raise ValueError(
                f"profile for {self.token!r}: outcome counts sum to "
                f"{sum(self.outcomes.values())}, total is {self.total}"
            )
        for o, c in self.outcomes.items():
            if c < 1:
                raise ValueError(f"profile for {self.token!r}: non-positive count for {o.label()}")
            if o.kind is OutcomeKind.SUBSTITUTE and o.target == (self.token,):
                raise ValueError(f"profile for {self.token!r} substitutes the token by itself")

    def ordered(self) -> List[Tuple[Outcome, int]]:
        return sorted(self.outcomes.items(), key=lambda kv: kv[0].sort_key())

    def probability(self, outcome: Outcome) -> float:
        return self.outcomes.get(outcome, 0) / self.total

    def probabilities(self) -> Dict[Outcome, float]:
        return {o: c / self.total for o, c in self.ordered()}

    def error_outcomes(self) -> List[Tuple[Outcome, int]]:
        return [(o, c) for o, c in self.ordered() if o.is_error]

    @property
    def has_errors(self) -> bool:
        return any(o.is_error for o in self.outcomes)


@dataclass(frozen=True)
class InsertionProfile:
    anchor: str
    anchor_total: int
    insertions: Dict[Tuple[str, ...], int]

    def __post_init__(self):
        if any(not seq for seq in self.insertions):
            raise ValueError(f"insertion profile {self.anchor!r} has an empty sequence")
        if sum(self.insertions.values()) > self.anchor_total:
            raise ValueError(
                f"insertion profile {self.anchor!r}: {sum(self.insertions.values())} "
                f"insertions after {self.anchor_total} anchor occurrences"
            )

    @property
    def none_count(self) -> int:
        return self.anchor_total - sum(self.insertions.values())

    def ordered(self) -> List[Tuple[Tuple[str, ...], int]]:
        return sorted(self.insertions.items())


class ModelRates(NamedTuple):
    ins_rate: float
    del_rate: float
    sub_rate: float


@dataclass
class ConfusionModel:
    profiles: Dict[str, TokenProfile] = field(default_factory=dict)
    insertion_profiles: Dict[str, InsertionProfile] = field(default_factory=dict)
    n_sentences: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, p in self.profiles.items():
            if key != p.token:
                raise ValueError(f"profile key {key!r} != profile token {p.token!r}")
        for key, p in self.insertion_profiles.items():
            if key != p.anchor:
                raise ValueError(f"insertion key {key!r} != anchor {p.anchor!r}")

    def query(self, token) -> Optional[TokenProfile]:
        surface = getattr(token, "surface", None) or make_token(token).surface
        return self.profiles.get(surface)

    def insertion_profile(self, anchor: str) -> Optional[InsertionProfile]:
        return self.insertion_profiles.get(anchor)

    def __len__(self) -> int:
        return len(self.profiles)


def _hyp_run(h, ops) -> List[str]:
    return [h[op.hyp_index] for op in ops]


def build_model(
    triples: Iterable[Tuple[list, list, Alignment]], meta: Optional[dict] = None
) -> ConfusionModel:
    """Count per-token outcomes over ``(ref tokens, hyp tokens, alignment)`` triples.

    An insert run directly before a substitution is merged into that
    substitution's target; failing that, one directly after a substitution
    is appended to it.  Any other insert run is credited to the reference
    token preceding it, or to :data:`SENTENCE_START` at the beginning.
    """
    outcome_counts: Dict[str, Counter] = defaultdict(Counter)
    ins_counts: Dict[str, Counter] = defaultdict(Counter)
    n_sentences = 0

    for ref, hyp, a in triples:
        check_alignment(a, ref, hyp)
        r = [getattr(t, "surface", t) for t in ref]
        h = [getattr(t, "surface", t) for t in hyp]
        ops = a.ops
        n_sentences += 1
        # merged hypothesis words per substitute op
        sub_target: Dict[int, List[str]] = {
            k: [h[op.hyp_index]] for k, op in enumerate(ops) if op.kind is OpKind.SUBSTITUTE
        }
        k = 0
        while k < len(ops):
            if ops[k].kind is not OpKind.INSERT:
                k += 1
                continue
            k2 = k
            while k2 < len(ops) and ops[k2].kind is OpKind.INSERT:
                k2 += 1
            run = _hyp_run(h, ops[k:k2])
            if k2 < len(ops) and ops[k2].kind is OpKind.SUBSTITUTE:
                sub_target[k2] = run + sub_target[k2]
            elif k > 0 and ops[k - 1].kind is OpKind.SUBSTITUTE:
                sub_target[k - 1] = sub_target[k - 1] + run
            else:
                anchor = r[ops[k - 1].ref_index] if k > 0 else SENTENCE_START
                ins_counts[anchor][tuple(run)] += 1
            k = k2

        for k, op in enumerate(ops):
            if op.kind is OpKind.MATCH:
                outcome_counts[r[op.ref_index]][CORRECT] += 1
            elif op.kind is OpKind.DELETE:
                outcome_counts[r[op.ref_index]][DELETED] += 1
            elif op.kind is OpKind.SUBSTITUTE:
                outcome_counts[r[op.ref_index]][substituted(*sub_target[k])] += 1

    return _from_counts(outcome_counts, ins_counts, n_sentences, meta or {})


def _from_counts(outcome_counts, ins_counts, n_sentences, meta) -> ConfusionModel:
    profiles = {
        tok: TokenProfile(tok, sum(c.values()), dict(c)) for tok, c in outcome_counts.items()
    }
    insertion_profiles = {}
    for anchor, c in ins_counts.items():
        total = n_sentences if anchor == SENTENCE_START else profiles[anchor].total
        insertion_profiles[anchor] = InsertionProfile(anchor, total, dict(c))
    meta = {"normalizer": NORMALIZER_VERSION, **meta}
    return ConfusionModel(profiles, insertion_profiles, n_sentences, meta)


def merge_models(m1: ConfusionModel, m2: ConfusionModel) -> ConfusionModel:
    """Add the counts of two partial models built over disjoint sentence sets."""
    outcome_counts: Dict[str, Counter] = defaultdict(Counter)
    ins_counts: Dict[str, Counter] = defaultdict(Counter)
    for m in (m1, m2):
        for tok, p in m.profiles.items():
            outcome_counts[tok].update(p.outcomes)
        for anchor, p in m.insertion_profiles.items():
            ins_counts[anchor].update(p.insertions)
    meta = dict(m1.meta)
    meta.update(m2.meta)
    return _from_counts(outcome_counts, ins_counts, m1.n_sentences + m2.n_sentences, meta)


def aggregate_counts(model: ConfusionModel, words_only: bool = False) -> dict:
    """Reference words and error counts the model implies for its source corpus.

    A substitution by ``k`` tokens counts as one substitution plus ``k - 1``
    insertions, which is how a re-alignment of the source pair scores it.
    With ``words_only`` the punctuation profiles are left out of the
    reference-word, deletion and substitution totals; insertions are kept.
    """
    n = sub = dele = ins = 0
    for tok, p in model.profiles.items():
        if words_only and make_token(tok).is_punct:
            continue
        n += p.total
        for o, c in p.outcomes.items():
            if o.kind is OutcomeKind.DELETE:
                dele += c
            elif o.kind is OutcomeKind.SUBSTITUTE:
                sub += c
                ins += (len(o.target) - 1) * c
    for p in model.insertion_profiles.values():
        ins += sum(len(seq) * c for seq, c in p.insertions.items())
    return {"n_ref_words": n, "substitutions": sub, "deletions": dele, "insertions": ins}


def model_error_rates(model: ConfusionModel, words_only: bool = False) -> ModelRates:
    agg = aggregate_counts(model, words_only)
    n = agg["n_ref_words"]
    if not model.profiles or n == 0:
        raise ValueError("model has no token profiles")
    return ModelRates(
        100.0 * agg["insertions"] / n,
        100.0 * agg["deletions"] / n,
        100.0 * agg["substitutions"] / n,
    )


def describe(profile: TokenProfile, digits: int = 1) -> str:
    """One-paragraph narrative of a profile, e.g. for ``model-inspect``."""
    pct = lambda c: f"{100.0 * c / profile.total:.{digits}f}%"  # noqa: E731
    parts = [
        f'the token "{profile.token}" was correctly recognized in '
        f"{pct(profile.outcomes.get(CORRECT, 0))} of {profile.total} cases"
    ]
    subs = sorted(
        ((o, c) for o, c in profile.outcomes.items() if o.kind is OutcomeKind.SUBSTITUTE),
        key=lambda kv: (-kv[1], kv[0].sort_key()),
    )
    if subs:
        parts.append(
            "confused with " + ", ".join(f'"{o.label()}" ({pct(c)})' for o, c in subs)
        )
    if DELETED in profile.outcomes:
        parts.append(f"deleted in {pct(profile.outcomes[DELETED])}")
    return "; ".join(parts)


# serialisation ---------------------------------------------------------------

def _outcome_record(o: Outcome, c: int) -> dict:
    rec = {"kind": o.kind.value, "count": c}
    if o.target:
        rec["target"] = list(o.target)
    return rec


def to_dict(model: ConfusionModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "meta": model.meta,
        "n_sentences": model.n_sentences,
        "profiles": [
            {
                "token": p.token,
                "total": p.total,
                "outcomes": [_outcome_record(o, c) for o, c in p.ordered()],
            }
            for _, p in sorted(model.profiles.items())
        ],
        "insertions": [
            {
                "anchor": p.anchor,
                "anchor_total": p.anchor_total,
                "insertions": [{"tokens": list(s), "count": c} for s, c in p.ordered()],
            }
            for _, p in sorted(model.insertion_profiles.items())
        ],
    }


def from_dict(d: dict) -> ConfusionModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a confusion model document (format={d.get('format')!r})")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    profiles = {}
    for rec in d["profiles"]:
        outcomes = {}
        for o in rec["outcomes"]:
            outcome = Outcome(OutcomeKind(o["kind"]), tuple(o.get("target", ())))
            if outcome in outcomes:
                raise ValueError(f"profile {rec['token']!r} lists {outcome.label()} twice")
            outcomes[outcome] = int(o["count"])
        if rec["token"] in profiles:
            raise ValueError(f"duplicate profile {rec['token']!r}")
        profiles[rec["token"]] = TokenProfile(rec["token"], int(rec["total"]), outcomes)
    insertion_profiles = {}
    for rec in d["insertions"]:
        seqs = {}
        for s in rec["insertions"]:
            seqs[tuple(s["tokens"])] = int(s["count"])
        insertion_profiles[rec["anchor"]] = InsertionProfile(
            rec["anchor"], int(rec["anchor_total"]), seqs
        )
    return ConfusionModel(profiles, insertion_profiles, int(d["n_sentences"]), dict(d["meta"]))


def dumps(model: ConfusionModel) -> str:
    return json.dumps(to_dict(model), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def loads(text: str) -> ConfusionModel:
    return from_dict(json.loads(text))


def save(model: ConfusionModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load(path) -> ConfusionModel:
    return loads(Path(path).read_text(encoding="utf-8"))
