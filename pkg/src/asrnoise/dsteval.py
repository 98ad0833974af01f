"""Joint Goal Accuracy for dialogue-state predictions.

Prediction file format: JSON Lines, one record per scored turn::

    {"dialogue_id": "d1", "turn": 0, "state": {"hotel-name": "acorn guest house"}}

``turn`` is the index of the turn in the dialogue's ``turns`` list (system
turns included), the same index the native corpus format uses.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .corpus import CorpusError, Dialogue, DialogueState, _open_text

Key = Tuple[str, int]


@dataclass(frozen=True)
class TurnResult:
    dialogue_id: str
    turn: int
    matched: bool
    missing: bool = False


@dataclass
class JgaReport:
    n_turns: int = 0
    n_exact: int = 0
    per_turn: List[TurnResult] = field(default_factory=list)

    @property
    def jga(self) -> Optional[float]:
        return 100.0 * self.n_exact / self.n_turns if self.n_turns else None

    @property
    def missing(self) -> List[Key]:
        return [(r.dialogue_id, r.turn) for r in self.per_turn if r.missing]

    def to_dict(self, per_turn: bool = False) -> dict:
        d = {
            "n_turns": self.n_turns,
            "n_exact": self.n_exact,
            "jga": self.jga,
            "n_missing": len(self.missing),
        }
        if per_turn:
            d["per_turn"] = [
                {"dialogue_id": r.dialogue_id, "turn": r.turn, "matched": r.matched,
                 "missing": r.missing}
                for r in self.per_turn
            ]
        return d


def normalize_value(value: str) -> str:
    return " ".join(value.lower().split())


def canonical_state(slots: Mapping[str, str], normalize_values: bool) -> Dict[str, str]:
    """Drop empty and ``none`` values; optionally lowercase and collapse whitespace."""
    out = {}
    for name, value in slots.items():
        if value.strip().lower() in ("", "none"):
            continue
        out[name] = normalize_value(value) if normalize_values else value
    return out


def states_match(gold: Mapping[str, str], pred: Mapping[str, str], normalize_values: bool = True) -> bool:
    return canonical_state(gold, normalize_values) == canonical_state(pred, normalize_values)


def joint_goal_accuracy(
    gold: Iterable[Dialogue],
    predicted: Mapping[Key, DialogueState | Mapping[str, str]],
    normalize_values: bool = True,
) -> JgaReport:
    """Score every gold turn that carries a state; a missing prediction is a miss."""
    gold = list(gold)
    annotated = {}
    for d in gold:
        for k, t in enumerate(d.turns):
            if t.state is not None:
                annotated[(d.id, k)] = t.state.slots
    known_ids = {d.id for d in gold}
    for did, k in predicted:
        if did not in known_ids:
            raise CorpusError(f"prediction for unknown dialogue {did!r}")
        if (did, k) not in annotated:
            raise CorpusError(f"prediction for dialogue {did!r} turn {k}, which has no gold state")

    report = JgaReport()
    for key, slots in annotated.items():
        pred = predicted.get(key)
        if pred is None:
            report.per_turn.append(TurnResult(key[0], key[1], False, missing=True))
            report.n_turns += 1
            continue
        pred_slots = pred.slots if isinstance(pred, DialogueState) else pred
        ok = states_match(slots, pred_slots, normalize_values)
        report.per_turn.append(TurnResult(key[0], key[1], ok))
        report.n_turns += 1
        report.n_exact += ok
    return report


def parse_predictions(lines: Iterable[str], source: str = "<predictions>") -> Dict[Key, DialogueState]:
    preds: Dict[Key, DialogueState] = {}
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            key = (rec["dialogue_id"], rec["turn"])
            state = rec["state"]
        except (json.JSONDecodeError, KeyError, TypeError):
            raise CorpusError(f"{source}:{lineno}: expected dialogue_id, turn and state") from None
        if not isinstance(key[0], str) or not isinstance(key[1], int) or not isinstance(state, dict):
            raise CorpusError(f"{source}:{lineno}: bad field types")
        if key in preds:
            raise CorpusError(f"{source}:{lineno}: duplicate prediction for {key}")
        try:
            preds[key] = DialogueState(dict(state))
        except CorpusError as e:
            raise CorpusError(f"{source}:{lineno}: {e}") from None
    return preds


def read_predictions(path) -> Dict[Key, DialogueState]:
    with _open_text(path) as f:
        return parse_predictions(f, str(path))


def write_predictions(preds: Mapping[Key, Mapping[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for (did, k), state in sorted(preds.items()):
            slots = state.slots if isinstance(state, DialogueState) else state
            f.write(json.dumps({"dialogue_id": did, "turn": k, "state": dict(slots)},
                               sort_keys=True, ensure_ascii=False) + "\n")
