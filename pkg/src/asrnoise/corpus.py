"""Dialogue and transcript-pair data model, native JSONL I/O and a MultiWOZ 2.1 reader.

Native dialogue format (``asrnoise.dialogue`` version 1): UTF-8 JSON Lines,
one dialogue per line::

    {"id": "d1", "turns": [{"speaker": "user", "state": {"hotel-name": "acorn"},
     "text": "..."}, {"speaker": "system", "text": "..."}], "v": 1}

Keys are sorted and separators fixed, so equal corpora serialise to equal
bytes.  ``state`` is the cumulative dialogue state after a user turn and is
omitted when absent.

Transcript pairs: JSON Lines with string fields ``id``, ``ref`` and ``hyp``.
"""
from __future__ import annotations

import io
import json
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

DIALOGUE_VERSION = 1
# MultiWOZ placeholders for "no value"
EMPTY_VALUES = frozenset({"", "none", "not mentioned"})


class CorpusError(ValueError):
    """Malformed or structurally invalid input data."""


class Speaker(str, Enum):
    USER = "user"
    SYSTEM = "system"


@dataclass(frozen=True)
class DialogueState:
    slots: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in self.slots.items():
            if not isinstance(name, str) or not name:
                raise CorpusError(f"slot names must be non-empty strings, got {name!r}")
            if not isinstance(value, str):
                raise CorpusError(f"slot {name!r} has non-string value {value!r}")


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str
    state: Optional[DialogueState] = None

    @property
    def is_user(self) -> bool:
        return self.speaker is Speaker.USER


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: Tuple[Turn, ...]

    def __post_init__(self):
        if not self.turns:
            raise CorpusError(f"dialogue {self.id!r} has no turns")
        for k, t in enumerate(self.turns):
            if t.state is not None and not t.is_user:
                raise CorpusError(f"dialogue {self.id!r} turn {k}: state on a system turn")


@dataclass(frozen=True)
class TranscriptPair:
    id: str
    ref_text: str
    hyp_text: str


class CorpusFormat(str, Enum):
    NATIVE = "native"
    MULTIWOZ21 = "multiwoz21"


# transcript pairs -------------------------------------------------------------

def _open_text(path):
    if str(path) == "-":
        return io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8")
    return open(path, encoding="utf-8")


def parse_pairs(lines: Iterable[str], source: str = "<pairs>") -> List[TranscriptPair]:
    pairs = []
    seen = set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorpusError(f"{source}:{lineno}: invalid JSON ({e.msg})") from None
        if not isinstance(rec, dict):
            raise CorpusError(f"{source}:{lineno}: expected an object")
        for key in ("id", "ref", "hyp"):
            if not isinstance(rec.get(key), str):
                raise CorpusError(f"{source}:{lineno}: missing or non-string field {key!r}")
        if rec["id"] in seen:
            raise CorpusError(f"{source}:{lineno}: duplicate pair id {rec['id']!r}")
        seen.add(rec["id"])
        pairs.append(TranscriptPair(rec["id"], rec["ref"], rec["hyp"]))
    return pairs


def read_pairs(path) -> List[TranscriptPair]:
    with _open_text(path) as f:
        return parse_pairs(f, str(path))


def write_pairs(pairs: Iterable[TranscriptPair], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(_dump({"id": p.id, "ref": p.ref_text, "hyp": p.hyp_text}) + "\n")


# native dialogues -------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def dialogue_to_record(d: Dialogue) -> dict:
    turns = []
    for t in d.turns:
        rec = {"speaker": t.speaker.value, "text": t.text}
        if t.state is not None:
            rec["state"] = dict(t.state.slots)
        turns.append(rec)
    return {"v": DIALOGUE_VERSION, "id": d.id, "turns": turns}


def dialogue_to_line(d: Dialogue) -> str:
    return _dump(dialogue_to_record(d))


def dialogue_from_record(rec: dict) -> Dialogue:
    if not isinstance(rec, dict):
        raise CorpusError("dialogue record must be an object")
    if rec.get("v") != DIALOGUE_VERSION:
        raise CorpusError(f"unsupported dialogue record version {rec.get('v')!r}")
    did = rec.get("id")
    if not isinstance(did, str) or not did:
        raise CorpusError("dialogue record without a string id")
    raw_turns = rec.get("turns")
    if not isinstance(raw_turns, list):
        raise CorpusError(f"dialogue {did!r}: 'turns' must be a list")
    turns = []
    for k, t in enumerate(raw_turns):
        try:
            speaker = Speaker(t["speaker"])
            text = t["text"]
        except (KeyError, ValueError, TypeError):
            raise CorpusError(f"dialogue {did!r} turn {k}: bad speaker/text") from None
        if not isinstance(text, str):
            raise CorpusError(f"dialogue {did!r} turn {k}: text must be a string")
        state = None
        if "state" in t:
            if not isinstance(t["state"], dict):
                raise CorpusError(f"dialogue {did!r} turn {k}: state must be an object")
            try:
                state = DialogueState(dict(t["state"]))
            except CorpusError as e:
                raise CorpusError(f"dialogue {did!r} turn {k}: {e}") from None
        turns.append(Turn(speaker, text, state))
    try:
        return Dialogue(did, tuple(turns))
    except CorpusError as e:
        raise CorpusError(str(e)) from None


def iter_native(path) -> Iterator[Dialogue]:
    """Stream dialogues from a native file without loading it whole."""
    with _open_text(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
            try:
                yield dialogue_from_record(rec)
            except CorpusError as e:
                raise CorpusError(f"{path}:{lineno}: {e}") from None


def check_unique_ids(corpus: Iterable[Dialogue]) -> None:
    seen = set()
    for d in corpus:
        if d.id in seen:
            raise CorpusError(f"duplicate dialogue id {d.id!r}")
        seen.add(d.id)


def read_dialogues(path, format: CorpusFormat | str = CorpusFormat.NATIVE) -> List[Dialogue]:
    try:
        fmt = CorpusFormat(format)
    except ValueError:
        raise CorpusError(f"unknown corpus format {format!r}") from None
    if fmt is CorpusFormat.MULTIWOZ21:
        with _open_text(path) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}: invalid JSON ({e.msg})") from None
        corpus = from_multiwoz21(data)
    else:
        corpus = list(iter_native(path))
    check_unique_ids(corpus)
    return corpus


def dumps_dialogues(corpus: Iterable[Dialogue]) -> str:
    corpus = list(corpus)
    check_unique_ids(corpus)
    return "".join(dialogue_to_line(d) + "\n" for d in corpus)


def write_dialogues(corpus: Iterable[Dialogue], path) -> None:
    text = dumps_dialogues(corpus)
    try:
        if str(path) == "-":
            sys.stdout.write(text)
        else:
            Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write dialogues to {path}: {e.strerror}") from e


# MultiWOZ 2.1 -----------------------------------------------------------------

def _flatten_metadata(did: str, k: int, metadata: dict) -> Dict[str, str]:
    """Flatten per-domain belief state into ``domain-slot`` / ``domain-book slot`` names."""
    slots: Dict[str, str] = {}
    if not isinstance(metadata, dict):
        raise CorpusError(f"dialogue {did!r} turn {k}: metadata is not an object")
    for domain, parts in sorted(metadata.items()):
        if not isinstance(parts, dict):
            raise CorpusError(f"dialogue {did!r} turn {k}: domain {domain!r} is not an object")
        for part, values in sorted(parts.items()):
            if part not in ("semi", "book"):
                raise CorpusError(f"dialogue {did!r} turn {k}: unmapped key {domain}.{part}")
            if not isinstance(values, dict):
                raise CorpusError(f"dialogue {did!r} turn {k}: {domain}.{part} is not an object")
            for slot, value in sorted(values.items()):
                if part == "book" and slot == "booked":
                    continue  # booking results, not belief state
                if not isinstance(value, str):
                    raise CorpusError(
                        f"dialogue {did!r} turn {k}: unmapped value type for "
                        f"{domain}.{part}.{slot}: {type(value).__name__}"
                    )
                value = value.strip()
                if value.lower() in EMPTY_VALUES:
                    continue
                prefix = f"{domain.lower()}-book " if part == "book" else f"{domain.lower()}-"
                name = prefix + slot.lower()
                if name in slots:
                    raise CorpusError(f"dialogue {did!r} turn {k}: slot {name!r} mapped twice")
                slots[name] = value
    return slots


def from_multiwoz21(data: dict) -> List[Dialogue]:
    """Convert a loaded MultiWOZ 2.1 ``data.json`` mapping into dialogues.

    Turns in ``log`` alternate user/system starting with the user.  The
    belief state after a user turn lives in the ``metadata`` of the system
    turn that follows it; a trailing user turn with no system reply gets no
    state.  Dialogue ids keep the source key (e.g. ``"PMUL1234.json"``).
    """
    if not isinstance(data, dict):
        raise CorpusError("MultiWOZ 2.1 data must be an object keyed by dialogue id")
    corpus = []
    for did in sorted(data):
        rec = data[did]
        log = rec.get("log") if isinstance(rec, dict) else None
        if not isinstance(log, list):
            raise CorpusError(f"dialogue {did!r}: missing 'log' list")
        turns = []
        for k, entry in enumerate(log):
            if not isinstance(entry, dict) or not isinstance(entry.get("text"), str):
                raise CorpusError(f"dialogue {did!r} turn {k}: missing text")
            if k % 2 == 0:
                state = None
                if k + 1 < len(log):
                    nxt = log[k + 1]
                    meta = nxt.get("metadata") if isinstance(nxt, dict) else None
                    if meta is None:
                        raise CorpusError(f"dialogue {did!r} turn {k + 1}: missing metadata")
                    state = DialogueState(_flatten_metadata(did, k + 1, meta))
                turns.append(Turn(Speaker.USER, entry["text"], state))
            else:
                turns.append(Turn(Speaker.SYSTEM, entry["text"]))
        corpus.append(Dialogue(did, tuple(turns)))
    return corpus
