"""Synthetic corpora and transcript pairs with known error structure.

Used by the test-suite, the acceptance checks and the scripts in
``scripts/``.  Everything here is seeded through :class:`random.Random` and
therefore reproducible.
"""
from __future__ import annotations

import random
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .corpus import Dialogue, DialogueState, Speaker, TranscriptPair, Turn
from .textnorm import tokenize_hypothesis

# --- fixed-count transcript fixtures -------------------------------------------

def fixed_count_pairs() -> List[TranscriptPair]:
    """102 sentences, 1000 reference words: 23 insertions, 19 deletions, 81 substitutions.

    56 sentences carry errors, so the rates come out as 2.3 / 1.9 / 8.1 /
    12.3 (WER) / 54.9 (SER).  Errors sit on non-adjacent positions of
    distinct-word sentences, so the minimum-cost alignment recovers exactly
    the planted edits.
    """
    lengths = [10] * 82 + [9] * 20
    kinds = ["S"] * 81 + ["D"] * 19 + ["I"] * 23
    random.Random(123).shuffle(kinds)
    per_sentence = [3] * 11 + [2] * 45 + [0] * 46
    pairs = []
    it = iter(kinds)
    n_new = 0
    for s, (n, n_err) in enumerate(zip(lengths, per_sentence)):
        ref = [f"w{j}" for j in range(n)]
        hyp: List[str] = []
        edits = {pos: next(it) for pos in (1, 4, 7)[:n_err]}
        for j, w in enumerate(ref):
            kind = edits.get(j)
            if kind == "S":
                hyp.append(f"sub{n_new}")
                n_new += 1
            elif kind == "D":
                pass
            elif kind == "I":
                hyp.extend([w, f"ins{n_new}"])
                n_new += 1
            else:
                hyp.append(w)
        pairs.append(TranscriptPair(f"s{s:03d}", " ".join(ref), " ".join(hyp)))
    return pairs


BOOK_PROFILE = {None: 946, ("look",): 22, ("put",): 20, (): 12}
POST_CODE_PROFILE = {None: 689, ("code",): 220, ("post-card",): 30, ("post",): 41, (): 20}


def profile_pairs(
    token: str, outcomes: Dict[Optional[Tuple[str, ...]], int], prefix: str = "p",
    frame: Tuple[str, str] = ("could you", "for me"),
) -> List[TranscriptPair]:
    """Pairs realising a per-token outcome histogram inside a fixed frame.

    ``outcomes`` maps ``None`` (correct), a token tuple (substitution) or
    ``()`` (deletion) to a count.
    """
    pairs = []
    k = 0
    left, right = frame
    for outcome, count in outcomes.items():
        for _ in range(count):
            hyp_tok = token if outcome is None else " ".join(outcome)
            ref = f"{left} {token} {right}"
            hyp = " ".join(x for x in (left, hyp_tok, right) if x)
            pairs.append(TranscriptPair(f"{prefix}{k:05d}", ref, hyp))
            k += 1
    return pairs


def repeated_token_corpus(
    tokens: Sequence[str], n_per_token: int, frame: Tuple[str, str] = ("could you", "for me"),
    turns_per_dialogue: int = 10,
) -> List[Dialogue]:
    """User turns ``"<left> TOKEN <right>"`` repeated ``n_per_token`` times per token."""
    left, right = frame
    texts = [f"{left} {tok} {right}" for tok in tokens for _ in range(n_per_token)]
    dialogues = []
    for start in range(0, len(texts), turns_per_dialogue):
        turns = []
        for t in texts[start : start + turns_per_dialogue]:
            turns.append(Turn(Speaker.USER, t))
            turns.append(Turn(Speaker.SYSTEM, "okay."))
        dialogues.append(Dialogue(f"rep{start // turns_per_dialogue:06d}", tuple(turns)))
    return dialogues


# --- MultiWOZ-like dialogues ---------------------------------------------------

VALUES = {
    "hotel-name": ["acorn guest house", "the lensfield hotel", "alexander bed and breakfast",
                   "hamilton lodge", "the gonville hotel", "avalon"],
    "restaurant-name": ["pizza hut city centre", "the golden curry", "nandos", "la margherita",
                        "the cambridge chop house", "curry garden"],
    "attraction-name": ["kings college", "the fitzwilliam museum", "cambridge punter",
                        "byard art", "whipple museum of the history of science"],
    "train-departure": ["cambridge", "london kings cross", "stansted airport", "ely", "norwich",
                        "peterborough"],
    "train-destination": ["cambridge", "london liverpool street", "broxbourne", "leicester",
                          "bishops stortford"],
    "taxi-departure": ["the junction", "wagamama", "saint johns college", "the copper kettle"],
    "taxi-destination": ["cambridge museum of technology", "the gardenia", "clare hall",
                         "sitar tandoori"],
    "hotel-area": ["north", "south", "centre", "east", "west"],
    "restaurant-food": ["italian", "indian", "chinese", "british", "european"],
    "hotel-book day": ["monday", "tuesday", "friday", "saturday"],
    "train-book people": ["1", "2", "3", "4", "5"],
    "restaurant-book time": ["18:30", "19:00", "12:15", "20:45"],
}

USER_TEMPLATES = [
    ("I need a place to stay called {hotel-name}.", ["hotel-name"]),
    ("I'm looking for a hotel in the {hotel-area}, please.", ["hotel-area"]),
    ("Can you book {hotel-name} for {hotel-book day}?", ["hotel-name", "hotel-book day"]),
    ("I want to book a table at {restaurant-name}.", ["restaurant-name"]),
    ("Is there any {restaurant-food} food in town?", ["restaurant-food"]),
    ("Book it for {restaurant-book time}, please.", ["restaurant-book time"]),
    ("I'd like to visit {attraction-name}. What's the post-code?", ["attraction-name"]),
    ("I need a train from {train-departure} to {train-destination}.",
     ["train-departure", "train-destination"]),
    ("Please book {train-book people} tickets.", ["train-book people"]),
    ("I need a taxi from {taxi-departure} to {taxi-destination}.",
     ["taxi-departure", "taxi-destination"]),
    ("Yes, please book that for me.", []),
    ("What's the phone number and the post-code?", []),
    ("No, that's all. Thank you!", []),
    ("Could you also find me trains on the same day?", []),
]

SYSTEM_TEMPLATES = [
    "Sure, I have booked it. Your reference number is {ref}.",
    "What day would you like to travel?",
    "There are {n} options. Do you have a price range in mind?",
    "The post-code is cb{n}{m}dp.",
    "Is there anything else I can help you with?",
    "I can book that for you. How many people?",
]


def generate_dialogues(
    n_dialogues: int, seed: int = 0, turns: int = 14, id_prefix: str = "SYN"
) -> List[Dialogue]:
    """MultiWOZ-shaped dialogues: alternating user/system turns, cumulative states."""
    r = random.Random(seed)
    out = []
    for i in range(n_dialogues):
        state: Dict[str, str] = {}
        dlg_turns = []
        for k in range(turns):
            if k % 2 == 0:
                template, slots = r.choice(USER_TEMPLATES)
                fill = {s: r.choice(VALUES[s]) for s in slots}
                state.update(fill)
                text = template.format(**fill)
                dlg_turns.append(Turn(Speaker.USER, text, DialogueState(dict(state))))
            else:
                template = r.choice(SYSTEM_TEMPLATES)
                text = template.format(ref=f"{r.randrange(16**8):08X}", n=r.randrange(2, 9),
                                       m=r.randrange(1, 9))
                dlg_turns.append(Turn(Speaker.SYSTEM, text))
        out.append(Dialogue(f"{id_prefix}{i:05d}", tuple(dlg_turns)))
    return out


# --- a stand-in recogniser -----------------------------------------------------

CONFUSABLE = {
    "book": ["look", "put"],
    "post-code": ["code", "post-card"],
    "trains": ["trends"],
    "train": ["trained"],
    "hotel": ["motel"],
    "taxi": ["taxis"],
    "need": ["need to"],
    "for": ["four"],
    "to": ["two"],
    "the": ["a"],
    "centre": ["center"],
    "guest": ["guessed"],
    "kings": ["king's"],
    "nandos": ["nando's"],
}
FILLERS = ["the", "a", "and", "so", "i"]


def _confuse(w: str, r: random.Random) -> str:
    alts = CONFUSABLE.get(w)
    if alts:
        return r.choice(alts)
    alt = w[:-1] + "e" if len(w) > 3 else w + "s"
    return alt if alt != w else w + "s"


def simulate_asr(
    text: str, r: random.Random, sub: float = 0.081, dele: float = 0.019, ins: float = 0.023
) -> str:
    """Punctuation-free hypothesis with roughly the given per-word error rates."""
    out: List[str] = []
    for tok in tokenize_hypothesis(text):
        w = tok.surface
        x = r.random()
        if x < dele:
            pass
        elif x < dele + sub:
            out.append(_confuse(w, r))
        else:
            out.append(w)
        if r.random() < ins:
            out.append(r.choice(FILLERS))
    return " ".join(out)


def simulated_pairs(corpus: Iterable[Dialogue], seed: int = 0, **rates) -> List[TranscriptPair]:
    """Reference user turns paired with :func:`simulate_asr` hypotheses."""
    r = random.Random(seed)
    pairs = []
    for d in corpus:
        for k, t in enumerate(d.turns):
            if t.is_user:
                pairs.append(TranscriptPair(f"{d.id}/{k}", t.text, simulate_asr(t.text, r, **rates)))
    return pairs
