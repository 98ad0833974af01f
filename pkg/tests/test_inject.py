import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrnoise.cli import build_model_from_pairs
from asrnoise.confusion import CORRECT, DELETED, build_model, substituted
from asrnoise.corpus import Dialogue, DialogueState, Speaker, Turn, dumps_dialogues
from asrnoise.inject import (
    InjectionConfig,
    InjectionError,
    InjectionLog,
    Mode,
    find_slot_occurrences,
    inject_corpus,
    inject_slot_values,
    largest_remainder,
    realign,
    render_turn,
    validate_injection,
)
from asrnoise.synthetic import BOOK_PROFILE, generate_dialogues, profile_pairs, repeated_token_corpus
from asrnoise.textnorm import iter_spans, nfc, tokenize_reference

BOOK_MODEL = build_model_from_pairs(profile_pairs("book", BOOK_PROFILE))


def _remeasure(clean, noisy):
    return build_model(realign(clean, noisy))


def _user(text, slots=None):
    return Turn(Speaker.USER, text, DialogueState(slots) if slots is not None else None)


def test_all_correct_profile_never_altered():
    model = build_model_from_pairs(profile_pairs("hello", {None: 50}))
    corpus = repeated_token_corpus(["hello"], 200)
    for seed in (0, 1, 2**64 - 1):
        noisy, log = inject_corpus(corpus, model, InjectionConfig(seed=seed))
        assert noisy == corpus and not log.rewrites


def test_stochastic_book_within_three_sigma():
    corpus = repeated_token_corpus(["book"], 10000)
    noisy, _ = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=11))
    prof = _remeasure(corpus, noisy).query("book")
    assert prof.total == 10000
    expected = BOOK_MODEL.query("book")
    for outcome, count in expected.outcomes.items():
        p = count / expected.total
        sigma = math.sqrt(10000 * p * (1 - p))
        assert abs(prof.outcomes.get(outcome, 0) - 10000 * p) <= 3 * sigma, outcome


def test_quota_book_exact():
    corpus = repeated_token_corpus(["book"], 10000)
    noisy, log = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=11, mode=Mode.QUOTA))
    prof = _remeasure(corpus, noisy).query("book")
    assert prof.outcomes == {CORRECT: 9460, substituted("look"): 220, substituted("put"): 200, DELETED: 120}
    assert len(log.rewrites) == 540 and {r.mode for r in log.rewrites} == {"quota"}


def test_largest_remainder():
    assert largest_remainder(10000, [946, 22, 20, 12]) == [9460, 220, 200, 120]
    assert largest_remainder(7, [1, 1, 1]) == [3, 2, 2]
    assert largest_remainder(0, [3, 1]) == [0, 0]
    with pytest.raises(ValueError):
        largest_remainder(3, [0, 0])


@given(st.integers(0, 500), st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(lambda c: sum(c) > 0))
def test_largest_remainder_properties(n, counts):
    q = largest_remainder(n, counts)
    assert sum(q) == n
    total = sum(counts)
    assert all(abs(qi - n * c / total) < 1 for qi, c in zip(q, counts))


def test_punctuation_free_deletion_rate_within_three_sigma():
    corpus = repeated_token_corpus(["book"], 6000)
    noisy, _ = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=3))
    rep = validate_injection(corpus, noisy)
    n = rep.n_ref_words
    p = 12 / 1000 * 6000 / n
    expected = 100 * p
    assert abs(rep.del_rate - expected) <= 3 * 100 * math.sqrt(p * (1 - p) / n)


def test_determinism_and_seed_sensitivity():
    corpus = generate_dialogues(50, seed=4)
    model = build_model_from_pairs(profile_pairs("to", {None: 5, ("two",): 3, (): 2}))
    a = inject_corpus(corpus, model, InjectionConfig(seed=7))
    b = inject_corpus(corpus, model, InjectionConfig(seed=7))
    c = inject_corpus(corpus, model, InjectionConfig(seed=8))
    assert dumps_dialogues(a[0]) == dumps_dialogues(b[0]) and a[1].dumps() == b[1].dumps()
    assert dumps_dialogues(a[0]) != dumps_dialogues(c[0])


def test_annotations_structure_and_locality_preserved():
    corpus = generate_dialogues(40, seed=5)
    noisy, log = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=1))
    assert log.rewrites
    for a, b in zip(corpus, noisy):
        assert a.id == b.id and len(a.turns) == len(b.turns)
        for x, y in zip(a.turns, b.turns):
            assert x.speaker is y.speaker and x.state == y.state
            if not x.is_user:
                assert x.text == y.text
            ref = [t.surface for t in tokenize_reference(x.text) if t.surface != "book"]
            hyp = [t.surface for t in tokenize_reference(y.text)
                   if t.surface not in ("book", "look", "put")]
            assert ref == hyp
    # the log reconstructs every change
    assert {r.original for r in log.rewrites} == {("book",)}


def test_include_system_turns():
    corpus = [Dialogue("d", (Turn(Speaker.SYSTEM, "book book book " * 30),))]
    noisy, _ = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=1))
    assert noisy == corpus
    noisy, log = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=1, user_turns_only=False))
    assert log.rewrites and noisy != corpus


def test_jobs_do_not_change_output():
    corpus = generate_dialogues(60, seed=6)
    model = build_model_from_pairs(profile_pairs("the", {None: 6, ("a",): 3, (): 1}))
    for mode in Mode:
        cfg = InjectionConfig(seed=2, mode=mode)
        one = inject_corpus(corpus, model, cfg, jobs=1)
        three = inject_corpus(corpus, model, cfg, jobs=3)
        assert dumps_dialogues(one[0]) == dumps_dialogues(three[0])
        assert one[1].dumps() == three[1].dumps()
    assert validate_injection(corpus, one[0], jobs=1) == validate_injection(corpus, one[0], jobs=3)


def test_log_roundtrip(tmp_path):
    corpus = repeated_token_corpus(["book"], 500)
    _, log = inject_corpus(corpus, BOOK_MODEL, InjectionConfig(seed=9))
    log.write(tmp_path / "log.jsonl")
    assert InjectionLog.read(tmp_path / "log.jsonl").dumps() == log.dumps()


def test_validate_identity_and_mismatch():
    corpus = generate_dialogues(5, seed=1)
    rep = validate_injection(corpus, corpus)
    assert rep.wer == 0 and rep.ser == 0
    with pytest.raises(InjectionError):
        validate_injection(corpus, corpus[:-1])
    shuffled = corpus[1:] + corpus[:1]
    with pytest.raises(InjectionError):
        validate_injection(corpus, shuffled)
    cut = [Dialogue(corpus[0].id, corpus[0].turns[:-1])] + corpus[1:]
    with pytest.raises(InjectionError):
        validate_injection(corpus, cut)


def test_config_validation():
    with pytest.raises(ValueError):
        InjectionConfig(slot_noise_fraction=Fraction(3, 2))
    with pytest.raises(ValueError):
        InjectionConfig(slot_noise_fraction=0.5, target_slots=())
    with pytest.raises(ValueError):
        InjectionConfig(seed=-1)
    assert InjectionConfig(slot_noise_fraction=0.2).slot_noise_fraction == Fraction(1, 5)


# slot-value pass -------------------------------------------------------------

POST_MODEL = build_model_from_pairs(profile_pairs("post-code", {None: 3, ("code",): 1}))


def _slot_corpus(n, value="the post-code house"):
    dialogues = []
    for i in range(n):
        dialogues.append(Dialogue(f"d{i:03d}", (
            _user(f"I want {value} please.", {"hotel-name": value, "hotel-area": "north"}),
            Turn(Speaker.SYSTEM, "The post-code is cb21."),
            _user("What's the post-code there?", {"hotel-name": value, "hotel-area": "north"}),
        )))
    return dialogues


def test_occurrence_matching():
    corpus = _slot_corpus(3)
    occ = find_slot_occurrences(corpus, {"hotel-name"})
    assert [(o.dialogue_id, o.turn, o.start, o.length) for o in occ] == [
        ("d000", 0, 2, 3), ("d001", 0, 2, 3), ("d002", 0, 2, 3)
    ]
    turn = _user("From Ely to Ely", {"train-departure": "ely", "train-destination": "Ely"})
    occ = find_slot_occurrences([Dialogue("x", (turn,))], {"train-departure", "train-destination"})
    assert [(o.slot, o.start) for o in occ] == [("train-departure", 1)]


def test_slot_fraction_selects_exact_count():
    corpus = _slot_corpus(100)
    cfg = InjectionConfig(seed=5, slot_noise_fraction=Fraction(1, 5), target_slots={"hotel-name"})
    noisy, log = inject_slot_values(corpus, POST_MODEL, cfg)
    changed = [(a.id, k) for a, b in zip(corpus, noisy) for k, (x, y) in enumerate(zip(a.turns, b.turns))
               if x.text != y.text]
    assert len(changed) == 20 and all(k == 0 for _, k in changed)
    # single error outcome: the value token deterministically becomes "code"
    assert all(r.produced == ("code",) and r.mode == "slot" for r in log.rewrites)
    for a, b in zip(corpus, noisy):
        assert [t.state for t in a.turns] == [t.state for t in b.turns]
        if b.turns[0].text != a.turns[0].text:
            assert b.turns[0].text == "I want the code house please."


def test_slot_fraction_zero_is_identity():
    corpus = _slot_corpus(10)
    noisy, log = inject_slot_values(corpus, POST_MODEL, InjectionConfig(seed=5))
    assert noisy == corpus and not log.rewrites and not log.warnings


def test_slot_pass_then_general_pass_leaves_selected_alone():
    corpus = _slot_corpus(50)
    cfg = InjectionConfig(seed=1, slot_noise_fraction=Fraction(1, 2), target_slots={"hotel-name"})
    _, log = inject_corpus(corpus, POST_MODEL, cfg)
    slot = [r for r in log.rewrites if r.mode == "slot"]
    assert len(slot) == 25
    keys = [(r.dialogue_id, r.turn, r.position) for r in log.rewrites]
    assert len(keys) == len(set(keys))


def test_zero_eligible_warns():
    corpus = _slot_corpus(5, value="acorn")
    cfg = InjectionConfig(seed=1, slot_noise_fraction=Fraction(1, 5), target_slots={"hotel-name"})
    noisy, log = inject_slot_values(corpus, POST_MODEL, cfg)
    assert noisy == corpus and log.warnings


def test_slot_noise_without_states_rejected():
    corpus = repeated_token_corpus(["post-code"], 3)
    with pytest.raises(InjectionError):
        inject_corpus(corpus, POST_MODEL, InjectionConfig(slot_noise_fraction=Fraction(1, 5)))


# rendering -------------------------------------------------------------------

def _render(text, replace, after=None):
    text = nfc(text)
    return render_turn(text, list(iter_spans(text)), replace, after or {})


def test_render_examples():
    assert _render("Book it, please.", {0: ("look",)}) == "look it, please."
    assert _render("Book it, please.", {2: ()}) == "Book it please."
    assert _render("Book it, please.", {0: ()}) == "it, please."
    assert _render("ok.", {}, {-1: ("um",)}) == "um ok."
    assert _render("a-b", {0: ("x", "y")}) == "x y"
    assert _render("ok,fine", {1: ("then",)}) == "ok then fine"


words = st.sampled_from(["book", "it", "the", "post-code", "I'm", ",", ".", "?", "a"])
texts = st.lists(st.tuples(words, st.sampled_from(["", " ", "  ", "\t"])), max_size=8).map(
    lambda xs: "".join(w + s for w, s in xs)
)


@settings(max_examples=300)
@given(texts, st.data())
def test_render_retokenizes_to_plan(text, data):
    text = nfc(text)
    spans = list(iter_spans(text))
    n = len(spans)
    outcome = st.sampled_from([(), ("x",), ("x", "y"), (".",)])
    replace = data.draw(st.dictionaries(st.integers(0, max(n - 1, 0)), outcome)) if n else {}
    after = data.draw(st.dictionaries(st.integers(-1, max(n - 1, -1)), st.sampled_from([("um",), ("a", "b")])))
    out = render_turn(text, spans, replace, after)
    expected = list(after.get(-1, ()))
    for p, sp in enumerate(spans):
        expected.extend(replace.get(p, (sp.token.surface,)))
        expected.extend(after.get(p, ()))
    assert [t.surface for t in tokenize_reference(out)] == expected
    if not replace and not after:
        assert out == text
