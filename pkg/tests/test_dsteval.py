import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asrnoise.corpus import CorpusError, Dialogue, DialogueState, Speaker, Turn
from asrnoise.dsteval import (
    canonical_state,
    joint_goal_accuracy,
    read_predictions,
    states_match,
    write_predictions,
)


def _gold(n_turns=10):
    turns = []
    for k in range(n_turns):
        turns.append(Turn(Speaker.USER, f"turn {k}", DialogueState({"hotel-name": f"h{k}", "hotel-area": "north"})))
        turns.append(Turn(Speaker.SYSTEM, "ok"))
    return [Dialogue("d1", tuple(turns))]


def _preds(gold, n_correct):
    preds = {}
    for k, t in enumerate(gold[0].turns):
        if t.state is None:
            continue
        slots = dict(t.state.slots)
        if len(preds) >= n_correct:
            slots["hotel-name"] = "wrong"
        preds[("d1", k)] = slots
    return preds


def test_four_out_of_ten():
    gold = _gold()
    rep = joint_goal_accuracy(gold, _preds(gold, 4))
    assert (rep.n_turns, rep.n_exact) == (10, 4)
    assert rep.jga == pytest.approx(40.0)


def test_one_mutation_drops_to_thirty():
    gold = _gold()
    preds = _preds(gold, 4)
    preds[("d1", 0)] = {**preds[("d1", 0)], "hotel-area": "south"}
    assert joint_goal_accuracy(gold, preds).jga == pytest.approx(30.0)


def test_extra_slot_is_a_miss():
    gold = _gold(1)
    pred = {("d1", 0): {"hotel-name": "h0", "hotel-area": "north", "hotel-stars": "4"}}
    assert joint_goal_accuracy(gold, pred).n_exact == 0


def test_case_and_whitespace_normalization():
    gold = _gold(1)
    pred = {("d1", 0): {"hotel-name": "  H0 ", "hotel-area": "NORTH"}}
    assert joint_goal_accuracy(gold, pred).n_exact == 1
    assert joint_goal_accuracy(gold, pred, normalize_values=False).n_exact == 0


def test_none_values_are_absent():
    assert states_match({"a-b": "x", "a-c": "none"}, {"a-b": "x"})
    assert canonical_state({"a-b": ""}, True) == {}


def test_missing_prediction_counts_as_miss():
    gold = _gold(3)
    rep = joint_goal_accuracy(gold, {("d1", 0): gold[0].turns[0].state})
    assert (rep.n_turns, rep.n_exact) == (3, 1)
    assert rep.missing == [("d1", 2), ("d1", 4)]


def test_unknown_dialogue_and_turn_raise():
    gold = _gold(1)
    with pytest.raises(CorpusError, match="unknown dialogue"):
        joint_goal_accuracy(gold, {("zz", 0): {}})
    with pytest.raises(CorpusError, match="no gold state"):
        joint_goal_accuracy(gold, {("d1", 1): {}})


def test_no_annotated_turns_gives_none():
    gold = [Dialogue("d", (Turn(Speaker.USER, "hi"),))]
    assert joint_goal_accuracy(gold, {}).jga is None


def test_prediction_file_roundtrip(tmp_path):
    gold = _gold()
    preds = _preds(gold, 7)
    p = tmp_path / "pred.jsonl"
    write_predictions(preds, p)
    loaded = read_predictions(p)
    assert joint_goal_accuracy(gold, loaded).n_exact == 7


def test_prediction_parse_errors(tmp_path):
    p = tmp_path / "pred.jsonl"
    p.write_text(json.dumps({"dialogue_id": "d1", "turn": "0", "state": {}}) + "\n")
    with pytest.raises(CorpusError, match=":1:"):
        read_predictions(p)
    rec = json.dumps({"dialogue_id": "d1", "turn": 0, "state": {}})
    p.write_text(rec + "\n" + rec + "\n")
    with pytest.raises(CorpusError, match=":2: duplicate"):
        read_predictions(p)


@given(st.integers(0, 10), st.randoms(use_true_random=False))
def test_invariant_under_permutation(n_correct, r):
    gold = _gold()
    preds = _preds(gold, n_correct)
    items = list(preds.items())
    r.shuffle(items)
    assert joint_goal_accuracy(gold, dict(items)).n_exact == n_correct
    reordered = [Dialogue(d.id, d.turns) for d in reversed(gold)]
    assert joint_goal_accuracy(reordered, dict(items)).jga == joint_goal_accuracy(gold, preds).jga
