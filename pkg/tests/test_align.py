import pytest
from hypothesis import given
from hypothesis import strategies as st

from asrnoise.align import (
    SCLITE,
    UNIT,
    AlignConfig,
    EditOp,
    OpKind,
    align,
    alignment_cost,
    check_alignment,
    count_errors,
    render,
    replay,
)
from asrnoise.textnorm import tokenize_hypothesis, tokenize_reference
from oracles import brute_min_cost, memo_edit_cost

seqs = st.lists(st.sampled_from("abcde"), max_size=10)
small = st.lists(st.sampled_from("abc"), max_size=4)
configs = st.sampled_from([UNIT, SCLITE, AlignConfig(2, 1, 3), AlignConfig(1, 5, 1)])


def test_book_look():
    ref = "i want to book".split()
    hyp = "i want to look".split()
    a = align(ref, hyp)
    assert a.op_string() == "MMMS"
    assert a.cost == 1 == brute_min_cost(ref, hyp)
    assert count_errors(a) == (3, 1, 0, 0)


def test_identity():
    ref = list("abcde")
    a = align(ref, ref)
    assert a.op_string() == "MMMMM" and a.cost == 0
    assert count_errors(a) == (5, 0, 0, 0)


def test_empty_cases():
    assert align(["a"], []).ops == (EditOp(OpKind.DELETE, 0, None),)
    assert align(["a"], []).cost == 1
    a = align([], ["x", "y"])
    assert a.op_string() == "II" and count_errors(a) == (0, 0, 0, 2)
    assert align([], []).ops == ()


def test_accepts_tokens():
    ref = tokenize_reference("Post-code, please")
    hyp = tokenize_hypothesis("post code please")
    a = align(ref, hyp)
    assert a.cost == 2
    assert replay(a, ref, hyp) == ["post", "code", "please"]


def test_tie_break_prefers_substitute_then_delete():
    # [a b] -> [c]: S+D and D+S both cost 2; traceback from the end prefers S there
    assert align(["a", "b"], ["c"]).op_string() == "DS"
    # [a] -> [b c]: I+S and S+I tie; substitute is taken at the end
    assert align(["a"], ["b", "c"]).op_string() == "IS"


def test_weights_change_alignment():
    # sclite: still a substitution (4 < 3 + 3)
    assert align(["a"], ["b"], SCLITE).op_string() == "S"
    assert align(["a"], ["b"], SCLITE).cost == 4
    heavy_sub = AlignConfig(sub_weight=5, ins_weight=1, del_weight=1)
    # delete is taken last in the backward pass, so it ends up rightmost
    assert align(["a"], ["b"], heavy_sub).op_string() == "ID"


@pytest.mark.parametrize("bad", [0, -1, 1.5, True])
def test_config_rejects_bad_weights(bad):
    with pytest.raises(ValueError):
        AlignConfig(sub_weight=bad)


def test_render_rows():
    r, h, e = render(align(["a", "b"], ["a", "c", "d"]), ["a", "b"], ["a", "c", "d"])
    assert r.split() == ["a", "***", "B"]
    assert h.split() == ["a", "C", "D"]
    assert e.split() == ["I", "S"]


@given(small, small, configs)
def test_cost_matches_exhaustive_enumeration(ref, hyp, cfg):
    a = align(ref, hyp, cfg)
    assert a.cost == brute_min_cost(ref, hyp, cfg.sub_weight, cfg.ins_weight, cfg.del_weight)


@given(seqs, seqs, configs)
def test_optimal_and_replayable(ref, hyp, cfg):
    a = align(ref, hyp, cfg)
    assert a.cost == memo_edit_cost(ref, hyp, cfg.sub_weight, cfg.ins_weight, cfg.del_weight)
    assert a.cost == alignment_cost(a, cfg)
    assert replay(a, ref, hyp) == hyp
    check_alignment(a, ref, hyp)
    c = count_errors(a)
    assert c.matches + c.substitutions + c.deletions == len(ref)
    assert c.matches + c.substitutions + c.insertions == len(hyp)


@given(seqs, seqs)
def test_zero_cost_iff_equal(ref, hyp):
    assert (align(ref, hyp).cost == 0) == (ref == hyp)


@given(seqs, seqs, configs)
def test_deterministic(ref, hyp, cfg):
    assert align(ref, hyp, cfg) == align(list(ref), list(hyp), cfg)


def test_check_alignment_rejects_mismatch():
    a = align(["a", "b"], ["a", "b"])
    with pytest.raises(ValueError):
        check_alignment(a, ["a", "b", "c"], ["a", "b"])
    with pytest.raises(ValueError):
        check_alignment(a, ["a", "x"], ["a", "b"])
