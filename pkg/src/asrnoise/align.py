"""Minimum-edit-distance alignment of reference and hypothesis tokens."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence


class OpKind(str, Enum):
    MATCH = "M"
    SUBSTITUTE = "S"
    DELETE = "D"
    INSERT = "I"


class EditOp(NamedTuple):
    kind: OpKind
    ref_index: Optional[int]
    hyp_index: Optional[int]


@dataclass(frozen=True)
class AlignConfig:
    sub_weight: int = 1
    ins_weight: int = 1
    del_weight: int = 1

    def __post_init__(self):
        for name in ("sub_weight", "ins_weight", "del_weight"):
            w = getattr(self, name)
            if not isinstance(w, int) or isinstance(w, bool) or w < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {w!r}")

    def weight(self, kind: OpKind) -> int:
        if kind is OpKind.MATCH:
            return 0
        if kind is OpKind.SUBSTITUTE:
            return self.sub_weight
        if kind is OpKind.DELETE:
            return self.del_weight
        return self.ins_weight


UNIT = AlignConfig()
# NIST sclite default penalties
SCLITE = AlignConfig(sub_weight=4, ins_weight=3, del_weight=3)
PRESETS = {"unit": UNIT, "sclite": SCLITE}


@dataclass(frozen=True)
class Alignment:
    ops: tuple
    cost: int
    ref_len: int
    hyp_len: int

    def op_string(self) -> str:
        return "".join(op.kind.value for op in self.ops)

    @property
    def is_exact(self) -> bool:
        return all(op.kind is OpKind.MATCH for op in self.ops)


class ErrorCounts(NamedTuple):
    matches: int
    substitutions: int
    deletions: int
    insertions: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def _surfaces(seq) -> list:
    return [getattr(t, "surface", t) for t in seq]


def align(ref: Sequence, hyp: Sequence, cfg: AlignConfig = UNIT) -> Alignment:
    """Align ``ref`` to ``hyp`` at minimum weighted edit cost.

    Items may be :class:`~asrnoise.textnorm.Token` objects or plain strings;
    equality is exact on surfaces.  When several alignments share the
    minimum cost, the backward traceback prefers Substitute (or Match) over
    Delete over Insert.
    """
    r = _surfaces(ref)
    h = _surfaces(hyp)
    n, m = len(r), len(h)
    if r == h:
        ops = tuple(EditOp(OpKind.MATCH, k, k) for k in range(n))
        return Alignment(ops, 0, n, m)

    sw, iw, dw = cfg.sub_weight, cfg.ins_weight, cfg.del_weight
    prev = [j * iw for j in range(m + 1)]
    table = [prev]
    for i in range(1, n + 1):
        ri = r[i - 1]
        left = i * dw
        cur = [left]
        for j in range(1, m + 1):
            best = prev[j - 1] if ri == h[j - 1] else prev[j - 1] + sw
            up = prev[j] + dw
            if up < best:
                best = up
            left += iw
            if left < best:
                best = left
            cur.append(best)
            left = best
        table.append(cur)
        prev = cur

    ops: List[EditOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        c = table[i][j]
        if i > 0 and j > 0:
            d = table[i - 1][j - 1]
            if r[i - 1] == h[j - 1]:
                if d == c:
                    i -= 1
                    j -= 1
                    ops.append(EditOp(OpKind.MATCH, i, j))
                    continue
            elif d + sw == c:
                i -= 1
                j -= 1
                ops.append(EditOp(OpKind.SUBSTITUTE, i, j))
                continue
        if i > 0 and table[i - 1][j] + dw == c:
            i -= 1
            ops.append(EditOp(OpKind.DELETE, i, None))
        else:
            j -= 1
            ops.append(EditOp(OpKind.INSERT, None, j))
    ops.reverse()
    return Alignment(tuple(ops), table[n][m], n, m)


def count_errors(a: Alignment) -> ErrorCounts:
    counts = {k: 0 for k in OpKind}
    for op in a.ops:
        counts[op.kind] += 1
    return ErrorCounts(
        counts[OpKind.MATCH],
        counts[OpKind.SUBSTITUTE],
        counts[OpKind.DELETE],
        counts[OpKind.INSERT],
    )


def alignment_cost(a: Alignment, cfg: AlignConfig = UNIT) -> int:
    return sum(cfg.weight(op.kind) for op in a.ops)


def replay(a: Alignment, ref: Sequence, hyp: Sequence) -> list:
    """Apply the edit ops to ``ref``; the result equals ``hyp`` for a valid alignment."""
    r = _surfaces(ref)
    h = _surfaces(hyp)
    out = []
    for op in a.ops:
        if op.kind is OpKind.MATCH:
            out.append(r[op.ref_index])
        elif op.kind is OpKind.SUBSTITUTE or op.kind is OpKind.INSERT:
            out.append(h[op.hyp_index])
    return out


def check_alignment(a: Alignment, ref: Sequence, hyp: Sequence) -> None:
    """Raise ``ValueError`` unless ``a`` is a well-formed alignment of ``ref`` and ``hyp``."""
    r = _surfaces(ref)
    h = _surfaces(hyp)
    if a.ref_len != len(r) or a.hyp_len != len(h):
        raise ValueError(
            f"alignment lengths ({a.ref_len}, {a.hyp_len}) do not match "
            f"token sequences ({len(r)}, {len(h)})"
        )
    ri = hi = 0
    for op in a.ops:
        has_ref = op.kind is not OpKind.INSERT
        has_hyp = op.kind is not OpKind.DELETE
        if has_ref != (op.ref_index is not None) or has_hyp != (op.hyp_index is not None):
            raise ValueError(f"malformed op {op}")
        if has_ref:
            if op.ref_index != ri:
                raise ValueError(f"ref index {op.ref_index} out of order, expected {ri}")
            ri += 1
        if has_hyp:
            if op.hyp_index != hi:
                raise ValueError(f"hyp index {op.hyp_index} out of order, expected {hi}")
            hi += 1
        if op.kind is OpKind.MATCH and r[op.ref_index] != h[op.hyp_index]:
            raise ValueError(f"match op {op} joins different tokens")
        if op.kind is OpKind.SUBSTITUTE and r[op.ref_index] == h[op.hyp_index]:
            raise ValueError(f"substitute op {op} joins identical tokens")
    if ri != len(r) or hi != len(h):
        raise ValueError("alignment does not cover both sequences")


def render(a: Alignment, ref: Sequence, hyp: Sequence) -> tuple:
    """sclite-style REF/HYP/EVAL rows; deletions and insertions padded with ``***``."""
    r = _surfaces(ref)
    h = _surfaces(hyp)
    rows = ([], [], [])
    for op in a.ops:
        rw = r[op.ref_index] if op.ref_index is not None else "***"
        hw = h[op.hyp_index] if op.hyp_index is not None else "***"
        if op.kind is not OpKind.MATCH:
            rw, hw = rw.upper(), hw.upper()
        width = max(len(rw), len(hw), 1)
        rows[0].append(rw.ljust(width))
        rows[1].append(hw.ljust(width))
        rows[2].append(("" if op.kind is OpKind.MATCH else op.kind.value).ljust(width))
    return tuple(" ".join(row).rstrip() for row in rows)
