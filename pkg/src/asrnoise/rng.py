"""Counter-based random draws keyed by corpus position.

Every draw is a pure function of ``(seed, dialogue id, turn index, token
position, stream)`` hashed with BLAKE2b, so results do not depend on the
order in which dialogues are processed or on how work is split between
processes.  ``stream`` separates independent decisions made at the same
position (outcome, insertion, quota ordering, ...).
"""
from __future__ import annotations

import hashlib
import struct

MAX_SEED = 2**64 - 1

OUTCOME = 0
INSERTION = 1
QUOTA_ORDER = 2
INSERTION_QUOTA_ORDER = 3
SLOT_SELECT = 4
SLOT_OUTCOME = 5

_POS = struct.Struct("<qI")


def check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return seed


class TurnStream:
    """Draws for one turn; the hash state of the turn prefix is computed once."""

    __slots__ = ("_base",)

    def __init__(self, seed: int, dialogue_id: str, turn: int):
        h = hashlib.blake2b(key=seed.to_bytes(8, "little"), digest_size=8)
        did = dialogue_id.encode("utf-8")
        h.update(len(did).to_bytes(4, "little"))
        h.update(did)
        h.update(turn.to_bytes(8, "little", signed=True))
        self._base = h

    def u64(self, position: int, stream: int) -> int:
        h = self._base.copy()
        h.update(_POS.pack(position, stream))
        return int.from_bytes(h.digest(), "little")

    def below(self, n: int, position: int, stream: int) -> int:
        """Integer in ``[0, n)``; bias is below n / 2**64."""
        return (self.u64(position, stream) * n) >> 64


def u64(seed: int, dialogue_id: str, turn: int, position: int, stream: int) -> int:
    return TurnStream(seed, dialogue_id, turn).u64(position, stream)
