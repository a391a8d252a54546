"""Counter-based random streams keyed by (seed, purpose, pulse index).

Every pulse owns an independent stream, so transcripts do not depend on the
order in which pulses are evaluated. Philox is counter based: pointing its
counter at ``[0, index, 0, 0]`` is cheap and gives a stream that never
overlaps another index's for the draw counts used here.
"""

from __future__ import annotations

import numpy as np

# Purpose tags; leaves of a branch network use LEAF_BASE + leaf position.
HUB = 0
ALICE = 1
ROUTE = 2
DISCLOSURE = 3
EVE = 4
LEAF_BASE = 1024

_MASK64 = (1 << 64) - 1


class PulseStreams:
    """Factory of per-pulse generators for one seed.

    ``at(purpose, index)`` rewinds and returns a generator owned by
    ``purpose``; it stays valid until the next ``at`` call with the same
    purpose.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gens: dict[int, tuple[np.random.Philox, np.random.Generator]] = {}

    def _get(self, purpose: int):
        pair = self._gens.get(purpose)
        if pair is None:
            bitgen = np.random.Philox(key=np.array([self.seed, purpose], dtype=np.uint64))
            pair = (bitgen, np.random.Generator(bitgen))
            self._gens[purpose] = pair
        return pair

    def at(self, purpose: int, index: int) -> np.random.Generator:
        bitgen, gen = self._get(purpose)
        state = bitgen.state
        state["state"]["counter"] = np.array([0, index, 0, 0], dtype=np.uint64)
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bitgen.state = state
        return gen

    def session(self, purpose: int) -> np.random.Generator:
        """A fresh generator for one-off, session-level draws."""
        return self.at(purpose, (1 << 63))
