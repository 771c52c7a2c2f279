"""Counter-based seed derivation from one master seed."""

from __future__ import annotations

import numpy as np

STREAMS = {"disorder": 0, "chain": 1, "bootstrap": 2, "instance": 3}


def derive_seed(master: int, stream: str, *counter: int) -> int:
    """A 63-bit seed for cell ``counter`` of ``stream``.

    Seeds depend only on ``(master, stream, counter)``, so cells can be run in
    any order or on any worker.
    """
    key = (STREAMS[stream],) + tuple(int(c) for c in counter)
    state = np.random.SeedSequence(int(master), spawn_key=key).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


def derive_seeds(master: int, stream: str, n: int) -> list[int]:
    return [derive_seed(master, stream, i) for i in range(n)]
