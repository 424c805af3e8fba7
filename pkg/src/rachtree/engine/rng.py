"""Seeded random streams.

Each concern (preamble choice, backoff, message loss) draws from its own
generator so that, for example, turning losses on does not shift the
sequence of preamble choices.
"""

from __future__ import annotations

import random

import numpy as np

from rachtree.errors import EmptySetError

SUBSTREAMS = ("preamble", "backoff", "loss")


class RngStream:
    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        children = np.random.SeedSequence(self.seed).spawn(len(SUBSTREAMS))
        for name, child in zip(SUBSTREAMS, children):
            state = int.from_bytes(child.generate_state(4, np.uint32).tobytes(), "little")
            setattr(self, name, random.Random(state))

    def __repr__(self):
        return f"RngStream(seed={self.seed})"


def bernoulli_loss(rng: RngStream, p: float) -> bool:
    """True with probability ``p``, drawn from the loss substream."""
    if p <= 0.0:
        return False
    if p >= 1.0:
        return True
    return rng.loss.random() < p


def uniform_choice(rng: RngStream, items, stream: str = "preamble"):
    """Uniform pick from a non-empty finite sequence."""
    if not items:
        raise EmptySetError("cannot choose from an empty set")
    seq = items if isinstance(items, (list, tuple, range)) else sorted(items)
    gen = getattr(rng, stream)
    return seq[gen.randrange(len(seq))]


def backoff_draw(rng: RngStream, max_ms: int) -> int:
    """Whole-millisecond backoff, uniform on {0, ..., max_ms}."""
    return rng.backoff.randrange(max_ms + 1)
