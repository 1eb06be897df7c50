"""Labeled, counter-based random substreams.

Every stochastic component draws from its own Philox substream, keyed by a
root seed plus a tuple of labels ("gates", ("outcomes", "run", 17), ...).
Streams are independent of execution order and worker count, so parallel
runs reproduce serial ones exactly.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream", "child_seed"]


def _label_entropy(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"labels must be non-negative integers or strings, got {label}")
        return int(label)
    if isinstance(label, str):
        digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"unsupported substream label type: {type(label).__name__}")


def substream(root_seed: int, *labels) -> np.random.Generator:
    """Return the generator for the substream (root_seed, *labels).

    The same arguments always yield an identical stream; distinct label
    tuples yield statistically independent streams.
    """
    entropy = [int(root_seed)] + [_label_entropy(lab) for lab in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def child_seed(root_seed: int, *labels) -> int:
    """Derive a 63-bit child seed, usable as another component's root."""
    entropy = [int(root_seed)] + [_label_entropy(lab) for lab in labels]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
