"""Seeded random-number substreams.

All randomness in the package flows from one 64-bit seed. Each consumer
(splits, weight init, walks, negative sampling, ...) derives its own named
substream so that adding or reordering consumers never perturbs the others.
The derivation hashes the (seed, name...) tuple, so it is stable across
platforms and numpy versions.
"""

import hashlib
import json

import numpy as np


def substream(seed: int, *key) -> np.random.Generator:
    """Return a Generator for the substream identified by ``key``.

    ``key`` components must be ints or strings. The same (seed, key) always
    yields an identically-seeded generator.
    """
    parts = [k if isinstance(k, str) else int(k) for k in key]
    material = json.dumps([int(seed), *parts], separators=(",", ":")).encode()
    digest = hashlib.sha256(material).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]
    return np.random.default_rng(np.random.SeedSequence(words))
