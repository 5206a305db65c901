"""Deterministic per-component random substreams.

One global run seed is split into independent substreams, one per component
name.  The stream index is the first 8 bytes (little-endian) of
``sha256(name)``, used as the ``spawn_key`` of a ``numpy`` ``SeedSequence``
rooted at the run seed.  Keying on the *name* (not registration order) means
adding or removing a component never perturbs the randomness any other
component sees.
"""

import hashlib

import numpy as np


def stream_index(name: str) -> int:
    """Stable 64-bit stream index for a component name."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for component ``name`` under the global ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream_index(name),))
    return np.random.default_rng(ss)
