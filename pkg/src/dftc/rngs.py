"""Named, reproducible random substreams derived from one global seed.

Every stage of the pipeline draws from its own substream so that stages
can be re-run independently and results never depend on execution order.
Tags are hashed with SHA-256, so streams are stable across platforms and
Python versions.
"""

import hashlib

import numpy as np


def _tag_to_int(tag):
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    digest = hashlib.sha256(str(tag).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def substream(seed, *tags):
    """Generator for the substream identified by (seed, *tags)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
