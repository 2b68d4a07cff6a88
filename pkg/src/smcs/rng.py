"""Deterministic random-number streams.

Every random draw in the package comes from a Generator keyed by a base
seed plus a tuple of small integers (role, step index, iteration, run
index, ...). Streams are never keyed by thread or worker identity, so
any fan-out over workers reproduces the single-threaded output exactly.
"""

import numpy as np

# Stream roles used by the engine and the experiment drivers.
INIT = 0
RESAMPLE = 1
MOVE = 2
RUN = 3
CHAIN = 4
PILOT = 5


def substream(seed, *key):
    """Generator for the stream identified by (seed, *key).

    The same (seed, key) always yields the same stream; distinct keys
    yield statistically independent streams.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def derive_seed(seed, *key):
    """Integer child seed for (seed, *key), for handing whole runs to workers."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])
