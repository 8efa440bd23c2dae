"""Seeded, splittable random streams.

Every random draw in the package comes from ``stream(seed, *keys)``: the
root seed plus a tuple of non-negative integer keys is fed to
:class:`numpy.random.SeedSequence` as ``spawn_key``. Two streams with
different key tuples are statistically independent, and a stream depends
only on ``(seed, keys)``, never on how many other streams were used before
it. Keys used by the package:

* ``(STREAM_SAMPLE, s)``       -- sample ``s`` of a product ensemble
* ``(STREAM_MEMBER_PICK,)``    -- member choices in a Q_N projection
* ``(STREAM_MEMBER_DRAW, s)``  -- particle draws for Q_N sample ``s``
* ``(STREAM_SUBSAMPLE,)``      -- capacity subsampling of pooled clouds
* ``(STREAM_TEST_FUNCTION,)``  -- random dual test functions
* ``(STREAM_TRIAL, i)``        -- trial ``i`` of a randomized sweep
* ``(STREAM_STRATIFIED,)``     -- sampled collision patterns of index maps
* ``(STREAM_SCENARIO, j)``     -- auxiliary draw ``j`` of a CLI scenario
"""

import numpy as np

STREAM_SAMPLE = 0
STREAM_MEMBER_PICK = 1
STREAM_MEMBER_DRAW = 2
STREAM_SUBSAMPLE = 3
STREAM_TEST_FUNCTION = 4
STREAM_TRIAL = 5
STREAM_STRATIFIED = 6
STREAM_SCENARIO = 7


def stream(seed, *keys):
    """Return a generator for the child stream ``keys`` of ``seed``."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed, *keys):
    """Derive a plain integer seed for a child computation."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
