"""Random streams.

Every stream is a numpy ``PCG64`` generator.  Replica ``r`` of a run with
root seed ``s`` uses ``SeedSequence([s, r])``, whose entropy mixing makes
neighbouring replicas independent; the generator is consumed only through
``random()`` so realisations are bitwise reproducible across platforms.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int, replica: int | None = None) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) if replica is None else [int(seed), int(replica)])
    return np.random.Generator(np.random.PCG64(ss))
