"""Keyed random streams.

Every random draw in the package goes through :func:`stream`, which maps a
``(seed, *key)`` tuple to an independent PCG64 generator.  Identical keys give
bit-identical streams regardless of call order or worker assignment.
"""
from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
