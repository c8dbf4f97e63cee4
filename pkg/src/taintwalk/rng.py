"""Independent random streams keyed by (global seed, component, item)."""

import numpy as np

WALKER = 1
FOREST = 2
IMPORTANCE = 3
SYNTH = 4

_MASK = (1 << 64) - 1


def bit_generator(seed, component, *keys):
    """A fresh PCG64 whose stream depends only on its arguments."""
    entropy = [int(seed) & _MASK, component, *(int(k) & _MASK for k in keys)]
    return np.random.PCG64(np.random.SeedSequence(entropy))


def generator(seed, component, *keys):
    return np.random.Generator(bit_generator(seed, component, *keys))
