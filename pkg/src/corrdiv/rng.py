"""Counter-based random streams keyed by ``(seed, stream index)``.

Every Monte Carlo trial draws from its own Philox stream, so results do not
depend on how trials are split across workers.
"""

import numpy as np


def stream(seed, *index):
    """Return a generator for the stream ``(seed, *index)``.

    Parameters
    ----------
    seed : int
        Master seed.
    *index : int
        Stream coordinates, e.g. a trial number, or (experiment, trial).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng, shape):
    """i.i.d. CN(0, 1) samples."""
    z = rng.standard_normal(shape + (2,) if isinstance(shape, tuple) else (shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
