"""Counter-based random streams keyed by (seed, path index)."""

import numpy as np


def path_generator(seed: int, path_index: int = 0) -> np.random.Generator:
    """Independent Philox stream for one Monte-Carlo path.

    Streams depend only on (seed, path_index), so paths can be generated in
    any order or in parallel and still merge to the same result.
    """
    if seed is None:
        raise ValueError("a seed is required")
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(seq))
