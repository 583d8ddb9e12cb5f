"""Counter-based random streams.

Every stochastic routine in the package draws from a ``numpy`` Philox
generator keyed by ``(seed, stream_index)``.  Philox is counter-based, so
streams with distinct keys are statistically independent and a given
(seed, index) pair always yields the same draws, no matter how many
worker processes the indices are spread over.  That is what makes
sampled histograms byte-identical for any ``--workers`` setting.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for sub-stream `index` of `seed`."""
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def spawn(seed: int, indices) -> list[np.random.Generator]:
    """Generators for several sub-streams of the same seed."""
    return [stream(seed, i) for i in indices]
