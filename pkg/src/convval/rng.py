"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, index)``, so the draws
for sample ``index`` never depend on how many other samples were drawn
before it or on which worker drew them.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed, index):
    """Return an independent generator for ``(seed, index)``."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream_for(seed, tag, index=0):
    """Generator for a named purpose; ``tag`` is folded into the seed."""
    folded = int(seed) & _MASK64
    for ch in tag.encode():
        folded = (folded * 1099511628211 ^ ch) & _MASK64
    return stream(folded, index)
