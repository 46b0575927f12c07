"""Counter-based random streams for deterministic parallel sampling.

Every logical draw (one feature sample, one sign flip, one stratified cell
slot) owns its own Philox stream, keyed by (seed, domain, index, subindex).
Streams never overlap: the in-stream draw counter occupies the low 64-bit
counter word, the identifying indices sit in the high words.  Results are
therefore byte-identical regardless of thread count or draw order.
"""

import numpy as np

_MASK = (1 << 64) - 1

# Domain tags keep streams for different purposes disjoint.
PLAIN = 1
PERIODIC = 2
APPROX = 3
SIGN = 4
PILOT = 5
CELL = 6
TAIL = 7


def stream(seed, domain, index=0, subindex=0):
    """Independent Generator for one logical draw."""
    key = [int(seed) & _MASK, int(domain) & _MASK]
    counter = [0, int(subindex) & _MASK, int(index) & _MASK, int(domain) & _MASK]
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def kahan_sum(terms, axis=0):
    """Compensated sum of an array along one axis, fixed index order.

    Matches sequential Kahan summation so reductions are reproducible
    independent of how callers parallelize around them.
    """
    terms = np.asarray(terms, dtype=float)
    terms = np.moveaxis(terms, axis, 0)
    total = np.zeros(terms.shape[1:])
    comp = np.zeros_like(total)
    for row in terms:
        y = row - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
