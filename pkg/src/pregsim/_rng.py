"""Counter-based random streams for reproducible, order-independent draws.

Every stream is a Philox generator keyed by (master seed, treatment-effect
index, replicate, purpose tag, chunk index). Pregnancies are processed in
fixed-size chunks so results are byte-identical for any worker count: the
chunk grid depends only on the cohort size, never on scheduling.
"""

from __future__ import annotations

import numpy as np

CHUNK = 1 << 18

# Purpose tags. Streams for the data-generating process and the missingness
# mechanisms are all keyed by the treatment-effect index (not the scenario
# id) so that the six missingness designs of one treatment effect share the
# same cohort and, where thresholds allow, nested missingness draws.
BASELINE = 1
PREGNANCY = 2
PREECLAMPSIA = 3
PE_OUTCOME = 4
ENCOUNTERS = 5
MISS_MEASURED = 6
MISS_MISCARRIAGE = 7


def chunk_bounds(n, chunk=CHUNK):
    """Fixed [start, stop) pregnancy-id ranges covering 0..n."""
    return [(lo, min(lo + chunk, n)) for lo in range(0, max(n, 0), chunk)]


def stream(master_seed, te_index, replicate, purpose, chunk_index):
    """Generator for one (purpose, chunk) cell of the draw grid."""
    ss = np.random.SeedSequence(
        entropy=[int(master_seed), int(te_index), int(replicate),
                 int(purpose), int(chunk_index)])
    return np.random.Generator(np.random.Philox(ss))


def uniforms(master_seed, te_index, replicate, purpose, lo, hi, cols=None):
    """Uniform draws for pregnancies [lo, hi) of one chunk.

    ``(lo, hi)`` must be a range produced by :func:`chunk_bounds`; the draw
    for pregnancy ``i`` depends only on the stream key and ``i``.
    """
    rng = stream(master_seed, te_index, replicate, purpose, lo // CHUNK)
    shape = (hi - lo,) if cols is None else (hi - lo, cols)
    return rng.random(shape)
