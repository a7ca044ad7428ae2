"""Counter-based random streams for reproducible, parallel-safe simulation.

Every run of an estimator gets a Philox generator keyed by a 128-bit value
``(master_seed, packed_fields)``.  The packed field layout is injective, so
distinct lattice cells (estimator, m-index, repetition) and distinct machines
can never collide, and the keystream is independent of how work is scheduled
across workers.
"""

from __future__ import annotations

import numpy as np

# Bit widths of the packed derivation fields, most significant first.
_FIELD_WIDTHS = {
    "tag": 4,
    "estimator": 8,
    "m_index": 8,
    "rep": 20,
    "machine": 24,
}

TAG_RUN = 0
TAG_MACHINE = 1
TAG_CONFIG = 2


def pack_fields(tag: int = 0, estimator: int = 0, m_index: int = 0,
                rep: int = 0, machine: int = 0) -> int:
    """Pack derivation fields into one uint64, failing on overflow."""
    values = {"tag": tag, "estimator": estimator, "m_index": m_index,
              "rep": rep, "machine": machine}
    packed = 0
    for name, width in _FIELD_WIDTHS.items():
        v = values[name]
        if not 0 <= v < (1 << width):
            raise ValueError(f"{name}={v} does not fit in {width} bits")
        packed = (packed << width) | v
    return packed


def run_seed(master_seed: int, estimator: int, m_index: int, rep: int) -> int:
    """The uint64 stream id of one (estimator, m, repetition) cell."""
    return pack_fields(TAG_RUN, estimator, m_index, rep)


def generator(master_seed: int, stream_id: int = 0) -> np.random.Generator:
    """Philox generator keyed by (master_seed, stream_id)."""
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF,
                    stream_id & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def machine_generator(master_seed: int, estimator: int, m_index: int,
                      rep: int, machine: int) -> np.random.Generator:
    """Dedicated stream for one machine, for per-machine (loop) execution."""
    sid = pack_fields(TAG_MACHINE, estimator, m_index, rep, machine)
    return generator(master_seed, sid)
