"""Counter-based random streams for ordinate sampling.

Every uniform draw is addressed by ``(global_seed, sample_index, stream, position)``
and produced by the Philox-4x64 bijection, so a draw never depends on how many
other samples were generated before it or on which worker generated them.

Layout of the 128-bit Philox key and 256-bit counter::

    key     = [global_seed, sample_index]
    counter = [position, 0, stream, 0]

``stream`` separates partitions (e.g. different cell counts ``n``) sharing a seed,
and ``position`` is ``cell_index * dim + component``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53


def _check_u64(name: str, value: int) -> int:
    value = int(value)
    if value < 0 or value > _MASK64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


def stream_id(geometry: str, level: int, delta: float = 0.0) -> int:
    """Stable stream identifier for a partition family."""
    geo = {"slab": 1, "xy": 2}[geometry]
    # delta enters through its IEEE bit pattern so distinct truncations never collide
    dbits = int(np.float64(delta).view(np.uint64))
    return ((geo << 56) ^ (int(level) << 24) ^ (dbits >> 8)) & _MASK64


def uniforms(global_seed: int, sample_index: int, stream: int, count: int) -> np.ndarray:
    """Return ``count`` uniforms in the open interval (0, 1).

    Position ``k`` of the result is a pure function of
    ``(global_seed, sample_index, stream, k)``.
    """
    key = np.array(
        [_check_u64("global_seed", global_seed), _check_u64("sample_index", sample_index)],
        dtype=np.uint64,
    )
    counter = np.array([0, 0, _check_u64("stream", stream), 0], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=key)
    raw = bitgen.random_raw(count)
    # top 53 bits, shifted by half an ulp: strictly inside (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def cell_uniforms(
    global_seed: int, sample_index: int, stream: int, cell_index: int, dim: int = 1
) -> np.ndarray:
    """Uniforms for a single cell; identical to the matching slice of :func:`uniforms`."""
    key = np.array(
        [_check_u64("global_seed", global_seed), _check_u64("sample_index", sample_index)],
        dtype=np.uint64,
    )
    counter = np.array([0, 0, _check_u64("stream", stream), 0], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=key)
    # Philox emits blocks of 4 words per counter step
    start = cell_index * dim
    bitgen.advance(start // 4)
    raw = bitgen.random_raw(start % 4 + dim)[start % 4 :]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53
