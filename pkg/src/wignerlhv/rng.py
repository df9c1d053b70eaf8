"""Reproducible, splittable random streams.

Every stream is addressed by a ``master_seed`` and a ``substream_index``
(plus an optional tuple of child indices). The address is hashed with
:class:`numpy.random.SeedSequence` into the key of a Philox4x64-10
counter-based bit generator, so distinct addresses give independent
streams and the raw 64-bit words are identical on every platform.

Gaussian variates use Marsaglia's polar form of the Box-Muller transform
as implemented by :class:`numpy.random.RandomState`, whose output is frozen
by NumPy's stream-compatibility policy. Uniforms are ``(word >> 11) * 2**-53``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class RandomStream:
    master_seed: int
    substream_index: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= MAX_SEED:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.substream_index) < 0 or any(int(p) < 0 for p in self.path):
            raise ValueError("substream indices must be nonnegative")

    def child(self, index: int) -> RandomStream:
        """Independent stream nested below this one."""
        return RandomStream(self.master_seed, self.substream_index, self.path + (int(index),))

    def offset(self, k: int) -> RandomStream:
        """Sibling stream ``k`` substreams further along (same nesting)."""
        return RandomStream(self.master_seed, self.substream_index + int(k), self.path)

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.substream_index),) + tuple(self.path))

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(self.seed_sequence())

    def normal_source(self) -> np.random.RandomState:
        """A fresh stateful source of standard normals for this address."""
        return np.random.RandomState(self.bit_generator())

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) from the first ``n`` raw words of the stream."""
        raw = self.bit_generator().random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
